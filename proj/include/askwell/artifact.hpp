#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "askwell/corpus.hpp"
#include "askwell/features.hpp"
#include "askwell/glm.hpp"

namespace askwell {

// Everything needed to score a request: the fitted model, the encoder
// statistics it was trained with, and where they came from.
struct ModelArtifact {
    std::string schema_id;
    features::Scheme scheme = features::Scheme::regression;
    glm::FittedModel model;
    features::EncoderMeta encoder;
    std::string corpus_fingerprint;
    UnixSeconds epoch = 0;
    std::string community = kDefaultCommunity;
    nlohmann::json diagnostics = nlohmann::json::object();

    nlohmann::json to_json() const;
    // Validates that the model's features are exactly the scheme's.
    static ModelArtifact from_json(const nlohmann::json& doc);
    void save(const std::filesystem::path& path) const;
    static ModelArtifact load(const std::filesystem::path& path);
};

// Assembles an artifact and checks the model against the scheme.
ModelArtifact make_artifact(features::Scheme scheme, glm::FittedModel model, features::EncoderMeta encoder,
                            const Corpus& corpus, nlohmann::json diagnostics = nlohmann::json::object());

// Built-in regression-scheme reference coefficients, with
// encoder statistics chosen so that median karma and median community age
// fall in the same decile code (their terms then cancel).
const ModelArtifact& reference_artifact();

// A timestamp in the second half of a month, ten months after the reference
// epoch, where community age sits at its median code.
UnixSeconds reference_timestamp();

// A 50-word draft whose only narrative hit is one craving word.
const std::string& reference_craving_draft();

}  // namespace askwell
