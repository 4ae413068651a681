#include "askwell/artifact.hpp"

#include <fstream>

#include "askwell/error.hpp"

namespace askwell {

using nlohmann::json;

namespace {

constexpr int kArtifactVersion = 1;

void check_model(const ModelArtifact& a) {
    if (a.model.feature_names != features::feature_names(a.scheme)) {
        throw InputError("model features do not match the " + features::scheme_name(a.scheme) + " scheme");
    }
    if (a.schema_id != features::schema_id(a.scheme, a.encoder)) {
        throw InputError("artifact schema id does not match its encoder");
    }
}

}  // namespace

json ModelArtifact::to_json() const {
    return {{"artifact_version", kArtifactVersion},
            {"schema_id", schema_id},
            {"scheme", features::scheme_name(scheme)},
            {"model", model.to_json()},
            {"encoder", encoder.to_json()},
            {"corpus_fingerprint", corpus_fingerprint},
            {"epoch", epoch},
            {"community", community},
            {"diagnostics", diagnostics}};
}

ModelArtifact ModelArtifact::from_json(const json& doc) {
    try {
        if (doc.value("artifact_version", kArtifactVersion) != kArtifactVersion) {
            throw InputError("unsupported artifact version");
        }
        ModelArtifact a;
        a.scheme = features::parse_scheme(doc.at("scheme").get<std::string>());
        a.model = glm::FittedModel::from_json(doc.at("model"));
        a.encoder = features::EncoderMeta::from_json(doc.at("encoder"));
        a.schema_id = doc.value("schema_id", features::schema_id(a.scheme, a.encoder));
        a.corpus_fingerprint = doc.value("corpus_fingerprint", std::string{});
        a.epoch = doc.at("epoch").get<UnixSeconds>();
        a.community = doc.value("community", std::string(kDefaultCommunity));
        a.diagnostics = doc.value("diagnostics", json::object());
        check_model(a);
        return a;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed model artifact: ") + e.what());
    }
}

void ModelArtifact::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << to_json().dump(2) << '\n';
}

ModelArtifact ModelArtifact::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read model artifact " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
    return from_json(doc);
}

ModelArtifact make_artifact(features::Scheme scheme, glm::FittedModel model, features::EncoderMeta encoder,
                            const Corpus& corpus, json diagnostics) {
    ModelArtifact a;
    a.scheme = scheme;
    a.model = std::move(model);
    a.encoder = std::move(encoder);
    a.schema_id = features::schema_id(scheme, a.encoder);
    a.corpus_fingerprint = corpus_fingerprint(corpus);
    a.epoch = corpus.epoch();
    a.diagnostics = std::move(diagnostics);
    check_model(a);
    return a;
}

const ModelArtifact& reference_artifact() {
    static const ModelArtifact artifact = [] {
        ModelArtifact a;
        a.scheme = features::Scheme::regression;
        a.encoder.source = "reference";
        for (const char* name : features::kNarrativeNames) {
            a.encoder.medians[std::string("narrative_") + name] = 0.0;
        }
        a.encoder.medians["pos_sentence_frac"] = 0.0;
        a.encoder.medians["neg_sentence_frac"] = 0.0;
        a.encoder.medians["karma"] = 10.0;
        a.encoder.medians["community_age_months"] = 10.0;
        a.encoder.medians["account_age_days"] = 365.0;
        a.encoder.medians["n_words"] = 50.0;
        a.encoder.medians["posted_before"] = 0.0;
        a.encoder.deciles["karma"] = {0, 1, 3, 6, 10, 20, 40, 80, 200};
        a.encoder.deciles["community_age_months"] = {2, 4, 6, 8, 10, 13, 16, 19, 22};
        a.schema_id = features::schema_id(a.scheme, a.encoder);

        a.model.feature_names = features::feature_names(a.scheme);
        a.model.intercept = -2.02;
        a.model.coefficients = {-0.13, 0.22, 0.27, 0.81, 0.32, 0.14, -0.07, 0.30,
                                0.13,  1.34, -0.34, 0.22, 0.26, 0.19, 0.09};
        a.model.converged = true;
        a.epoch = 1291766400;  // 2010-12-08
        a.diagnostics = {{"origin", "reported coefficients"}};
        check_model(a);
        return a;
    }();
    return artifact;
}

UnixSeconds reference_timestamp() { return 1319112000; }  // 2011-10-20 12:00 UTC

const std::string& reference_craving_draft() {
    static const std::string text =
        "Hi all. My little brother turns twelve on Saturday and we are throwing him a birthday get together at "
        "our apartment. We wanted to surprise him with a pizza from the place down the street since he talks "
        "about it constantly. A large pepperoni would really make his whole weekend.";
    return text;
}

}  // namespace askwell
