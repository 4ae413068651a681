#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "askwell/artifact.hpp"
#include "askwell/corpus.hpp"
#include "askwell/features.hpp"
#include "askwell/glm.hpp"
#include "askwell/similarity.hpp"
#include "askwell/stats.hpp"
#include "askwell/topics.hpp"

namespace askwell::studies {

struct StudyConfig {
    std::uint64_t seed = 0;
    double dev_fraction = 0.7;
    features::ExtractOptions extract;
    glm::LambdaSearch lambda;
    std::size_t ngram_min_df = 3;
    std::size_t topic_k = 10;
    std::size_t topic_terms = 15;
    std::size_t topic_min_df = 5;
    std::optional<double> topic_sparseness = 0.5;
    std::size_t topic_max_iters = 500;
    // Lexicons loaded from the config; `extract` points into these.
    std::shared_ptr<const features::NarrativeLexicons> narrative_lexicons;
    std::shared_ptr<const features::SentimentLexicons> sentiment_lexicons;

    // Unknown keys are rejected so that typos do not silently fall back.
    static StudyConfig from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;
};

// Called with the stage name and the request ids whose values a training-side
// statistic is computed from: "encoder", "vocabulary", "lambda", "fit".
using TrainingObserver = std::function<void(const std::string& stage, const std::vector<std::string>& ids)>;
void set_training_observer(TrainingObserver observer);

struct Featurized {
    std::vector<features::RawFeatures> rows;
    std::vector<bool> labels;
};

Featurized featurize(const Corpus& corpus, const features::ExtractOptions& options = {});

// Encoded design over the given feature names (all of the scheme when empty).
glm::Design encoded_design(const std::vector<features::RawFeatures>& rows, const features::EncoderMeta& meta,
                           features::Scheme scheme, const std::vector<std::string>& names = {});

// Significance stars: *** p < 0.001, ** p < 0.01, * p < 0.05.
std::string stars(double p);

// Fits the encoder and the model on `dev`. The regression scheme is fit
// unpenalized; the prediction scheme selects lambda by cross-validation.
ModelArtifact train_model(const Corpus& dev, features::Scheme scheme, const StudyConfig& config);

struct RegressionRow {
    std::string feature;
    double estimate = 0.0;
    double lr_statistic = 0.0;
    double p = 1.0;
    std::string stars;
};

struct RegressionReport {
    std::vector<RegressionRow> rows;
    double intercept = 0.0;
    double log_likelihood = 0.0;
    bool converged = false;
    std::size_t n = 0;
    double success_rate = 0.0;
    double first_half_rate = 0.0;
    double second_half_rate = 0.0;
    std::size_t n_first_half = 0;
    std::size_t n_second_half = 0;
    ModelArtifact artifact;

    nlohmann::json to_json() const;
    void write(const std::filesystem::path& dir) const;
};

RegressionReport run_regression_study(const Corpus& dev, const StudyConfig& config);

struct PredictionRow {
    std::string name;
    double auc = 0.5;
    double lambda = 0.0;
    std::size_t n_features = 0;
    std::size_t nonzero = 0;
    double mann_whitney_p = 1.0;  // scores of positives vs negatives, one-sided
};

struct Comparison {
    std::string a;
    std::string b;
    double auc_a = 0.5;
    double auc_b = 0.5;
    double statistic = 0.0;
    double p = 1.0;
};

struct PredictionReport {
    std::vector<PredictionRow> rows;  // random baseline first
    std::vector<Comparison> comparisons;
    std::size_t n_dev = 0;
    std::size_t n_test = 0;
    std::map<std::string, std::vector<double>> test_scores;
    std::map<std::string, double> selected_lambda;
    features::EncoderMeta encoder;

    const PredictionRow& row(const std::string& name) const;
    nlohmann::json to_json() const;
    void write(const std::filesystem::path& dir) const;
};

inline const std::vector<std::string>& prediction_sets() {
    static const std::vector<std::string> sets{"unigram", "bigram", "trigram", "text", "social", "temporal",
                                               "temporal+social", "temporal+social+text",
                                               "temporal+social+text+unigram"};
    return sets;
}

// Feature sets default to all of prediction_sets().
PredictionReport run_prediction_study(const Corpus& dev, const Corpus& test, const StudyConfig& config,
                                      const std::vector<std::string>& sets = {});

enum class Reciprocation { giver, giving_event, either };
std::string reciprocation_name(Reciprocation r);
Reciprocation parse_reciprocation(const std::string& name);

struct SubgroupRate {
    std::string name;
    std::size_t n = 0;
    std::size_t reciprocated = 0;
    double rate = 0.0;
    double p = 1.0;  // one-sided binomial test against the baseline rate
};

struct ReciprocityReport {
    Reciprocation definition = Reciprocation::either;
    std::vector<SubgroupRate> groups;  // baseline, claimed, gratitude, top_karma
    double karma_threshold = 0.0;

    const SubgroupRate& group(const std::string& name) const;
    nlohmann::json to_json() const;
};

// Restricted to successful requests. A requester reciprocates when they later
// appear as a giver (in the corpus or the optional pairs) or have a later
// giving event in the community, depending on the definition.
ReciprocityReport run_reciprocity_study(const Corpus& corpus, Reciprocation definition,
                                        const std::vector<similarity::Pair>& pairs = {},
                                        const features::ExtractOptions& options = {});

struct CurvePoint {
    std::string narrative;
    double x = 0.0;
    double probability = 0.0;
};

struct Curves {
    std::vector<CurvePoint> by_length;  // x = words
    std::vector<CurvePoint> by_karma;   // x = karma decile
    double median_words = 0.0;
    int karma_code = 0;
    int community_code = 0;

    void write(const std::filesystem::path& dir) const;
};

// Each narrative alone, no evidence, gratitude or reciprocity, second half of
// the month, status and community age at their median codes.
Curves run_interpretation_curves(const ModelArtifact& artifact, std::size_t max_words = 300);

struct TopicRow {
    std::size_t topic = 0;
    std::vector<std::string> terms;
    std::size_t n_docs = 0;
    std::optional<double> success_rate;
};

struct TopicReport {
    std::vector<TopicRow> topics;
    double overall_rate = 0.0;
    std::size_t n_docs = 0;
    std::size_t vocabulary = 0;
    bool converged = false;
    std::size_t iterations = 0;

    nlohmann::json to_json() const;
    void write(const std::filesystem::path& dir) const;
};

TopicReport run_topic_study(const Corpus& dev, const StudyConfig& config);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace askwell::studies
