#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "askwell/corpus.hpp"
#include "askwell/stats.hpp"

namespace askwell::similarity {

enum class Metric { intersection, jaccard };

std::string metric_name(Metric metric);
Metric parse_metric(const std::string& name);
double default_bandwidth(Metric metric);

struct Pair {
    std::string request_id;
    std::string giver;
    std::string receiver;
    UnixSeconds t = 0;
};

double pair_similarity(const std::set<std::string>& giver, const std::set<std::string>& receiver, Metric metric);

// Observed pairs from requests that name a giver.
std::vector<Pair> pairs_from_corpus(const Corpus& corpus);

// JSONL with request_id, giver and receiver; times come from the corpus.
std::vector<Pair> load_pairs(const std::filesystem::path& path, const Corpus& corpus);
void write_pairs(const std::vector<Pair>& pairs, const std::filesystem::path& path);

enum class NullModel { uniform, degree_preserving };

struct NullSample {
    std::vector<Pair> pairs;  // request_id empty; t is the receiver's request time
    bool with_replacement = false;
};

// uniform: draws from givers x receivers minus observed pairs and self pairs,
// without replacement unless the universe is smaller than n_samples.
// degree_preserving: repeated random permutations of the receivers over the
// observed givers, dropping observed and self pairs.
NullSample null_pairs(const std::vector<Pair>& pairs, std::size_t n_samples, std::uint64_t seed,
                      NullModel model = NullModel::uniform);

struct StudyOptions {
    Metric metric = Metric::jaccard;
    std::optional<double> bandwidth;  // default_bandwidth(metric) when absent
    std::size_t n_null = 5000;
    std::uint64_t seed = 0;
    NullModel null_model = NullModel::uniform;
    std::size_t grid_points = 512;
};

struct StudyResult {
    Metric metric = Metric::jaccard;
    double bandwidth = 0.0;
    std::vector<double> actual;
    std::vector<double> null;
    bool null_with_replacement = false;
    std::vector<double> grid_x;
    std::vector<double> actual_density;
    std::vector<double> null_density;
    stats::TestResult test;

    nlohmann::json summary() const;
};

// KDEs on a shared grid and a two-sided Mann-Whitney comparison.
StudyResult compare_samples(std::vector<double> actual, std::vector<double> null, Metric metric, double bandwidth,
                            std::size_t grid_points = 512);

StudyResult run_similarity_study(const Corpus& corpus, const std::vector<Pair>& pairs, const StudyOptions& options);

// <prefix>_kde.csv (x, actual, null), <prefix>_samples.csv and <prefix>.json.
void write_study(const StudyResult& result, const std::filesystem::path& dir, const std::string& prefix);

}  // namespace askwell::similarity
