#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "askwell/matrix.hpp"
#include "askwell/textkit.hpp"

namespace askwell::topics {

// Sparse NMF: X (documents x terms) ~= W (documents x k) * H (k x terms).
struct TopicModel {
    DenseMatrix W;
    DenseMatrix H;
    textkit::Vocabulary vocab;
    std::size_t k = 0;
    std::vector<double> objective_trace;
    std::optional<double> target_sparseness;
    std::size_t iterations = 0;
    bool converged = false;

    nlohmann::json to_json() const;
    static TopicModel from_json(const nlohmann::json& doc);
};

struct Factors {
    DenseMatrix W;
    DenseMatrix H;
};

inline constexpr double kInitFloor = 1e-8;

// SVD-based initialization: each singular pair is split into its positive and
// negative parts and the dominant pair kept. Zeros are raised to kInitFloor.
Factors nndsvd_init(const SparseMatrix& X, std::size_t k);

// Uniform [0, scale) factors.
Factors random_init(std::size_t rows, std::size_t cols, std::size_t k, double scale,
                    std::uint64_t seed);

enum class Init { nndsvd, random };

struct NmfOptions {
    std::size_t k = 10;
    std::optional<double> target_sparseness = 0.5;
    std::size_t max_iters = 500;
    double tol = 1e-5;
    std::uint64_t seed = 0;
    Init init = Init::nndsvd;
};

// Multiplicative updates for H. Without a sparseness target W also takes
// multiplicative updates; with one, W takes projected-gradient steps whose
// rows are projected onto the set of Hoyer sparseness >= target, with step
// halving until the objective does not increase.
TopicModel fit_nmf(const SparseMatrix& X, const textkit::Vocabulary& vocab,
                   const NmfOptions& options);

double objective(const SparseMatrix& X, const DenseMatrix& W, const DenseMatrix& H);

// (sqrt(n) - |v|_1 / |v|_2) / (sqrt(n) - 1)
double hoyer_sparseness(std::span<const double> v);

// Closest non-negative vector to v with the given L1 and L2 norms.
std::vector<double> project_l1_l2(std::span<const double> v, double l1, double l2);

// Raises a row's sparseness to at least `target`, preserving its L2 norm.
// Negative entries are clipped first; all-zero rows are left untouched.
void enforce_row_sparseness(std::span<double> row, double target);

std::vector<std::vector<std::string>> top_terms(const TopicModel& model, std::size_t m);

// Documents go to their argmax topic (ties to the lowest index). Empty topics
// have no rate.
std::vector<std::optional<double>> topic_success_rates(const TopicModel& model,
                                                       const std::vector<bool>& labels);
std::vector<std::size_t> dominant_topics(const DenseMatrix& W);

}  // namespace askwell::topics
