#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace askwell {

// Named feature values tied to an encoder schema.
struct FeatureVector {
    std::string schema_id;
    std::vector<std::string> names;
    std::vector<double> values;

    double at(const std::string& name) const;
    void set(const std::string& name, double value);
};

}  // namespace askwell

namespace askwell::glm {

// Column-major design matrix with named columns. Columns are dense or
// sparse (strictly increasing row indices with values).
class Design {
public:
    Design() = default;
    explicit Design(std::size_t rows) : rows_(rows) {}

    void add_column(std::string name, std::vector<double> values);
    void add_sparse_column(std::string name, std::vector<std::uint32_t> rows, std::vector<double> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return columns_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    bool is_sparse(std::size_t j) const { return columns_[j].sparse; }

    // Dense columns only.
    std::span<const double> column(std::size_t j) const;
    std::span<const std::uint32_t> sparse_rows(std::size_t j) const { return columns_[j].rows; }
    std::span<const double> sparse_values(std::size_t j) const { return columns_[j].values; }
    std::vector<double> dense_column(std::size_t j) const;

    // eta += a * column j
    void add_scaled(std::size_t j, double a, std::span<double> eta) const;
    double dot(std::size_t j, std::span<const double> v) const;

    std::vector<double> row(std::size_t i) const;
    std::size_t index_of(const std::string& name) const;

    Design select(const std::vector<std::string>& names) const;
    Design rows_subset(std::span<const std::size_t> rows) const;
    // Columns of `other` appended after this design's columns.
    Design concat(const Design& other) const;

private:
    struct Column {
        bool sparse = false;
        std::vector<double> dense;
        std::vector<std::uint32_t> rows;
        std::vector<double> values;
    };
    void push(std::string name, Column column);

    std::size_t rows_ = 0;
    std::vector<std::string> names_;
    std::vector<Column> columns_;
};

struct FittedModel {
    std::vector<std::string> feature_names;
    std::vector<double> coefficients;
    double intercept = 0.0;
    double l1_penalty = 0.0;
    bool converged = false;
    std::size_t n_iters = 0;
    double log_likelihood = 0.0;

    nlohmann::json to_json() const;
    static FittedModel from_json(const nlohmann::json& doc);
};

struct FitOptions {
    double lambda = 0.0;
    std::size_t max_iters = 10000;
    double tol = 1e-8;
};

// Maximizes sum[y log p + (1-y) log(1-p)] - lambda * |b|_1, where b are the
// coefficients of internally standardized columns (intercept unpenalized).
// Reported coefficients are on the raw scale. Constant columns get 0.
FittedModel fit(const Design& X, const std::vector<bool>& y, const FitOptions& options = {});

// Smallest lambda at which every coefficient is zero.
double lambda_max(const Design& X, const std::vector<bool>& y);

double sigmoid(double z);
double linear_predictor(const FittedModel& model, std::span<const double> x);
double predict_probability(const FittedModel& model, std::span<const double> x);
double predict_probability(const FittedModel& model, const FeatureVector& x);
std::vector<double> predict(const FittedModel& model, const Design& X);

double log_likelihood(const FittedModel& model, const Design& X, const std::vector<bool>& y);

// Gradient of the unpenalized log-likelihood at raw-scale parameters;
// element 0 is the intercept.
std::vector<double> log_likelihood_gradient(const Design& X, const std::vector<bool>& y,
                                            double intercept, std::span<const double> coefficients);
double log_likelihood_at(const Design& X, const std::vector<bool>& y, double intercept,
                         std::span<const double> coefficients);

struct LrTest {
    double statistic = 0.0;
    std::size_t df = 0;
    double p = 1.0;
    double ll_full = 0.0;
    double ll_reduced = 0.0;
};

// Unpenalized fits of both models; the reduced set must be a subset of the full one.
LrTest likelihood_ratio_test(const Design& X, const std::vector<bool>& y,
                             const std::vector<std::string>& full_features,
                             const std::vector<std::string>& reduced_features);

struct LambdaSearch {
    std::size_t grid_size = 20;
    double min_ratio = 1e-3;
    std::size_t folds = 5;
    std::uint64_t seed = 0;
    FitOptions fit{};
};

struct LambdaSelection {
    double lambda = 0.0;
    std::vector<double> grid;
    std::vector<double> mean_auc;
};

// Log-spaced grid from lambda_max down to lambda_max * min_ratio, scored by
// stratified k-fold cross-validated AUC on the rows given.
LambdaSelection select_lambda(const Design& X, const std::vector<bool>& y, const LambdaSearch& search);

}  // namespace askwell::glm
