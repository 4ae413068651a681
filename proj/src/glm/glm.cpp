#include "askwell/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "askwell/error.hpp"
#include "askwell/random.hpp"
#include "askwell/simd.hpp"
#include "askwell/stats.hpp"

namespace askwell {

double FeatureVector::at(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return values[i];
    }
    throw InputError("feature not in vector: " + name);
}

void FeatureVector::set(const std::string& name, double value) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) {
            values[i] = value;
            return;
        }
    }
    throw InputError("feature not in vector: " + name);
}

}  // namespace askwell

namespace askwell::glm {

void Design::push(std::string name, Column column) {
    names_.push_back(std::move(name));
    columns_.push_back(std::move(column));
}

void Design::add_column(std::string name, std::vector<double> values) {
    if (values.size() != rows_) throw InputError("column '" + name + "' has the wrong length");
    for (const double v : values) {
        if (!std::isfinite(v)) throw InputError("column '" + name + "' has non-finite values");
    }
    Column c;
    c.dense = std::move(values);
    push(std::move(name), std::move(c));
}

void Design::add_sparse_column(std::string name, std::vector<std::uint32_t> rows, std::vector<double> values) {
    if (rows.size() != values.size()) throw InputError("column '" + name + "' has mismatched indices and values");
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k] >= rows_ || (k > 0 && rows[k] <= rows[k - 1])) {
            throw InputError("column '" + name + "' needs increasing row indices inside the design");
        }
        if (!std::isfinite(values[k])) throw InputError("column '" + name + "' has non-finite values");
    }
    Column c;
    c.sparse = true;
    c.rows = std::move(rows);
    c.values = std::move(values);
    push(std::move(name), std::move(c));
}

std::span<const double> Design::column(std::size_t j) const {
    if (columns_[j].sparse) throw InputError("column '" + names_[j] + "' is sparse");
    return columns_[j].dense;
}

std::vector<double> Design::dense_column(std::size_t j) const {
    const auto& c = columns_[j];
    if (!c.sparse) return c.dense;
    std::vector<double> out(rows_, 0.0);
    for (std::size_t k = 0; k < c.rows.size(); ++k) out[c.rows[k]] = c.values[k];
    return out;
}

void Design::add_scaled(std::size_t j, double a, std::span<double> eta) const {
    const auto& c = columns_[j];
    if (!c.sparse) {
        simd::axpy(a, c.dense, eta);
        return;
    }
    for (std::size_t k = 0; k < c.rows.size(); ++k) eta[c.rows[k]] += a * c.values[k];
}

double Design::dot(std::size_t j, std::span<const double> v) const {
    const auto& c = columns_[j];
    if (!c.sparse) return simd::dot(c.dense, v);
    double s = 0.0;
    for (std::size_t k = 0; k < c.rows.size(); ++k) s += c.values[k] * v[c.rows[k]];
    return s;
}

std::vector<double> Design::row(std::size_t i) const {
    std::vector<double> out(cols(), 0.0);
    for (std::size_t j = 0; j < cols(); ++j) {
        const auto& c = columns_[j];
        if (!c.sparse) {
            out[j] = c.dense[i];
            continue;
        }
        const auto it = std::lower_bound(c.rows.begin(), c.rows.end(), static_cast<std::uint32_t>(i));
        if (it != c.rows.end() && *it == i) out[j] = c.values[static_cast<std::size_t>(it - c.rows.begin())];
    }
    return out;
}

std::size_t Design::index_of(const std::string& name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw InputError("no such column: " + name);
    return static_cast<std::size_t>(it - names_.begin());
}

Design Design::select(const std::vector<std::string>& names) const {
    Design out(rows_);
    for (const auto& name : names) out.push(name, columns_[index_of(name)]);
    return out;
}

Design Design::rows_subset(std::span<const std::size_t> rows) const {
    Design out(rows.size());
    std::vector<std::vector<std::uint32_t>> targets;  // source row -> positions in the subset
    for (std::size_t j = 0; j < cols(); ++j) {
        const auto& c = columns_[j];
        Column next;
        next.sparse = c.sparse;
        if (!c.sparse) {
            next.dense.resize(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) next.dense[i] = c.dense[rows[i]];
        } else {
            if (targets.empty()) {
                targets.resize(rows_);
                for (std::size_t i = 0; i < rows.size(); ++i) targets[rows[i]].push_back(static_cast<std::uint32_t>(i));
            }
            std::vector<std::pair<std::uint32_t, double>> entries;
            for (std::size_t k = 0; k < c.rows.size(); ++k) {
                for (const auto t : targets[c.rows[k]]) entries.emplace_back(t, c.values[k]);
            }
            std::sort(entries.begin(), entries.end());
            for (const auto& [r, v] : entries) {
                next.rows.push_back(r);
                next.values.push_back(v);
            }
        }
        out.push(names_[j], std::move(next));
    }
    return out;
}

Design Design::concat(const Design& other) const {
    if (other.rows_ != rows_) throw InputError("cannot concatenate designs with different row counts");
    Design out = *this;
    for (std::size_t j = 0; j < other.cols(); ++j) {
        if (std::find(names_.begin(), names_.end(), other.names_[j]) != names_.end()) {
            throw InputError("duplicate column: " + other.names_[j]);
        }
        out.push(other.names_[j], other.columns_[j]);
    }
    return out;
}

nlohmann::json FittedModel::to_json() const {
    return {{"feature_names", feature_names}, {"coefficients", coefficients},
            {"intercept", intercept},         {"l1_penalty", l1_penalty},
            {"converged", converged},         {"n_iters", n_iters},
            {"log_likelihood", log_likelihood}};
}

FittedModel FittedModel::from_json(const nlohmann::json& doc) {
    FittedModel m;
    m.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    m.coefficients = doc.at("coefficients").get<std::vector<double>>();
    m.intercept = doc.at("intercept").get<double>();
    m.l1_penalty = doc.value("l1_penalty", 0.0);
    m.converged = doc.value("converged", true);
    m.n_iters = doc.value("n_iters", std::size_t{0});
    m.log_likelihood = doc.value("log_likelihood", 0.0);
    if (m.feature_names.size() != m.coefficients.size()) {
        throw InputError("model has mismatched feature names and coefficients");
    }
    if (m.l1_penalty < 0.0) throw InputError("l1 penalty must be non-negative");
    return m;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// log p(y | eta) for a Bernoulli with logit eta.
double bernoulli_log_lik(bool y, double eta) { return y ? -softplus(-eta) : -softplus(eta); }

// Every column is centered and scaled. Sparse columns keep only their
// nonzeros as v = x / sd together with the shift m = mean / sd, so that
// z = v - m on stored rows and z = -m elsewhere.
struct ZColumn {
    bool usable = false;
    bool sparse = false;
    std::vector<double> dense;
    std::vector<std::uint32_t> rows;
    std::vector<double> values;
    double shift = 0.0;

    void axpy(double a, std::span<double> eta) const {
        if (!sparse) return simd::axpy(a, dense, eta);
        for (std::size_t k = 0; k < rows.size(); ++k) eta[rows[k]] += a * values[k];
        if (shift != 0.0) {
            for (double& e : eta) e -= a * shift;
        }
    }
    double dot(std::span<const double> v) const {
        if (!sparse) return simd::dot(dense, v);
        double s = 0.0, total = 0.0;
        for (std::size_t k = 0; k < rows.size(); ++k) s += values[k] * v[rows[k]];
        for (const double x : v) total += x;
        return s - shift * total;
    }
};

struct Standardized {
    std::vector<ZColumn> columns;
    std::vector<double> mean;
    std::vector<double> sd;  // 0 for constant columns
};

Standardized standardize(const Design& X) {
    Standardized s;
    const auto n = static_cast<double>(X.rows());
    for (std::size_t j = 0; j < X.cols(); ++j) {
        ZColumn z;
        z.sparse = X.is_sparse(j);
        double mean = 0.0, var = 0.0;
        if (!z.sparse) {
            const auto col = X.column(j);
            mean = simd::sum(col) / n;
            for (const double v : col) var += (v - mean) * (v - mean);
        } else {
            const auto vals = X.sparse_values(j);
            for (const double v : vals) mean += v;
            mean /= n;
            for (const double v : vals) var += (v - mean) * (v - mean);
            var += (n - static_cast<double>(vals.size())) * mean * mean;
        }
        const double sd = std::sqrt(var / n);
        s.mean.push_back(mean);
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
            s.sd.push_back(0.0);
            s.columns.push_back(std::move(z));
            continue;
        }
        z.usable = true;
        if (!z.sparse) {
            const auto col = X.column(j);
            z.dense.resize(col.size());
            for (std::size_t i = 0; i < col.size(); ++i) z.dense[i] = (col[i] - mean) / sd;
        } else {
            const auto rows = X.sparse_rows(j);
            z.rows.assign(rows.begin(), rows.end());
            for (const double v : X.sparse_values(j)) z.values.push_back(v / sd);
            z.shift = mean / sd;
        }
        s.sd.push_back(sd);
        s.columns.push_back(std::move(z));
    }
    return s;
}

struct State {
    double b0 = 0.0;
    std::vector<double> b;
};

std::vector<double> linear_predictors(const Standardized& s, const State& st, std::size_t n) {
    std::vector<double> eta(n, st.b0);
    for (std::size_t j = 0; j < st.b.size(); ++j) {
        if (st.b[j] != 0.0) s.columns[j].axpy(st.b[j], eta);
    }
    return eta;
}

double penalized(const Standardized& s, const std::vector<bool>& y, const State& st, double lambda,
                 double* ll_out = nullptr) {
    const auto eta = linear_predictors(s, st, y.size());
    double ll = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) ll += bernoulli_log_lik(y[i], eta[i]);
    if (ll_out != nullptr) *ll_out = ll;
    double l1 = 0.0;
    for (const double v : st.b) l1 += std::abs(v);
    return ll - lambda * l1;
}

double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

struct CoreResult {
    State state;
    bool converged = false;
    std::size_t iterations = 0;
    double log_likelihood = 0.0;
};

CoreResult fit_core(const Standardized& s, const std::vector<bool>& y, double lambda, State start,
                    const FitOptions& options) {
    const std::size_t n = y.size();
    const std::size_t p = s.columns.size();
    std::vector<std::size_t> usable;
    for (std::size_t j = 0; j < p; ++j) {
        if (s.columns[j].usable) usable.push_back(j);
    }

    CoreResult result;
    State st = std::move(start);
    st.b.resize(p, 0.0);
    double current = penalized(s, y, st, lambda, &result.log_likelihood);

    // The working residual is r_i = stored_i + offset, so that a sparse
    // column's shift touches one scalar instead of every row.
    std::vector<double> w(n), stored(n);
    std::vector<bool> active(p, false);
    for (std::size_t j : usable) active[j] = st.b[j] != 0.0;
    std::vector<double> curvature(p, 0.0), wz_sum(p, 0.0), wv_sum(p, 0.0);
    double last_change = 1.0;

    for (std::size_t iter = 1; iter <= options.max_iters; ++iter) {
        result.iterations = iter;
        const auto eta = linear_predictors(s, st, n);
        for (std::size_t i = 0; i < n; ++i) {
            const double prob = sigmoid(eta[i]);
            w[i] = std::max(prob * (1.0 - prob), 1e-5);
            stored[i] = ((y[i] ? 1.0 : 0.0) - prob) / w[i];
        }
        double offset = 0.0;
        const State previous = st;
        const double w_sum = simd::sum(w);
        for (std::size_t j : usable) {
            const auto& z = s.columns[j];
            if (!z.sparse) {
                curvature[j] = simd::weighted_dot(w, z.dense, z.dense);
                wz_sum[j] = simd::dot(w, z.dense);
                continue;
            }
            double a = 0.0, q = 0.0;
            for (std::size_t k = 0; k < z.rows.size(); ++k) {
                const double wv = w[z.rows[k]] * z.values[k];
                a += wv;
                q += wv * z.values[k];
            }
            wv_sum[j] = a;
            wz_sum[j] = a - z.shift * w_sum;
            curvature[j] = q - 2.0 * z.shift * a + z.shift * z.shift * w_sum;
        }

        // Cyclic coordinate descent on the weighted least-squares problem,
        // alternating full sweeps with sweeps over the active set. Early
        // working problems are solved loosely; the tolerance tightens as the
        // outer iterations settle.
        const double inner_tol = std::max(options.tol * 0.1, 1e-3 * last_change);
        auto sweep = [&](bool active_only) {
            double wr_stored = simd::dot(w, stored);  // refreshed each sweep against drift
            double max_change = 0.0;
            for (std::size_t j : usable) {
                if (active_only && !active[j]) continue;
                const auto& z = s.columns[j];
                double wzr;
                if (!z.sparse) {
                    wzr = simd::weighted_dot(w, z.dense, stored) + offset * wz_sum[j];
                } else {
                    double t = 0.0;
                    for (std::size_t k = 0; k < z.rows.size(); ++k) t += w[z.rows[k]] * z.values[k] * stored[z.rows[k]];
                    wzr = t + offset * wv_sum[j] - z.shift * (wr_stored + offset * w_sum);
                }
                const double grad = wzr + st.b[j] * curvature[j];
                const double next = soft_threshold(grad, lambda) / curvature[j];
                const double delta = next - st.b[j];
                if (delta != 0.0) {
                    // r -= delta * z
                    if (!z.sparse) {
                        simd::axpy(-delta, z.dense, stored);
                        wr_stored -= delta * wz_sum[j];
                    } else {
                        for (std::size_t k = 0; k < z.rows.size(); ++k) stored[z.rows[k]] -= delta * z.values[k];
                        wr_stored -= delta * wv_sum[j];
                        offset += delta * z.shift;
                    }
                    st.b[j] = next;
                    max_change = std::max(max_change, std::abs(delta) * std::sqrt(curvature[j] / w_sum));
                }
                active[j] = next != 0.0;
            }
            const double delta0 = (wr_stored + offset * w_sum) / w_sum;
            if (delta0 != 0.0) {
                offset -= delta0;
                st.b0 += delta0;
                max_change = std::max(max_change, std::abs(delta0));
            }
            return max_change;
        };
        for (int outer = 0; outer < 1000; ++outer) {
            if (sweep(false) < inner_tol) break;
            for (int inner = 0; inner < 1000; ++inner) {
                if (sweep(true) < inner_tol) break;
            }
        }

        // Step halving keeps the penalized objective non-decreasing.
        double ll = 0.0;
        double value = penalized(s, y, st, lambda, &ll);
        const double slack = 1e-12 * (1.0 + std::abs(current));
        for (int halving = 0; halving < 40 && value < current - slack; ++halving) {
            st.b0 = 0.5 * (st.b0 + previous.b0);
            for (std::size_t j = 0; j < p; ++j) st.b[j] = 0.5 * (st.b[j] + previous.b[j]);
            value = penalized(s, y, st, lambda, &ll);
        }
        if (value < current - slack) {
            st = previous;
            penalized(s, y, st, lambda, &result.log_likelihood);
            break;
        }

        double change = std::abs(st.b0 - previous.b0);
        for (std::size_t j = 0; j < p; ++j) change = std::max(change, std::abs(st.b[j] - previous.b[j]));
        current = value;
        result.log_likelihood = ll;
        last_change = change;
        if (change < options.tol) {
            result.converged = true;
            break;
        }
    }
    result.state = std::move(st);
    return result;
}

void check_labels(const Design& X, const std::vector<bool>& y) {
    if (X.rows() != y.size()) throw InputError("design rows must match the number of labels");
    const auto positives = std::count(y.begin(), y.end(), true);
    if (positives == 0 || static_cast<std::size_t>(positives) == y.size()) {
        throw InputError("labels must contain both classes");
    }
}

State intercept_only(const std::vector<bool>& y, std::size_t p) {
    const auto positives = static_cast<double>(std::count(y.begin(), y.end(), true));
    const auto negatives = static_cast<double>(y.size()) - positives;
    return {std::log(positives / negatives), std::vector<double>(p, 0.0)};
}

FittedModel to_raw(const Design& X, const Standardized& s, const CoreResult& core, double lambda) {
    FittedModel m;
    m.feature_names = X.names();
    m.coefficients.assign(X.cols(), 0.0);
    m.intercept = core.state.b0;
    for (std::size_t j = 0; j < X.cols(); ++j) {
        if (s.sd[j] == 0.0 || core.state.b[j] == 0.0) continue;
        m.coefficients[j] = core.state.b[j] / s.sd[j];
        m.intercept -= m.coefficients[j] * s.mean[j];
    }
    m.l1_penalty = lambda;
    m.converged = core.converged;
    m.n_iters = core.iterations;
    m.log_likelihood = core.log_likelihood;
    return m;
}

}  // namespace

FittedModel fit(const Design& X, const std::vector<bool>& y, const FitOptions& options) {
    check_labels(X, y);
    if (!(options.lambda >= 0.0)) throw InputError("lambda must be non-negative");
    const Standardized s = standardize(X);
    const bool any_usable = std::any_of(s.columns.begin(), s.columns.end(),
                                        [](const auto& c) { return c.usable; });
    if (!any_usable) {
        CoreResult core;
        core.state = intercept_only(y, X.cols());
        core.converged = true;
        core.log_likelihood = penalized(s, y, core.state, 0.0);
        return to_raw(X, s, core, options.lambda);
    }
    const CoreResult core = fit_core(s, y, options.lambda, intercept_only(y, X.cols()), options);
    return to_raw(X, s, core, options.lambda);
}

double lambda_max(const Design& X, const std::vector<bool>& y) {
    check_labels(X, y);
    const Standardized s = standardize(X);
    const double ybar = static_cast<double>(std::count(y.begin(), y.end(), true)) / static_cast<double>(y.size());
    std::vector<double> resid(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) resid[i] = (y[i] ? 1.0 : 0.0) - ybar;
    double best = 0.0;
    for (const auto& z : s.columns) {
        if (z.usable) best = std::max(best, std::abs(z.dot(resid)));
    }
    return best;
}

double linear_predictor(const FittedModel& model, std::span<const double> x) {
    if (x.size() != model.coefficients.size()) throw InputError("feature count does not match the model");
    return model.intercept + std::inner_product(x.begin(), x.end(), model.coefficients.begin(), 0.0);
}

double predict_probability(const FittedModel& model, std::span<const double> x) {
    return sigmoid(linear_predictor(model, x));
}

double predict_probability(const FittedModel& model, const FeatureVector& x) {
    if (x.names != model.feature_names) throw InputError("feature vector schema does not match the model");
    return predict_probability(model, std::span<const double>(x.values));
}

std::vector<double> predict(const FittedModel& model, const Design& X) {
    if (X.names() != model.feature_names) throw InputError("design columns do not match the model");
    std::vector<double> eta(X.rows(), model.intercept);
    for (std::size_t j = 0; j < X.cols(); ++j) {
        if (model.coefficients[j] != 0.0) X.add_scaled(j, model.coefficients[j], eta);
    }
    for (double& v : eta) v = sigmoid(v);
    return eta;
}

double log_likelihood_at(const Design& X, const std::vector<bool>& y, double intercept,
                         std::span<const double> coefficients) {
    if (X.rows() != y.size() || X.cols() != coefficients.size()) throw InputError("shape mismatch");
    std::vector<double> eta(X.rows(), intercept);
    for (std::size_t j = 0; j < X.cols(); ++j) X.add_scaled(j, coefficients[j], eta);
    double ll = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) ll += bernoulli_log_lik(y[i], eta[i]);
    return ll;
}

double log_likelihood(const FittedModel& model, const Design& X, const std::vector<bool>& y) {
    if (X.names() != model.feature_names) throw InputError("design columns do not match the model");
    return log_likelihood_at(X, y, model.intercept, model.coefficients);
}

std::vector<double> log_likelihood_gradient(const Design& X, const std::vector<bool>& y,
                                            double intercept, std::span<const double> coefficients) {
    if (X.rows() != y.size() || X.cols() != coefficients.size()) throw InputError("shape mismatch");
    std::vector<double> eta(X.rows(), intercept);
    for (std::size_t j = 0; j < X.cols(); ++j) X.add_scaled(j, coefficients[j], eta);
    std::vector<double> resid(X.rows());
    for (std::size_t i = 0; i < y.size(); ++i) resid[i] = (y[i] ? 1.0 : 0.0) - sigmoid(eta[i]);
    std::vector<double> grad(X.cols() + 1);
    grad[0] = simd::sum(resid);
    for (std::size_t j = 0; j < X.cols(); ++j) grad[j + 1] = X.dot(j, resid);
    return grad;
}

LrTest likelihood_ratio_test(const Design& X, const std::vector<bool>& y,
                             const std::vector<std::string>& full_features,
                             const std::vector<std::string>& reduced_features) {
    const std::unordered_set<std::string> full(full_features.begin(), full_features.end());
    for (const auto& name : reduced_features) {
        if (!full.contains(name)) throw InputError("feature sets are not nested: " + name);
    }
    if (reduced_features.size() > full_features.size()) throw InputError("feature sets are not nested");
    const Design full_design = X.select(full_features);
    const Design reduced_design = X.select(reduced_features);
    const FittedModel full_model = fit(full_design, y);
    const FittedModel reduced_model = fit(reduced_design, y);

    LrTest out;
    out.ll_full = log_likelihood(full_model, full_design, y);
    out.ll_reduced = log_likelihood(reduced_model, reduced_design, y);
    out.df = full_features.size() - reduced_features.size();
    out.statistic = std::max(0.0, 2.0 * (out.ll_full - out.ll_reduced));
    out.p = out.df == 0 ? 1.0 : stats::chi_square_sf(out.statistic, static_cast<double>(out.df));
    return out;
}

LambdaSelection select_lambda(const Design& X, const std::vector<bool>& y, const LambdaSearch& search) {
    check_labels(X, y);
    if (search.folds < 2) throw InputError("cross-validation needs at least two folds");
    LambdaSelection out;
    const double top = lambda_max(X, y);
    const std::size_t g = std::max<std::size_t>(search.grid_size, 1);
    for (std::size_t i = 0; i < g; ++i) {
        const double frac = g == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(g - 1);
        out.grid.push_back(top * std::pow(search.min_ratio, frac));
    }

    // Stratified fold assignment.
    std::vector<std::size_t> fold(y.size());
    Rng rng(search.seed);
    for (const bool cls : {true, false}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] == cls) members.push_back(i);
        }
        rng.shuffle(members);
        for (std::size_t t = 0; t < members.size(); ++t) fold[members[t]] = t % search.folds;
    }

    std::vector<double> auc_sum(g, 0.0);
    std::vector<std::size_t> auc_count(g, 0);
    for (std::size_t f = 0; f < search.folds; ++f) {
        std::vector<std::size_t> train_rows, valid_rows;
        for (std::size_t i = 0; i < y.size(); ++i) (fold[i] == f ? valid_rows : train_rows).push_back(i);
        std::vector<bool> y_train, y_valid;
        for (auto i : train_rows) y_train.push_back(y[i]);
        for (auto i : valid_rows) y_valid.push_back(y[i]);
        const auto pos_train = std::count(y_train.begin(), y_train.end(), true);
        const auto pos_valid = std::count(y_valid.begin(), y_valid.end(), true);
        if (pos_train == 0 || static_cast<std::size_t>(pos_train) == y_train.size()) continue;
        if (pos_valid == 0 || static_cast<std::size_t>(pos_valid) == y_valid.size()) continue;

        const Design train = X.rows_subset(train_rows);
        const Design valid = X.rows_subset(valid_rows);
        const Standardized s = standardize(train);
        State warm = intercept_only(y_train, train.cols());
        for (std::size_t i = 0; i < g; ++i) {
            const CoreResult core = fit_core(s, y_train, out.grid[i], warm, search.fit);
            warm = core.state;
            const FittedModel model = to_raw(train, s, core, out.grid[i]);
            const auto scores = predict(model, valid);
            auc_sum[i] += stats::roc_auc(scores, y_valid).auc;
            ++auc_count[i];
        }
    }
    double best = -1.0;
    for (std::size_t i = 0; i < g; ++i) {
        const double mean = auc_count[i] > 0 ? auc_sum[i] / static_cast<double>(auc_count[i]) : 0.5;
        out.mean_auc.push_back(mean);
        if (mean > best + 1e-12) {
            best = mean;
            out.lambda = out.grid[i];
        }
    }
    return out;
}

}  // namespace askwell::glm
