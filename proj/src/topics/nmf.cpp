#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "askwell/error.hpp"
#include "askwell/random.hpp"
#include "askwell/simd.hpp"
#include "askwell/topics.hpp"

namespace askwell::topics {
namespace {

using Eigen::MatrixXd;

// out (n x k) = X * Ht, with Ht stored terms x k.
DenseMatrix times_transposed(const SparseMatrix& X, const DenseMatrix& Ht) {
    DenseMatrix out(X.rows, Ht.cols());
    for (std::size_t i = 0; i < X.rows; ++i) {
        auto dst = out.row(i);
        for (std::size_t p = X.row_ptr[i]; p < X.row_ptr[i + 1]; ++p) {
            simd::axpy(X.values[p], Ht.row(X.col_idx[p]), dst);
        }
    }
    return out;
}

// out (m x k) = X^T * W
DenseMatrix transpose_times(const SparseMatrix& X, const DenseMatrix& W) {
    DenseMatrix out(X.cols, W.cols());
    for (std::size_t i = 0; i < X.rows; ++i) {
        const auto src = W.row(i);
        for (std::size_t p = X.row_ptr[i]; p < X.row_ptr[i + 1]; ++p) {
            simd::axpy(X.values[p], src, out.row(X.col_idx[p]));
        }
    }
    return out;
}

// k x k Gram matrix A^T A of a row-major r x k matrix.
DenseMatrix gram(const DenseMatrix& A) {
    const std::size_t k = A.cols();
    DenseMatrix G(k, k);
    for (std::size_t i = 0; i < A.rows(); ++i) {
        const auto row = A.row(i);
        for (std::size_t a = 0; a < k; ++a) {
            if (row[a] != 0.0) simd::axpy(row[a], row, G.row(a));
        }
    }
    return G;
}

// A (r x k) times symmetric G (k x k).
DenseMatrix times_gram(const DenseMatrix& A, const DenseMatrix& G) {
    DenseMatrix out(A.rows(), A.cols());
    for (std::size_t i = 0; i < A.rows(); ++i) {
        const auto row = A.row(i);
        auto dst = out.row(i);
        for (std::size_t a = 0; a < A.cols(); ++a) {
            if (row[a] != 0.0) simd::axpy(row[a], G.row(a), dst);
        }
    }
    return out;
}

DenseMatrix transpose(const DenseMatrix& A) {
    DenseMatrix out(A.cols(), A.rows());
    for (std::size_t r = 0; r < A.rows(); ++r) {
        for (std::size_t c = 0; c < A.cols(); ++c) out(c, r) = A(r, c);
    }
    return out;
}

double frobenius_sq(const SparseMatrix& X) {
    return simd::sum_squares(X.values);
}

// ||X - W Ht^T||^2 = ||X||^2 - 2 <W, X Ht> + <W^T W, Ht^T Ht>
double expanded_objective(double x_norm_sq, const DenseMatrix& W, const DenseMatrix& XHt,
                          const DenseMatrix& HHt) {
    const double cross = simd::dot(W.values(), XHt.values());
    const DenseMatrix WtW = gram(W);
    const double quad = simd::dot(WtW.values(), HHt.values());
    return std::max(0.0, x_norm_sq - 2.0 * cross + quad);
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

struct Svd {
    MatrixXd U;   // n x k
    Eigen::VectorXd s;
    MatrixXd V;   // m x k
};

MatrixXd to_eigen(const SparseMatrix& X) {
    MatrixXd out = MatrixXd::Zero(static_cast<Eigen::Index>(X.rows), static_cast<Eigen::Index>(X.cols));
    for (std::size_t i = 0; i < X.rows; ++i) {
        for (std::size_t p = X.row_ptr[i]; p < X.row_ptr[i + 1]; ++p) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(X.col_idx[p])) = X.values[p];
        }
    }
    return out;
}

MatrixXd sparse_times(const SparseMatrix& X, const MatrixXd& Q) {
    MatrixXd out = MatrixXd::Zero(static_cast<Eigen::Index>(X.rows), Q.cols());
    for (std::size_t i = 0; i < X.rows; ++i) {
        for (std::size_t p = X.row_ptr[i]; p < X.row_ptr[i + 1]; ++p) {
            out.row(static_cast<Eigen::Index>(i)) += X.values[p] * Q.row(static_cast<Eigen::Index>(X.col_idx[p]));
        }
    }
    return out;
}

MatrixXd sparse_transpose_times(const SparseMatrix& X, const MatrixXd& Y) {
    MatrixXd out = MatrixXd::Zero(static_cast<Eigen::Index>(X.cols), Y.cols());
    for (std::size_t i = 0; i < X.rows; ++i) {
        for (std::size_t p = X.row_ptr[i]; p < X.row_ptr[i + 1]; ++p) {
            out.row(static_cast<Eigen::Index>(X.col_idx[p])) += X.values[p] * Y.row(static_cast<Eigen::Index>(i));
        }
    }
    return out;
}

MatrixXd orthonormalize(const MatrixXd& A) {
    Eigen::HouseholderQR<MatrixXd> qr(A);
    return qr.householderQ() * MatrixXd::Identity(A.rows(), A.cols());
}

// Leading k singular triplets. Small inputs use a dense SVD; large ones a
// fixed-seed randomized subspace iteration.
Svd leading_svd(const SparseMatrix& X, std::size_t k) {
    const auto kk = static_cast<Eigen::Index>(k);
    if (X.rows * X.cols <= 2'000'000) {
        Eigen::BDCSVD<MatrixXd> svd(to_eigen(X), Eigen::ComputeThinU | Eigen::ComputeThinV);
        return {svd.matrixU().leftCols(kk), svd.singularValues().head(kk), svd.matrixV().leftCols(kk)};
    }
    const std::size_t width = std::min<std::size_t>(k + 10, std::min(X.rows, X.cols));
    Rng rng(0x5eed5eedULL);
    MatrixXd Q(static_cast<Eigen::Index>(X.cols), static_cast<Eigen::Index>(width));
    for (Eigen::Index c = 0; c < Q.cols(); ++c) {
        for (Eigen::Index r = 0; r < Q.rows(); ++r) Q(r, c) = rng.normal();
    }
    Q = orthonormalize(Q);
    for (int it = 0; it < 40; ++it) {
        Q = orthonormalize(sparse_transpose_times(X, sparse_times(X, Q)));
    }
    const MatrixXd B = sparse_times(X, Q);
    Eigen::JacobiSVD<MatrixXd> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {svd.matrixU().leftCols(kk), svd.singularValues().head(kk),
            (Q * svd.matrixV()).leftCols(kk)};
}

}  // namespace

double objective(const SparseMatrix& X, const DenseMatrix& W, const DenseMatrix& H) {
    const DenseMatrix Ht = transpose(H);
    return expanded_objective(frobenius_sq(X), W, times_transposed(X, Ht), gram(Ht));
}

Factors nndsvd_init(const SparseMatrix& X, std::size_t k) {
    if (k == 0) throw InputError("k must be at least 1");
    if (k > std::min(X.rows, X.cols)) throw InputError("k exceeds the dimensions of X");
    for (const double v : X.values) {
        if (v < 0.0 || !std::isfinite(v)) throw InputError("X must be finite and non-negative");
    }
    const Svd svd = leading_svd(X, k);
    if (!(svd.s(0) > 0.0)) throw InputError("X has rank 0");
    for (Eigen::Index j = 0; j < svd.s.size(); ++j) {
        if (svd.s(j) <= 1e-12 * svd.s(0)) throw InputError("k exceeds the rank of X");
    }

    Factors out{DenseMatrix(X.rows, k), DenseMatrix(k, X.cols)};
    const auto n = static_cast<Eigen::Index>(X.rows);
    const auto m = static_cast<Eigen::Index>(X.cols);

    const double root0 = std::sqrt(svd.s(0));
    for (Eigen::Index i = 0; i < n; ++i) out.W(static_cast<std::size_t>(i), 0) = root0 * std::abs(svd.U(i, 0));
    for (Eigen::Index j = 0; j < m; ++j) out.H(0, static_cast<std::size_t>(j)) = root0 * std::abs(svd.V(j, 0));

    for (std::size_t t = 1; t < k; ++t) {
        const auto tt = static_cast<Eigen::Index>(t);
        const Eigen::VectorXd u = svd.U.col(tt);
        const Eigen::VectorXd v = svd.V.col(tt);
        const Eigen::VectorXd up = u.cwiseMax(0.0), un = (-u).cwiseMax(0.0);
        const Eigen::VectorXd vp = v.cwiseMax(0.0), vn = (-v).cwiseMax(0.0);
        const double up_norm = up.norm(), un_norm = un.norm();
        const double vp_norm = vp.norm(), vn_norm = vn.norm();
        const double pos = up_norm * vp_norm;
        const double neg = un_norm * vn_norm;
        Eigen::VectorXd wu, hv;
        double sigma;
        if (pos >= neg) {
            wu = pos > 0 ? Eigen::VectorXd(up / up_norm) : Eigen::VectorXd::Zero(n);
            hv = pos > 0 ? Eigen::VectorXd(vp / vp_norm) : Eigen::VectorXd::Zero(m);
            sigma = pos;
        } else {
            wu = un / un_norm;
            hv = vn / vn_norm;
            sigma = neg;
        }
        const double scale = std::sqrt(svd.s(tt) * sigma);
        for (Eigen::Index i = 0; i < n; ++i) out.W(static_cast<std::size_t>(i), t) = scale * wu(i);
        for (Eigen::Index j = 0; j < m; ++j) out.H(t, static_cast<std::size_t>(j)) = scale * hv(j);
    }
    for (auto* values : {&out.W, &out.H}) {
        for (double& v : values->values()) {
            if (v < kInitFloor) v = kInitFloor;
        }
    }
    return out;
}

Factors random_init(std::size_t rows, std::size_t cols, std::size_t k, double scale,
                    std::uint64_t seed) {
    if (k == 0) throw InputError("k must be at least 1");
    Rng rng(seed);
    Factors out{DenseMatrix(rows, k), DenseMatrix(k, cols)};
    for (double& v : out.W.values()) v = scale * rng.uniform();
    for (double& v : out.H.values()) v = scale * rng.uniform();
    return out;
}

double hoyer_sparseness(std::span<const double> v) {
    if (v.size() < 2) throw InputError("sparseness needs at least two entries");
    double l1 = 0.0;
    double l2sq = 0.0;
    for (const double x : v) {
        if (x < 0.0) throw InputError("sparseness is defined for non-negative vectors");
        l1 += x;
        l2sq += x * x;
    }
    if (l2sq == 0.0) throw InputError("sparseness of an all-zero vector is undefined");
    const double root_n = std::sqrt(static_cast<double>(v.size()));
    const double s = (root_n - l1 / std::sqrt(l2sq)) / (root_n - 1.0);
    return std::clamp(s, 0.0, 1.0);
}

std::vector<double> project_l1_l2(std::span<const double> v, double l1, double l2) {
    const std::size_t n = v.size();
    std::vector<double> s(v.begin(), v.end());
    const double shift = (l1 - std::accumulate(s.begin(), s.end(), 0.0)) / static_cast<double>(n);
    for (double& x : s) x += shift;

    std::vector<bool> zeroed(n, false);
    std::size_t n_zero = 0;
    std::vector<double> mid(n);
    for (std::size_t guard = 0; guard <= n; ++guard) {
        const double fill = l1 / static_cast<double>(n - n_zero);
        for (std::size_t i = 0; i < n; ++i) mid[i] = zeroed[i] ? 0.0 : fill;
        double a = 0.0;
        for (std::size_t i = 0; i < n; ++i) a += (s[i] - mid[i]) * (s[i] - mid[i]);
        if (a <= 1e-24 * l2 * l2) {
            // Remaining entries are tied, so any direction is as close as any
            // other. Tilt towards the first surviving entry.
            const std::size_t live = n - n_zero;
            if (live < 2) break;
            bool first = true;
            for (std::size_t i = 0; i < n; ++i) {
                if (zeroed[i]) continue;
                s[i] = mid[i] + (first ? 1.0 : -1.0 / static_cast<double>(live - 1));
                first = false;
            }
            a = 0.0;
            for (std::size_t i = 0; i < n; ++i) a += (s[i] - mid[i]) * (s[i] - mid[i]);
        }
        double b = 0.0, c = -l2 * l2;
        for (std::size_t i = 0; i < n; ++i) {
            b += 2.0 * (s[i] - mid[i]) * mid[i];
            c += mid[i] * mid[i];
        }
        double alpha = 0.0;
        if (a > 0.0) alpha = (-b + std::sqrt(std::max(0.0, b * b - 4.0 * a * c))) / (2.0 * a);
        for (std::size_t i = 0; i < n; ++i) s[i] = mid[i] + alpha * (s[i] - mid[i]);

        bool any_negative = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (s[i] < 0.0) {
                any_negative = true;
                zeroed[i] = true;
            }
        }
        if (!any_negative) return s;
        n_zero = static_cast<std::size_t>(std::count(zeroed.begin(), zeroed.end(), true));
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (zeroed[i]) s[i] = 0.0;
            total += s[i];
        }
        const double adjust = (total - l1) / static_cast<double>(n - n_zero);
        for (std::size_t i = 0; i < n; ++i) {
            if (!zeroed[i]) s[i] -= adjust;
        }
    }
    for (double& x : s) x = std::max(x, 0.0);
    return s;
}

void enforce_row_sparseness(std::span<double> row, double target) {
    double l2sq = 0.0;
    for (double& x : row) {
        if (x < 0.0) x = 0.0;
        l2sq += x * x;
    }
    if (l2sq == 0.0) return;
    if (hoyer_sparseness(row) >= target) return;
    const double root_n = std::sqrt(static_cast<double>(row.size()));
    const double l2 = std::sqrt(l2sq);
    const double l1 = l2 * (root_n - target * (root_n - 1.0));
    const auto projected = project_l1_l2(row, l1, l2);
    std::copy(projected.begin(), projected.end(), row.begin());
}

TopicModel fit_nmf(const SparseMatrix& X, const textkit::Vocabulary& vocab,
                   const NmfOptions& options) {
    if (options.k < 1) throw InputError("k must be at least 1");
    if (X.cols != vocab.size()) throw InputError("X columns must match the vocabulary");
    if (options.target_sparseness) {
        const double t = *options.target_sparseness;
        if (!(t >= 0.0 && t < 1.0)) throw InputError("target sparseness must lie in [0, 1)");
        if (options.k < 2) throw InputError("a sparseness target needs k >= 2");
    }
    for (const double v : X.values) {
        if (v < 0.0 || !std::isfinite(v)) throw InputError("X must be finite and non-negative");
    }

    Factors init;
    if (options.init == Init::nndsvd) {
        init = nndsvd_init(X, options.k);
    } else {
        const double mean = X.rows * X.cols > 0
                                ? simd::sum(X.values) / static_cast<double>(X.rows * X.cols)
                                : 0.0;
        init = random_init(X.rows, X.cols, options.k,
                           2.0 * std::sqrt(std::max(mean, 1e-12) / static_cast<double>(options.k)),
                           options.seed);
    }

    DenseMatrix W = std::move(init.W);
    DenseMatrix Ht = transpose(init.H);
    const std::size_t k = options.k;
    const double x_norm_sq = frobenius_sq(X);
    constexpr double eps = 1e-12;

    if (options.target_sparseness) {
        for (std::size_t i = 0; i < W.rows(); ++i) enforce_row_sparseness(W.row(i), *options.target_sparseness);
    }

    TopicModel model;
    model.k = k;
    model.target_sparseness = options.target_sparseness;

    DenseMatrix HHt = gram(Ht);
    DenseMatrix XHt = times_transposed(X, Ht);
    double current = expanded_objective(x_norm_sq, W, XHt, HHt);
    model.objective_trace.push_back(current);

    double step = 0.0;
    if (options.target_sparseness) {
        const double norm = std::sqrt(simd::sum_squares(HHt.values()));
        step = norm > 0.0 ? 1.0 / norm : 1.0;
    }

    for (std::size_t iter = 1; iter <= options.max_iters; ++iter) {
        // W step.
        if (options.target_sparseness) {
            DenseMatrix grad = times_gram(W, HHt);
            simd::axpy(-1.0, XHt.values(), grad.values());
            bool accepted = false;
            for (int attempt = 0; attempt < 50 && !accepted; ++attempt) {
                DenseMatrix trial = W;
                simd::axpy(-step, grad.values(), trial.values());
                for (std::size_t i = 0; i < trial.rows(); ++i) {
                    enforce_row_sparseness(trial.row(i), *options.target_sparseness);
                }
                const double value = expanded_objective(x_norm_sq, trial, XHt, HHt);
                if (value <= current) {
                    W = std::move(trial);
                    current = value;
                    step *= 1.2;
                    accepted = true;
                } else {
                    step *= 0.5;
                }
            }
        } else {
            const DenseMatrix denom = times_gram(W, HHt);
            simd::multiplicative_update(W.values(), XHt.values(), denom.values(), eps);
        }

        // H step (multiplicative), with Ht stored terms x k.
        const DenseMatrix WtW = gram(W);
        const DenseMatrix numer = transpose_times(X, W);
        const DenseMatrix denom = times_gram(Ht, WtW);
        simd::multiplicative_update(Ht.values(), numer.values(), denom.values(), eps);

        if (!all_finite(W.values()) || !all_finite(Ht.values())) {
            throw NumericError("non-finite factor values at iteration " + std::to_string(iter));
        }

        HHt = gram(Ht);
        XHt = times_transposed(X, Ht);
        const double previous = model.objective_trace.back();
        current = expanded_objective(x_norm_sq, W, XHt, HHt);
        if (!std::isfinite(current)) {
            throw NumericError("non-finite objective at iteration " + std::to_string(iter));
        }
        model.objective_trace.push_back(current);
        model.iterations = iter;
        const double rel = std::abs(previous - current) / std::max(previous, std::numeric_limits<double>::min());
        if (rel < options.tol) {
            model.converged = true;
            break;
        }
    }

    model.W = std::move(W);
    model.H = transpose(Ht);
    model.vocab = vocab;
    return model;
}

std::vector<std::vector<std::string>> top_terms(const TopicModel& model, std::size_t m) {
    if (m > model.vocab.size()) throw InputError("m exceeds the vocabulary size");
    std::vector<std::vector<std::string>> out;
    const auto& terms = model.vocab.terms();
    for (std::size_t t = 0; t < model.H.rows(); ++t) {
        const auto row = model.H.row(t);
        std::vector<std::size_t> order(row.size());
        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(),
                          [&](std::size_t a, std::size_t b) {
                              if (row[a] != row[b]) return row[a] > row[b];
                              return terms[a] < terms[b];
                          });
        std::vector<std::string> picked;
        for (std::size_t i = 0; i < m; ++i) picked.push_back(terms[order[i]]);
        out.push_back(std::move(picked));
    }
    return out;
}

std::vector<std::size_t> dominant_topics(const DenseMatrix& W) {
    std::vector<std::size_t> out(W.rows());
    for (std::size_t i = 0; i < W.rows(); ++i) {
        const auto row = W.row(i);
        out[i] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

std::vector<std::optional<double>> topic_success_rates(const TopicModel& model,
                                                       const std::vector<bool>& labels) {
    if (labels.size() != model.W.rows()) throw InputError("one label per document is required");
    std::vector<std::size_t> assigned(model.k, 0);
    std::vector<std::size_t> successes(model.k, 0);
    const auto topics = dominant_topics(model.W);
    for (std::size_t i = 0; i < topics.size(); ++i) {
        ++assigned[topics[i]];
        if (labels[i]) ++successes[topics[i]];
    }
    std::vector<std::optional<double>> rates(model.k);
    for (std::size_t t = 0; t < model.k; ++t) {
        if (assigned[t] > 0) {
            rates[t] = static_cast<double>(successes[t]) / static_cast<double>(assigned[t]);
        }
    }
    return rates;
}

nlohmann::json TopicModel::to_json() const {
    nlohmann::json h_rows = nlohmann::json::array();
    for (std::size_t t = 0; t < H.rows(); ++t) {
        nlohmann::json entries = nlohmann::json::array();
        for (std::size_t j = 0; j < H.cols(); ++j) {
            if (H(t, j) != 0.0) entries.push_back({j, H(t, j)});
        }
        h_rows.push_back(std::move(entries));
    }
    nlohmann::json w_triplets = nlohmann::json::array();
    for (std::size_t i = 0; i < W.rows(); ++i) {
        for (std::size_t t = 0; t < W.cols(); ++t) {
            if (W(i, t) != 0.0) w_triplets.push_back({i, t, W(i, t)});
        }
    }
    nlohmann::json doc{{"k", k},
                       {"n_docs", W.rows()},
                       {"vocab", vocab.to_json()},
                       {"H", std::move(h_rows)},
                       {"W", std::move(w_triplets)},
                       {"objective_trace", objective_trace},
                       {"iterations", iterations},
                       {"converged", converged}};
    doc["target_sparseness"] = target_sparseness ? nlohmann::json(*target_sparseness) : nlohmann::json(nullptr);
    return doc;
}

TopicModel TopicModel::from_json(const nlohmann::json& doc) {
    TopicModel model;
    model.k = doc.at("k").get<std::size_t>();
    model.vocab = textkit::Vocabulary::from_json(doc.at("vocab"));
    model.H = DenseMatrix(model.k, model.vocab.size());
    const auto& h_rows = doc.at("H");
    for (std::size_t t = 0; t < model.k; ++t) {
        for (const auto& e : h_rows.at(t)) model.H(t, e.at(0).get<std::size_t>()) = e.at(1).get<double>();
    }
    model.W = DenseMatrix(doc.at("n_docs").get<std::size_t>(), model.k);
    for (const auto& e : doc.at("W")) {
        model.W(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>()) = e.at(2).get<double>();
    }
    model.objective_trace = doc.at("objective_trace").get<std::vector<double>>();
    model.iterations = doc.value("iterations", std::size_t{0});
    model.converged = doc.value("converged", false);
    if (!doc.at("target_sparseness").is_null()) model.target_sparseness = doc.at("target_sparseness").get<double>();
    return model;
}

}  // namespace askwell::topics
