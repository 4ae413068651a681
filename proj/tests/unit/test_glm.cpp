#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "askwell/error.hpp"
#include "askwell/glm.hpp"
#include "askwell/random.hpp"
#include "synthetic.hpp"

using namespace askwell;
using namespace askwell::glm;
using askwell::testing::logistic_problem;

namespace {

// Newton-Raphson on the full likelihood with an explicit intercept column.
Eigen::VectorXd irls(const Design& X, const std::vector<bool>& y) {
    const auto n = static_cast<Eigen::Index>(X.rows());
    const auto p = static_cast<Eigen::Index>(X.cols()) + 1;
    Eigen::MatrixXd A(n, p);
    A.col(0).setOnes();
    for (Eigen::Index j = 1; j < p; ++j) {
        const auto c = X.column(static_cast<std::size_t>(j - 1));
        for (Eigen::Index i = 0; i < n; ++i) A(i, j) = c[static_cast<std::size_t>(i)];
    }
    Eigen::VectorXd yv(n);
    for (Eigen::Index i = 0; i < n; ++i) yv(i) = y[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    for (int it = 0; it < 100; ++it) {
        const Eigen::VectorXd eta = A * beta;
        const Eigen::VectorXd mu = eta.unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
        const Eigen::VectorXd w = mu.array() * (1.0 - mu.array());
        const Eigen::MatrixXd H = A.transpose() * w.asDiagonal() * A;
        const Eigen::VectorXd step = H.ldlt().solve(A.transpose() * (yv - mu));
        beta += step;
        if (step.cwiseAbs().maxCoeff() < 1e-13) break;
    }
    return beta;
}

double penalized(const Design& X, const std::vector<bool>& y, const FittedModel& m, double lambda) {
    // Penalty on the standardized scale: |b_j| * sd_j.
    double pen = 0.0;
    for (std::size_t j = 0; j < X.cols(); ++j) {
        const auto c = X.column(j);
        double mean = 0.0;
        for (double v : c) mean += v;
        mean /= static_cast<double>(c.size());
        double var = 0.0;
        for (double v : c) var += (v - mean) * (v - mean);
        pen += std::abs(m.coefficients[j]) * std::sqrt(var / static_cast<double>(c.size()));
    }
    return log_likelihood(m, X, y) - lambda * pen;
}

}  // namespace

TEST_CASE("intercept-only fit has the closed form") {
    std::vector<bool> y;
    for (int i = 0; i < 1000; ++i) y.push_back(i < 246);
    const auto m = fit(Design(1000), y);
    CHECK(m.coefficients.empty());
    CHECK(m.intercept == doctest::Approx(std::log(0.246 / 0.754)).epsilon(1e-9));
    CHECK(m.intercept == doctest::Approx(-1.120).epsilon(1e-3));
    CHECK_THROWS_AS(fit(Design(3), {true, true, true}), InputError);
}

TEST_CASE("unpenalized fit matches an IRLS oracle") {
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto prob = logistic_problem(50, {0.8, -0.5, 0.3}, -0.4, seed);
        const auto m = fit(prob.X, prob.y);
        const auto oracle = irls(prob.X, prob.y);
        CHECK(m.converged);
        CHECK(std::abs(m.intercept - oracle(0)) <= 1e-6);
        for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(m.coefficients[j] - oracle(static_cast<Eigen::Index>(j) + 1)) <= 1e-6);
        CHECK(m.log_likelihood == doctest::Approx(log_likelihood(m, prob.X, prob.y)));
    }
}

TEST_CASE("large penalty shrinks everything to the intercept-only solution") {
    const auto prob = logistic_problem(200, {1.0, -1.0, 0.5}, 0.2, 4);
    const double lmax = lambda_max(prob.X, prob.y);
    const auto m = fit(prob.X, prob.y, {lmax * 1.0001, 10000, 1e-8});
    for (double b : m.coefficients) CHECK(b == 0.0);
    const double pos = static_cast<double>(std::count(prob.y.begin(), prob.y.end(), true));
    CHECK(m.intercept == doctest::Approx(std::log(pos / (200.0 - pos))));
    const auto below = fit(prob.X, prob.y, {lmax * 0.9, 10000, 1e-8});
    CHECK(std::any_of(below.coefficients.begin(), below.coefficients.end(), [](double b) { return b != 0.0; }));
}

TEST_CASE("gradient matches central finite differences") {
    const auto prob = logistic_problem(120, {0.7, -0.2, 0.4, 0.0}, 0.3, 5);
    Rng rng(77);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> b(4);
        for (double& v : b) v = rng.normal() * 0.5;
        const double b0 = rng.normal() * 0.5;
        const auto g = log_likelihood_gradient(prob.X, prob.y, b0, b);
        const double h = 1e-5;
        const double d0 = (log_likelihood_at(prob.X, prob.y, b0 + h, b) - log_likelihood_at(prob.X, prob.y, b0 - h, b)) / (2 * h);
        CHECK(std::abs(g[0] - d0) <= 1e-6 * std::max(1.0, std::abs(d0)));
        for (std::size_t j = 0; j < 4; ++j) {
            auto up = b, down = b;
            up[j] += h;
            down[j] -= h;
            const double d = (log_likelihood_at(prob.X, prob.y, b0, up) - log_likelihood_at(prob.X, prob.y, b0, down)) / (2 * h);
            CHECK(std::abs(g[j + 1] - d) <= 1e-6 * std::max(1.0, std::abs(d)));
        }
    }
}

TEST_CASE("penalized optimum satisfies the subgradient conditions") {
    const auto prob = logistic_problem(300, {1.0, 0.0, -0.6, 0.0, 0.2}, -0.5, 6);
    const double lambda = 0.1 * lambda_max(prob.X, prob.y);
    const auto m = fit(prob.X, prob.y, {lambda, 10000, 1e-10});
    const auto g = log_likelihood_gradient(prob.X, prob.y, m.intercept, m.coefficients);
    CHECK(std::abs(g[0]) <= 1e-5);
    for (std::size_t j = 0; j < 5; ++j) {
        const auto c = prob.X.column(j);
        double mean = 0.0, var = 0.0;
        for (double v : c) mean += v;
        mean /= 300.0;
        for (double v : c) var += (v - mean) * (v - mean);
        const double sd = std::sqrt(var / 300.0);
        // On the standardized scale the gradient is g_j / sd_j.
        const double gs = g[j + 1] / sd;
        if (m.coefficients[j] == 0.0) {
            CHECK(std::abs(gs) <= lambda * (1.0 + 1e-4));
        } else {
            CHECK(gs == doctest::Approx(lambda * (m.coefficients[j] > 0 ? 1.0 : -1.0)).epsilon(1e-4));
        }
    }
    // No perturbation improves the penalized objective.
    const double best = penalized(prob.X, prob.y, m, lambda);
    Rng rng(8);
    for (int t = 0; t < 50; ++t) {
        FittedModel other = m;
        other.intercept += rng.normal() * 1e-3;
        for (double& b : other.coefficients) b += rng.normal() * 1e-3;
        CHECK(penalized(prob.X, prob.y, other, lambda) <= best + 1e-9);
    }
}

TEST_CASE("larger penalties never add nonzero coefficients on a 16-feature problem") {
    std::vector<double> beta(16);
    for (std::size_t j = 0; j < 16; ++j) beta[j] = (j % 3 == 0 ? 0.0 : 0.5) * (j % 2 ? -1.0 : 1.0);
    const auto prob = logistic_problem(800, beta, -1.0, 12);
    const double lmax = lambda_max(prob.X, prob.y);
    std::size_t prev = 0;
    for (int i = 0; i < 20; ++i) {
        const double lambda = lmax * std::pow(1e-3, i / 19.0);
        const auto m = fit(prob.X, prob.y, {lambda, 10000, 1e-8});
        const auto nz = static_cast<std::size_t>(std::count_if(m.coefficients.begin(), m.coefficients.end(), [](double b) { return b != 0.0; }));
        CHECK(nz >= prev);
        prev = nz;
        CHECK(m.converged);
    }
}

TEST_CASE("log likelihood closed forms") {
    Design X(4);
    X.add_column("x", {1, 2, 3, 4});
    const std::vector<bool> y{true, false, true, false};
    FittedModel zero{{"x"}, {0.0}, 0.0};
    CHECK(log_likelihood(zero, X, y) == doctest::Approx(4.0 * std::log(0.5)));
    FittedModel sharp{{"x"}, {-200.0}, 500.0};
    Design one(1);
    one.add_column("x", {1.0});
    const double ll = log_likelihood(sharp, one, {true});
    CHECK(ll <= 0.0);
    CHECK(ll > -1e-100);
    FittedModel wrong{{"x"}, {1e6}, 0.0};
    const double bad = log_likelihood(wrong, X, y);
    CHECK(std::isfinite(bad));
    CHECK(bad < -1e6);
}

TEST_CASE("prediction") {
    FittedModel m{{"a", "b"}, {0.5, -1.0}, 0.1};
    FeatureVector x{"s", {"a", "b"}, {1.0, 2.0}};
    CHECK(predict_probability(m, x) == doctest::Approx(sigmoid(0.1 + 0.5 - 2.0)));
    FeatureVector reordered{"s", {"b", "a"}, {2.0, 1.0}};
    CHECK_THROWS(predict_probability(m, reordered));
    double prev = 0.0;
    for (double a = -3; a <= 3; a += 0.5) {
        const std::vector<double> v{a, 0.0};
        const double p = predict_probability(m, v);
        CHECK(p > prev);
        CHECK(p > 0.0);
        CHECK(p < 1.0);
        prev = p;
    }
}

TEST_CASE("reference coefficients reproduce the interpretation scenarios") {
    // Karma and community-age decile terms cancel at equal codes.
    const auto p = [](double eta) { return sigmoid(eta); };
    CHECK(p(-2.02 + 0.5 * 0.30 - 0.34) == doctest::Approx(0.098).epsilon(0.01));
    CHECK(p(-2.02 + 0.15 + 0.26 + 0.19) == doctest::Approx(0.194).epsilon(0.01));
    CHECK(p(-2.02 + 0.45 + 0.26 + 0.19 + 0.81 + 0.27 + 0.32) == doctest::Approx(0.568).epsilon(0.01));
}

TEST_CASE("likelihood ratio test") {
    auto prob = logistic_problem(400, {0.6, 0.0}, -0.3, 21);
    const auto same = likelihood_ratio_test(prob.X, prob.y, {"x0", "x1"}, {"x0", "x1"});
    CHECK(same.statistic == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(same.p == doctest::Approx(1.0));
    CHECK_THROWS(likelihood_ratio_test(prob.X, prob.y, {"x0"}, {"x1"}));

    std::vector<double> label;
    for (bool b : prob.y) label.push_back(b ? 1.0 : 0.0);
    prob.X.add_column("label", label);
    const auto perfect = likelihood_ratio_test(prob.X, prob.y, {"x0", "label"}, {"x0"});
    CHECK(perfect.df == 1);
    CHECK(perfect.statistic > 100.0);
    CHECK(perfect.p < 0.001);
}

TEST_CASE("likelihood ratio p-values are uniform under the null") {
    std::vector<double> ps;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto prob = logistic_problem(300, {0.7, 0.0}, -0.5, 1000 + seed);
        ps.push_back(likelihood_ratio_test(prob.X, prob.y, {"x0", "x1"}, {"x0"}).p);
    }
    std::sort(ps.begin(), ps.end());
    double d = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const double n = static_cast<double>(ps.size());
        d = std::max({d, std::abs(ps[i] - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - ps[i])});
    }
    // Kolmogorov critical value at alpha = 0.01 is about 1.63 / sqrt(n).
    CHECK(d < 1.63 / std::sqrt(static_cast<double>(ps.size())));
}

TEST_CASE("design helpers") {
    Design X(3);
    X.add_column("a", {1, 2, 3});
    X.add_column("b", {4, 5, 6});
    CHECK_THROWS(X.add_column("c", {1, 2}));
    CHECK_THROWS(X.add_column("c", {1, std::nan(""), 3}));
    CHECK(X.row(1) == std::vector<double>{2, 5});
    const auto s = X.select({"b"});
    CHECK(s.cols() == 1);
    CHECK(s.column(0)[2] == 6.0);
    const std::vector<std::size_t> rows{2, 0};
    const auto r = X.rows_subset(rows);
    CHECK(r.row(0) == std::vector<double>{3, 6});
    CHECK_THROWS(X.index_of("zzz"));
}

TEST_CASE("model json round trip") {
    const auto prob = logistic_problem(100, {0.5, -0.5}, 0.0, 3);
    const auto m = fit(prob.X, prob.y, {0.01, 10000, 1e-8});
    const auto back = FittedModel::from_json(m.to_json());
    CHECK(back.feature_names == m.feature_names);
    CHECK(back.coefficients == m.coefficients);
    CHECK(back.intercept == m.intercept);
    CHECK(back.l1_penalty == m.l1_penalty);
}

TEST_CASE("lambda selection scores every grid point") {
    const auto prob = logistic_problem(400, {0.8, 0.0, 0.0, -0.4}, -0.8, 9);
    LambdaSearch search;
    search.seed = 5;
    const auto sel = select_lambda(prob.X, prob.y, search);
    REQUIRE(sel.grid.size() == 20);
    CHECK(sel.mean_auc.size() == 20);
    CHECK(sel.grid.front() == doctest::Approx(lambda_max(prob.X, prob.y)));
    CHECK(sel.grid.back() == doctest::Approx(lambda_max(prob.X, prob.y) * 1e-3));
    const auto best = std::max_element(sel.mean_auc.begin(), sel.mean_auc.end());
    CHECK(sel.lambda == sel.grid[static_cast<std::size_t>(best - sel.mean_auc.begin())]);
    CHECK(*best > 0.65);
    const auto again = select_lambda(prob.X, prob.y, search);
    CHECK(again.lambda == sel.lambda);
    CHECK(again.mean_auc == sel.mean_auc);
}

TEST_CASE("sparse columns fit the same model as their dense copies") {
    Rng rng(17);
    const std::size_t n = 300;
    Design dense(n), sparse(n);
    std::vector<double> eta(n, -0.3);
    for (std::size_t j = 0; j < 6; ++j) {
        std::vector<double> col(n, 0.0);
        std::vector<std::uint32_t> rows;
        std::vector<double> vals;
        for (std::size_t i = 0; i < n; ++i) {
            if (rng.uniform() < 0.2) {
                col[i] = 1.0 + std::floor(3.0 * rng.uniform());
                rows.push_back(static_cast<std::uint32_t>(i));
                vals.push_back(col[i]);
                eta[i] += (j % 2 == 0 ? 0.5 : -0.4) * col[i];
            }
        }
        dense.add_column("t" + std::to_string(j), col);
        sparse.add_sparse_column("t" + std::to_string(j), rows, vals);
    }
    std::vector<bool> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = rng.uniform() < sigmoid(eta[i]);

    CHECK(lambda_max(dense, y) == doctest::Approx(lambda_max(sparse, y)).epsilon(1e-12));
    for (const double lambda : {0.0, 2.0, 8.0}) {
        FitOptions opts;
        opts.lambda = lambda;
        opts.tol = 1e-10;
        const auto a = fit(dense, y, opts);
        const auto b = fit(sparse, y, opts);
        CHECK(b.converged);
        CHECK(b.intercept == doctest::Approx(a.intercept).epsilon(1e-6));
        for (std::size_t j = 0; j < 6; ++j) {
            CHECK(b.coefficients[j] == doctest::Approx(a.coefficients[j]).epsilon(1e-6));
        }
        const auto pa = predict(a, dense);
        const auto pb = predict(b, sparse);
        for (std::size_t i = 0; i < n; ++i) CHECK(pb[i] == doctest::Approx(pa[i]).epsilon(1e-6));
    }

    const std::vector<std::size_t> pick{5, 5, 0, 299, 17};
    const auto ds = dense.rows_subset(pick);
    const auto ss = sparse.rows_subset(pick);
    for (std::size_t i = 0; i < pick.size(); ++i) CHECK(ss.row(i) == ds.row(i));
    CHECK(sparse.dense_column(2) == std::vector<double>(dense.column(2).begin(), dense.column(2).end()));
    CHECK_THROWS_AS(sparse.column(0), InputError);
    CHECK_THROWS_AS(Design(3).add_sparse_column("x", {2, 1}, {1.0, 1.0}), InputError);
    CHECK_THROWS_AS(Design(3).add_sparse_column("x", {3}, {1.0}), InputError);
    CHECK(dense.concat(Design(n)).cols() == 6);
    CHECK_THROWS_AS(dense.concat(sparse), InputError);
}
