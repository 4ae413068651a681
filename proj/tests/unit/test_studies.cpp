#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

#include "askwell/error.hpp"
#include "askwell/studies.hpp"
#include "synthetic.hpp"

using namespace askwell;
using namespace askwell::studies;
using askwell::testing::synthetic_corpus;

namespace {

const Corpus& corpus() {
    static const Corpus c = synthetic_corpus();
    return c;
}

const SplitResult& split() {
    static const SplitResult s = stratified_split(corpus(), 0.7, 3);
    return s;
}

StudyConfig quick_config() {
    StudyConfig c;
    c.seed = 5;
    c.lambda.grid_size = 8;
    return c;
}

// Inverse Fisher information at the fitted model, intercept first.
Eigen::MatrixXd covariance(const glm::Design& X, const glm::FittedModel& m) {
    const auto n = static_cast<Eigen::Index>(X.rows());
    const auto p = static_cast<Eigen::Index>(X.cols()) + 1;
    Eigen::MatrixXd A(n, p);
    A.col(0).setOnes();
    for (Eigen::Index j = 1; j < p; ++j) {
        const auto c = X.column(static_cast<std::size_t>(j - 1));
        for (Eigen::Index i = 0; i < n; ++i) A(i, j) = c[static_cast<std::size_t>(i)];
    }
    const auto probs = glm::predict(m, X);
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = probs[static_cast<std::size_t>(i)] * (1 - probs[static_cast<std::size_t>(i)]);
    const Eigen::MatrixXd info = A.transpose() * w.asDiagonal() * A;
    return info.inverse();
}

}  // namespace

TEST_CASE("significance stars") {
    CHECK(stars(0.0005) == "***");
    CHECK(stars(0.001) == "**");
    CHECK(stars(0.009) == "**");
    CHECK(stars(0.03) == "*");
    CHECK(stars(0.05) == "");
    CHECK(stars(0.5) == "");
}

TEST_CASE("regression study on a corpus with known effects") {
    const auto report = run_regression_study(split().dev, quick_config());
    REQUIRE(report.rows.size() == 15);
    CHECK(report.converged);
    CHECK(report.n == split().dev.size());
    const auto row = [&](const std::string& name) {
        for (const auto& r : report.rows) {
            if (r.feature == name) return r;
        }
        FAIL("missing row " << name);
        return RegressionRow{};
    };
    CHECK(row("image").estimate > 0.0);
    CHECK(row("posted_before").estimate > 0.0);
    CHECK(row("posted_before").p < 0.001);
    CHECK(row("craving").estimate < 0.0);
    for (const auto& r : report.rows) {
        CHECK(r.stars == stars(r.p));
        CHECK(r.lr_statistic >= 0.0);
    }
    CHECK(report.n_first_half + report.n_second_half == report.n);
    const double pooled = (report.first_half_rate * static_cast<double>(report.n_first_half) +
                           report.second_half_rate * static_cast<double>(report.n_second_half)) /
                          static_cast<double>(report.n);
    CHECK(pooled == doctest::Approx(report.success_rate).epsilon(1e-12));
    CHECK(report.artifact.model.l1_penalty == 0.0);
    CHECK(report.artifact.corpus_fingerprint == corpus_fingerprint(split().dev));

    askwell::testing::TempDir dir;
    report.write(dir.path());
    CHECK(std::filesystem::exists(dir / "regression.csv"));
    CHECK(ModelArtifact::load(dir / "regression_model.json").model.coefficients == report.artifact.model.coefficients);
}

TEST_CASE("unpenalized estimates cover the truth at the two standard error level") {
    const std::vector<double> beta{0.8, -0.5, 0.3, 0.0, 1.1};
    std::size_t covered = 0, total = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto prob = askwell::testing::logistic_problem(2000, beta, -0.7, seed);
        const auto m = glm::fit(prob.X, prob.y);
        const auto cov = covariance(prob.X, m);
        for (std::size_t j = 0; j < beta.size(); ++j) {
            const double se = std::sqrt(cov(static_cast<Eigen::Index>(j + 1), static_cast<Eigen::Index>(j + 1)));
            covered += std::abs(m.coefficients[j] - beta[j]) <= 2.0 * se;
            ++total;
        }
    }
    // Nominal coverage is 95.4%; 100 draws leave room for sampling noise.
    CHECK(static_cast<double>(covered) / static_cast<double>(total) >= 0.88);
}

TEST_CASE("prediction study") {
    std::set<std::string> dev_ids, seen;
    for (const auto& r : split().dev.requests()) dev_ids.insert(r.id);
    std::set<std::string> stages;
    set_training_observer([&](const std::string& stage, const std::vector<std::string>& ids) {
        stages.insert(stage);
        seen.insert(ids.begin(), ids.end());
    });
    features::set_statistics_observer([&](const std::vector<std::string>& ids) { seen.insert(ids.begin(), ids.end()); });
    const auto report = run_prediction_study(split().dev, split().test, quick_config());
    set_training_observer(nullptr);
    features::set_statistics_observer(nullptr);

    CHECK(stages == std::set<std::string>{"encoder", "fit", "lambda", "vocabulary"});
    CHECK(seen == dev_ids);

    CHECK(report.rows.front().name == "random");
    CHECK(report.rows.front().auc == 0.5);
    CHECK(report.rows.size() == prediction_sets().size() + 1);
    for (const auto& r : report.rows) {
        CHECK(r.auc >= 0.0);
        CHECK(r.auc <= 1.0);
    }
    CHECK(report.row("temporal+social+text").auc > 0.6);
    CHECK(report.row("temporal+social+text").mann_whitney_p < 0.001);
    CHECK(report.row("unigram").n_features > 10);
    REQUIRE(report.comparisons.size() == 3);
    for (const auto& c : report.comparisons) {
        CHECK(c.p >= 0.0);
        CHECK(c.p <= 1.0);
        CHECK(c.auc_a == report.row(c.a).auc);
    }

    askwell::testing::TempDir dir;
    report.write(dir.path());
    CHECK(std::filesystem::exists(dir / "prediction.csv"));
    CHECK(std::filesystem::exists(dir / "prediction_delong.csv"));
}

TEST_CASE("training choices do not depend on the test split") {
    // Rewriting every test request must leave the encoder and lambda unchanged.
    std::vector<RequestRecord> altered = split().test.requests();
    for (auto& r : altered) {
        r.success = !r.success;
        r.body = "completely different words money job family " + r.body.substr(0, r.body.size() / 3);
    }
    const Corpus test2(altered, split().test.histories(), split().test.epoch());
    const std::vector<std::string> sets{"unigram", "text", "temporal+social+text"};
    const auto a = run_prediction_study(split().dev, split().test, quick_config(), sets);
    const auto b = run_prediction_study(split().dev, test2, quick_config(), sets);
    CHECK(a.encoder == b.encoder);
    CHECK(a.selected_lambda == b.selected_lambda);
    CHECK(a.row("text").auc != b.row("text").auc);
    CHECK_THROWS_AS(run_prediction_study(split().dev, split().test, quick_config(), {"fourgram"}), InputError);
}

TEST_CASE("reciprocity study") {
    const auto r = run_reciprocity_study(corpus(), Reciprocation::giver);
    const auto& base = r.group("baseline");
    CHECK(base.n == static_cast<std::size_t>(std::count_if(corpus().requests().begin(), corpus().requests().end(),
                                                           [](const RequestRecord& q) { return q.success; })));
    CHECK(base.rate > 0.0);
    CHECK(r.group("claimed").rate > base.rate);
    CHECK(r.group("claimed").p < 0.05);
    CHECK(base.p > 0.4);
    CHECK(base.p < 0.6);
    CHECK(r.group("top_karma").n > 0);

    // Giving events in the community are a second route.
    const auto events = run_reciprocity_study(corpus(), Reciprocation::giving_event);
    CHECK(events.group("baseline").reciprocated == 0);
    const auto either = run_reciprocity_study(corpus(), Reciprocation::either);
    CHECK(either.group("baseline").reciprocated == base.reciprocated);

    std::vector<RequestRecord> failed = corpus().requests();
    for (auto& q : failed) q.success = false;
    CHECK_THROWS_AS(run_reciprocity_study(Corpus(failed, {}), Reciprocation::giver), InputError);
    CHECK(parse_reciprocation("giving_event") == Reciprocation::giving_event);
    CHECK_THROWS_AS(parse_reciprocation("sometimes"), InputError);
}

TEST_CASE("a later giving event counts and an earlier one does not") {
    std::vector<RequestRecord> reqs{{"a", "alice", "", "pizza please", 1000, true, std::nullopt, {}},
                                    {"b", "bob", "", "pizza please", 1000, true, std::nullopt, {}}};
    std::map<std::string, std::vector<HistoryEvent>> hist{
        {"alice", {{"alice", kDefaultCommunity, 2000, 1, EventKind::post, true}}},
        {"bob", {{"bob", kDefaultCommunity, 500, 1, EventKind::post, true},
                 {"bob", "AskReddit", 3000, 1, EventKind::post, true}}}};
    const auto r = run_reciprocity_study(Corpus(reqs, hist), Reciprocation::giving_event);
    CHECK(r.group("baseline").reciprocated == 1);
}

TEST_CASE("interpretation curves from the reference model") {
    const auto curves = run_interpretation_curves(reference_artifact());
    CHECK(curves.karma_code == curves.community_code);
    const auto at = [&](const std::string& n, double words) {
        for (const auto& p : curves.by_length) {
            if (p.narrative == n && p.x == words) return p.probability;
        }
        return -1.0;
    };
    CHECK(std::abs(at("craving", 50) - 0.098) <= 0.002);
    const std::vector<std::string> order{"job", "family", "money", "student", "craving"};
    for (double w : {0.0, 50.0, 150.0, 300.0}) {
        for (std::size_t i = 0; i + 1 < order.size(); ++i) CHECK(at(order[i], w) > at(order[i + 1], w));
    }
    for (const auto& n : order) {
        for (double w = 1; w <= 300; ++w) CHECK(at(n, w) > at(n, w - 1));
    }
    CHECK(curves.by_karma.size() == 50);

    askwell::testing::TempDir dir;
    curves.write(dir.path());
    CHECK(askwell::testing::read_text(dir / "curves_length.csv").rfind("narrative,words,probability\njob,0,", 0) == 0);
}

TEST_CASE("topic study") {
    auto config = quick_config();
    config.topic_max_iters = 60;
    const auto a = run_topic_study(split().dev, config);
    const auto b = run_topic_study(split().dev, config);
    CHECK(a.to_json() == b.to_json());
    CHECK(a.topics.size() == 10);
    CHECK(a.overall_rate == split().dev.success_rate());
    std::size_t docs = 0;
    for (const auto& t : a.topics) {
        CHECK(t.terms.size() == 15);
        docs += t.n_docs;
    }
    CHECK(docs == split().dev.size());
}

TEST_CASE("trained prediction artifact") {
    const auto a = train_model(split().dev, features::Scheme::prediction, quick_config());
    CHECK(a.scheme == features::Scheme::prediction);
    CHECK(a.model.l1_penalty > 0.0);
    CHECK(a.diagnostics["cv_auc"].size() == 8);
    CHECK(ModelArtifact::from_json(a.to_json()).to_json() == a.to_json());
}

TEST_CASE("study config") {
    const auto c = StudyConfig::from_json({{"seed", 9}, {"lambda_folds", 3}, {"topic_sparseness", nullptr}});
    CHECK(c.seed == 9);
    CHECK(c.lambda.folds == 3);
    CHECK_FALSE(c.topic_sparseness.has_value());
    CHECK(StudyConfig::from_json(c.to_json()).to_json() == c.to_json());
    CHECK_THROWS_AS(StudyConfig::from_json({{"sead", 9}}), InputError);
    CHECK_THROWS_AS(StudyConfig::from_json({{"seed", "nine"}}), InputError);
    CHECK_THROWS_AS(StudyConfig::from_json({{"dev_fraction", 1.5}}), InputError);
    CHECK_THROWS_AS(StudyConfig::from_json({{"sentiment_positive", "x"}}), InputError);
}
