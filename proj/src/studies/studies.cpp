#include "askwell/studies.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>

#include "askwell/error.hpp"
#include "askwell/textkit.hpp"

namespace askwell::studies {

using nlohmann::json;

namespace {

std::mutex observer_mutex;
TrainingObserver training_observer;

void observe(const std::string& stage, const std::vector<std::string>& ids) {
    std::lock_guard lock(observer_mutex);
    if (training_observer) training_observer(stage, ids);
}

std::vector<std::string> ids_of(const Corpus& corpus) {
    std::vector<std::string> out;
    out.reserve(corpus.size());
    for (const auto& r : corpus.requests()) out.push_back(r.id);
    return out;
}

std::vector<bool> labels_of(const Corpus& corpus) {
    std::vector<bool> out;
    out.reserve(corpus.size());
    for (const auto& r : corpus.requests()) out.push_back(r.success);
    return out;
}

double rate(const std::vector<bool>& labels) {
    if (labels.empty()) return 0.0;
    return static_cast<double>(std::count(labels.begin(), labels.end(), true)) / static_cast<double>(labels.size());
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out.precision(10);
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<textkit::Tokens> request_tokens(const Corpus& corpus) {
    std::vector<textkit::Tokens> docs;
    docs.reserve(corpus.size());
    for (const auto& r : corpus.requests()) docs.push_back(textkit::tokenize(r.title + "\n" + r.body));
    return docs;
}

std::vector<textkit::Tokens> gram_docs(const std::vector<textkit::Tokens>& docs, std::size_t n) {
    std::vector<textkit::Tokens> out;
    out.reserve(docs.size());
    for (const auto& d : docs) out.push_back(textkit::ngrams(d, n));
    return out;
}

// Document-term counts as sparse design columns.
glm::Design sparse_design(const SparseMatrix& counts, const textkit::Vocabulary& vocab, const std::string& prefix) {
    std::vector<std::vector<std::uint32_t>> rows(counts.cols);
    std::vector<std::vector<double>> values(counts.cols);
    for (std::size_t r = 0; r < counts.rows; ++r) {
        for (std::size_t k = counts.row_ptr[r]; k < counts.row_ptr[r + 1]; ++k) {
            rows[counts.col_idx[k]].push_back(static_cast<std::uint32_t>(r));
            values[counts.col_idx[k]].push_back(counts.values[k]);
        }
    }
    glm::Design X(counts.rows);
    for (std::size_t c = 0; c < counts.cols; ++c) {
        X.add_sparse_column(prefix + vocab.terms()[c], std::move(rows[c]), std::move(values[c]));
    }
    return X;
}

glm::FittedModel fit_observed(const glm::Design& X, const std::vector<bool>& y, const std::vector<std::string>& ids,
                              double lambda) {
    observe("fit", ids);
    glm::FitOptions opts;
    opts.lambda = lambda;
    return glm::fit(X, y, opts);
}

std::size_t nonzero(const glm::FittedModel& m) {
    return static_cast<std::size_t>(std::count_if(m.coefficients.begin(), m.coefficients.end(),
                                                  [](double v) { return v != 0.0; }));
}

}  // namespace

StudyConfig StudyConfig::from_json(const json& doc) {
    if (!doc.is_object()) throw InputError("config must be a JSON object");
    static const std::set<std::string> known{
        "seed",          "dev_fraction",      "community",          "count_comments",    "lambda_grid_size",
        "lambda_min_ratio", "lambda_folds",   "ngram_min_df",       "topic_k",           "topic_terms",
        "topic_min_df",  "topic_sparseness",  "topic_max_iters",    "narrative_lexicons", "sentiment_positive",
        "sentiment_negative"};
    for (const auto& [k, v] : doc.items()) {
        if (!known.contains(k)) throw InputError("unknown config key: " + k);
    }
    StudyConfig c;
    try {
        c.seed = doc.value("seed", c.seed);
        c.dev_fraction = doc.value("dev_fraction", c.dev_fraction);
        c.extract.community = doc.value("community", c.extract.community);
        c.extract.count_comments = doc.value("count_comments", c.extract.count_comments);
        c.lambda.grid_size = doc.value("lambda_grid_size", c.lambda.grid_size);
        c.lambda.min_ratio = doc.value("lambda_min_ratio", c.lambda.min_ratio);
        c.lambda.folds = doc.value("lambda_folds", c.lambda.folds);
        c.ngram_min_df = doc.value("ngram_min_df", c.ngram_min_df);
        c.topic_k = doc.value("topic_k", c.topic_k);
        c.topic_terms = doc.value("topic_terms", c.topic_terms);
        c.topic_min_df = doc.value("topic_min_df", c.topic_min_df);
        c.topic_max_iters = doc.value("topic_max_iters", c.topic_max_iters);
        if (doc.contains("topic_sparseness")) {
            const auto& v = doc.at("topic_sparseness");
            c.topic_sparseness = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
        }
        if (doc.contains("narrative_lexicons")) {
            c.narrative_lexicons = std::make_shared<const features::NarrativeLexicons>(
                features::NarrativeLexicons::load(doc.at("narrative_lexicons").get<std::string>()));
            c.extract.narratives = c.narrative_lexicons.get();
        }
        if (doc.contains("sentiment_positive") != doc.contains("sentiment_negative")) {
            throw InputError("sentiment_positive and sentiment_negative go together");
        }
        if (doc.contains("sentiment_positive")) {
            c.sentiment_lexicons = std::make_shared<const features::SentimentLexicons>(features::SentimentLexicons::load(
                doc.at("sentiment_positive").get<std::string>(), doc.at("sentiment_negative").get<std::string>()));
            c.extract.sentiment = c.sentiment_lexicons.get();
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("bad config value: ") + e.what());
    }
    if (!(c.dev_fraction > 0.0 && c.dev_fraction < 1.0)) throw InputError("dev_fraction must be in (0, 1)");
    return c;
}

json StudyConfig::to_json() const {
    return {{"seed", seed},
            {"dev_fraction", dev_fraction},
            {"community", extract.community},
            {"count_comments", extract.count_comments},
            {"lambda_grid_size", lambda.grid_size},
            {"lambda_min_ratio", lambda.min_ratio},
            {"lambda_folds", lambda.folds},
            {"ngram_min_df", ngram_min_df},
            {"topic_k", topic_k},
            {"topic_terms", topic_terms},
            {"topic_min_df", topic_min_df},
            {"topic_sparseness", topic_sparseness ? json(*topic_sparseness) : json(nullptr)},
            {"topic_max_iters", topic_max_iters}};
}

void set_training_observer(TrainingObserver observer) {
    std::lock_guard lock(observer_mutex);
    training_observer = std::move(observer);
}

void write_json(const std::filesystem::path& path, const json& doc) { open_out(path) << doc.dump(2) << '\n'; }

Featurized featurize(const Corpus& corpus, const features::ExtractOptions& options) {
    Featurized out;
    out.rows.reserve(corpus.size());
    for (const auto& r : corpus.requests()) {
        out.rows.push_back(features::extract_raw(r, corpus, options));
        out.labels.push_back(r.success);
    }
    return out;
}

glm::Design encoded_design(const std::vector<features::RawFeatures>& rows, const features::EncoderMeta& meta,
                           features::Scheme scheme, const std::vector<std::string>& names) {
    const auto& all = features::feature_names(scheme);
    std::vector<std::vector<double>> cols(all.size(), std::vector<double>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto x = features::encode(rows[i], meta, scheme);
        for (std::size_t j = 0; j < all.size(); ++j) cols[j][i] = x.values[j];
    }
    glm::Design X(rows.size());
    for (std::size_t j = 0; j < all.size(); ++j) X.add_column(all[j], std::move(cols[j]));
    return names.empty() ? X : X.select(names);
}

std::string stars(double p) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

ModelArtifact train_model(const Corpus& dev, features::Scheme scheme, const StudyConfig& config) {
    const auto data = featurize(dev, config.extract);
    const auto ids = ids_of(dev);
    observe("encoder", ids);
    auto meta = features::fit_encoder(data.rows, corpus_fingerprint(dev));
    const auto X = encoded_design(data.rows, meta, scheme);
    double lambda = 0.0;
    json diagnostics = {{"n", dev.size()}, {"success_rate", dev.success_rate()}};
    if (scheme == features::Scheme::prediction) {
        observe("lambda", ids);
        auto search = config.lambda;
        search.seed = config.seed;
        const auto sel = glm::select_lambda(X, data.labels, search);
        lambda = sel.lambda;
        diagnostics["lambda_grid"] = sel.grid;
        diagnostics["cv_auc"] = sel.mean_auc;
    }
    auto model = fit_observed(X, data.labels, ids, lambda);
    diagnostics["converged"] = model.converged;
    diagnostics["iterations"] = model.n_iters;
    auto artifact = make_artifact(scheme, std::move(model), std::move(meta), dev, std::move(diagnostics));
    artifact.community = config.extract.community;
    return artifact;
}

// ---- regression ----

json RegressionReport::to_json() const {
    json table = json::array();
    for (const auto& r : rows) {
        table.push_back({{"feature", r.feature},
                         {"estimate", r.estimate},
                         {"lr_statistic", r.lr_statistic},
                         {"p", r.p},
                         {"stars", r.stars}});
    }
    return {{"n", n},
            {"intercept", intercept},
            {"log_likelihood", log_likelihood},
            {"converged", converged},
            {"success_rate", success_rate},
            {"first_half_rate", first_half_rate},
            {"second_half_rate", second_half_rate},
            {"n_first_half", n_first_half},
            {"n_second_half", n_second_half},
            {"rows", table}};
}

void RegressionReport::write(const std::filesystem::path& dir) const {
    write_json(dir / "regression.json", to_json());
    auto out = open_out(dir / "regression.csv");
    out << "feature,estimate,lr_statistic,p,stars\n";
    out << "intercept," << intercept << ",,,\n";
    for (const auto& r : rows) {
        out << r.feature << ',' << r.estimate << ',' << r.lr_statistic << ',' << r.p << ',' << r.stars << '\n';
    }
    artifact.save(dir / "regression_model.json");
}

RegressionReport run_regression_study(const Corpus& dev, const StudyConfig& config) {
    RegressionReport report;
    report.artifact = train_model(dev, features::Scheme::regression, config);
    const auto data = featurize(dev, config.extract);
    const auto& names = features::feature_names(features::Scheme::regression);
    const auto X = encoded_design(data.rows, report.artifact.encoder, features::Scheme::regression);
    const auto& full = report.artifact.model;
    report.n = dev.size();
    report.intercept = full.intercept;
    report.converged = full.converged;
    report.log_likelihood = glm::log_likelihood(full, X, data.labels);
    report.success_rate = rate(data.labels);

    const auto ids = ids_of(dev);
    for (std::size_t j = 0; j < names.size(); ++j) {
        std::vector<std::string> reduced;
        for (const auto& n : names) {
            if (n != names[j]) reduced.push_back(n);
        }
        const auto Xr = X.select(reduced);
        const auto m = fit_observed(Xr, data.labels, ids, 0.0);
        RegressionRow row;
        row.feature = names[j];
        row.estimate = full.coefficients[j];
        row.lr_statistic = std::max(0.0, 2.0 * (report.log_likelihood - glm::log_likelihood(m, Xr, data.labels)));
        row.p = stats::chi_square_sf(row.lr_statistic, 1.0);
        row.stars = stars(row.p);
        report.rows.push_back(std::move(row));
    }

    std::size_t first_success = 0, second_success = 0;
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
        if (data.rows[i].temporal.first_half_month) {
            ++report.n_first_half;
            first_success += data.labels[i];
        } else {
            ++report.n_second_half;
            second_success += data.labels[i];
        }
    }
    const auto frac = [](std::size_t k, std::size_t n) { return n == 0 ? 0.0 : static_cast<double>(k) / static_cast<double>(n); };
    report.first_half_rate = frac(first_success, report.n_first_half);
    report.second_half_rate = frac(second_success, report.n_second_half);
    return report;
}

// ---- prediction ----

const PredictionRow& PredictionReport::row(const std::string& name) const {
    for (const auto& r : rows) {
        if (r.name == name) return r;
    }
    throw InputError("no prediction row " + name);
}

json PredictionReport::to_json() const {
    json table = json::array();
    for (const auto& r : rows) {
        table.push_back({{"name", r.name},
                         {"auc", r.auc},
                         {"lambda", r.lambda},
                         {"n_features", r.n_features},
                         {"nonzero", r.nonzero},
                         {"mann_whitney_p", r.mann_whitney_p}});
    }
    json comps = json::array();
    for (const auto& c : comparisons) {
        comps.push_back({{"a", c.a}, {"b", c.b}, {"auc_a", c.auc_a}, {"auc_b", c.auc_b},
                         {"statistic", c.statistic}, {"p", c.p}});
    }
    return {{"n_dev", n_dev}, {"n_test", n_test}, {"rows", table}, {"comparisons", comps}, {"encoder", encoder.to_json()}};
}

void PredictionReport::write(const std::filesystem::path& dir) const {
    write_json(dir / "prediction.json", to_json());
    auto out = open_out(dir / "prediction.csv");
    out << "feature_set,auc,lambda,n_features,nonzero,mann_whitney_p\n";
    for (const auto& r : rows) {
        out << csv_field(r.name) << ',' << r.auc << ',' << r.lambda << ',' << r.n_features << ',' << r.nonzero << ','
            << r.mann_whitney_p << '\n';
    }
    auto cmp = open_out(dir / "prediction_delong.csv");
    cmp << "a,b,auc_a,auc_b,statistic,p\n";
    for (const auto& c : comparisons) {
        cmp << csv_field(c.a) << ',' << csv_field(c.b) << ',' << c.auc_a << ',' << c.auc_b << ',' << c.statistic << ','
            << c.p << '\n';
    }
}

PredictionReport run_prediction_study(const Corpus& dev, const Corpus& test, const StudyConfig& config,
                                      const std::vector<std::string>& requested) {
    const auto& sets = requested.empty() ? prediction_sets() : requested;
    for (const auto& s : sets) {
        if (std::find(prediction_sets().begin(), prediction_sets().end(), s) == prediction_sets().end()) {
            throw InputError("unknown feature set: " + s);
        }
    }
    PredictionReport report;
    report.n_dev = dev.size();
    report.n_test = test.size();
    const auto dev_ids = ids_of(dev);
    const auto y_dev = labels_of(dev);
    const auto y_test = labels_of(test);

    const auto dev_data = featurize(dev, config.extract);
    const auto test_data = featurize(test, config.extract);
    observe("encoder", dev_ids);
    report.encoder = features::fit_encoder(dev_data.rows, corpus_fingerprint(dev));
    const auto dev_enc = encoded_design(dev_data.rows, report.encoder, features::Scheme::prediction);
    const auto test_enc = encoded_design(test_data.rows, report.encoder, features::Scheme::prediction);

    std::vector<textkit::Tokens> dev_tokens, test_tokens;
    std::map<std::size_t, std::pair<glm::Design, glm::Design>> grams;
    const auto gram_designs = [&](std::size_t n) -> const std::pair<glm::Design, glm::Design>& {
        if (const auto it = grams.find(n); it != grams.end()) return it->second;
        if (dev_tokens.empty()) {
            dev_tokens = request_tokens(dev);
            test_tokens = request_tokens(test);
        }
        observe("vocabulary", dev_ids);
        const std::string prefix = n == 1 ? "u:" : n == 2 ? "b:" : "t:";
        auto f = textkit::ngram_features(dev_tokens, n, config.ngram_min_df);
        auto dev_X = sparse_design(f.counts, f.vocab, prefix);
        auto test_X = sparse_design(textkit::count_matrix(gram_docs(test_tokens, n), f.vocab), f.vocab, prefix);
        return grams.emplace(n, std::make_pair(std::move(dev_X), std::move(test_X))).first->second;
    };

    report.rows.push_back({"random", 0.5, 0.0, 0, 0, 1.0});
    for (const auto& set : sets) {
        glm::Design dev_X, test_X;
        if (set == "unigram" || set == "bigram" || set == "trigram") {
            const std::size_t n = set == "unigram" ? 1 : set == "bigram" ? 2 : 3;
            const auto& [d, t] = gram_designs(n);
            dev_X = d;
            test_X = t;
        } else if (set == "temporal+social+text+unigram") {
            const auto& names = features::feature_group("temporal+social+text");
            const auto& [d, t] = gram_designs(1);
            dev_X = dev_enc.select(names).concat(d);
            test_X = test_enc.select(names).concat(t);
        } else {
            const auto& names = features::feature_group(set);
            dev_X = dev_enc.select(names);
            test_X = test_enc.select(names);
        }
        observe("lambda", dev_ids);
        auto search = config.lambda;
        search.seed = config.seed;
        const auto sel = glm::select_lambda(dev_X, y_dev, search);
        const auto model = fit_observed(dev_X, y_dev, dev_ids, sel.lambda);
        auto scores = glm::predict(model, test_X);

        PredictionRow row;
        row.name = set;
        row.auc = stats::roc_auc(scores, y_test).auc;
        row.lambda = sel.lambda;
        row.n_features = dev_X.cols();
        row.nonzero = nonzero(model);
        std::vector<double> pos, neg;
        for (std::size_t i = 0; i < scores.size(); ++i) (y_test[i] ? pos : neg).push_back(scores[i]);
        row.mann_whitney_p = stats::mann_whitney_u(pos, neg, stats::Tail::greater).p;
        report.rows.push_back(row);
        report.selected_lambda[set] = sel.lambda;
        report.test_scores[set] = std::move(scores);
    }

    const std::vector<std::pair<std::string, std::string>> wanted{
        {"temporal+social+text", "text"},
        {"temporal+social+text", "temporal+social"},
        {"temporal+social+text+unigram", "temporal+social+text"}};
    for (const auto& [a, b] : wanted) {
        if (!report.test_scores.contains(a) || !report.test_scores.contains(b)) continue;
        const auto t = stats::delong_test(report.test_scores.at(a), report.test_scores.at(b), y_test);
        report.comparisons.push_back({a, b, report.row(a).auc, report.row(b).auc, t.statistic, t.p});
    }
    return report;
}

// ---- reciprocity ----

std::string reciprocation_name(Reciprocation r) {
    switch (r) {
        case Reciprocation::giver: return "giver";
        case Reciprocation::giving_event: return "giving_event";
        case Reciprocation::either: return "either";
    }
    return "either";
}

Reciprocation parse_reciprocation(const std::string& name) {
    if (name == "giver") return Reciprocation::giver;
    if (name == "giving_event") return Reciprocation::giving_event;
    if (name == "either") return Reciprocation::either;
    throw InputError("unknown reciprocation definition: " + name);
}

const SubgroupRate& ReciprocityReport::group(const std::string& name) const {
    for (const auto& g : groups) {
        if (g.name == name) return g;
    }
    throw InputError("no subgroup " + name);
}

json ReciprocityReport::to_json() const {
    json out = {{"definition", reciprocation_name(definition)}, {"karma_threshold", karma_threshold}};
    json list = json::array();
    for (const auto& g : groups) {
        list.push_back({{"name", g.name}, {"n", g.n}, {"reciprocated", g.reciprocated}, {"rate", g.rate}, {"p", g.p}});
    }
    out["groups"] = list;
    return out;
}

ReciprocityReport run_reciprocity_study(const Corpus& corpus, Reciprocation definition,
                                        const std::vector<similarity::Pair>& pairs,
                                        const features::ExtractOptions& options) {
    // Every time each user gave, from both sources.
    std::map<std::string, std::vector<UnixSeconds>> gave_as_giver, gave_event;
    for (const auto& r : corpus.requests()) {
        if (r.giver && *r.giver != r.requester) gave_as_giver[*r.giver].push_back(r.created_at);
    }
    for (const auto& p : pairs) gave_as_giver[p.giver].push_back(p.t);
    for (const auto& [user, events] : corpus.histories()) {
        for (const auto& e : events) {
            if (e.giving && e.subreddit == options.community) gave_event[user].push_back(e.created_at);
        }
    }
    const auto later = [](const std::map<std::string, std::vector<UnixSeconds>>& m, const std::string& user,
                          UnixSeconds t) {
        const auto it = m.find(user);
        return it != m.end() && std::any_of(it->second.begin(), it->second.end(), [t](UnixSeconds s) { return s > t; });
    };

    struct Entry {
        bool reciprocated;
        bool claimed;
        bool gratitude;
        double karma;
    };
    std::vector<Entry> entries;
    for (const auto& r : corpus.requests()) {
        if (!r.success) continue;
        const bool as_giver = later(gave_as_giver, r.requester, r.created_at);
        const bool as_event = later(gave_event, r.requester, r.created_at);
        const bool rec = definition == Reciprocation::giver          ? as_giver
                         : definition == Reciprocation::giving_event ? as_event
                                                                     : (as_giver || as_event);
        const std::string text = r.title + "\n" + r.body;
        entries.push_back({rec, features::detect_reciprocity(text), features::detect_gratitude(text),
                           static_cast<double>(features::status_at(r, corpus, options).karma)});
    }
    if (entries.empty()) throw InputError("no successful requests to study");

    ReciprocityReport report;
    report.definition = definition;
    std::vector<double> karmas;
    for (const auto& e : entries) karmas.push_back(e.karma);
    report.karma_threshold = stats::percentile(karmas, 0.8);

    const auto make = [&](const std::string& name, auto keep) {
        SubgroupRate g;
        g.name = name;
        for (const auto& e : entries) {
            if (!keep(e)) continue;
            ++g.n;
            g.reciprocated += e.reciprocated;
        }
        g.rate = g.n == 0 ? 0.0 : static_cast<double>(g.reciprocated) / static_cast<double>(g.n);
        return g;
    };
    auto baseline = make("baseline", [](const Entry&) { return true; });
    report.groups.push_back(baseline);
    report.groups.push_back(make("claimed", [](const Entry& e) { return e.claimed; }));
    report.groups.push_back(make("gratitude", [](const Entry& e) { return e.gratitude; }));
    report.groups.push_back(make("top_karma", [&](const Entry& e) { return e.karma >= report.karma_threshold; }));
    for (auto& g : report.groups) {
        if (g.n == 0 || baseline.rate <= 0.0 || baseline.rate >= 1.0) {
            g.p = 1.0;
            continue;
        }
        g.p = stats::binomial_test(g.reciprocated, g.n, baseline.rate, stats::Tail::greater).p;
    }
    return report;
}

// ---- interpretation curves ----

void Curves::write(const std::filesystem::path& dir) const {
    auto a = open_out(dir / "curves_length.csv");
    a << "narrative,words,probability\n";
    for (const auto& p : by_length) a << p.narrative << ',' << p.x << ',' << p.probability << '\n';
    auto b = open_out(dir / "curves_karma.csv");
    b << "narrative,karma_decile,probability\n";
    for (const auto& p : by_karma) b << p.narrative << ',' << p.x << ',' << p.probability << '\n';
}

Curves run_interpretation_curves(const ModelArtifact& artifact, std::size_t max_words) {
    const auto& meta = artifact.encoder;
    const auto median = [&](const char* key) {
        const auto it = meta.medians.find(key);
        if (it == meta.medians.end()) throw InputError(std::string("encoder metadata lacks median for ") + key);
        return it->second;
    };
    Curves out;
    out.median_words = median("n_words");
    out.karma_code = features::decile_code(median("karma"), meta.deciles.at("karma"));
    out.community_code = features::decile_code(median("community_age_months"), meta.deciles.at("community_age_months"));

    const bool deciles = artifact.scheme == features::Scheme::prediction;
    FeatureVector base;
    base.schema_id = artifact.schema_id;
    base.names = artifact.model.feature_names;
    base.values.assign(base.names.size(), 0.0);
    base.set("community_age_decile", out.community_code);
    base.set("karma_decile", out.karma_code);
    for (std::size_t i = 0; i < features::kNarratives; ++i) {
        const std::string n = features::kNarrativeNames[i];
        if (deciles) base.set(n + "_decile", features::decile_code(0.0, meta.deciles.at("narrative_" + n)));
    }
    // Curves in the order job, family, money, student, craving.
    for (const std::size_t i : {1u, 3u, 0u, 2u, 4u}) {
        const std::string n = features::kNarrativeNames[i];
        FeatureVector x = base;
        x.set(deciles ? n + "_decile" : n, deciles ? 10.0 : 1.0);
        for (std::size_t w = 0; w <= max_words; ++w) {
            x.set("length_100_words", static_cast<double>(w) / 100.0);
            out.by_length.push_back({n, static_cast<double>(w), glm::predict_probability(artifact.model, x)});
        }
        x.set("length_100_words", out.median_words / 100.0);
        for (int k = 1; k <= 10; ++k) {
            x.set("karma_decile", k);
            out.by_karma.push_back({n, static_cast<double>(k), glm::predict_probability(artifact.model, x)});
        }
    }
    return out;
}

// ---- topics ----

json TopicReport::to_json() const {
    json list = json::array();
    for (const auto& t : topics) {
        list.push_back({{"topic", t.topic},
                        {"terms", t.terms},
                        {"n_docs", t.n_docs},
                        {"success_rate", t.success_rate ? json(*t.success_rate) : json(nullptr)}});
    }
    return {{"overall_rate", overall_rate}, {"n_docs", n_docs},         {"vocabulary", vocabulary},
            {"converged", converged},       {"iterations", iterations}, {"topics", list}};
}

void TopicReport::write(const std::filesystem::path& dir) const {
    write_json(dir / "topics.json", to_json());
    auto out = open_out(dir / "topics.csv");
    out << "topic,n_docs,success_rate,terms\n";
    for (const auto& t : topics) {
        std::string terms;
        for (const auto& w : t.terms) terms += (terms.empty() ? "" : " ") + w;
        out << t.topic << ',' << t.n_docs << ',';
        if (t.success_rate) out << *t.success_rate;
        out << ',' << terms << '\n';
    }
}

TopicReport run_topic_study(const Corpus& dev, const StudyConfig& config) {
    std::vector<textkit::Tokens> docs;
    for (const auto& r : dev.requests()) docs.push_back(textkit::tokenize(r.body));
    textkit::VocabularyOptions vopts;
    vopts.min_df = config.topic_min_df;
    vopts.stopwords = &textkit::default_stopwords();
    observe("vocabulary", ids_of(dev));
    const auto vocab = textkit::build_vocabulary(docs, vopts);
    const auto X = textkit::tfidf(docs, vocab);

    topics::NmfOptions opts;
    opts.k = config.topic_k;
    opts.target_sparseness = config.topic_sparseness;
    opts.max_iters = config.topic_max_iters;
    opts.seed = config.seed;
    const auto model = topics::fit_nmf(X, vocab, opts);
    const auto labels = labels_of(dev);
    const auto rates = topics::topic_success_rates(model, labels);
    const auto terms = topics::top_terms(model, config.topic_terms);
    const auto dominant = topics::dominant_topics(model.W);

    TopicReport report;
    report.overall_rate = rate(labels);
    report.n_docs = dev.size();
    report.vocabulary = vocab.size();
    report.converged = model.converged;
    report.iterations = model.iterations;
    for (std::size_t t = 0; t < model.k; ++t) {
        TopicRow row;
        row.topic = t;
        row.terms = terms[t];
        row.n_docs = static_cast<std::size_t>(std::count(dominant.begin(), dominant.end(), t));
        row.success_rate = rates[t];
        report.topics.push_back(std::move(row));
    }
    return report;
}

}  // namespace askwell::studies
