#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "askwell/artifact.hpp"
#include "askwell/corpus.hpp"
#include "askwell/error.hpp"
#include "askwell/scoreservice.hpp"
#include "askwell/similarity.hpp"
#include "askwell/studies.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace askwell;

namespace {

struct CorpusArgs {
    std::string dir;
    std::string requests;
    std::string histories;
    std::string field_map;
};

void add_corpus_options(CLI::App* cmd, CorpusArgs& args, const std::string& prefix = "", bool required = true) {
    auto* dir = cmd->add_option("--" + prefix + "corpus", args.dir, "corpus directory written by ingest or split");
    if (prefix.empty()) {
        cmd->add_option("--requests", args.requests, "requests JSONL (instead of --corpus)");
        cmd->add_option("--histories", args.histories, "histories JSONL");
        cmd->add_option("--field-map", args.field_map, "JSON field map for the requests file");
        if (required) cmd->callback([&args] {
            if (args.dir.empty() && args.requests.empty()) throw CLI::ValidationError("--corpus or --requests is required");
        });
    } else {
        dir->required();
    }
}

Corpus load_corpus(const CorpusArgs& args) {
    fs::path requests = args.requests, histories = args.histories;
    std::optional<UnixSeconds> epoch;
    if (!args.dir.empty()) {
        const fs::path dir = args.dir;
        requests = dir / "requests.jsonl";
        if (fs::exists(dir / "histories.jsonl")) histories = dir / "histories.jsonl";
        if (fs::exists(dir / "corpus.json")) {
            std::ifstream in(dir / "corpus.json");
            const auto meta = json::parse(in);
            if (meta.contains("epoch")) epoch = meta.at("epoch").get<UnixSeconds>();
        }
    }
    const FieldMap map = args.field_map.empty() ? FieldMap{} : FieldMap::load(args.field_map);
    auto result = ingest(requests, histories.empty() ? std::nullopt : std::optional<fs::path>(histories), map);
    if (!result.rejected.empty()) {
        std::cerr << "warning: " << result.rejected.size() << " request lines rejected (first: line "
                  << result.rejected.front().line << ": " << result.rejected.front().reason << ")\n";
    }
    if (!epoch) return std::move(result.corpus);
    auto requests_copy = result.corpus.requests();
    auto histories_copy = result.corpus.histories();
    return Corpus(std::move(requests_copy), std::move(histories_copy), epoch);
}

void write_corpus(const Corpus& corpus, const fs::path& dir, json extra = json::object()) {
    fs::create_directories(dir);
    write_requests_jsonl(corpus, dir / "requests.jsonl");
    write_histories_jsonl(corpus, dir / "histories.jsonl");
    extra["n"] = corpus.size();
    extra["success_rate"] = corpus.success_rate();
    extra["epoch"] = corpus.epoch();
    extra["fingerprint"] = corpus_fingerprint(corpus);
    studies::write_json(dir / "corpus.json", extra);
}

volatile std::sig_atomic_t stop_requested = 0;
volatile std::sig_atomic_t reload_requested = 0;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"askwell: request success analysis and scoring"};
    app.require_subcommand(1);
    app.fallthrough();
    std::uint64_t seed = 0;
    std::string config_path;
    std::string out_dir = "out";
    auto* seed_opt = app.add_option("--seed", seed, "random seed")->capture_default_str();
    app.add_option("--config", config_path, "JSON study configuration")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory")->capture_default_str();

    CorpusArgs corpus_args, dev_args, test_args;

    auto* ingest_cmd = app.add_subcommand("ingest", "validate raw files and write a canonical corpus");
    add_corpus_options(ingest_cmd, corpus_args);

    auto* split_cmd = app.add_subcommand("split", "stratified dev/test split");
    add_corpus_options(split_cmd, corpus_args);
    std::optional<double> dev_fraction;
    split_cmd->add_option("--dev-fraction", dev_fraction, "share of each class in dev");

    auto* topics_cmd = app.add_subcommand("topics", "NMF topics with per-topic success rates");
    add_corpus_options(topics_cmd, corpus_args);

    std::string scheme_name = "prediction";
    std::string encoder_from;
    auto* featurize_cmd = app.add_subcommand("featurize", "encoded feature table");
    add_corpus_options(featurize_cmd, corpus_args);
    featurize_cmd->add_option("--scheme", scheme_name)->check(CLI::IsMember({"regression", "prediction"}));
    featurize_cmd->add_option("--encoder-from", encoder_from, "reuse the encoder of this model artifact");

    auto* train_cmd = app.add_subcommand("train", "fit a model artifact on a corpus");
    add_corpus_options(train_cmd, corpus_args);
    train_cmd->add_option("--scheme", scheme_name)->check(CLI::IsMember({"regression", "prediction"}));

    auto* regression_cmd = app.add_subcommand("regression-study", "coefficients with likelihood ratio tests");
    add_corpus_options(regression_cmd, corpus_args);

    std::vector<std::string> sets;
    auto* prediction_cmd = app.add_subcommand("prediction-study", "held-out AUC per feature set");
    add_corpus_options(prediction_cmd, dev_args, "dev-");
    add_corpus_options(prediction_cmd, test_args, "test-");
    prediction_cmd->add_option("--sets", sets, "feature sets (default: all)")->delimiter(',');

    std::string pairs_path;
    std::string definition = "either";
    auto* reciprocity_cmd = app.add_subcommand("reciprocity-study", "follow-through rates of successful requesters");
    add_corpus_options(reciprocity_cmd, corpus_args);
    reciprocity_cmd->add_option("--pairs", pairs_path, "giver/receiver pairs JSONL");
    reciprocity_cmd->add_option("--definition", definition, "primary definition")
        ->check(CLI::IsMember({"giver", "giving_event", "either"}));

    std::string metric = "jaccard";
    std::string null_model = "uniform";
    std::size_t n_null = 5000;
    std::optional<double> bandwidth;
    auto* similarity_cmd = app.add_subcommand("similarity-study", "giver/receiver subreddit similarity vs a null");
    add_corpus_options(similarity_cmd, corpus_args);
    similarity_cmd->add_option("--pairs", pairs_path, "giver/receiver pairs JSONL (default: corpus givers)");
    similarity_cmd->add_option("--metric", metric)->check(CLI::IsMember({"jaccard", "intersection"}));
    similarity_cmd->add_option("--null-model", null_model)->check(CLI::IsMember({"uniform", "degree_preserving"}));
    similarity_cmd->add_option("--n-null", n_null)->capture_default_str();
    similarity_cmd->add_option("--bandwidth", bandwidth);

    std::string model_path;
    bool use_reference = false;
    std::size_t max_words = 300;
    auto* curves_cmd = app.add_subcommand("curves", "probability curves over length and karma");
    curves_cmd->add_option("--model", model_path, "model artifact");
    curves_cmd->add_flag("--reference", use_reference, "use the built-in reference coefficients");
    curves_cmd->add_option("--max-words", max_words)->capture_default_str();

    auto* reference_cmd = app.add_subcommand("reference-model", "write the built-in reference artifact");

    std::string host = "127.0.0.1";
    int port = 8080;
    std::string cors_origin = "*";
    auto* serve_cmd = app.add_subcommand("serve", "HTTP scoring service");
    serve_cmd->add_option("--model", model_path, "model artifact (else $ASKWELL_MODEL)");
    serve_cmd->add_option("--host", host)->capture_default_str();
    serve_cmd->add_option("--port", port)->capture_default_str();
    serve_cmd->add_option("--cors-origin", cors_origin)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        studies::StudyConfig config;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            json doc;
            try {
                doc = json::parse(in);
            } catch (const json::exception& e) {
                throw InputError(config_path + ": " + e.what());
            }
            config = studies::StudyConfig::from_json(doc);
        }
        if (seed_opt->count() > 0) config.seed = seed;
        const fs::path out = out_dir;
        fs::create_directories(out);

        if (ingest_cmd->parsed()) {
            fs::path histories = corpus_args.histories;
            if (histories.empty() && !corpus_args.dir.empty() && fs::exists(fs::path(corpus_args.dir) / "histories.jsonl")) {
                histories = fs::path(corpus_args.dir) / "histories.jsonl";
            }
            const FieldMap map = corpus_args.field_map.empty() ? FieldMap{} : FieldMap::load(corpus_args.field_map);
            const auto result = ingest(corpus_args.dir.empty() ? fs::path(corpus_args.requests)
                                                               : fs::path(corpus_args.dir) / "requests.jsonl",
                                       histories.empty() ? std::nullopt : std::optional<fs::path>(histories), map);
            json rejected = json::array();
            for (const auto& r : result.rejected) rejected.push_back({{"line", r.line}, {"reason", r.reason}});
            write_corpus(result.corpus, out, {{"rejected", rejected},
                                              {"rejected_history_events", result.rejected_history_events}});
            std::cout << "ingested " << result.corpus.size() << " requests (" << result.rejected.size()
                      << " rejected), success rate " << result.corpus.success_rate() << '\n';
        } else if (split_cmd->parsed()) {
            const auto corpus = load_corpus(corpus_args);
            const double f = dev_fraction.value_or(config.dev_fraction);
            const auto split = stratified_split(corpus, f, config.seed);
            write_corpus(split.dev, out / "dev", {{"seed", config.seed}, {"dev_fraction", f}});
            write_corpus(split.test, out / "test", {{"seed", config.seed}, {"dev_fraction", f}});
            std::cout << "dev " << split.dev.size() << ", test " << split.test.size() << '\n';
        } else if (topics_cmd->parsed()) {
            const auto report = studies::run_topic_study(load_corpus(corpus_args), config);
            report.write(out);
            std::cout << "overall success rate " << report.overall_rate << '\n';
            for (const auto& t : report.topics) {
                std::cout << t.topic << '\t' << (t.success_rate ? std::to_string(*t.success_rate) : "-") << '\t';
                for (const auto& w : t.terms) std::cout << w << ' ';
                std::cout << '\n';
            }
        } else if (featurize_cmd->parsed()) {
            const auto corpus = load_corpus(corpus_args);
            const auto scheme = features::parse_scheme(scheme_name);
            const auto data = studies::featurize(corpus, config.extract);
            features::EncoderMeta meta;
            if (!encoder_from.empty()) {
                meta = ModelArtifact::load(encoder_from).encoder;
            } else {
                meta = features::fit_encoder(data.rows, corpus_fingerprint(corpus));
                studies::write_json(out / "encoder.json", meta.to_json());
            }
            const auto& names = features::feature_names(scheme);
            std::ofstream csv(out / "features.csv");
            if (!csv) throw InputError("cannot write " + (out / "features.csv").string());
            csv << "request_id,success";
            for (const auto& n : names) csv << ',' << n;
            csv << '\n';
            for (std::size_t i = 0; i < data.rows.size(); ++i) {
                const auto x = features::encode(data.rows[i], meta, scheme);
                csv << data.rows[i].request_id << ',' << (data.labels[i] ? 1 : 0);
                for (const double v : x.values) csv << ',' << v;
                csv << '\n';
            }
            std::cout << "wrote " << data.rows.size() << " rows\n";
        } else if (train_cmd->parsed()) {
            const auto artifact = studies::train_model(load_corpus(corpus_args), features::parse_scheme(scheme_name), config);
            artifact.save(out / "model.json");
            std::cout << "lambda " << artifact.model.l1_penalty << ", converged " << artifact.model.converged << '\n';
        } else if (regression_cmd->parsed()) {
            const auto report = studies::run_regression_study(load_corpus(corpus_args), config);
            report.write(out);
            std::cout << "intercept " << report.intercept << '\n';
            for (const auto& r : report.rows) {
                std::cout << r.feature << '\t' << r.estimate << '\t' << r.p << '\t' << r.stars << '\n';
            }
            std::cout << "first half " << report.first_half_rate << ", second half " << report.second_half_rate << '\n';
        } else if (prediction_cmd->parsed()) {
            const auto report = studies::run_prediction_study(load_corpus(dev_args), load_corpus(test_args), config, sets);
            report.write(out);
            for (const auto& r : report.rows) std::cout << r.name << '\t' << r.auc << '\n';
            for (const auto& c : report.comparisons) {
                std::cout << c.a << " vs " << c.b << ": DeLong p = " << c.p << '\n';
            }
        } else if (reciprocity_cmd->parsed()) {
            const auto corpus = load_corpus(corpus_args);
            const auto pairs = pairs_path.empty() ? std::vector<similarity::Pair>{}
                                                  : similarity::load_pairs(pairs_path, corpus);
            json doc = {{"primary", definition}, {"reports", json::array()}};
            std::ofstream csv(out / "reciprocity.csv");
            csv << "definition,group,n,reciprocated,rate,p\n";
            for (const auto d : {studies::Reciprocation::giver, studies::Reciprocation::giving_event,
                                 studies::Reciprocation::either}) {
                const auto report = studies::run_reciprocity_study(corpus, d, pairs, config.extract);
                doc["reports"].push_back(report.to_json());
                for (const auto& g : report.groups) {
                    csv << studies::reciprocation_name(d) << ',' << g.name << ',' << g.n << ',' << g.reciprocated << ','
                        << g.rate << ',' << g.p << '\n';
                    if (studies::reciprocation_name(d) == definition) {
                        std::cout << g.name << '\t' << g.rate << "\tp=" << g.p << '\n';
                    }
                }
            }
            studies::write_json(out / "reciprocity.json", doc);
        } else if (similarity_cmd->parsed()) {
            const auto corpus = load_corpus(corpus_args);
            const auto pairs = pairs_path.empty() ? similarity::pairs_from_corpus(corpus)
                                                  : similarity::load_pairs(pairs_path, corpus);
            similarity::StudyOptions opts;
            opts.metric = similarity::parse_metric(metric);
            opts.bandwidth = bandwidth;
            opts.n_null = n_null;
            opts.seed = config.seed;
            opts.null_model = null_model == "uniform" ? similarity::NullModel::uniform
                                                      : similarity::NullModel::degree_preserving;
            const auto result = similarity::run_similarity_study(corpus, pairs, opts);
            similarity::write_study(result, out, "similarity_" + metric);
            std::cout << result.summary().dump(2) << '\n';
        } else if (curves_cmd->parsed()) {
            if (use_reference == !model_path.empty()) throw InputError("give exactly one of --model or --reference");
            const auto artifact = use_reference ? reference_artifact() : ModelArtifact::load(model_path);
            studies::run_interpretation_curves(artifact, max_words).write(out);
            std::cout << "wrote curves to " << out << '\n';
        } else if (reference_cmd->parsed()) {
            reference_artifact().save(out / "reference_model.json");
            std::cout << (out / "reference_model.json").string() << '\n';
        } else if (serve_cmd->parsed()) {
            if (model_path.empty()) {
                if (const char* env = std::getenv("ASKWELL_MODEL")) model_path = env;
            }
            scoreservice::Server server({host, port, cors_origin});
            if (!model_path.empty()) server.load(model_path);
            else std::cerr << "warning: no model loaded; scoring answers 503\n";
            std::signal(SIGINT, [](int) { stop_requested = 1; });
            std::signal(SIGTERM, [](int) { stop_requested = 1; });
            std::signal(SIGHUP, [](int) { reload_requested = 1; });
            const int bound = server.start();
            std::cout << "listening on " << host << ':' << bound << std::endl;
            while (!stop_requested) {
                std::this_thread::sleep_for(std::chrono::milliseconds(100));
                if (reload_requested) {
                    reload_requested = 0;
                    if (model_path.empty()) continue;
                    try {
                        server.load(model_path);
                        std::cerr << "reloaded " << model_path << '\n';
                    } catch (const std::exception& e) {
                        std::cerr << "reload failed, keeping the current model: " << e.what() << '\n';
                    }
                }
            }
            server.stop();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
