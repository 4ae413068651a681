#include "askwell/scoreservice.hpp"

#include <chrono>
#include <cmath>

#include <httplib.h>

#include "askwell/error.hpp"

namespace askwell::scoreservice {

using nlohmann::json;

namespace {

const json& field(const json& doc, const char* key) {
    static const json null_value;
    const auto it = doc.find(key);
    return it == doc.end() ? null_value : *it;
}

std::string string_field(const json& doc, const char* key) {
    const auto& v = field(doc, key);
    if (v.is_null()) return {};
    if (!v.is_string()) throw InputError(std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

std::map<std::string, double> number_map(const json& v, const std::string& what) {
    std::map<std::string, double> out;
    if (v.is_null()) return out;
    if (!v.is_object()) throw InputError(what + " must be an object");
    for (const auto& [k, x] : v.items()) {
        if (!x.is_number()) throw InputError(what + "." + k + " must be a number");
        out[k] = x.get<double>();
    }
    return out;
}

bool is_narrative_feature(const std::string& name, std::size_t i) {
    const std::string base = features::kNarrativeNames[i];
    return name == base || name == base + "_decile";
}

double raw_value(const std::string& name, const features::RawFeatures& raw) {
    if (name == "community_age_decile") return static_cast<double>(raw.temporal.community_age_months);
    if (name == "first_half_month") return raw.temporal.day_of_month;
    if (name == "gratitude") return raw.gratitude;
    if (name == "image") return raw.has_image;
    if (name == "reciprocity") return raw.reciprocity;
    if (name == "strong_pos_sentiment") return raw.sentiment.pos_sentence_frac;
    if (name == "strong_neg_sentiment") return raw.sentiment.neg_sentence_frac;
    if (name == "length_100_words") return static_cast<double>(raw.n_words);
    if (name == "karma_decile") return static_cast<double>(raw.status.karma);
    if (name == "posted_before") return raw.status.posted_before;
    for (std::size_t i = 0; i < features::kNarratives; ++i) {
        if (is_narrative_feature(name, i)) return raw.narrative_frac[i];
    }
    return 0.0;
}

json what_if_json(const WhatIf& w) {
    return {{"name", w.name},
            {"description", w.description},
            {"changes", w.changes},
            {"probability", w.probability},
            {"delta", w.delta}};
}

}  // namespace

UnixSeconds system_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

DraftRequest DraftRequest::from_json(const json& doc) {
    if (!doc.is_object()) throw InputError("request body must be a JSON object");
    DraftRequest d;
    d.title = string_field(doc, "title");
    d.body = string_field(doc, "body");
    if (const auto& user = field(doc, "user"); !user.is_null()) {
        if (!user.is_object()) throw InputError("'user' must be an object");
        if (const auto& k = field(user, "karma"); !k.is_null()) {
            if (!k.is_number_integer()) throw InputError("user.karma must be an integer");
            d.user.karma = k.get<std::int64_t>();
        }
        if (const auto& p = field(user, "posted_before"); !p.is_null()) {
            if (!p.is_boolean()) throw InputError("user.posted_before must be a boolean");
            d.user.posted_before = p.get<bool>();
        }
        if (const auto& a = field(user, "account_age_days"); !a.is_null()) {
            if (!a.is_number() || !std::isfinite(a.get<double>()) || a.get<double>() < 0.0) {
                throw InputError("user.account_age_days must be a non-negative number");
            }
            d.user.account_age_days = a.get<double>();
        }
    }
    if (const auto& t = field(doc, "timestamp"); !t.is_null()) {
        if (!t.is_number_integer()) throw InputError("'timestamp' must be integer unix seconds");
        d.timestamp = t.get<UnixSeconds>();
    }
    if (const auto& s = field(doc, "scenarios"); !s.is_null()) {
        if (!s.is_array()) throw InputError("'scenarios' must be an array");
        for (const auto& item : s) {
            if (!item.is_object()) throw InputError("each scenario must be an object");
            Scenario sc;
            sc.name = string_field(item, "name");
            sc.set = number_map(field(item, "set"), "scenario.set");
            sc.add = number_map(field(item, "add"), "scenario.add");
            d.scenarios.push_back(std::move(sc));
        }
    }
    return d;
}

json ScoreResult::to_json() const {
    json factor_list = json::array();
    for (const auto& f : factors) {
        factor_list.push_back({{"name", f.name},
                               {"raw", f.raw},
                               {"encoded", f.encoded},
                               {"coefficient", f.coefficient},
                               {"contribution", f.contribution}});
    }
    json toggles = json::array();
    for (const auto& w : what_if) toggles.push_back(what_if_json(w));
    json custom = json::array();
    for (const auto& w : scenarios) custom.push_back(what_if_json(w));
    return {{"probability", probability},
            {"logit", logit},
            {"intercept", intercept},
            {"timestamp", timestamp},
            {"schema_id", encoded.schema_id},
            {"factors", factor_list},
            {"detected", detected},
            {"what_if", toggles},
            {"scenarios", custom}};
}

Scorer::Scorer(ModelArtifact artifact, Clock clock) : artifact_(std::move(artifact)), clock_(std::move(clock)) {}

double Scorer::probability(const FeatureVector& x) const { return glm::predict_probability(artifact_.model, x); }

ScoreResult Scorer::score(const DraftRequest& draft) const {
    const auto& meta = artifact_.encoder;
    const auto median = [&](const char* key, double fallback) {
        const auto it = meta.medians.find(key);
        return it == meta.medians.end() ? fallback : it->second;
    };
    features::Status status;
    status.karma = draft.user.karma.value_or(std::llround(median("karma", 0.0)));
    status.posted_before = draft.user.posted_before.value_or(median("posted_before", 0.0) >= 0.5);
    status.account_age_days = draft.user.account_age_days.value_or(median("account_age_days", 0.0));

    ScoreResult out;
    out.timestamp = draft.timestamp.value_or(clock_());
    features::ExtractOptions opts;
    opts.community = artifact_.community;
    const auto raw = features::extract_draft(draft.title, draft.body, out.timestamp, artifact_.epoch, status, opts);
    out.encoded = features::encode(raw, meta, artifact_.scheme);

    const auto& model = artifact_.model;
    out.intercept = model.intercept;
    out.logit = model.intercept;
    for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
        Factor f;
        f.name = model.feature_names[j];
        f.raw = raw_value(f.name, raw);
        f.encoded = out.encoded.values[j];
        f.coefficient = model.coefficients[j];
        f.contribution = f.coefficient * f.encoded;
        out.logit += f.contribution;
        out.factors.push_back(std::move(f));
    }
    out.probability = probability(out.encoded);

    json narratives = json::object();
    for (std::size_t i = 0; i < features::kNarratives; ++i) {
        narratives[features::kNarrativeNames[i]] = {{"count", raw.narrative_count[i]},
                                                    {"fraction", raw.narrative_frac[i]}};
    }
    out.detected = {{"narratives", narratives},
                    {"gratitude", raw.gratitude},
                    {"reciprocity", raw.reciprocity},
                    {"image", raw.has_image},
                    {"emoticon", raw.sentiment.has_emoticon},
                    {"n_words", raw.n_words},
                    {"first_half_month", raw.temporal.first_half_month},
                    {"community_age_months", raw.temporal.community_age_months},
                    {"karma", status.karma},
                    {"posted_before", status.posted_before}};
    out.what_if = what_if(out.encoded);
    for (const auto& sc : draft.scenarios) out.scenarios.push_back(apply(out.encoded, sc));
    return out;
}

WhatIf Scorer::evaluate(const FeatureVector& base, double base_probability, std::string name,
                        std::string description, std::map<std::string, double> changes) const {
    FeatureVector x = base;
    for (const auto& [k, v] : changes) x.set(k, v);
    WhatIf w;
    w.name = std::move(name);
    w.description = std::move(description);
    w.changes = std::move(changes);
    w.probability = probability(x);
    w.delta = w.probability - base_probability;
    return w;
}

std::vector<WhatIf> Scorer::what_if(const FeatureVector& base) const {
    const double p0 = probability(base);
    std::vector<WhatIf> out;
    out.push_back(evaluate(base, p0, "add_image", "add a photo link as evidence", {{"image", 1.0}}));
    out.push_back(evaluate(base, p0, "add_gratitude", "thank the community in advance", {{"gratitude", 1.0}}));
    out.push_back(evaluate(base, p0, "add_reciprocity", "offer to pay it forward", {{"reciprocity", 1.0}}));
    out.push_back(evaluate(base, p0, "add_100_words", "write 100 more words",
                           {{"length_100_words", base.at("length_100_words") + 1.0}}));
    const bool deciles = artifact_.scheme == features::Scheme::prediction;
    for (std::size_t i = 0; i < features::kNarratives; ++i) {
        const std::string narrative = features::kNarrativeNames[i];
        const std::string feature = deciles ? narrative + "_decile" : narrative;
        double on = 1.0, off = 0.0;
        if (deciles) {
            const auto& cuts = artifact_.encoder.deciles.at("narrative_" + narrative);
            on = 10.0;
            off = features::decile_code(0.0, cuts);
        }
        out.push_back(evaluate(base, p0, "enable_" + narrative, "tell the " + narrative + " side of the story",
                               {{feature, on}}));
        out.push_back(evaluate(base, p0, "disable_" + narrative, "leave out the " + narrative + " story",
                               {{feature, off}}));
    }
    return out;
}

WhatIf Scorer::apply(const FeatureVector& base, const Scenario& scenario) const {
    std::map<std::string, double> changes;
    for (const auto& [k, v] : scenario.set) {
        base.at(k);  // throws on unknown features
        changes[k] = v;
    }
    for (const auto& [k, v] : scenario.add) {
        const double start = changes.contains(k) ? changes[k] : base.at(k);
        changes[k] = start + v;
    }
    return evaluate(base, probability(base), scenario.name, "custom scenario", std::move(changes));
}

json Scorer::model_info() const {
    const auto& a = artifact_;
    return {{"schema_id", a.schema_id},
            {"scheme", features::scheme_name(a.scheme)},
            {"feature_names", a.model.feature_names},
            {"coefficients", a.model.coefficients},
            {"intercept", a.model.intercept},
            {"lambda", a.model.l1_penalty},
            {"corpus_fingerprint", a.corpus_fingerprint},
            {"epoch", a.epoch},
            {"encoder", a.encoder.to_json()},
            {"diagnostics", a.diagnostics}};
}

Server::Server(ServerOptions options) : options_(std::move(options)), http_(std::make_unique<httplib::Server>()) {
    install_routes();
}

Server::~Server() { stop(); }

void Server::set_scorer(std::shared_ptr<const Scorer> scorer) {
    std::lock_guard lock(mutex_);
    scorer_ = std::move(scorer);
}

void Server::load(const std::filesystem::path& artifact_path) {
    set_scorer(std::make_shared<const Scorer>(ModelArtifact::load(artifact_path)));
}

std::shared_ptr<const Scorer> Server::scorer() const {
    std::lock_guard lock(mutex_);
    return scorer_;
}

void Server::install_routes() {
    http_->set_default_headers({{"Access-Control-Allow-Origin", options_.cors_origin},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    const auto send = [](httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    };
    http_->Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    http_->Get("/healthz", [this, send](const httplib::Request&, httplib::Response& res) {
        send(res, 200, {{"status", "ok"}, {"model_loaded", scorer() != nullptr}});
    });
    http_->Get("/v1/model", [this, send](const httplib::Request&, httplib::Response& res) {
        const auto s = scorer();
        if (!s) return send(res, 503, {{"error", "no model loaded"}});
        send(res, 200, s->model_info());
    });
    http_->Post("/v1/score", [this, send](const httplib::Request& req, httplib::Response& res) {
        const auto s = scorer();
        if (!s) return send(res, 503, {{"error", "no model loaded"}});
        json doc;
        try {
            doc = json::parse(req.body);
        } catch (const json::exception& e) {
            return send(res, 400, {{"error", std::string("invalid JSON: ") + e.what()}});
        }
        try {
            send(res, 200, s->score(DraftRequest::from_json(doc)).to_json());
        } catch (const InputError& e) {
            send(res, 400, {{"error", e.what()}});
        }
    });
    http_->set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            send(res, 500, {{"error", e.what()}});
        } catch (...) {
            send(res, 500, {{"error", "unknown error"}});
        }
    });
}

int Server::bind() {
    if (options_.port == 0) {
        port_ = http_->bind_to_any_port(options_.host);
    } else {
        port_ = http_->bind_to_port(options_.host, options_.port) ? options_.port : -1;
    }
    if (port_ < 0) throw InputError("cannot bind " + options_.host + ":" + std::to_string(options_.port));
    return port_;
}

int Server::start() {
    bind();
    thread_ = std::thread([this] { http_->listen_after_bind(); });
    http_->wait_until_ready();
    return port_;
}

void Server::run() {
    bind();
    http_->listen_after_bind();
}

void Server::stop() {
    if (http_->is_running()) http_->stop();
    if (thread_.joinable() && thread_.get_id() != std::this_thread::get_id()) thread_.join();
}

}  // namespace askwell::scoreservice
