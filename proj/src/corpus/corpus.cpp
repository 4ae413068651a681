#include "askwell/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <span>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "askwell/error.hpp"
#include "askwell/random.hpp"

namespace askwell {

using nlohmann::json;

Corpus::Corpus(std::vector<RequestRecord> requests,
               std::map<std::string, std::vector<HistoryEvent>> histories,
               std::optional<UnixSeconds> epoch_override)
    : requests_(std::move(requests)), histories_(std::move(histories)), epoch_(epoch_override) {
    std::unordered_set<std::string> seen;
    for (const auto& r : requests_) {
        if (!seen.insert(r.id).second) throw InputError("duplicate request id: " + r.id);
    }
    for (auto& [user, events] : histories_) {
        std::stable_sort(events.begin(), events.end(),
                         [](const HistoryEvent& a, const HistoryEvent& b) {
                             return a.created_at < b.created_at;
                         });
    }
    if (!epoch_ && !requests_.empty()) {
        epoch_ = std::min_element(requests_.begin(), requests_.end(),
                                  [](const RequestRecord& a, const RequestRecord& b) {
                                      return a.created_at < b.created_at;
                                  })
                     ->created_at;
    }
}

UnixSeconds Corpus::epoch() const {
    if (!epoch_) throw InputError("epoch is undefined for an empty corpus");
    return *epoch_;
}

double Corpus::success_rate() const {
    if (requests_.empty()) throw InputError("success rate is undefined for an empty corpus");
    const auto successes = std::count_if(requests_.begin(), requests_.end(),
                                         [](const RequestRecord& r) { return r.success; });
    return static_cast<double>(successes) / static_cast<double>(requests_.size());
}

const std::vector<HistoryEvent>* Corpus::history(const std::string& user) const {
    const auto it = histories_.find(user);
    return it == histories_.end() ? nullptr : &it->second;
}

const RequestRecord* Corpus::find(const std::string& id) const {
    for (const auto& r : requests_) {
        if (r.id == id) return &r;
    }
    return nullptr;
}

FieldMap FieldMap::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read field map: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw InputError("malformed field map " + path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw InputError("field map must be a JSON object");
    std::map<std::string, std::string> mapping;
    for (const auto& [key, value] : doc.items()) {
        if (!value.is_string()) throw InputError("field map value for '" + key + "' must be a string");
        mapping[key] = value.get<std::string>();
    }
    return FieldMap(std::move(mapping));
}

std::string FieldMap::source_name(const std::string& canonical) const {
    const auto it = mapping_.find(canonical);
    return it == mapping_.end() ? canonical : it->second;
}

namespace {

const json* lookup(const json& obj, const FieldMap& map, const std::string& canonical) {
    const auto it = obj.find(map.source_name(canonical));
    if (it == obj.end() || it->is_null()) return nullptr;
    return &*it;
}

UnixSeconds as_seconds(const json& v) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw InputError("non-finite timestamp");
        return static_cast<UnixSeconds>(std::floor(d));
    }
    if (v.is_string()) return std::stoll(v.get<std::string>());
    throw InputError("timestamp must be a number");
}

bool as_bool(const json& v) {
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_number()) return v.get<double>() != 0.0;
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "true" || s == "True" || s == "1") return true;
        if (s == "false" || s == "False" || s == "0") return false;
    }
    throw InputError("expected a boolean");
}

std::string as_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    throw InputError("expected a string");
}

bool is_absent_name(const std::string& s) { return s.empty() || s == "N/A"; }

RequestRecord parse_request(const json& obj, const FieldMap& map) {
    if (!obj.is_object()) throw InputError("record is not a JSON object");
    RequestRecord r;
    for (const char* mandatory : {"id", "body", "created_at", "success"}) {
        if (lookup(obj, map, mandatory) == nullptr) {
            throw InputError(std::string("missing mandatory field '") + mandatory + "'");
        }
    }
    r.id = as_string(*lookup(obj, map, "id"));
    r.body = as_string(*lookup(obj, map, "body"));
    r.created_at = as_seconds(*lookup(obj, map, "created_at"));
    r.success = as_bool(*lookup(obj, map, "success"));
    if (const json* v = lookup(obj, map, "requester")) r.requester = as_string(*v);
    if (const json* v = lookup(obj, map, "title")) r.title = as_string(*v);
    if (const json* v = lookup(obj, map, "giver")) {
        const auto name = as_string(*v);
        if (!is_absent_name(name)) r.giver = name;
    }
    if (const json* v = lookup(obj, map, "karma_at_request")) {
        r.snapshot.karma = static_cast<std::int64_t>(std::llround(v->get<double>()));
    }
    if (const json* v = lookup(obj, map, "posted_in_community_at_request")) {
        r.snapshot.posted_in_community = as_bool(*v);
    }
    if (const json* v = lookup(obj, map, "account_age_days")) {
        r.snapshot.account_age_days = v->get<double>();
    }
    if (const json* v = lookup(obj, map, "subreddits_at_request")) {
        r.snapshot.subreddits = v->get<std::vector<std::string>>();
    }
    if (r.id.empty()) throw InputError("empty id");
    if (r.created_at <= 0) throw InputError("created_at must be positive");
    if (r.giver && !r.success) throw InputError("giver present on an unsuccessful request");
    return r;
}

HistoryEvent parse_event(const json& obj) {
    if (!obj.is_object()) throw InputError("event is not a JSON object");
    HistoryEvent e;
    e.user = obj.at("user").get<std::string>();
    e.subreddit = obj.at("subreddit").get<std::string>();
    e.created_at = as_seconds(obj.at("created_at"));
    e.score = obj.value("score", std::int64_t{0});
    const auto kind = obj.value("kind", std::string("post"));
    if (kind == "post") {
        e.kind = EventKind::post;
    } else if (kind == "comment") {
        e.kind = EventKind::comment;
    } else {
        throw InputError("unknown event kind: " + kind);
    }
    e.giving = obj.value("giving", false);
    if (e.created_at <= 0) throw InputError("created_at must be positive");
    return e;
}

}  // namespace

IngestResult ingest(const std::filesystem::path& requests_path,
                    const std::optional<std::filesystem::path>& histories_path,
                    const FieldMap& field_map) {
    std::ifstream in(requests_path);
    if (!in) throw InputError("cannot read requests file: " + requests_path.string());

    IngestResult result;
    std::vector<RequestRecord> requests;
    std::unordered_set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        RequestRecord record;
        try {
            record = parse_request(json::parse(line), field_map);
        } catch (const std::exception& e) {
            result.rejected.push_back({line_no, e.what()});
            continue;
        }
        if (!ids.insert(record.id).second) {
            throw InputError("duplicate request id '" + record.id + "' on line " +
                             std::to_string(line_no));
        }
        requests.push_back(std::move(record));
    }

    std::map<std::string, std::vector<HistoryEvent>> histories;
    if (histories_path) {
        std::ifstream hin(*histories_path);
        if (!hin) throw InputError("cannot read histories file: " + histories_path->string());
        while (std::getline(hin, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                auto event = parse_event(json::parse(line));
                histories[event.user].push_back(std::move(event));
            } catch (const std::exception&) {
                ++result.rejected_history_events;
            }
        }
    }
    result.corpus = Corpus(std::move(requests), std::move(histories));
    return result;
}

void write_requests_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    for (const auto& r : corpus.requests()) {
        json obj{{"id", r.id},
                 {"requester", r.requester},
                 {"title", r.title},
                 {"body", r.body},
                 {"created_at", r.created_at},
                 {"success", r.success}};
        obj["giver"] = r.giver ? json(*r.giver) : json(nullptr);
        if (r.snapshot.karma) obj["karma_at_request"] = *r.snapshot.karma;
        if (r.snapshot.posted_in_community) {
            obj["posted_in_community_at_request"] = *r.snapshot.posted_in_community;
        }
        if (r.snapshot.account_age_days) obj["account_age_days"] = *r.snapshot.account_age_days;
        if (r.snapshot.subreddits) obj["subreddits_at_request"] = *r.snapshot.subreddits;
        out << obj.dump() << '\n';
    }
}

void write_histories_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    for (const auto& [user, events] : corpus.histories()) {
        for (const auto& e : events) {
            json obj{{"user", e.user},
                     {"subreddit", e.subreddit},
                     {"created_at", e.created_at},
                     {"score", e.score},
                     {"kind", e.kind == EventKind::post ? "post" : "comment"}};
            if (e.giving) obj["giving"] = true;
            out << obj.dump() << '\n';
        }
    }
}

SplitResult stratified_split(const Corpus& corpus, double dev_fraction, std::uint64_t seed,
                             std::size_t min_class_count) {
    if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) {
        throw InputError("dev_fraction must lie strictly between 0 and 1");
    }
    std::vector<std::size_t> positives;
    std::vector<std::size_t> negatives;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        (corpus.requests()[i].success ? positives : negatives).push_back(i);
    }
    if (positives.size() < min_class_count || negatives.size() < min_class_count) {
        throw InputError("stratification needs at least " + std::to_string(min_class_count) +
                         " requests of each class");
    }

    Rng rng(seed);
    std::vector<bool> in_dev(corpus.size(), false);
    for (auto* cls : {&positives, &negatives}) {
        rng.shuffle(*cls);
        const auto take = static_cast<std::size_t>(
            std::ceil(dev_fraction * static_cast<double>(cls->size()) - 1e-9));
        for (std::size_t j = 0; j < take && j < cls->size(); ++j) in_dev[(*cls)[j]] = true;
    }

    std::vector<RequestRecord> dev;
    std::vector<RequestRecord> test;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        (in_dev[i] ? dev : test).push_back(corpus.requests()[i]);
    }
    const auto epoch = corpus.epoch();
    return {Corpus(std::move(dev), corpus.histories(), epoch),
            Corpus(std::move(test), corpus.histories(), epoch)};
}

namespace {

// Events strictly before t form the prefix [begin, cut).
std::span<const HistoryEvent> events_before(const Corpus& corpus, const std::string& user,
                                            UnixSeconds t) {
    const auto* events = corpus.history(user);
    if (events == nullptr) return {};
    const auto cut = std::lower_bound(
        events->begin(), events->end(), t,
        [](const HistoryEvent& e, UnixSeconds value) { return e.created_at < value; });
    return {events->data(), static_cast<std::size_t>(cut - events->begin())};
}

}  // namespace

std::int64_t karma_at(const Corpus& corpus, const std::string& user, UnixSeconds t) {
    std::int64_t total = 0;
    for (const auto& e : events_before(corpus, user, t)) total += e.score;
    return total;
}

bool posted_in_community_before(const Corpus& corpus, const std::string& user, UnixSeconds t,
                                const std::string& community, bool count_comments) {
    for (const auto& e : events_before(corpus, user, t)) {
        if (e.subreddit != community) continue;
        if (e.kind == EventKind::post || count_comments) return true;
    }
    return false;
}

std::set<std::string> subreddit_set_before(const Corpus& corpus, const std::string& user,
                                           UnixSeconds t) {
    std::set<std::string> out;
    for (const auto& e : events_before(corpus, user, t)) out.insert(e.subreddit);
    return out;
}

std::string corpus_fingerprint(const Corpus& corpus) {
    std::vector<std::string> ids;
    ids.reserve(corpus.size());
    for (const auto& r : corpus.requests()) ids.push_back(r.id);
    std::sort(ids.begin(), ids.end());
    std::uint64_t hash = 1469598103934665603ULL;
    for (const auto& id : ids) {
        for (const unsigned char c : id) {
            hash ^= c;
            hash *= 1099511628211ULL;
        }
        hash ^= 0xff;
        hash *= 1099511628211ULL;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << hash << '-' << std::dec
        << corpus.size();
    return out.str();
}

}  // namespace askwell
