#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace askwell {

using UnixSeconds = std::int64_t;

inline constexpr const char* kDefaultCommunity = "Random_Acts_Of_Pizza";

// Values the requester's profile had at request time, for datasets that ship
// a snapshot instead of a full event history. Only consulted when the
// requester has no history events in the corpus.
struct ProfileSnapshot {
    std::optional<std::int64_t> karma;
    std::optional<bool> posted_in_community;
    std::optional<double> account_age_days;
    std::optional<std::vector<std::string>> subreddits;

    bool operator==(const ProfileSnapshot&) const = default;
};

struct RequestRecord {
    std::string id;
    std::string requester;
    std::string title;
    std::string body;
    UnixSeconds created_at = 0;
    bool success = false;
    std::optional<std::string> giver;
    ProfileSnapshot snapshot;

    bool operator==(const RequestRecord&) const = default;
};

enum class EventKind { post, comment };

struct HistoryEvent {
    std::string user;
    std::string subreddit;
    UnixSeconds created_at = 0;
    std::int64_t score = 0;
    EventKind kind = EventKind::post;
    // Marks an event in which the user gave to someone in the community.
    bool giving = false;

    bool operator==(const HistoryEvent&) const = default;
};

// Immutable after construction. Histories are sorted ascending by created_at.
class Corpus {
public:
    Corpus() = default;
    Corpus(std::vector<RequestRecord> requests,
           std::map<std::string, std::vector<HistoryEvent>> histories,
           std::optional<UnixSeconds> epoch_override = std::nullopt);

    const std::vector<RequestRecord>& requests() const { return requests_; }
    const std::map<std::string, std::vector<HistoryEvent>>& histories() const { return histories_; }
    std::size_t size() const { return requests_.size(); }
    bool empty() const { return requests_.empty(); }

    // Earliest request time (or the community start inherited by a split).
    // Throws InputError on an empty corpus.
    UnixSeconds epoch() const;

    double success_rate() const;
    const std::vector<HistoryEvent>* history(const std::string& user) const;
    const RequestRecord* find(const std::string& id) const;

    bool operator==(const Corpus&) const = default;

private:
    std::vector<RequestRecord> requests_;
    std::map<std::string, std::vector<HistoryEvent>> histories_;
    std::optional<UnixSeconds> epoch_;
};

// Maps canonical field names (id, requester, title, body, created_at, success,
// giver, and the snapshot fields) to the names used in the source file.
class FieldMap {
public:
    FieldMap() = default;
    explicit FieldMap(std::map<std::string, std::string> mapping) : mapping_(std::move(mapping)) {}

    static FieldMap load(const std::filesystem::path& path);

    std::string source_name(const std::string& canonical) const;

private:
    std::map<std::string, std::string> mapping_;
};

struct Rejection {
    std::size_t line = 0;
    std::string reason;
};

struct IngestResult {
    Corpus corpus;
    std::vector<Rejection> rejected;
    std::size_t rejected_history_events = 0;
};

IngestResult ingest(const std::filesystem::path& requests_path,
                    const std::optional<std::filesystem::path>& histories_path,
                    const FieldMap& field_map = {});

// Writes canonical JSONL for both tables; ingest() of the output reproduces the corpus.
void write_requests_jsonl(const Corpus& corpus, const std::filesystem::path& path);
void write_histories_jsonl(const Corpus& corpus, const std::filesystem::path& path);

struct SplitResult {
    Corpus dev;
    Corpus test;
};

// Per-class shuffle; dev receives ceil(dev_fraction * n_class) of each class.
// Both sides keep the parent's epoch so community age stays comparable.
SplitResult stratified_split(const Corpus& corpus, double dev_fraction, std::uint64_t seed,
                             std::size_t min_class_count = 10);

// All point-in-time queries use a strict "created_at < t" cut.
std::int64_t karma_at(const Corpus& corpus, const std::string& user, UnixSeconds t);
bool posted_in_community_before(const Corpus& corpus, const std::string& user, UnixSeconds t,
                                const std::string& community, bool count_comments = true);
std::set<std::string> subreddit_set_before(const Corpus& corpus, const std::string& user,
                                           UnixSeconds t);

// Order-independent hash of the request ids, used to tie artifacts to their data.
std::string corpus_fingerprint(const Corpus& corpus);

}  // namespace askwell
