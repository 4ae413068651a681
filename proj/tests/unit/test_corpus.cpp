#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "askwell/corpus.hpp"
#include "askwell/error.hpp"
#include "synthetic.hpp"

using namespace askwell;
using askwell::testing::TempDir;
using askwell::testing::write_text;

namespace {

RequestRecord request(std::string id, UnixSeconds t, bool success) {
    RequestRecord r;
    r.id = std::move(id);
    r.requester = "u_" + r.id;
    r.body = "body";
    r.created_at = t;
    r.success = success;
    return r;
}

Corpus history_corpus() {
    std::map<std::string, std::vector<HistoryEvent>> h;
    h["alice"] = {
        {"alice", "pics", 200, 3, EventKind::post, false},
        {"alice", "aww", 100, 5, EventKind::comment, false},
        {"alice", kDefaultCommunity, 300, 1, EventKind::comment, false},
        {"alice", "aww", 250, -2, EventKind::post, false},
    };
    return Corpus({request("r1", 1000, true)}, std::move(h));
}

}  // namespace

TEST_CASE("karma sums scores strictly before the query time") {
    const Corpus c = history_corpus();
    CHECK(karma_at(c, "nobody", 1000) == 0);
    CHECK(karma_at(c, "alice", 150) == 5);
    CHECK(karma_at(c, "alice", 100) == 0);
    CHECK(karma_at(c, "alice", 201) == 8);
    CHECK(karma_at(c, "alice", 10000) == 7);
}

TEST_CASE("histories are sorted on construction") {
    const Corpus c = history_corpus();
    const auto* h = c.history("alice");
    REQUIRE(h != nullptr);
    CHECK(std::is_sorted(h->begin(), h->end(),
                         [](const HistoryEvent& a, const HistoryEvent& b) { return a.created_at < b.created_at; }));
}

TEST_CASE("community participation uses the strict cut") {
    const Corpus c = history_corpus();
    CHECK_FALSE(posted_in_community_before(c, "nobody", 1000, kDefaultCommunity));
    CHECK(posted_in_community_before(c, "alice", 301, kDefaultCommunity));
    CHECK_FALSE(posted_in_community_before(c, "alice", 300, kDefaultCommunity));
    // The only community event is a comment.
    CHECK_FALSE(posted_in_community_before(c, "alice", 301, kDefaultCommunity, false));
}

TEST_CASE("subreddit sets deduplicate and respect the cut") {
    const Corpus c = history_corpus();
    CHECK(subreddit_set_before(c, "nobody", 1000).empty());
    CHECK(subreddit_set_before(c, "alice", 260) == std::set<std::string>{"aww", "pics"});
    CHECK(subreddit_set_before(c, "alice", 50).empty());
}

TEST_CASE("karma is monotone for non-negative histories") {
    const Corpus c = askwell::testing::synthetic_corpus({200, 3, false});
    for (const auto& [user, events] : c.histories()) {
        if (std::any_of(events.begin(), events.end(), [](const HistoryEvent& e) { return e.score < 0; })) continue;
        CHECK(karma_at(c, user, events.front().created_at) == 0);
        std::int64_t prev = 0;
        for (const auto& e : events) {
            const auto k = karma_at(c, user, e.created_at + 1);
            CHECK(k >= prev);
            prev = k;
        }
    }
}

TEST_CASE("epoch is the earliest request and undefined for an empty corpus") {
    const Corpus c({request("a", 500, true), request("b", 300, false)}, {});
    CHECK(c.epoch() == 300);
    CHECK_THROWS_AS(Corpus().epoch(), InputError);
}

TEST_CASE("duplicate ids are rejected") {
    CHECK_THROWS_AS(Corpus({request("a", 1, true), request("a", 2, false)}, {}), InputError);

    TempDir dir;
    write_text(dir / "r.jsonl",
               R"({"id":"a","body":"x","created_at":10,"success":true})"
               "\n"
               R"({"id":"a","body":"y","created_at":11,"success":false})"
               "\n");
    CHECK_THROWS_AS(ingest(dir / "r.jsonl", std::nullopt), InputError);
}

TEST_CASE("ingest of an empty file yields an empty corpus") {
    TempDir dir;
    write_text(dir / "r.jsonl", "");
    const auto result = ingest(dir / "r.jsonl", std::nullopt);
    CHECK(result.corpus.empty());
    CHECK(result.rejected.empty());
    CHECK_THROWS_AS(result.corpus.epoch(), InputError);
}

TEST_CASE("ingest rejects malformed records with reasons and applies the field map") {
    TempDir dir;
    write_text(dir / "r.jsonl",
               R"({"request_id":"a","request_text":"hi","unix_time":10,"got_pizza":true,"giver_username":"N/A"})"
               "\n"
               R"({"request_id":"b","unix_time":11,"got_pizza":false})"
               "\n"
               "not json\n"
               "\n"
               R"({"request_id":"c","request_text":"x","unix_time":12,"got_pizza":false,"giver_username":"bob"})"
               "\n"
               R"({"request_id":"d","request_text":"","unix_time":13,"got_pizza":true,"giver_username":"bob"})"
               "\n");
    write_text(dir / "map.json",
               R"({"id":"request_id","body":"request_text","created_at":"unix_time","success":"got_pizza","giver":"giver_username"})");
    const auto result = ingest(dir / "r.jsonl", std::nullopt, FieldMap::load(dir / "map.json"));
    REQUIRE(result.corpus.size() == 2);
    CHECK(result.corpus.requests()[0].id == "a");
    CHECK_FALSE(result.corpus.requests()[0].giver.has_value());
    CHECK(result.corpus.requests()[1].body.empty());
    CHECK(result.corpus.requests()[1].giver == std::optional<std::string>("bob"));
    REQUIRE(result.rejected.size() == 3);
    CHECK(result.rejected[0].line == 2);
    CHECK(result.rejected[0].reason.find("body") != std::string::npos);
    CHECK(result.rejected[1].line == 3);
    CHECK(result.rejected[2].line == 5);
}

TEST_CASE("ingest of an unreadable file is an error") {
    CHECK_THROWS_AS(ingest("/nonexistent/requests.jsonl", std::nullopt), InputError);
}

TEST_CASE("serialize and re-ingest round-trips the corpus") {
    const Corpus c = askwell::testing::synthetic_corpus({150, 5, true});
    TempDir dir;
    write_requests_jsonl(c, dir / "r.jsonl");
    write_histories_jsonl(c, dir / "h.jsonl");
    const auto back = ingest(dir / "r.jsonl", dir / "h.jsonl");
    CHECK(back.rejected.empty());
    CHECK(back.corpus == c);
}

TEST_CASE("stratified split partitions the corpus and preserves the rate") {
    const Corpus c = askwell::testing::synthetic_corpus({1500, 11, false});
    const auto split = stratified_split(c, 0.7, 42);

    std::set<std::string> ids;
    for (const auto& r : split.dev.requests()) ids.insert(r.id);
    for (const auto& r : split.test.requests()) CHECK(ids.insert(r.id).second);
    CHECK(ids.size() == c.size());

    std::size_t pos = 0;
    for (const auto& r : c.requests()) pos += r.success;
    const std::size_t neg = c.size() - pos;
    std::size_t dev_pos = 0;
    for (const auto& r : split.dev.requests()) dev_pos += r.success;
    CHECK(dev_pos == static_cast<std::size_t>(std::ceil(0.7 * static_cast<double>(pos))));
    CHECK(split.dev.size() - dev_pos == static_cast<std::size_t>(std::ceil(0.7 * static_cast<double>(neg))));

    CHECK(std::abs(split.dev.success_rate() - c.success_rate()) < 0.005);
    CHECK(std::abs(split.test.success_rate() - c.success_rate()) < 0.005);
    CHECK(split.dev.epoch() == c.epoch());
    CHECK(split.test.epoch() == c.epoch());

    const auto again = stratified_split(c, 0.7, 42);
    CHECK(again.dev == split.dev);
    CHECK(again.test == split.test);
    const auto other = stratified_split(c, 0.7, 43);
    CHECK_FALSE(other.dev == split.dev);
}

TEST_CASE("split of a tiny corpus") {
    const Corpus c({request("a", 1, true), request("b", 2, true), request("c", 3, false), request("d", 4, false)}, {});
    CHECK_THROWS_AS(stratified_split(c, 0.5, 1), InputError);
    const auto split = stratified_split(c, 0.5, 1, 1);
    CHECK(split.dev.size() == 2);
    CHECK(split.test.size() == 2);
    CHECK(split.dev.success_rate() == doctest::Approx(0.5));
    CHECK_THROWS_AS(stratified_split(c, 1.0, 1, 1), InputError);
    CHECK_THROWS_AS(stratified_split(c, 0.0, 1, 1), InputError);
}

TEST_CASE("fingerprint ignores order and changes with content") {
    const Corpus a({request("a", 1, true), request("b", 2, false)}, {});
    const Corpus b({request("b", 2, false), request("a", 1, true)}, {});
    const Corpus c({request("a", 1, true), request("c", 2, false)}, {});
    CHECK(corpus_fingerprint(a) == corpus_fingerprint(b));
    CHECK(corpus_fingerprint(a) != corpus_fingerprint(c));
}
