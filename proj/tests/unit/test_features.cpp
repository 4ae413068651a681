#include <doctest.h>

#include <set>

#include "askwell/error.hpp"
#include "askwell/features.hpp"
#include "askwell/textkit.hpp"
#include "synthetic.hpp"

using namespace askwell;
using namespace askwell::features;

namespace {

const char* kExample1 =
    "My gf and I have hit some hard times with her losing her job and then unemployment as well for being "
    "physically unable to perform her job due to various hand injuries as a server in a restuarant. She is "
    "currently petitioning to have unemployment reinstated due to medical reasons for being unable to perform "
    "her job, but until then things are really tight and ANYTHING would help us out right now.\n\n"
    "I've been both a giver and receiver in RAOP before and would certainly return the favor again when I am "
    "able to reciprocate. It took everything we have to pay rent today and some food would go a long ways "
    "towards making our next couple of days go by much better with some food.";

const char* kExample2 =
    "My friend is coming in town for the weekend and my friends and i are so excited because we haven't seen "
    "him since junior high. we are going to a high school football game then to the dollar theater after and "
    "it would be so nice if someone fed us before we embarked :)";

const char* kStudentExample =
    "Studying for finals, no time to go get food. Im studying for my last batch of finals before applying to "
    "college in the fall (transfer student, community college path). very hungry but being broke and having no "
    "calc textbook I'm really pressed for time :(";

constexpr UnixSeconds kEpoch = 1291766400;  // 2010-12-08

std::size_t index_of(const char* name) {
    for (std::size_t i = 0; i < kNarratives; ++i) {
        if (std::string(kNarrativeNames[i]) == name) return i;
    }
    return kNarratives;
}

}  // namespace

TEST_CASE("lexicons are deduplicated lowercase single tokens") {
    const auto& lex = NarrativeLexicons::defaults();
    CHECK(lex.sets[index_of("money")].size() == 55);
    CHECK(lex.sets[index_of("money")].contains("friday"));
    CHECK(lex.sets[index_of("job")].size() == 9);
    CHECK(lex.sets[index_of("student")].size() == 13);
    CHECK(lex.sets[index_of("family")].size() == 12);
    CHECK(lex.sets[index_of("craving")].size() == 19);
    for (const auto& set : lex.sets) {
        for (const auto& t : set) CHECK(textkit::tokenize(t) == textkit::Tokens{t});
    }
}

TEST_CASE("narrative detection") {
    const auto& lex = NarrativeLexicons::defaults();
    const auto student = detect_narratives(kStudentExample, lex);
    CHECK(student.counts[index_of("student")] == 7);

    const auto empty = detect_narratives("", lex);
    for (std::size_t i = 0; i < kNarratives; ++i) {
        CHECK(empty.counts[i] == 0);
        CHECK(empty.fractions[i] == 0.0);
    }
    const auto money = detect_narratives("money money money", lex);
    CHECK(money.counts[index_of("money")] == 3);
    CHECK(money.fractions[index_of("money")] == 1.0);

    const auto craving = detect_narratives(kExample2, lex);
    CHECK(craving.counts[index_of("craving")] == 2);  // friend, game

    const auto a = detect_narratives(kExample1, lex);
    const auto b = detect_narratives(kExample2, lex);
    const auto ab = detect_narratives(std::string(kExample1) + " " + kExample2, lex);
    for (std::size_t i = 0; i < kNarratives; ++i) CHECK(ab.counts[i] == a.counts[i] + b.counts[i]);
}

TEST_CASE("reciprocity") {
    CHECK(detect_reciprocity(kExample1));
    CHECK(detect_reciprocity("I would definitely pay it forward when I get paid next week."));
    CHECK(detect_reciprocity("Will PAY\n THIS   back soon"));
    CHECK(detect_reciprocity("paying it forward"));
    CHECK_FALSE(detect_reciprocity("I will pay my rent forward"));
    CHECK_FALSE(detect_reciprocity("repay it forwards"));
    CHECK_FALSE(detect_reciprocity(""));
}

TEST_CASE("gratitude") {
    CHECK(detect_gratitude("If someone could help us out with a pizza that would be great! Thanks!"));
    CHECK(detect_gratitude("thanks in advance"));
    CHECK(detect_gratitude("Thank you all"));
    CHECK_FALSE(detect_gratitude("no way to repay you"));
    CHECK_FALSE(detect_gratitude(kExample1));
}

TEST_CASE("image links") {
    CHECK(detect_image("proof: http://imgur.com/a1b2c3"));
    CHECK(detect_image("see http://example.com/fridge.png"));
    CHECK(detect_image("see HTTPS://example.com/a/b/Fridge.JPEG now"));
    CHECK(detect_image("(http://i.imgur.com/xyz)"));
    CHECK_FALSE(detect_image("http://example.com/page.html"));
    CHECK_FALSE(detect_image("my photo.png is on my desktop"));
}

TEST_CASE("sentiment") {
    SentimentLexicons lex{{"love"}, {"hate"}};
    const auto s = sentiment_features("I love this. I hate that.", lex);
    CHECK(s.pos_sentence_frac == doctest::Approx(0.5));
    CHECK(s.neg_sentence_frac == doctest::Approx(0.5));
    CHECK(s.pos_word_frac == doctest::Approx(1.0 / 6.0));
    CHECK_FALSE(s.has_emoticon);

    const auto e = sentiment_features("", lex);
    CHECK(e.pos_sentence_frac == 0.0);
    CHECK(e.neg_word_frac == 0.0);
    CHECK_FALSE(e.has_emoticon);

    CHECK(sentiment_features(kExample2, lex).has_emoticon);
    CHECK(detect_emoticon("ok ;-P"));
    CHECK(detect_emoticon("=("));
    CHECK_FALSE(detect_emoticon("http://imgur.com/x"));
    CHECK_FALSE(detect_emoticon("time: 10"));
}

TEST_CASE("temporal features") {
    const auto zero = temporal_features(kEpoch, kEpoch);
    CHECK(zero.community_age_months == 0);
    CHECK(zero.day_of_month == 8);
    CHECK(zero.month == 12);
    CHECK(zero.weekday == 3);  // Wednesday

    // 2011-01-09 12:00 UTC
    CHECK(temporal_features(1294574400, kEpoch).community_age_months == 1);
    // 2011-01-07 is one day short of a full month.
    CHECK(temporal_features(1294401600, kEpoch).community_age_months == 0);

    // 2011-03-15 23:59:59 and 2011-03-16 00:00:00
    const auto d15 = temporal_features(1300233599, kEpoch);
    const auto d16 = temporal_features(1300233600, kEpoch);
    CHECK(d15.day_of_month == 15);
    CHECK(d15.first_half_month);
    CHECK(d15.hour == 23);
    CHECK(d16.day_of_month == 16);
    CHECK_FALSE(d16.first_half_month);

    CHECK_THROWS_AS(temporal_features(kEpoch - 1, kEpoch), InputError);
}

TEST_CASE("raw extraction") {
    RequestRecord empty;
    empty.id = "e";
    empty.requester = "ghost";
    empty.created_at = kEpoch + 86400;
    RequestRecord ex1;
    ex1.id = "x1";
    ex1.requester = "regular";
    ex1.title = "[Request] hard times";
    ex1.body = kExample1;
    ex1.created_at = kEpoch + 40 * 86400;
    std::map<std::string, std::vector<HistoryEvent>> h;
    h["regular"] = {{"regular", kDefaultCommunity, kEpoch + 10, 4, EventKind::post, false},
                    {"regular", "pics", kEpoch + 20, 6, EventKind::comment, false},
                    {"regular", "pics", kEpoch + 41 * 86400, 100, EventKind::comment, false}};
    const Corpus corpus({empty, ex1}, h);

    const auto e = extract_raw(empty, corpus);
    CHECK(e.request_id == "e");
    CHECK(e.n_words == 0);
    CHECK(e.status.karma == 0);
    CHECK_FALSE(e.status.posted_before);
    CHECK_FALSE(e.gratitude);
    CHECK_FALSE(e.reciprocity);
    CHECK_FALSE(e.has_image);
    for (double f : e.narrative_frac) CHECK(f == 0.0);

    const auto r = extract_raw(ex1, corpus);
    CHECK(r.reciprocity);
    CHECK_FALSE(r.gratitude);
    CHECK(r.narrative_frac[index_of("money")] > 0.0);
    CHECK(r.narrative_count[index_of("job")] == 5);  // job x3, unemployment x2
    CHECK(r.n_words == textkit::word_count(kExample1));
    CHECK(r.status.karma == 10);
    CHECK(r.status.posted_before);
    CHECK(r.temporal.community_age_months == 1);

    // Title participates in detectors but not in length.
    RequestRecord titled = empty;
    titled.title = "Thanks! pic: http://imgur.com/abc";
    const auto t = extract_raw(titled, corpus);
    CHECK(t.gratitude);
    CHECK(t.has_image);
    CHECK(t.n_words == 0);

    // Snapshot fallback for users without events.
    RequestRecord snap = empty;
    snap.snapshot.karma = 42;
    snap.snapshot.posted_in_community = true;
    const auto s = extract_raw(snap, corpus);
    CHECK(s.status.karma == 42);
    CHECK(s.status.posted_before);
}

TEST_CASE("encoder statistics") {
    std::vector<RawFeatures> rows(100);
    for (std::size_t i = 0; i < 100; ++i) {
        rows[i].request_id = std::to_string(i);
        rows[i].status.karma = static_cast<std::int64_t>(i + 1);
        rows[i].temporal.community_age_months = 3;
        rows[i].narrative_frac[0] = 0.01 * static_cast<double>(i % 4);
    }
    const auto meta = fit_encoder(rows, "dev");
    const auto& karma = meta.deciles.at("karma");
    for (std::size_t q = 1; q <= 9; ++q) {
        // Linear interpolation at position q/10 * 99 over 1..100.
        CHECK(karma[q - 1] == doctest::Approx(1.0 + 0.1 * static_cast<double>(q) * 99.0));
    }
    CHECK(karma[0] == doctest::Approx(10.9));
    CHECK(karma[8] == doctest::Approx(90.1));
    CHECK(fit_encoder(rows, "dev") == meta);

    const auto back = EncoderMeta::from_json(meta.to_json());
    CHECK(back == meta);

    // Degenerate distributions collapse.
    const auto raw = rows[50];
    const auto v = encode(raw, meta, Scheme::regression);
    CHECK(v.at("community_age_decile") == 1.0);
    CHECK(v.at("karma_decile") == 6.0);
    CHECK(v.at("strong_pos_sentiment") == 0.0);
    CHECK(v.at("strong_neg_sentiment") == 0.0);
    CHECK_THROWS(fit_encoder({}, "x"));
}

TEST_CASE("encoding rules") {
    std::vector<RawFeatures> rows(20);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].status.karma = static_cast<std::int64_t>(i * 10);
        rows[i].temporal.community_age_months = static_cast<std::int64_t>(i);
        for (std::size_t n = 0; n < kNarratives; ++n) rows[i].narrative_frac[n] = 0.005 * static_cast<double>(i);
        rows[i].sentiment.pos_sentence_frac = 0.05 * static_cast<double>(i);
    }
    const auto meta = fit_encoder(rows, "dev");
    RawFeatures r;
    r.n_words = 50;
    r.status.karma = -5;
    r.narrative_frac[index_of("money")] = meta.medians.at("narrative_money");
    r.narrative_frac[index_of("job")] = meta.medians.at("narrative_job") + 1e-9;
    const auto v = encode(r, meta, Scheme::regression);
    CHECK(v.names == feature_names(Scheme::regression));
    CHECK(v.names.size() == 15);
    CHECK(v.at("length_100_words") == doctest::Approx(0.5));
    CHECK(v.at("karma_decile") == 1.0);
    CHECK(v.at("money") == 0.0);
    CHECK(v.at("job") == 1.0);

    const auto p = encode(r, meta, Scheme::prediction);
    CHECK(p.names == feature_names(Scheme::prediction));
    CHECK(p.at("job_decile") >= 1.0);
    CHECK(p.at("job_decile") <= 10.0);
    CHECK(p.schema_id != v.schema_id);

    for (const auto& raw : rows) {
        for (Scheme scheme : {Scheme::regression, Scheme::prediction}) {
            const auto fv = encode(raw, meta, scheme);
            for (std::size_t j = 0; j < fv.names.size(); ++j) {
                const auto& name = fv.names[j];
                const double x = fv.values[j];
                if (name.ends_with("_decile")) {
                    CHECK(x >= 1.0);
                    CHECK(x <= 10.0);
                } else if (name != "length_100_words") {
                    CHECK((x == 0.0 || x == 1.0));
                }
            }
        }
    }

    EncoderMeta missing = meta;
    missing.deciles.erase("karma");
    CHECK_THROWS_AS(encode(r, missing, Scheme::regression), InputError);
}

TEST_CASE("decile code counts cut points strictly below") {
    const std::array<double, 9> cuts{1, 2, 3, 4, 5, 6, 7, 8, 9};
    CHECK(decile_code(0.5, cuts) == 1);
    CHECK(decile_code(1.0, cuts) == 1);
    CHECK(decile_code(1.5, cuts) == 2);
    CHECK(decile_code(9.0, cuts) == 9);
    CHECK(decile_code(100.0, cuts) == 10);
}

TEST_CASE("feature groups") {
    CHECK(feature_group("text").size() == 9);
    CHECK(feature_group("temporal+social+text").size() == 13);
    for (const auto& g : feature_group_names()) {
        for (const auto& f : feature_group(g)) {
            const auto& names = feature_names(Scheme::prediction);
            CHECK(std::find(names.begin(), names.end(), f) != names.end());
        }
    }
    CHECK_THROWS(feature_group("bogus"));
}

TEST_CASE("encoder fitted on the dev split only sees dev rows") {
    const auto corpus = askwell::testing::synthetic_corpus({300, 9, false});
    const auto split = stratified_split(corpus, 0.7, 1);
    std::set<std::string> seen;
    set_statistics_observer([&](const std::vector<std::string>& ids) { seen.insert(ids.begin(), ids.end()); });
    std::vector<RawFeatures> dev;
    for (const auto& r : split.dev.requests()) dev.push_back(extract_raw(r, split.dev));
    const auto meta = fit_encoder(dev, corpus_fingerprint(split.dev));
    for (const auto& r : split.test.requests()) {
        (void)encode(extract_raw(r, split.test), meta, Scheme::prediction);
    }
    set_statistics_observer(nullptr);
    CHECK(seen.size() == split.dev.size());
    for (const auto& r : split.test.requests()) CHECK_FALSE(seen.contains(r.id));
}
