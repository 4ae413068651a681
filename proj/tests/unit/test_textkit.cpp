#include <doctest.h>

#include <cmath>
#include <map>

#include "askwell/error.hpp"
#include "askwell/textkit.hpp"
#include "synthetic.hpp"

using namespace askwell;
using namespace askwell::textkit;

namespace {

std::vector<Tokens> tok(const std::vector<std::string>& docs) {
    std::vector<Tokens> out;
    for (const auto& d : docs) out.push_back(tokenize(d));
    return out;
}

}  // namespace

TEST_CASE("tokenize") {
    CHECK(tokenize("Hello, world!") == Tokens{"hello", "world"});
    CHECK(tokenize("I've been broke") == Tokens{"i've", "been", "broke"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("I will pay it forward.") == Tokens{"i", "will", "pay", "it", "forward"});
    CHECK(tokenize("see http://imgur.com/abc.jpg and www.x.org/y now") == Tokens{"see", "and", "now"});
    CHECK(tokenize("I\xE2\x80\x99m here") == Tokens{"i'm", "here"});
    CHECK(tokenize("rent-money 42x") == Tokens{"rent", "money", "x"});
}

TEST_CASE("tokenize is idempotent on its joined output") {
    const auto c = askwell::testing::synthetic_corpus({60, 2, false});
    for (const auto& r : c.requests()) {
        const auto t = tokenize(r.body);
        std::string joined;
        for (const auto& w : t) joined += w + " ";
        CHECK(tokenize(joined) == t);
    }
}

TEST_CASE("word count") {
    CHECK(word_count("") == 0);
    CHECK(word_count("one two three") == 3);
    CHECK(word_count("Hi there. I'm broke") + word_count("until Friday!") ==
          word_count("Hi there. I'm broke until Friday!"));
}

TEST_CASE("vocabulary construction") {
    const auto docs = tok({"a b", "b c"});
    CHECK(build_vocabulary(docs, {2, {}, nullptr}).terms() == std::vector<std::string>{"b"});
    const auto all = build_vocabulary(docs, {});
    CHECK(all.terms() == std::vector<std::string>{"a", "b", "c"});
    CHECK(all.df() == std::vector<std::size_t>{1, 2, 1});
    const std::set<std::string> stop{"b"};
    CHECK(build_vocabulary(docs, {1, {}, &stop}).terms() == std::vector<std::string>{"a", "c"});
    CHECK(build_vocabulary(docs, {1, [](std::string_view t) { return t != "a"; }, nullptr}).terms() ==
          std::vector<std::string>{"b", "c"});
    CHECK_THROWS_AS(build_vocabulary(docs, {3, {}, nullptr}), InputError);
    CHECK_THROWS(build_vocabulary(docs, {0, {}, nullptr}));
}

TEST_CASE("vocabulary json round trip") {
    const auto v = build_vocabulary(tok({"x y z", "y"}), {});
    const auto back = Vocabulary::from_json(v.to_json());
    CHECK(back == v);
    CHECK(back.index_of("y") == std::optional<std::size_t>(1));
    CHECK_FALSE(back.index_of("q").has_value());
}

TEST_CASE("tfidf by hand") {
    const auto docs = tok({"x x y", "y", ""});
    const auto v = build_vocabulary(docs, {});
    const auto m = tfidf(docs, v);
    CHECK(m.rows == 3);
    CHECK(m.cols == 2);
    CHECK(m.at(0, 0) == doctest::Approx(2.0 * (std::log(3.0) + 1.0)));
    CHECK(m.at(0, 1) == doctest::Approx(1.0 * (std::log(1.5) + 1.0)));
    CHECK(m.at(2, 0) == 0.0);
    CHECK(m.at(2, 1) == 0.0);

    const auto two = tok({"x x y", "y"});
    const auto m2 = tfidf(two, build_vocabulary(two, {}));
    CHECK(m2.at(0, 0) == doctest::Approx(2.0 * (std::log(2.0) + 1.0)));
    CHECK(m2.at(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("tfidf is zero exactly where counts are zero") {
    const auto c = askwell::testing::synthetic_corpus({80, 4, false});
    std::vector<Tokens> docs;
    for (const auto& r : c.requests()) docs.push_back(tokenize(r.body));
    const auto v = build_vocabulary(docs, {2, {}, nullptr});
    const auto w = tfidf(docs, v).to_dense();
    const auto n = count_matrix(docs, v).to_dense();
    for (std::size_t i = 0; i < w.rows(); ++i) {
        for (std::size_t j = 0; j < w.cols(); ++j) CHECK((w(i, j) == 0.0) == (n(i, j) == 0.0));
    }
    // Independent count check.
    for (std::size_t i = 0; i < docs.size(); ++i) {
        std::map<std::string, double> counts;
        for (const auto& t : docs[i]) counts[t] += 1.0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            const auto it = counts.find(v.terms()[j]);
            CHECK(n(i, j) == (it == counts.end() ? 0.0 : it->second));
        }
    }
}

TEST_CASE("n-grams") {
    CHECK(ngrams({"a", "b", "c"}, 2) == Tokens{"a_b", "b_c"});
    CHECK(ngrams({"a", "b"}, 3).empty());
    CHECK_THROWS(ngrams({"a"}, 4));
    CHECK_THROWS(ngrams({"a"}, 0));

    const auto f = ngram_features(tok({"a a b"}), 1, 1);
    CHECK(f.vocab.terms() == std::vector<std::string>{"a", "b"});
    CHECK(f.counts.at(0, 0) == 2.0);
    CHECK(f.counts.at(0, 1) == 1.0);

    const auto g = ngram_features(tok({"a b c", "a b"}), 2, 1);
    CHECK(g.vocab.terms() == std::vector<std::string>{"a_b", "b_c"});
    CHECK(g.counts.at(0, 0) == 1.0);
    CHECK(g.counts.at(0, 1) == 1.0);
    CHECK(g.counts.at(1, 1) == 0.0);

    const auto t = ngram_features(tok({"a b c", "a b"}), 3, 1);
    CHECK(t.counts.at(1, 0) == 0.0);
}

TEST_CASE("word lists") {
    askwell::testing::TempDir dir;
    askwell::testing::write_text(dir / "w.txt", "# comment\nThe\n\n  and \nof\n");
    CHECK(load_word_list(dir / "w.txt") == std::set<std::string>{"the", "and", "of"});
    CHECK(default_stopwords().count("the") == 1);
    CHECK(default_stopwords().count("pizza") == 0);
}
