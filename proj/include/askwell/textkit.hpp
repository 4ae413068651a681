#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "askwell/matrix.hpp"

namespace askwell::textkit {

using Tokens = std::vector<std::string>;
using TokenFilter = std::function<bool(std::string_view)>;

// Lowercased runs of ASCII letters and apostrophes. URLs (http://, https://,
// www.) are dropped whole; typographic apostrophes are folded to '\''.
Tokens tokenize(std::string_view text);

std::size_t word_count(std::string_view text);

class Vocabulary {
public:
    Vocabulary() = default;
    Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> df, std::size_t n_docs);

    const std::vector<std::string>& terms() const { return terms_; }
    const std::vector<std::size_t>& df() const { return df_; }
    std::size_t n_docs() const { return n_docs_; }
    std::size_t size() const { return terms_.size(); }
    std::optional<std::size_t> index_of(std::string_view term) const;

    nlohmann::json to_json() const;
    static Vocabulary from_json(const nlohmann::json& doc);

    bool operator==(const Vocabulary& other) const {
        return terms_ == other.terms_ && df_ == other.df_ && n_docs_ == other.n_docs_;
    }

private:
    std::vector<std::string> terms_;
    std::vector<std::size_t> df_;
    std::size_t n_docs_ = 0;
    std::unordered_map<std::string, std::size_t> index_;
};

struct VocabularyOptions {
    std::size_t min_df = 1;
    TokenFilter token_filter;                       // keep term iff it returns true
    const std::set<std::string>* stopwords = nullptr;
};

// Terms are sorted lexicographically. Throws InputError when nothing survives.
Vocabulary build_vocabulary(const std::vector<Tokens>& docs, const VocabularyOptions& options);

// entry(d, t) = count(d, t) * (ln(n_docs / df(t)) + 1)
SparseMatrix tfidf(const std::vector<Tokens>& docs, const Vocabulary& vocab);

// Raw counts of vocabulary terms per document.
SparseMatrix count_matrix(const std::vector<Tokens>& docs, const Vocabulary& vocab);

// Contiguous n-grams joined with '_'.
Tokens ngrams(const Tokens& tokens, std::size_t n);

struct NgramFeatures {
    SparseMatrix counts;
    Vocabulary vocab;
};

NgramFeatures ngram_features(const std::vector<Tokens>& docs, std::size_t n, std::size_t min_df);

std::set<std::string> load_word_list(const std::filesystem::path& path);
const std::set<std::string>& default_stopwords();

}  // namespace askwell::textkit
