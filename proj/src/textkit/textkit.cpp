#include "askwell/textkit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>

#include "askwell/error.hpp"

namespace askwell::textkit {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool starts_with_ci(std::string_view text, std::size_t pos, std::string_view prefix) {
    if (text.size() - pos < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        char c = text[pos + i];
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        if (c != prefix[i]) return false;
    }
    return true;
}

void flush(std::string& current, Tokens& out) {
    const auto first = current.find_first_not_of('\'');
    if (first != std::string::npos) {
        const auto last = current.find_last_not_of('\'');
        out.push_back(current.substr(first, last - first + 1));
    }
    current.clear();
}

}  // namespace

Tokens tokenize(std::string_view text) {
    Tokens out;
    std::string current;
    std::size_t i = 0;
    while (i < text.size()) {
        const bool at_boundary = current.empty() && (i == 0 || !std::isalnum(static_cast<unsigned char>(text[i - 1])));
        if (at_boundary && (starts_with_ci(text, i, "http://") || starts_with_ci(text, i, "https://") ||
                            starts_with_ci(text, i, "www."))) {
            while (i < text.size() && !is_space(text[i])) ++i;
            continue;
        }
        const char c = text[i];
        // U+2018 / U+2019 in UTF-8.
        if (static_cast<unsigned char>(c) == 0xE2 && i + 2 < text.size() &&
            static_cast<unsigned char>(text[i + 1]) == 0x80 &&
            (static_cast<unsigned char>(text[i + 2]) == 0x98 ||
             static_cast<unsigned char>(text[i + 2]) == 0x99)) {
            current.push_back('\'');
            i += 3;
            continue;
        }
        if (c >= 'a' && c <= 'z') {
            current.push_back(c);
        } else if (c >= 'A' && c <= 'Z') {
            current.push_back(static_cast<char>(c - 'A' + 'a'));
        } else if (c == '\'') {
            current.push_back(c);
        } else {
            flush(current, out);
        }
        ++i;
    }
    flush(current, out);
    return out;
}

std::size_t word_count(std::string_view text) { return tokenize(text).size(); }

Vocabulary::Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> df,
                       std::size_t n_docs)
    : terms_(std::move(terms)), df_(std::move(df)), n_docs_(n_docs) {
    if (terms_.size() != df_.size()) throw InputError("vocabulary terms and df differ in length");
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (!index_.emplace(terms_[i], i).second) {
            throw InputError("duplicate vocabulary term: " + terms_[i]);
        }
        if (df_[i] < 1 || df_[i] > n_docs_) throw InputError("document frequency out of range");
    }
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view term) const {
    const auto it = index_.find(std::string(term));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

nlohmann::json Vocabulary::to_json() const {
    return {{"terms", terms_}, {"df", df_}, {"n_docs", n_docs_}};
}

Vocabulary Vocabulary::from_json(const nlohmann::json& doc) {
    return Vocabulary(doc.at("terms").get<std::vector<std::string>>(),
                      doc.at("df").get<std::vector<std::size_t>>(),
                      doc.at("n_docs").get<std::size_t>());
}

Vocabulary build_vocabulary(const std::vector<Tokens>& docs, const VocabularyOptions& options) {
    if (options.min_df < 1) throw InputError("min_df must be at least 1");
    std::map<std::string, std::size_t> df;
    for (const auto& doc : docs) {
        std::vector<std::string_view> unique(doc.begin(), doc.end());
        std::sort(unique.begin(), unique.end());
        unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
        for (const auto term : unique) ++df[std::string(term)];
    }
    std::vector<std::string> terms;
    std::vector<std::size_t> counts;
    for (const auto& [term, count] : df) {
        if (count < options.min_df) continue;
        if (options.stopwords != nullptr && options.stopwords->contains(term)) continue;
        if (options.token_filter && !options.token_filter(term)) continue;
        terms.push_back(term);
        counts.push_back(count);
    }
    if (terms.empty()) throw InputError("no vocabulary terms survive the filters");
    return Vocabulary(std::move(terms), std::move(counts), docs.size());
}

namespace {

template <typename Weight>
SparseMatrix weighted_counts(const std::vector<Tokens>& docs, const Vocabulary& vocab,
                             Weight weight) {
    SparseMatrix out;
    out.rows = docs.size();
    out.cols = vocab.size();
    for (const auto& doc : docs) {
        std::map<std::size_t, double> row;
        for (const auto& token : doc) {
            if (const auto idx = vocab.index_of(token)) row[*idx] += 1.0;
        }
        for (const auto& [col, count] : row) {
            out.col_idx.push_back(col);
            out.values.push_back(count * weight(col));
        }
        out.row_ptr.push_back(out.values.size());
    }
    return out;
}

}  // namespace

SparseMatrix tfidf(const std::vector<Tokens>& docs, const Vocabulary& vocab) {
    std::vector<double> idf(vocab.size());
    for (std::size_t t = 0; t < vocab.size(); ++t) {
        idf[t] = std::log(static_cast<double>(vocab.n_docs()) / static_cast<double>(vocab.df()[t])) + 1.0;
    }
    return weighted_counts(docs, vocab, [&](std::size_t col) { return idf[col]; });
}

SparseMatrix count_matrix(const std::vector<Tokens>& docs, const Vocabulary& vocab) {
    return weighted_counts(docs, vocab, [](std::size_t) { return 1.0; });
}

Tokens ngrams(const Tokens& tokens, std::size_t n) {
    if (n < 1 || n > 3) throw InputError("n-gram order must be 1, 2 or 3");
    Tokens out;
    if (tokens.size() < n) return out;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string gram = tokens[i];
        for (std::size_t j = 1; j < n; ++j) gram += "_" + tokens[i + j];
        out.push_back(std::move(gram));
    }
    return out;
}

NgramFeatures ngram_features(const std::vector<Tokens>& docs, std::size_t n, std::size_t min_df) {
    std::vector<Tokens> grams;
    grams.reserve(docs.size());
    for (const auto& doc : docs) grams.push_back(ngrams(doc, n));
    VocabularyOptions options;
    options.min_df = min_df;
    auto vocab = build_vocabulary(grams, options);
    auto counts = count_matrix(grams, vocab);
    return {std::move(counts), std::move(vocab)};
}

std::set<std::string> load_word_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read word list: " + path.string());
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t\r");
        std::string entry = line.substr(first, last - first + 1);
        std::transform(entry.begin(), entry.end(), entry.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        out.insert(std::move(entry));
    }
    return out;
}

const std::set<std::string>& default_stopwords() {
    static const std::set<std::string> words{
        "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and",
        "any", "are", "aren't", "as", "at", "be", "because", "been", "before", "being", "below",
        "between", "both", "but", "by", "can", "can't", "cannot", "could", "couldn't", "did",
        "didn't", "do", "does", "doesn't", "doing", "don't", "down", "during", "each", "even",
        "few", "for", "from", "further", "get", "got", "had", "hadn't", "has", "hasn't", "have",
        "haven't", "having", "he", "he'd", "he'll", "he's", "her", "here", "here's", "hers",
        "herself", "him", "himself", "his", "how", "how's", "i", "i'd", "i'll", "i'm", "i've",
        "if", "in", "into", "is", "isn't", "it", "it's", "its", "itself", "just", "let's", "like",
        "me", "more", "most", "mustn't", "my", "myself", "no", "nor", "not", "of", "off", "on",
        "once", "only", "or", "other", "ought", "our", "ours", "ourselves", "out", "over", "own",
        "really", "same", "shan't", "she", "she'd", "she'll", "she's", "should", "shouldn't",
        "so", "some", "such", "than", "that", "that's", "the", "their", "theirs", "them",
        "themselves", "then", "there", "there's", "these", "they", "they'd", "they'll", "they're",
        "they've", "this", "those", "through", "to", "too", "under", "until", "up", "very", "was",
        "wasn't", "we", "we'd", "we'll", "we're", "we've", "were", "weren't", "what", "what's",
        "when", "when's", "where", "where's", "which", "while", "who", "who's", "whom", "why",
        "why's", "will", "with", "won't", "would", "wouldn't", "you", "you'd", "you'll", "you're",
        "you've", "your", "yours", "yourself", "yourselves", "im", "ive", "dont", "cant",
        "t", "s", "d", "ll", "m", "re", "ve",
    };
    return words;
}

}  // namespace askwell::textkit
