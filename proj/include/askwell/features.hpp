#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "askwell/corpus.hpp"
#include "askwell/glm.hpp"

namespace askwell::features {

using Lexicon = std::set<std::string>;

inline constexpr std::size_t kNarratives = 5;
inline constexpr std::array<const char*, kNarratives> kNarrativeNames{"money", "job", "student", "family",
                                                                      "craving"};

struct NarrativeLexicons {
    std::array<Lexicon, kNarratives> sets;

    static const NarrativeLexicons& defaults();
    // Reads <dir>/<name>.txt for every narrative, one term per line.
    static NarrativeLexicons load(const std::filesystem::path& dir);
};

struct SentimentLexicons {
    Lexicon positive;
    Lexicon negative;

    static const SentimentLexicons& defaults();
    static SentimentLexicons load(const std::filesystem::path& positive, const std::filesystem::path& negative);
};

// Canonical patterns. Reciprocity runs on lowercased, whitespace-collapsed
// text; image is case-insensitive; emoticons are matched on the raw text.
inline constexpr const char* kReciprocityPattern =
    R"(\bpay(?:ing)? (?:it|this) (?:forward|back)\b|\breturn the favor\b)";
inline constexpr const char* kImagePattern =
    R"((?:https?://|www\.)[^\s()<>\[\]"]+\.(?:jpe?g|png|gif)\b|imgur\.com)";
inline constexpr const char* kEmoticonPattern = R"([:;=]['-]?[)(DPp])";

const Lexicon& gratitude_terms();

struct NarrativeHits {
    std::array<std::size_t, kNarratives> counts{};
    std::array<double, kNarratives> fractions{};
};

NarrativeHits detect_narratives(std::string_view text, const NarrativeLexicons& lexicons);
bool detect_reciprocity(std::string_view text);
bool detect_gratitude(std::string_view text);
bool detect_image(std::string_view text);
bool detect_emoticon(std::string_view text);

struct Sentiment {
    double pos_sentence_frac = 0.0;
    double neg_sentence_frac = 0.0;
    double pos_word_frac = 0.0;
    double neg_word_frac = 0.0;
    bool has_emoticon = false;
};

Sentiment sentiment_features(std::string_view text, const SentimentLexicons& lexicons);

struct Temporal {
    std::int64_t community_age_months = 0;
    bool first_half_month = false;
    int month = 1;         // 1..12
    int weekday = 0;       // 0 = Sunday
    int hour = 0;          // UTC
    int day_of_month = 1;
};

Temporal temporal_features(UnixSeconds created_at, UnixSeconds epoch);

struct Status {
    std::int64_t karma = 0;
    bool posted_before = false;
    double account_age_days = 0.0;
};

struct RawFeatures {
    std::string request_id;
    std::array<std::size_t, kNarratives> narrative_count{};
    std::array<double, kNarratives> narrative_frac{};
    bool gratitude = false;
    bool reciprocity = false;
    bool has_image = false;
    Sentiment sentiment;
    std::size_t n_words = 0;
    Status status;
    Temporal temporal;
};

struct ExtractOptions {
    std::string community = kDefaultCommunity;
    bool count_comments = true;
    const NarrativeLexicons* narratives = nullptr;  // defaults when null
    const SentimentLexicons* sentiment = nullptr;
};

// Status at request time, from the history when the requester has one and
// from the record's snapshot otherwise.
Status status_at(const RequestRecord& request, const Corpus& corpus, const ExtractOptions& options = {});

RawFeatures extract_raw(const RequestRecord& request, const Corpus& corpus, const ExtractOptions& options = {});

// Same extraction for a draft that is not part of any corpus.
RawFeatures extract_draft(std::string_view title, std::string_view body, UnixSeconds created_at,
                          UnixSeconds epoch, const Status& status, const ExtractOptions& options = {});

enum class Scheme { regression, prediction };

std::string scheme_name(Scheme scheme);
Scheme parse_scheme(const std::string& name);

struct EncoderMeta {
    std::map<std::string, double> medians;
    std::map<std::string, std::array<double, 9>> deciles;
    std::string source;  // fingerprint of the rows the statistics came from
    std::size_t n_rows = 0;

    nlohmann::json to_json() const;
    static EncoderMeta from_json(const nlohmann::json& doc);
    bool operator==(const EncoderMeta&) const = default;
};

// Observer invoked with the ids of every row whose values feed the encoder
// statistics. Lets callers prove that only training rows were read.
using StatisticsObserver = std::function<void(const std::vector<std::string>& request_ids)>;
void set_statistics_observer(StatisticsObserver observer);

EncoderMeta fit_encoder(const std::vector<RawFeatures>& rows, std::string source);

const std::vector<std::string>& feature_names(Scheme scheme);
std::string schema_id(Scheme scheme, const EncoderMeta& meta);

// 1 + number of cut points strictly below the value.
int decile_code(double value, const std::array<double, 9>& cuts);

FeatureVector encode(const RawFeatures& raw, const EncoderMeta& meta, Scheme scheme);

// Feature subsets of the prediction scheme used by the model comparison.
const std::vector<std::string>& feature_group(const std::string& group);
const std::vector<std::string>& feature_group_names();

}  // namespace askwell::features
