#include "askwell/features.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <mutex>
#include <regex>
#include <sstream>

#include "askwell/error.hpp"
#include "askwell/stats.hpp"
#include "askwell/textkit.hpp"

namespace askwell::features {

namespace {

Lexicon split_words(std::string_view words) {
    Lexicon out;
    std::istringstream in{std::string(words)};
    std::string w;
    while (in >> w) {
        std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
        out.insert(w);
    }
    return out;
}

NarrativeLexicons make_default_narratives() {
    NarrativeLexicons lex;
    lex.sets[0] = split_words(
        "money now broke week until time last day when today tonight paid next first night after tomorrow "
        "month while account before long friday rent buy bank still bills bills ago cash due due soon past "
        "never paycheck check spent years poor till yesterday morning dollars financial hour bill evening "
        "credit budget loan bucks deposit dollar current payed");
    lex.sets[1] = split_words("work job paycheck unemployment interview fired employment hired hire");
    lex.sets[2] = split_words(
        "college student school roommate studying university finals semester class study project dorm tuition");
    lex.sets[3] = split_words("family mom wife parents mother husband dad son daughter father parent mum");
    lex.sets[4] = split_words(
        "friend girlfriend craving birthday boyfriend celebrate party game games movie date drunk beer "
        "celebrating invited drinks crave wasted invite");
    return lex;
}

// Short general-purpose polarity lists. Replace with a fuller lexicon via
// SentimentLexicons::load when one is available.
SentimentLexicons make_default_sentiment() {
    SentimentLexicons lex;
    lex.positive = split_words(
        "good great awesome amazing love loved lovely like liked nice happy glad excellent wonderful "
        "fantastic best better fun enjoy enjoyed enjoying delicious beautiful kind kindness generous "
        "grateful thankful appreciate appreciated blessed lucky perfect cool sweet excited exciting "
        "helpful hope hopeful yay wow awesome incredible brilliant cheerful delighted fortunate "
        "friendly gladly positive pleasant pleased pleasure proud relief relieved smile smiling super "
        "support supportive tasty thrilled win wins won favorite favourite joy warm welcome worth");
    lex.negative = split_words(
        "bad terrible awful horrible hate hated sad unhappy broke hungry starving sick ill hurt pain "
        "poor worse worst stress stressed stressful depressed depressing lonely tired exhausted angry "
        "upset annoying annoyed sucks suck sucked miserable desperate difficult hard rough struggling "
        "struggle problem problems trouble lost lose losing fired unemployed debt disaster fail failed "
        "failing afraid scared worried worry worrying fear cry crying unfortunately unfortunate injury "
        "injured shitty crap crappy damn horrible mess broken stuck wrong nasty hopeless helpless");
    return lex;
}

Lexicon read_lexicon(const std::filesystem::path& path) {
    auto words = textkit::load_word_list(path);
    if (words.empty()) throw InputError("empty lexicon: " + path.string());
    return words;
}

std::string lowercase_collapsed(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool space = false;
    for (const char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            space = !out.empty();
            continue;
        }
        if (space) out.push_back(' ');
        space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

const std::regex& reciprocity_regex() {
    static const std::regex re(kReciprocityPattern, std::regex::ECMAScript | std::regex::optimize);
    return re;
}
const std::regex& image_regex() {
    static const std::regex re(kImagePattern, std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
    return re;
}
const std::regex& emoticon_regex() {
    static const std::regex re(kEmoticonPattern, std::regex::ECMAScript | std::regex::optimize);
    return re;
}

std::mutex observer_mutex;
StatisticsObserver statistics_observer;

std::string narrative_key(std::size_t i) { return std::string("narrative_") + kNarrativeNames[i]; }

const std::vector<std::string> kRegressionNames{
    "community_age_decile", "first_half_month", "gratitude", "image", "reciprocity",
    "strong_pos_sentiment", "strong_neg_sentiment", "length_100_words", "karma_decile", "posted_before",
    "craving", "family", "job", "money", "student"};

const std::vector<std::string> kPredictionNames{
    "community_age_decile", "first_half_month", "gratitude", "image", "reciprocity",
    "strong_pos_sentiment", "strong_neg_sentiment", "length_100_words", "karma_decile", "posted_before",
    "craving_decile", "family_decile", "job_decile", "money_decile", "student_decile"};

std::array<double, 9> decile_cuts(const std::vector<double>& values) {
    std::array<double, 9> cuts{};
    for (std::size_t q = 1; q <= 9; ++q) cuts[q - 1] = stats::percentile(values, static_cast<double>(q) / 10.0);
    return cuts;
}

}  // namespace

const NarrativeLexicons& NarrativeLexicons::defaults() {
    static const NarrativeLexicons lex = make_default_narratives();
    return lex;
}

NarrativeLexicons NarrativeLexicons::load(const std::filesystem::path& dir) {
    NarrativeLexicons lex;
    for (std::size_t i = 0; i < kNarratives; ++i) {
        lex.sets[i] = read_lexicon(dir / (std::string(kNarrativeNames[i]) + ".txt"));
    }
    return lex;
}

const SentimentLexicons& SentimentLexicons::defaults() {
    static const SentimentLexicons lex = make_default_sentiment();
    return lex;
}

SentimentLexicons SentimentLexicons::load(const std::filesystem::path& positive,
                                          const std::filesystem::path& negative) {
    return {read_lexicon(positive), read_lexicon(negative)};
}

const Lexicon& gratitude_terms() {
    static const Lexicon terms{"thank", "thanks", "thankful", "grateful", "gratitude", "appreciate", "appreciated"};
    return terms;
}

NarrativeHits detect_narratives(std::string_view text, const NarrativeLexicons& lexicons) {
    NarrativeHits hits;
    const auto tokens = textkit::tokenize(text);
    for (const auto& t : tokens) {
        for (std::size_t i = 0; i < kNarratives; ++i) {
            if (lexicons.sets[i].contains(t)) ++hits.counts[i];
        }
    }
    if (!tokens.empty()) {
        for (std::size_t i = 0; i < kNarratives; ++i) {
            hits.fractions[i] = static_cast<double>(hits.counts[i]) / static_cast<double>(tokens.size());
        }
    }
    return hits;
}

bool detect_reciprocity(std::string_view text) {
    const std::string norm = lowercase_collapsed(text);
    return std::regex_search(norm, reciprocity_regex());
}

bool detect_gratitude(std::string_view text) {
    const auto& terms = gratitude_terms();
    for (const auto& t : textkit::tokenize(text)) {
        if (terms.contains(t)) return true;
    }
    return false;
}

bool detect_image(std::string_view text) {
    return std::regex_search(text.begin(), text.end(), image_regex());
}

bool detect_emoticon(std::string_view text) {
    return std::regex_search(text.begin(), text.end(), emoticon_regex());
}

Sentiment sentiment_features(std::string_view text, const SentimentLexicons& lexicons) {
    Sentiment out;
    out.has_emoticon = detect_emoticon(text);
    std::size_t sentences = 0, pos_sentences = 0, neg_sentences = 0;
    std::size_t words = 0, pos_words = 0, neg_words = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find_first_of(".!?\n", start);
        if (end == std::string_view::npos) end = text.size();
        const auto tokens = textkit::tokenize(text.substr(start, end - start));
        if (!tokens.empty()) {
            ++sentences;
            std::size_t pos = 0, neg = 0;
            for (const auto& t : tokens) {
                pos += lexicons.positive.contains(t);
                neg += lexicons.negative.contains(t);
            }
            if (pos > neg) ++pos_sentences;
            if (neg > pos) ++neg_sentences;
            words += tokens.size();
            pos_words += pos;
            neg_words += neg;
        }
        start = end + 1;
    }
    if (sentences > 0) {
        out.pos_sentence_frac = static_cast<double>(pos_sentences) / static_cast<double>(sentences);
        out.neg_sentence_frac = static_cast<double>(neg_sentences) / static_cast<double>(sentences);
    }
    if (words > 0) {
        out.pos_word_frac = static_cast<double>(pos_words) / static_cast<double>(words);
        out.neg_word_frac = static_cast<double>(neg_words) / static_cast<double>(words);
    }
    return out;
}

Temporal temporal_features(UnixSeconds created_at, UnixSeconds epoch) {
    using namespace std::chrono;
    if (created_at < epoch) throw InputError("request predates the community epoch");
    const auto split = [](UnixSeconds t) {
        const sys_seconds tp{seconds{t}};
        const auto day = floor<days>(tp);
        return std::pair{year_month_day{day}, (tp - day).count()};
    };
    const auto [ymd, secs] = split(created_at);
    const auto [e_ymd, e_secs] = split(epoch);

    Temporal out;
    std::int64_t months = (static_cast<int>(ymd.year()) - static_cast<int>(e_ymd.year())) * 12 +
                          (static_cast<int>(static_cast<unsigned>(ymd.month())) -
                           static_cast<int>(static_cast<unsigned>(e_ymd.month())));
    const auto d = static_cast<unsigned>(ymd.day()), ed = static_cast<unsigned>(e_ymd.day());
    if (d < ed || (d == ed && secs < e_secs)) --months;
    out.community_age_months = std::max<std::int64_t>(months, 0);
    out.day_of_month = static_cast<int>(d);
    out.first_half_month = d <= 15;
    out.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
    out.weekday = static_cast<int>(weekday{sys_days{ymd}}.c_encoding());
    out.hour = static_cast<int>(secs / 3600);
    return out;
}

Status status_at(const RequestRecord& request, const Corpus& corpus, const ExtractOptions& options) {
    Status s;
    const auto* history = corpus.history(request.requester);
    if (history != nullptr && !history->empty()) {
        s.karma = karma_at(corpus, request.requester, request.created_at);
        s.posted_before = posted_in_community_before(corpus, request.requester, request.created_at,
                                                     options.community, options.count_comments);
        if (request.snapshot.account_age_days) {
            s.account_age_days = *request.snapshot.account_age_days;
        } else if (history->front().created_at < request.created_at) {
            s.account_age_days = static_cast<double>(request.created_at - history->front().created_at) / 86400.0;
        }
        return s;
    }
    s.karma = request.snapshot.karma.value_or(0);
    s.posted_before = request.snapshot.posted_in_community.value_or(false);
    s.account_age_days = request.snapshot.account_age_days.value_or(0.0);
    return s;
}

RawFeatures extract_draft(std::string_view title, std::string_view body, UnixSeconds created_at,
                          UnixSeconds epoch, const Status& status, const ExtractOptions& options) {
    const auto& narratives = options.narratives ? *options.narratives : NarrativeLexicons::defaults();
    const auto& sentiment = options.sentiment ? *options.sentiment : SentimentLexicons::defaults();

    std::string scanned(title);
    if (!scanned.empty()) scanned += '\n';
    scanned += body;

    RawFeatures raw;
    const auto hits = detect_narratives(body, narratives);
    raw.narrative_count = hits.counts;
    raw.narrative_frac = hits.fractions;
    raw.n_words = textkit::word_count(body);
    raw.gratitude = detect_gratitude(scanned);
    raw.reciprocity = detect_reciprocity(scanned);
    raw.has_image = detect_image(scanned);
    raw.sentiment = sentiment_features(scanned, sentiment);
    raw.status = status;
    raw.temporal = temporal_features(created_at, epoch);
    return raw;
}

RawFeatures extract_raw(const RequestRecord& request, const Corpus& corpus, const ExtractOptions& options) {
    RawFeatures raw = extract_draft(request.title, request.body, request.created_at, corpus.epoch(),
                                    status_at(request, corpus, options), options);
    raw.request_id = request.id;
    return raw;
}

std::string scheme_name(Scheme scheme) {
    return scheme == Scheme::regression ? "regression" : "prediction";
}

Scheme parse_scheme(const std::string& name) {
    if (name == "regression") return Scheme::regression;
    if (name == "prediction") return Scheme::prediction;
    throw InputError("unknown feature scheme: " + name);
}

nlohmann::json EncoderMeta::to_json() const {
    nlohmann::json doc;
    doc["medians"] = medians;
    nlohmann::json dec = nlohmann::json::object();
    for (const auto& [name, cuts] : deciles) dec[name] = std::vector<double>(cuts.begin(), cuts.end());
    doc["deciles"] = dec;
    doc["source"] = source;
    doc["n_rows"] = n_rows;
    return doc;
}

EncoderMeta EncoderMeta::from_json(const nlohmann::json& doc) {
    EncoderMeta meta;
    try {
        meta.medians = doc.at("medians").get<std::map<std::string, double>>();
        for (const auto& [name, cuts] : doc.at("deciles").items()) {
            const auto v = cuts.get<std::vector<double>>();
            if (v.size() != 9) throw InputError("decile entry " + name + " needs 9 cut points");
            if (!std::is_sorted(v.begin(), v.end())) throw InputError("decile cut points must be non-decreasing");
            std::array<double, 9> a{};
            std::copy(v.begin(), v.end(), a.begin());
            meta.deciles[name] = a;
        }
        meta.source = doc.value("source", "");
        meta.n_rows = doc.value("n_rows", std::size_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed encoder metadata: ") + e.what());
    }
    return meta;
}

void set_statistics_observer(StatisticsObserver observer) {
    std::lock_guard lock(observer_mutex);
    statistics_observer = std::move(observer);
}

EncoderMeta fit_encoder(const std::vector<RawFeatures>& rows, std::string source) {
    if (rows.empty()) throw InputError("cannot fit an encoder on zero rows");
    {
        std::lock_guard lock(observer_mutex);
        if (statistics_observer) {
            std::vector<std::string> ids;
            ids.reserve(rows.size());
            for (const auto& r : rows) ids.push_back(r.request_id);
            statistics_observer(ids);
        }
    }
    EncoderMeta meta;
    meta.source = std::move(source);
    meta.n_rows = rows.size();
    const auto column = [&](auto get) {
        std::vector<double> v;
        v.reserve(rows.size());
        for (const auto& r : rows) v.push_back(get(r));
        return v;
    };
    for (std::size_t i = 0; i < kNarratives; ++i) {
        const auto v = column([i](const RawFeatures& r) { return r.narrative_frac[i]; });
        meta.medians[narrative_key(i)] = stats::percentile(v, 0.5);
        meta.deciles[narrative_key(i)] = decile_cuts(v);
    }
    meta.medians["pos_sentence_frac"] =
        stats::percentile(column([](const RawFeatures& r) { return r.sentiment.pos_sentence_frac; }), 0.5);
    meta.medians["neg_sentence_frac"] =
        stats::percentile(column([](const RawFeatures& r) { return r.sentiment.neg_sentence_frac; }), 0.5);
    // Defaults for drafts that arrive without a user profile.
    meta.medians["karma"] = stats::percentile(column([](const RawFeatures& r) { return static_cast<double>(r.status.karma); }), 0.5);
    meta.medians["account_age_days"] = stats::percentile(column([](const RawFeatures& r) { return r.status.account_age_days; }), 0.5);
    meta.medians["community_age_months"] = stats::percentile(
        column([](const RawFeatures& r) { return static_cast<double>(r.temporal.community_age_months); }), 0.5);
    meta.medians["posted_before"] = stats::percentile(column([](const RawFeatures& r) { return r.status.posted_before ? 1.0 : 0.0; }), 0.5);
    meta.medians["n_words"] = stats::percentile(column([](const RawFeatures& r) { return static_cast<double>(r.n_words); }), 0.5);
    meta.deciles["karma"] = decile_cuts(column([](const RawFeatures& r) { return static_cast<double>(r.status.karma); }));
    meta.deciles["community_age_months"] = decile_cuts(
        column([](const RawFeatures& r) { return static_cast<double>(r.temporal.community_age_months); }));
    return meta;
}

const std::vector<std::string>& feature_names(Scheme scheme) {
    return scheme == Scheme::regression ? kRegressionNames : kPredictionNames;
}

std::string schema_id(Scheme scheme, const EncoderMeta& meta) {
    return "askwell." + scheme_name(scheme) + ".v1@" + meta.source;
}

int decile_code(double value, const std::array<double, 9>& cuts) {
    return 1 + static_cast<int>(std::count_if(cuts.begin(), cuts.end(), [value](double c) { return c < value; }));
}

FeatureVector encode(const RawFeatures& raw, const EncoderMeta& meta, Scheme scheme) {
    const auto median = [&](const std::string& key) {
        const auto it = meta.medians.find(key);
        if (it == meta.medians.end()) throw InputError("encoder metadata lacks median for " + key);
        return it->second;
    };
    const auto cuts = [&](const std::string& key) -> const std::array<double, 9>& {
        const auto it = meta.deciles.find(key);
        if (it == meta.deciles.end()) throw InputError("encoder metadata lacks deciles for " + key);
        return it->second;
    };
    const auto flag = [](bool b) { return b ? 1.0 : 0.0; };

    FeatureVector out;
    out.schema_id = schema_id(scheme, meta);
    out.names = feature_names(scheme);
    out.values.reserve(out.names.size());
    out.values.push_back(decile_code(static_cast<double>(raw.temporal.community_age_months), cuts("community_age_months")));
    out.values.push_back(flag(raw.temporal.first_half_month));
    out.values.push_back(flag(raw.gratitude));
    out.values.push_back(flag(raw.has_image));
    out.values.push_back(flag(raw.reciprocity));
    out.values.push_back(flag(raw.sentiment.pos_sentence_frac > median("pos_sentence_frac")));
    out.values.push_back(flag(raw.sentiment.neg_sentence_frac > median("neg_sentence_frac")));
    out.values.push_back(static_cast<double>(raw.n_words) / 100.0);
    out.values.push_back(decile_code(static_cast<double>(raw.status.karma), cuts("karma")));
    out.values.push_back(flag(raw.status.posted_before));
    // Narratives in the order craving, family, job, money, student.
    for (const std::size_t i : {4u, 3u, 1u, 0u, 2u}) {
        const double frac = raw.narrative_frac[i];
        if (scheme == Scheme::regression) {
            out.values.push_back(flag(frac > median(narrative_key(i))));
        } else {
            out.values.push_back(decile_code(frac, cuts(narrative_key(i))));
        }
    }
    return out;
}

const std::vector<std::string>& feature_group_names() {
    static const std::vector<std::string> names{"text", "social", "temporal", "temporal+social",
                                                "temporal+social+text"};
    return names;
}

const std::vector<std::string>& feature_group(const std::string& group) {
    static const std::map<std::string, std::vector<std::string>> groups = [] {
        const std::vector<std::string> text{"gratitude",      "image",         "reciprocity",
                                            "length_100_words", "craving_decile", "family_decile",
                                            "job_decile",     "money_decile",  "student_decile"};
        const std::vector<std::string> social{"karma_decile", "posted_before"};
        const std::vector<std::string> temporal{"community_age_decile", "first_half_month"};
        std::map<std::string, std::vector<std::string>> g;
        g["text"] = text;
        g["social"] = social;
        g["temporal"] = temporal;
        g["temporal+social"] = temporal;
        g["temporal+social"].insert(g["temporal+social"].end(), social.begin(), social.end());
        g["temporal+social+text"] = g["temporal+social"];
        g["temporal+social+text"].insert(g["temporal+social+text"].end(), text.begin(), text.end());
        return g;
    }();
    const auto it = groups.find(group);
    if (it == groups.end()) throw InputError("unknown feature group: " + group);
    return it->second;
}

}  // namespace askwell::features
