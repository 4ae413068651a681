#include "askwell/similarity.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "askwell/error.hpp"
#include "askwell/random.hpp"

namespace askwell::similarity {

using nlohmann::json;

std::string metric_name(Metric metric) { return metric == Metric::intersection ? "intersection" : "jaccard"; }

Metric parse_metric(const std::string& name) {
    if (name == "intersection") return Metric::intersection;
    if (name == "jaccard") return Metric::jaccard;
    throw InputError("unknown similarity metric: " + name);
}

double default_bandwidth(Metric metric) { return metric == Metric::intersection ? 0.5 : 0.03; }

double pair_similarity(const std::set<std::string>& giver, const std::set<std::string>& receiver, Metric metric) {
    std::size_t common = 0;
    for (const auto& s : giver) common += receiver.contains(s);
    if (metric == Metric::intersection) return static_cast<double>(common);
    const std::size_t uni = giver.size() + receiver.size() - common;
    return uni == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(uni);
}

std::vector<Pair> pairs_from_corpus(const Corpus& corpus) {
    std::vector<Pair> out;
    for (const auto& r : corpus.requests()) {
        if (r.giver && *r.giver != r.requester) out.push_back({r.id, *r.giver, r.requester, r.created_at});
    }
    return out;
}

std::vector<Pair> load_pairs(const std::filesystem::path& path, const Corpus& corpus) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read pairs file " + path.string());
    std::vector<Pair> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json obj = json::parse(line);
            Pair p;
            p.request_id = obj.at("request_id").get<std::string>();
            p.giver = obj.at("giver").get<std::string>();
            p.receiver = obj.at("receiver").get<std::string>();
            const auto* r = corpus.find(p.request_id);
            if (r == nullptr) throw InputError("unknown request " + p.request_id);
            if (p.giver == p.receiver) throw InputError("giver equals receiver");
            p.t = r->created_at;
            out.push_back(std::move(p));
        } catch (const std::exception& e) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void write_pairs(const std::vector<Pair>& pairs, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    for (const auto& p : pairs) {
        out << json{{"request_id", p.request_id}, {"giver", p.giver}, {"receiver", p.receiver}}.dump() << '\n';
    }
}

NullSample null_pairs(const std::vector<Pair>& pairs, std::size_t n_samples, std::uint64_t seed, NullModel model) {
    std::set<std::pair<std::string, std::string>> observed;
    std::set<std::string> giver_set;
    std::map<std::string, UnixSeconds> receiver_time;
    for (const auto& p : pairs) {
        observed.emplace(p.giver, p.receiver);
        giver_set.insert(p.giver);
        receiver_time.emplace(p.receiver, p.t);
    }
    if (giver_set.size() < 2 || receiver_time.size() < 2) {
        throw InputError("the null model needs at least two distinct givers and receivers");
    }
    const std::vector<std::string> givers(giver_set.begin(), giver_set.end());
    const auto allowed = [&](const std::string& g, const std::string& r) {
        return g != r && !observed.contains({g, r});
    };

    Rng rng(seed);
    NullSample out;
    if (model == NullModel::uniform) {
        std::vector<std::pair<std::size_t, std::string>> universe;
        for (std::size_t g = 0; g < givers.size(); ++g) {
            for (const auto& [r, t] : receiver_time) {
                if (allowed(givers[g], r)) universe.emplace_back(g, r);
            }
        }
        if (universe.empty()) throw InputError("every giver-receiver combination is observed; no null pairs exist");
        if (n_samples <= universe.size()) {
            for (std::size_t i = 0; i < n_samples; ++i) {
                const std::size_t j = i + rng.index(universe.size() - i);
                std::swap(universe[i], universe[j]);
            }
            universe.resize(n_samples);
        } else {
            out.with_replacement = true;
            std::vector<std::pair<std::size_t, std::string>> draws;
            for (std::size_t i = 0; i < n_samples; ++i) draws.push_back(universe[rng.index(universe.size())]);
            universe = std::move(draws);
        }
        for (const auto& [g, r] : universe) out.pairs.push_back({"", givers[g], r, receiver_time.at(r)});
        return out;
    }

    std::vector<std::string> receivers;
    for (const auto& p : pairs) receivers.push_back(p.receiver);
    std::size_t barren_rounds = 0;
    while (out.pairs.size() < n_samples) {
        rng.shuffle(receivers);
        std::size_t added = 0;
        for (std::size_t i = 0; i < pairs.size() && out.pairs.size() < n_samples; ++i) {
            if (!allowed(pairs[i].giver, receivers[i])) continue;
            out.pairs.push_back({"", pairs[i].giver, receivers[i], receiver_time.at(receivers[i])});
            ++added;
        }
        barren_rounds = added == 0 ? barren_rounds + 1 : 0;
        if (barren_rounds > 100) throw InputError("degree-preserving rewiring cannot avoid observed pairs");
    }
    // More than one permutation's worth of draws can repeat combinations.
    out.with_replacement = n_samples > pairs.size();
    return out;
}

json StudyResult::summary() const {
    const auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    return {{"metric", metric_name(metric)},
            {"bandwidth", bandwidth},
            {"n_actual", actual.size()},
            {"n_null", null.size()},
            {"null_with_replacement", null_with_replacement},
            {"mean_actual", mean(actual)},
            {"mean_null", mean(null)},
            {"median_actual", actual.empty() ? 0.0 : stats::percentile(actual, 0.5)},
            {"median_null", null.empty() ? 0.0 : stats::percentile(null, 0.5)},
            {"test",
             {{"method", test.method}, {"statistic", test.statistic}, {"p", test.p}, {"tail", stats::tail_name(test.tail)}}}};
}

StudyResult compare_samples(std::vector<double> actual, std::vector<double> null, Metric metric, double bandwidth,
                            std::size_t grid_points) {
    if (actual.empty() || null.empty()) throw InputError("similarity samples must be non-empty");
    if (grid_points < 2) throw InputError("the density grid needs at least two points");
    StudyResult out;
    out.metric = metric;
    out.bandwidth = bandwidth;
    const stats::GaussianKde kde_actual(actual, bandwidth);
    const stats::GaussianKde kde_null(null, bandwidth);
    const auto [amin, amax] = std::minmax_element(actual.begin(), actual.end());
    const auto [nmin, nmax] = std::minmax_element(null.begin(), null.end());
    const double lo = std::min(*amin, *nmin) - 4.0 * bandwidth;
    const double hi = std::max(*amax, *nmax) + 4.0 * bandwidth;
    for (const auto& pt : kde_actual.grid(lo, hi, grid_points)) {
        out.grid_x.push_back(pt.x);
        out.actual_density.push_back(pt.density);
    }
    for (const auto& pt : kde_null.grid(lo, hi, grid_points)) out.null_density.push_back(pt.density);
    out.test = stats::mann_whitney_u(actual, null, stats::Tail::two_sided);
    out.actual = std::move(actual);
    out.null = std::move(null);
    return out;
}

StudyResult run_similarity_study(const Corpus& corpus, const std::vector<Pair>& pairs, const StudyOptions& options) {
    if (pairs.empty()) throw InputError("no giver-receiver pairs");
    const auto similarity = [&](const Pair& p) {
        return pair_similarity(subreddit_set_before(corpus, p.giver, p.t),
                               subreddit_set_before(corpus, p.receiver, p.t), options.metric);
    };
    std::vector<double> actual, null;
    for (const auto& p : pairs) actual.push_back(similarity(p));
    const auto sample = null_pairs(pairs, options.n_null, options.seed, options.null_model);
    for (const auto& p : sample.pairs) null.push_back(similarity(p));
    auto result = compare_samples(std::move(actual), std::move(null), options.metric,
                                  options.bandwidth.value_or(default_bandwidth(options.metric)), options.grid_points);
    result.null_with_replacement = sample.with_replacement;
    return result;
}

void write_study(const StudyResult& result, const std::filesystem::path& dir, const std::string& prefix) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / (prefix + "_kde.csv"));
        if (!out) throw InputError("cannot write into " + dir.string());
        out.precision(10);
        out << "x,actual,null\n";
        for (std::size_t i = 0; i < result.grid_x.size(); ++i) {
            out << result.grid_x[i] << ',' << result.actual_density[i] << ',' << result.null_density[i] << '\n';
        }
    }
    {
        std::ofstream out(dir / (prefix + "_samples.csv"));
        out.precision(10);
        out << "sample,similarity\n";
        for (double v : result.actual) out << "actual," << v << '\n';
        for (double v : result.null) out << "null," << v << '\n';
    }
    std::ofstream(dir / (prefix + ".json")) << result.summary().dump(2) << '\n';
}

}  // namespace askwell::similarity
