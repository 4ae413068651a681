#include "askwell/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "askwell/error.hpp"

namespace askwell::stats {
namespace {

void require_both_classes(std::size_t n_pos, std::size_t n_neg) {
    if (n_pos == 0 || n_neg == 0) throw InputError("both classes must be present");
}

struct ClassSplit {
    std::vector<double> pos;
    std::vector<double> neg;
};

ClassSplit split_by_label(std::span<const double> scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size()) throw InputError("scores and labels differ in length");
    ClassSplit out;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i])) throw InputError("scores must be finite");
        (labels[i] ? out.pos : out.neg).push_back(scores[i]);
    }
    require_both_classes(out.pos.size(), out.neg.size());
    return out;
}

}  // namespace

std::string tail_name(Tail tail) {
    switch (tail) {
        case Tail::two_sided: return "two-sided";
        case Tail::greater: return "greater";
        case Tail::less: return "less";
    }
    return "two-sided";
}

std::vector<double> midranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
        i = j + 1;
    }
    return ranks;
}

double trapezoid_area(const std::vector<RocPoint>& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) * 0.5;
    }
    return area;
}

RocResult roc_auc(std::span<const double> scores, const std::vector<bool>& labels) {
    const ClassSplit split = split_by_label(scores, labels);
    RocResult out;
    out.n_pos = split.pos.size();
    out.n_neg = split.neg.size();

    const auto ranks = midranks(scores);
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) rank_sum += ranks[i];
    }
    const double np = static_cast<double>(out.n_pos);
    const double nn = static_cast<double>(out.n_neg);
    out.auc = (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    out.curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t tp = 0, fp = 0, i = 0;
    while (i < order.size()) {
        const double threshold = scores[order[i]];
        while (i < order.size() && scores[order[i]] == threshold) {
            (labels[order[i]] ? tp : fp) += 1;
            ++i;
        }
        out.curve.push_back({threshold, static_cast<double>(fp) / nn, static_cast<double>(tp) / np});
    }
    return out;
}

TestResult delong_test(std::span<const double> scores_a, std::span<const double> scores_b,
                       const std::vector<bool>& labels) {
    if (scores_a.size() != scores_b.size() || scores_a.size() != labels.size()) {
        throw InputError("score vectors and labels must have equal length");
    }
    const ClassSplit split_a = split_by_label(scores_a, labels);
    const ClassSplit split_b = split_by_label(scores_b, labels);
    const std::size_t m = split_a.pos.size();
    const std::size_t n = split_a.neg.size();

    // Placement values via midranks: for a positive, the fraction of negatives
    // it beats (ties 1/2); for a negative, the fraction of positives beating it.
    struct Placements {
        std::vector<double> v10, v01;
        double auc;
    };
    auto placements = [&](const ClassSplit& s) {
        std::vector<double> pooled = s.pos;
        pooled.insert(pooled.end(), s.neg.begin(), s.neg.end());
        const auto tz = midranks(pooled);
        const auto tx = midranks(s.pos);
        const auto ty = midranks(s.neg);
        Placements p;
        p.v10.resize(m);
        p.v01.resize(n);
        for (std::size_t i = 0; i < m; ++i) p.v10[i] = (tz[i] - tx[i]) / static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) {
            p.v01[j] = 1.0 - (tz[m + j] - ty[j]) / static_cast<double>(m);
        }
        p.auc = std::accumulate(p.v10.begin(), p.v10.end(), 0.0) / static_cast<double>(m);
        return p;
    };
    const Placements pa = placements(split_a);
    const Placements pb = placements(split_b);

    auto covariance = [](const std::vector<double>& x, const std::vector<double>& y) {
        const std::size_t k = x.size();
        if (k < 2) return 0.0;
        const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(k);
        const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(k);
        double acc = 0.0;
        for (std::size_t i = 0; i < k; ++i) acc += (x[i] - mx) * (y[i] - my);
        return acc / static_cast<double>(k - 1);
    };
    const double md = static_cast<double>(m);
    const double nd = static_cast<double>(n);
    const double var_a = covariance(pa.v10, pa.v10) / md + covariance(pa.v01, pa.v01) / nd;
    const double var_b = covariance(pb.v10, pb.v10) / md + covariance(pb.v01, pb.v01) / nd;
    const double cov_ab = covariance(pa.v10, pb.v10) / md + covariance(pa.v01, pb.v01) / nd;
    const double var_diff = var_a + var_b - 2.0 * cov_ab;
    const double diff = pa.auc - pb.auc;

    TestResult out;
    out.method = "delong";
    out.tail = Tail::two_sided;
    if (!(var_diff > 0.0)) {
        out.degenerate = true;
        out.statistic = 0.0;
        out.p = diff == 0.0 ? 1.0 : 0.0;
        return out;
    }
    out.statistic = diff / std::sqrt(var_diff);
    out.p = std::min(1.0, 2.0 * normal_sf(std::abs(out.statistic)));
    return out;
}

namespace {

// Distribution of twice the rank sum of a size-k subset of the pooled midranks.
std::vector<double> rank_sum_distribution(const std::vector<double>& pooled_ranks, std::size_t k) {
    std::size_t max_sum = 0;
    for (const double r : pooled_ranks) max_sum += static_cast<std::size_t>(std::lround(2.0 * r));
    // ways[c][s]: number of c-subsets with doubled rank sum s.
    std::vector<std::vector<double>> ways(k + 1, std::vector<double>(max_sum + 1, 0.0));
    ways[0][0] = 1.0;
    for (const double r : pooled_ranks) {
        const auto w = static_cast<std::size_t>(std::lround(2.0 * r));
        for (std::size_t c = k; c >= 1; --c) {
            for (std::size_t s = max_sum; s >= w; --s) ways[c][s] += ways[c - 1][s - w];
        }
    }
    return ways[k];
}

}  // namespace

TestResult mann_whitney_u(std::span<const double> sample_x, std::span<const double> sample_y,
                          Tail tail) {
    if (sample_x.empty() || sample_y.empty()) throw InputError("both samples must be non-empty");
    const std::size_t nx = sample_x.size();
    const std::size_t ny = sample_y.size();
    std::vector<double> pooled(sample_x.begin(), sample_x.end());
    pooled.insert(pooled.end(), sample_y.begin(), sample_y.end());
    for (const double v : pooled) {
        if (!std::isfinite(v)) throw InputError("samples must be finite");
    }
    const auto ranks = midranks(pooled);
    const double rx = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(nx), 0.0);
    const double dx = static_cast<double>(nx);
    const double dy = static_cast<double>(ny);
    const double u = rx - dx * (dx + 1.0) / 2.0;
    const double mean = dx * dy / 2.0;

    TestResult out;
    out.statistic = u;
    out.tail = tail;

    if (nx + ny <= kMannWhitneyExactLimit) {
        out.method = "mann-whitney-exact";
        const auto dist = rank_sum_distribution(ranks, nx);
        const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
        const double offset = dx * (dx + 1.0) / 2.0;
        const double slack = 1e-9;
        double mass = 0.0;
        for (std::size_t s = 0; s < dist.size(); ++s) {
            if (dist[s] == 0.0) continue;
            const double us = 0.5 * static_cast<double>(s) - offset;
            bool extreme = false;
            switch (tail) {
                case Tail::greater: extreme = us >= u - slack; break;
                case Tail::less: extreme = us <= u + slack; break;
                case Tail::two_sided: extreme = std::abs(us - mean) >= std::abs(u - mean) - slack; break;
            }
            if (extreme) mass += dist[s];
        }
        out.p = std::clamp(mass / total, 0.0, 1.0);
        return out;
    }

    out.method = "mann-whitney-normal";
    const double nn = dx + dy;
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double variance = dx * dy / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if (!(variance > 0.0)) {
        out.degenerate = true;
        out.p = 1.0;
        return out;
    }
    const double sd = std::sqrt(variance);
    switch (tail) {
        case Tail::two_sided: {
            const double z = std::max(0.0, std::abs(u - mean) - 0.5) / sd;
            out.p = std::min(1.0, 2.0 * normal_sf(z));
            break;
        }
        case Tail::greater: out.p = normal_sf((u - mean - 0.5) / sd); break;
        case Tail::less: out.p = normal_sf(-(u - mean + 0.5) / sd); break;
    }
    return out;
}

double binomial_pmf(std::uint64_t k, std::uint64_t n, double p) {
    if (k > n) return 0.0;
    const double dk = static_cast<double>(k);
    const double dn = static_cast<double>(n);
    if (p == 0.0) return k == 0 ? 1.0 : 0.0;
    if (p == 1.0) return k == n ? 1.0 : 0.0;
    const double log_pmf = std::lgamma(dn + 1.0) - std::lgamma(dk + 1.0) - std::lgamma(dn - dk + 1.0) +
                           dk * std::log(p) + (dn - dk) * std::log1p(-p);
    return std::exp(log_pmf);
}

TestResult binomial_test(std::uint64_t k, std::uint64_t n, double p0, Tail tail) {
    if (n == 0) throw InputError("binomial test needs at least one trial");
    if (k > n) throw InputError("successes exceed trials");
    if (!(p0 > 0.0 && p0 < 1.0)) throw InputError("p0 must lie strictly between 0 and 1");

    std::vector<double> pmf(n + 1);
    for (std::uint64_t i = 0; i <= n; ++i) pmf[i] = binomial_pmf(i, n, p0);

    // Sum smallest terms first.
    auto tail_sum = [&](std::uint64_t lo, std::uint64_t hi) {
        std::vector<double> terms(pmf.begin() + static_cast<std::ptrdiff_t>(lo),
                                  pmf.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
        std::sort(terms.begin(), terms.end());
        return std::accumulate(terms.begin(), terms.end(), 0.0);
    };

    TestResult out;
    out.method = "binomial-exact";
    out.tail = tail;
    out.statistic = static_cast<double>(k) / static_cast<double>(n);
    switch (tail) {
        case Tail::greater: out.p = tail_sum(k, n); break;
        case Tail::less: out.p = tail_sum(0, k); break;
        case Tail::two_sided: {
            const double cutoff = pmf[k] * (1.0 + 1e-7);
            std::vector<double> terms;
            for (const double v : pmf) {
                if (v <= cutoff) terms.push_back(v);
            }
            std::sort(terms.begin(), terms.end());
            out.p = std::accumulate(terms.begin(), terms.end(), 0.0);
            break;
        }
    }
    out.p = std::clamp(out.p, 0.0, 1.0);
    return out;
}

GaussianKde::GaussianKde(std::vector<double> samples, double bandwidth)
    : samples_(std::move(samples)), bandwidth_(bandwidth) {
    if (samples_.empty()) throw InputError("KDE needs at least one sample");
    if (!(bandwidth_ > 0.0)) throw InputError("KDE bandwidth must be positive");
}

double GaussianKde::operator()(double x) const {
    const double inv_h = 1.0 / bandwidth_;
    double acc = 0.0;
    for (const double s : samples_) {
        const double u = (x - s) * inv_h;
        acc += std::exp(-0.5 * u * u);
    }
    return acc * std::numbers::inv_sqrtpi / std::numbers::sqrt2 * inv_h /
           static_cast<double>(samples_.size());
}

std::vector<GaussianKde::GridPoint> GaussianKde::grid(std::size_t points) const {
    const auto [lo, hi] = std::minmax_element(samples_.begin(), samples_.end());
    return grid(*lo - 4.0 * bandwidth_, *hi + 4.0 * bandwidth_, points);
}

std::vector<GaussianKde::GridPoint> GaussianKde::grid(double lo, double hi, std::size_t points) const {
    if (points < 2) throw InputError("a grid needs at least two points");
    std::vector<GridPoint> out;
    out.reserve(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        out.push_back({x, (*this)(x)});
    }
    return out;
}

double integrate(const std::vector<GaussianKde::GridPoint>& grid) {
    double area = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        area += (grid[i].x - grid[i - 1].x) * (grid[i].density + grid[i - 1].density) * 0.5;
    }
    return area;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw InputError("pearson_r needs two equal-length vectors of size >= 2");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw InputError("pearson_r is undefined for a constant vector");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double chi_square_sf(double x, double df) {
    if (!(df > 0.0)) throw InputError("degrees of freedom must be positive");
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(df / 2.0, x / 2.0);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw InputError("percentile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

void write_roc_csv(const RocResult& roc, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out.precision(10);
    out << "threshold,fpr,tpr\n";
    for (const auto& p : roc.curve) out << p.threshold << ',' << p.fpr << ',' << p.tpr << '\n';
}

void write_grid_csv(const std::vector<GaussianKde::GridPoint>& grid, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out.precision(10);
    out << "x,y\n";
    for (const auto& p : grid) out << p.x << ',' << p.density << '\n';
}

}  // namespace askwell::stats
