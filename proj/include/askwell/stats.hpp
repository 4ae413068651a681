#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace askwell::stats {

enum class Tail { two_sided, greater, less };

struct TestResult {
    double statistic = 0.0;
    double p = 1.0;
    Tail tail = Tail::two_sided;
    std::string method;
    // Set when the statistic is undefined (e.g. zero variance) and p was fixed to 1.
    bool degenerate = false;
};

struct RocPoint {
    double threshold;
    double fpr;
    double tpr;
};

struct RocResult {
    double auc = 0.5;
    std::vector<RocPoint> curve;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
};

// Midranks (1-based) of the values.
std::vector<double> midranks(std::span<const double> values);

// AUC = (concordant + 0.5 * tied pairs) / (n_pos * n_neg), from the rank sum.
// The curve runs from (0,0) to (1,1) over descending distinct thresholds.
RocResult roc_auc(std::span<const double> scores, const std::vector<bool>& labels);

double trapezoid_area(const std::vector<RocPoint>& curve);

// DeLong's test for two correlated AUCs on the same labelled instances.
TestResult delong_test(std::span<const double> scores_a, std::span<const double> scores_b,
                       const std::vector<bool>& labels);

// statistic = U of sample_x (pairs with x > y, ties counted 1/2). Small samples
// (n_x + n_y <= 20) use the exact permutation distribution, ties included;
// larger samples use the tie-corrected normal approximation with continuity
// correction. `greater` tests whether x tends to exceed y.
TestResult mann_whitney_u(std::span<const double> sample_x, std::span<const double> sample_y,
                          Tail tail = Tail::two_sided);

inline constexpr std::size_t kMannWhitneyExactLimit = 20;

// Exact binomial test. `greater` sums P(X >= k); `two_sided` sums every
// outcome whose pmf does not exceed pmf(k).
TestResult binomial_test(std::uint64_t k, std::uint64_t n, double p0, Tail tail);

double binomial_pmf(std::uint64_t k, std::uint64_t n, double p);

class GaussianKde {
public:
    GaussianKde(std::vector<double> samples, double bandwidth);

    double operator()(double x) const;
    double bandwidth() const { return bandwidth_; }
    const std::vector<double>& samples() const { return samples_; }

    struct GridPoint {
        double x;
        double density;
    };
    // Evenly spaced grid over [min - 4h, max + 4h] (or the given range).
    std::vector<GridPoint> grid(std::size_t points) const;
    std::vector<GridPoint> grid(double lo, double hi, std::size_t points) const;

private:
    std::vector<double> samples_;
    double bandwidth_;
};

// Trapezoidal integral of a grid.
double integrate(const std::vector<GaussianKde::GridPoint>& grid);

double pearson_r(std::span<const double> x, std::span<const double> y);

double chi_square_sf(double x, double df);
double normal_sf(double z);

// Linear-interpolation percentile (position q * (n - 1) of the sorted values).
double percentile(std::vector<double> values, double q);

void write_roc_csv(const RocResult& roc, const std::filesystem::path& path);
void write_grid_csv(const std::vector<GaussianKde::GridPoint>& grid, const std::filesystem::path& path);

std::string tail_name(Tail tail);

}  // namespace askwell::stats
