#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "askwell/corpus.hpp"
#include "askwell/glm.hpp"

namespace askwell::testing {

class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

struct LogisticProblem {
    glm::Design X;
    std::vector<bool> y;
    std::vector<double> beta;  // true coefficients
    double intercept = 0.0;
};

// Gaussian features, labels drawn from the logistic model with the given truth.
LogisticProblem logistic_problem(std::size_t n, const std::vector<double>& beta, double intercept,
                                 std::uint64_t seed);

struct CorpusOptions {
    std::size_t n_requests = 1200;
    std::uint64_t seed = 7;
    bool with_givers = true;
};

// A request corpus whose outcomes follow a known logistic model over the
// narrative, evidence, reciprocity, gratitude, length, status and timing
// factors, with matching user histories.
Corpus synthetic_corpus(const CorpusOptions& options = {});

}  // namespace askwell::testing
