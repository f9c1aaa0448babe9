#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "neurolens/core.hpp"

namespace neurolens {

/// Rows are the true class, columns the predicted class.
class ConfusionMatrix {
public:
    /// Throws InputError unless counts is square and matches classes.
    ConfusionMatrix(std::vector<std::string> classes, std::vector<std::vector<std::uint64_t>> counts);

    [[nodiscard]] const std::vector<std::string>& classes() const noexcept { return classes_; }
    [[nodiscard]] std::size_t size() const noexcept { return classes_.size(); }
    [[nodiscard]] std::uint64_t at(std::size_t truth, std::size_t predicted) const {
        return counts_.at(truth).at(predicted);
    }
    [[nodiscard]] std::uint64_t total() const noexcept;

private:
    std::vector<std::string> classes_;
    std::vector<std::vector<std::uint64_t>> counts_;
};

struct ClassScores {
    std::string name;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    std::uint64_t support = 0;
};

struct ClassificationMetrics {
    std::vector<ClassScores> per_class;
    double macro_precision = 0;
    double macro_recall = 0;
    double macro_f1 = 0;
    double accuracy = 0;
    /// One entry per zero-denominator metric that was set to 0.
    std::vector<std::string> warnings;
};

/// Throws InputError on an all-zero matrix.
ClassificationMetrics classification_metrics(const ConfusionMatrix& cm);

}  // namespace neurolens
