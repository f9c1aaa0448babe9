#include "neurolens/classification.hpp"

#include <fmt/format.h>

namespace neurolens {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes, std::vector<std::vector<std::uint64_t>> counts)
    : classes_(std::move(classes)), counts_(std::move(counts)) {
    if (classes_.empty()) {
        throw InputError("confusion matrix needs at least one class");
    }
    if (counts_.size() != classes_.size()) {
        throw InputError(fmt::format("confusion matrix has {} rows for {} classes", counts_.size(), classes_.size()));
    }
    for (const auto& row : counts_) {
        if (row.size() != classes_.size()) {
            throw InputError("confusion matrix is not square");
        }
    }
}

std::uint64_t ConfusionMatrix::total() const noexcept {
    std::uint64_t n = 0;
    for (const auto& row : counts_) {
        for (auto v : row) {
            n += v;
        }
    }
    return n;
}

ClassificationMetrics classification_metrics(const ConfusionMatrix& cm) {
    const std::uint64_t total = cm.total();
    if (total == 0) {
        throw InputError("confusion matrix is all zero");
    }
    const std::size_t k = cm.size();
    ClassificationMetrics out;
    std::uint64_t correct = 0;
    auto ratio = [&](std::uint64_t num, std::uint64_t den, const std::string& what) {
        if (den == 0) {
            out.warnings.push_back(what);
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    for (std::size_t c = 0; c < k; ++c) {
        std::uint64_t predicted = 0;
        std::uint64_t actual = 0;
        for (std::size_t j = 0; j < k; ++j) {
            predicted += cm.at(j, c);
            actual += cm.at(c, j);
        }
        const std::uint64_t tp = cm.at(c, c);
        correct += tp;

        ClassScores s;
        s.name = cm.classes()[c];
        s.support = actual;
        s.precision = ratio(tp, predicted, fmt::format("precision of '{}' undefined (never predicted)", s.name));
        s.recall = ratio(tp, actual, fmt::format("recall of '{}' undefined (no samples)", s.name));
        if (s.precision + s.recall > 0.0) {
            s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
        } else {
            out.warnings.push_back(fmt::format("F1 of '{}' undefined (precision + recall = 0)", s.name));
        }
        out.macro_precision += s.precision;
        out.macro_recall += s.recall;
        out.macro_f1 += s.f1;
        out.per_class.push_back(std::move(s));
    }
    out.macro_precision /= static_cast<double>(k);
    out.macro_recall /= static_cast<double>(k);
    out.macro_f1 /= static_cast<double>(k);
    out.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    return out;
}

}  // namespace neurolens
