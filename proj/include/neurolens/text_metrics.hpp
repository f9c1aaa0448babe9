#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "neurolens/core.hpp"

namespace neurolens {

/// Lower-cased runs of ASCII letters; an apostrophe between two letters stays
/// inside the word. Everything else (digits, punctuation, whitespace) separates.
std::vector<std::string> tokenize(std::string_view text);

/// Splits on '.', '!' or '?' followed by whitespace or end of text. Fragments
/// without any word token are dropped. "e.g. " style abbreviations split too.
std::vector<std::string> split_sentences(std::string_view text);

/// Vowel-group heuristic: maximal runs of [aeiouy], minus a silent final 'e'
/// (kept for consonant + "le"), never below 1.
int count_syllables(std::string_view word);

/// Throws InputError when the text has no tokens.
double ttr(std::string_view text);

/// (ln n_tokens - ln n_types) / (ln n_tokens)^2. Throws InputError below 2 tokens.
double maas(std::string_view text);

/// 206.835 - 1.015 * ASL - 84.6 * ASW. Throws InputError when no sentence is found.
double fres(std::string_view text);

/// Sentence embedding backend for the coherence score. Implementations must be
/// safe to call concurrently.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    /// One vector per sentence; all vectors share one dimensionality.
    [[nodiscard]] virtual std::vector<std::vector<double>> embed(std::span<const std::string> sentences) const = 0;
};

/// L2-normalised term-frequency vectors over the vocabulary of the given sentences.
class TermFrequencyEmbedder final : public EmbeddingProvider {
public:
    [[nodiscard]] std::vector<std::vector<double>> embed(std::span<const std::string> sentences) const override;
};

/// Cosine similarity; 0 if either vector is zero.
double cosine(std::span<const double> a, std::span<const double> b);

/// Mean cosine similarity of adjacent sentence embeddings.
/// Throws InputError with fewer than two sentences.
double coherence(std::string_view text, const EmbeddingProvider& embedder);

struct TextMetricsReport {
    std::size_t n_tokens = 0;
    std::size_t n_types = 0;
    std::size_t n_sentences = 0;
    std::size_t n_syllables = 0;
    double ttr = 0;
    double maas = 0;
    double fres = 0;
    double cohs = 0;
};

/// All four metrics at once. Requires >= 2 tokens and >= 2 sentences.
TextMetricsReport evaluate_text(std::string_view text, const EmbeddingProvider& embedder);

struct MeanSd {
    double mean = 0;
    double sd = 0;  ///< sample standard deviation, 0 for a single value
};

struct CorpusSummary {
    std::size_t n_texts = 0;
    MeanSd ttr;
    MeanSd maas;
    MeanSd fres;
    MeanSd cohs;
};

CorpusSummary summarize_corpus(std::span<const TextMetricsReport> reports);

}  // namespace neurolens
