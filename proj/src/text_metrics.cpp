#include "neurolens/text_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace neurolens {

namespace {

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

bool is_vowel(char c) {
    switch (c) {
        case 'a': case 'e': case 'i': case 'o': case 'u': case 'y':
            return true;
        default:
            return false;
    }
}

// Length of an apostrophe sequence at `pos`: ASCII ' or UTF-8 U+2019.
std::size_t apostrophe_at(std::string_view text, std::size_t pos) {
    if (text[pos] == '\'') {
        return 1;
    }
    if (text.substr(pos, 3) == "\xE2\x80\x99") {
        return 3;
    }
    return 0;
}

MeanSd mean_sd(const std::vector<double>& xs) {
    MeanSd out;
    if (xs.empty()) {
        return out;
    }
    out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) {
            ss += (x - out.mean) * (x - out.mean);
        }
        out.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return out;
}

double maas_from_counts(std::size_t tokens, std::size_t types) {
    const double ln_tokens = std::log(static_cast<double>(tokens));
    return (ln_tokens - std::log(static_cast<double>(types))) / (ln_tokens * ln_tokens);
}

std::size_t type_count(const std::vector<std::string>& tokens) {
    return std::set<std::string>(tokens.begin(), tokens.end()).size();
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (is_alpha(c)) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            ++i;
            continue;
        }
        if (const std::size_t n = apostrophe_at(text, i); n > 0 && !current.empty() && i + n < text.size() &&
                                                           is_alpha(text[i + n])) {
            current.push_back('\'');
            i += n;
            continue;
        }
        if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
        ++i;
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> sentences;
    std::size_t start = 0;
    auto flush = [&](std::size_t end) {
        std::string_view piece = text.substr(start, end - start);
        if (!tokenize(piece).empty()) {
            const auto first = piece.find_first_not_of(" \t\r\n");
            const auto last = piece.find_last_not_of(" \t\r\n");
            sentences.emplace_back(piece.substr(first, last - first + 1));
        }
        start = end;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if ((c == '.' || c == '!' || c == '?') &&
            (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])) != 0)) {
            flush(i + 1);
        }
    }
    if (start < text.size()) {
        flush(text.size());
    }
    return sentences;
}

int count_syllables(std::string_view word) {
    std::string w;
    for (char c : word) {
        if (is_alpha(c)) {
            w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    int groups = 0;
    bool in_group = false;
    for (char c : w) {
        const bool v = is_vowel(c);
        if (v && !in_group) {
            ++groups;
        }
        in_group = v;
    }
    const std::size_t n = w.size();
    if (n >= 2 && w[n - 1] == 'e' && !is_vowel(w[n - 2])) {
        const bool consonant_le = n >= 3 && w[n - 2] == 'l' && !is_vowel(w[n - 3]);
        if (!consonant_le) {
            --groups;
        }
    }
    return std::max(groups, 1);
}

double ttr(std::string_view text) {
    const auto tokens = tokenize(text);
    if (tokens.empty()) {
        throw InputError("type-token ratio needs at least one token");
    }
    return static_cast<double>(type_count(tokens)) / static_cast<double>(tokens.size());
}

double maas(std::string_view text) {
    const auto tokens = tokenize(text);
    if (tokens.size() < 2) {
        throw InputError("Maas index needs at least two tokens");
    }
    return maas_from_counts(tokens.size(), type_count(tokens));
}

double fres(std::string_view text) {
    const auto sentences = split_sentences(text);
    if (sentences.empty()) {
        throw InputError("no sentences detected");
    }
    const auto tokens = tokenize(text);
    std::size_t syllables = 0;
    for (const auto& t : tokens) {
        syllables += static_cast<std::size_t>(count_syllables(t));
    }
    const double asl = static_cast<double>(tokens.size()) / static_cast<double>(sentences.size());
    const double asw = static_cast<double>(syllables) / static_cast<double>(tokens.size());
    return 206.835 - 1.015 * asl - 84.6 * asw;
}

std::vector<std::vector<double>> TermFrequencyEmbedder::embed(std::span<const std::string> sentences) const {
    std::vector<std::vector<std::string>> tokenized;
    std::map<std::string, std::size_t> vocab;
    for (const auto& s : sentences) {
        tokenized.push_back(tokenize(s));
        for (const auto& t : tokenized.back()) {
            vocab.emplace(t, 0);
        }
    }
    std::size_t next = 0;
    for (auto& [term, index] : vocab) {
        index = next++;
    }
    std::vector<std::vector<double>> out;
    out.reserve(sentences.size());
    for (const auto& tokens : tokenized) {
        std::vector<double> v(vocab.size(), 0.0);
        for (const auto& t : tokens) {
            v[vocab.at(t)] += 1.0;
        }
        const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
        if (norm > 0.0) {
            for (double& x : v) {
                x /= norm;
            }
        }
        out.push_back(std::move(v));
    }
    return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ShapeMismatch("embedding dimensions differ");
    }
    const double dot = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
    const double na = std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0));
    const double nb = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return std::clamp(dot / (na * nb), -1.0, 1.0);
}

double coherence(std::string_view text, const EmbeddingProvider& embedder) {
    const auto sentences = split_sentences(text);
    if (sentences.size() < 2) {
        throw InputError("coherence needs at least two sentences");
    }
    const auto vectors = embedder.embed(sentences);
    if (vectors.size() != sentences.size()) {
        throw ProcessingError("embedder returned the wrong number of vectors");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < vectors.size(); ++i) {
        sum += cosine(vectors[i], vectors[i + 1]);
    }
    return sum / static_cast<double>(vectors.size() - 1);
}

TextMetricsReport evaluate_text(std::string_view text, const EmbeddingProvider& embedder) {
    TextMetricsReport r;
    const auto tokens = tokenize(text);
    r.n_tokens = tokens.size();
    r.n_types = type_count(tokens);
    r.n_sentences = split_sentences(text).size();
    for (const auto& t : tokens) {
        r.n_syllables += static_cast<std::size_t>(count_syllables(t));
    }
    if (r.n_tokens < 2) {
        throw InputError("text metrics need at least two tokens");
    }
    if (r.n_sentences < 2) {
        throw InputError("text metrics need at least two sentences");
    }
    r.ttr = static_cast<double>(r.n_types) / static_cast<double>(r.n_tokens);
    r.maas = maas_from_counts(r.n_tokens, r.n_types);
    r.fres = fres(text);
    r.cohs = coherence(text, embedder);
    return r;
}

CorpusSummary summarize_corpus(std::span<const TextMetricsReport> reports) {
    CorpusSummary s;
    s.n_texts = reports.size();
    std::vector<double> t, m, f, c;
    for (const auto& r : reports) {
        t.push_back(r.ttr);
        m.push_back(r.maas);
        f.push_back(r.fres);
        c.push_back(r.cohs);
    }
    s.ttr = mean_sd(t);
    s.maas = mean_sd(m);
    s.fres = mean_sd(f);
    s.cohs = mean_sd(c);
    return s;
}

}  // namespace neurolens
