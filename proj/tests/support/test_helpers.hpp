#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "neurolens/core.hpp"
#include "oracles.hpp"

namespace neurolens::testing {

inline std::filesystem::path data_dir() { return NEUROLENS_TEST_DATA_DIR; }
inline std::filesystem::path source_dir() { return NEUROLENS_SOURCE_DIR; }
inline std::filesystem::path cli_path() { return NEUROLENS_CLI_PATH; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "neurolens") {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

struct CommandResult {
    int exit_code = -1;
    std::string output;  ///< stdout, plus stderr when merged
};

/// Runs a shell command, capturing stdout (and stderr when merge_stderr).
inline CommandResult run_command(const std::string& command, bool merge_stderr = true) {
    const std::string full = command + (merge_stderr ? " 2>&1" : "");
    CommandResult result;
    FILE* pipe = ::popen(full.c_str(), "r");
    if (pipe == nullptr) {
        return result;
    }
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
        result.output.append(buf.data(), n);
    }
    const int status = ::pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

inline std::string quote(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

inline CommandResult run_cli(const std::string& args, bool merge_stderr = true) {
    return run_command(quote(cli_path()) + " " + args, merge_stderr);
}

// ---------------------------------------------------------------------------
// Random inputs and conversions to the oracle representation
// ---------------------------------------------------------------------------

inline BinaryMask random_mask(std::mt19937_64& rng, Shape shape, double density) {
    std::bernoulli_distribution fg(density);
    std::vector<std::uint8_t> bits(shape.size());
    for (auto& b : bits) {
        b = fg(rng) ? 1 : 0;
    }
    return BinaryMask(shape, std::move(bits));
}

/// Random rectangles and discs, which produce larger connected blobs than i.i.d. noise.
inline BinaryMask random_blob_mask(std::mt19937_64& rng, Shape shape, int blobs) {
    BinaryMask mask(shape);
    std::uniform_int_distribution<int> row(0, static_cast<int>(shape.height) - 1);
    std::uniform_int_distribution<int> col(0, static_cast<int>(shape.width) - 1);
    std::uniform_int_distribution<int> radius(0, 6);
    for (int b = 0; b < blobs; ++b) {
        const int cr = row(rng);
        const int cc = col(rng);
        const int r = radius(rng);
        for (int i = cr - r; i <= cr + r; ++i) {
            for (int j = cc - r; j <= cc + r; ++j) {
                if (i >= 0 && j >= 0 && i < static_cast<int>(shape.height) && j < static_cast<int>(shape.width) &&
                    (i - cr) * (i - cr) + (j - cc) * (j - cc) <= r * r) {
                    mask.set(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
                }
            }
        }
    }
    return mask;
}

inline Shape random_shape(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    std::uniform_int_distribution<std::size_t> d(lo, hi);
    return {d(rng), d(rng)};
}

/// Smooth heatmap with a few Gaussian bumps plus noise, quantised to force ties.
inline Heatmap random_heatmap(std::mt19937_64& rng, Shape shape, bool quantise) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> values(shape.size(), 0.0);
    const int bumps = 1 + static_cast<int>(u(rng) * 3);
    for (int b = 0; b < bumps; ++b) {
        const double cr = u(rng) * static_cast<double>(shape.height);
        const double cc = u(rng) * static_cast<double>(shape.width);
        const double s = 1.5 + u(rng) * static_cast<double>(std::max(shape.height, shape.width)) / 3.0;
        for (std::size_t r = 0; r < shape.height; ++r) {
            for (std::size_t c = 0; c < shape.width; ++c) {
                const double dr = static_cast<double>(r) - cr;
                const double dc = static_cast<double>(c) - cc;
                values[r * shape.width + c] += std::exp(-(dr * dr + dc * dc) / (2 * s * s));
            }
        }
    }
    for (auto& v : values) {
        v += 0.15 * u(rng);
        if (quantise) {
            v = std::round(v * 8.0) / 8.0;
        }
    }
    return Heatmap::from_values(shape, std::move(values));
}

inline oracle::Grid to_grid(const BinaryMask& m) {
    oracle::Grid g(m.height(), std::vector<int>(m.width(), 0));
    for (std::size_t r = 0; r < m.height(); ++r) {
        for (std::size_t c = 0; c < m.width(); ++c) {
            g[r][c] = m.at(r, c) ? 1 : 0;
        }
    }
    return g;
}

inline std::vector<double> to_vector(const Heatmap& h) { return {h.values().begin(), h.values().end()}; }

}  // namespace neurolens::testing
