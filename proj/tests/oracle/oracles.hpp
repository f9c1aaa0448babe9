#pragma once

// Brute-force reference implementations used only by the tests. They share no
// code with the library and favour obviousness over speed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

using Grid = std::vector<std::vector<int>>;  // [row][col], 0/1 for masks
using Point = std::pair<int, int>;           // (row, col)
using PointSet = std::set<Point>;

inline int rows(const Grid& g) { return static_cast<int>(g.size()); }
inline int cols(const Grid& g) { return g.empty() ? 0 : static_cast<int>(g[0].size()); }

inline PointSet to_set(const Grid& g) {
    PointSet s;
    for (int r = 0; r < rows(g); ++r) {
        for (int c = 0; c < cols(g); ++c) {
            if (g[r][c] != 0) {
                s.insert({r, c});
            }
        }
    }
    return s;
}

inline Grid to_grid(const PointSet& s, int h, int w) {
    Grid g(h, std::vector<int>(w, 0));
    for (const auto& [r, c] : s) {
        if (r >= 0 && r < h && c >= 0 && c < w) {
            g[r][c] = 1;
        }
    }
    return g;
}

/// Smallest 1-based k with 100*k >= alpha*N, clamped to [1, N]; returns the k-th smallest value.
inline double percentile(std::vector<double> values, double alpha) {
    std::sort(values.begin(), values.end());
    const auto n = static_cast<long long>(values.size());
    long long k = 1;
    while (k < n && 100.0L * k < static_cast<long double>(alpha) * n) {
        ++k;
    }
    return values[static_cast<std::size_t>(k - 1)];
}

inline Grid threshold(const std::vector<double>& values, int h, int w, double alpha) {
    const double t = percentile(values, alpha);
    Grid g(h, std::vector<int>(w, 0));
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            g[r][c] = values[static_cast<std::size_t>(r * w + c)] >= t ? 1 : 0;
        }
    }
    return g;
}

inline double dice(const Grid& a, const Grid& b, double eps) {
    const PointSet sa = to_set(a);
    const PointSet sb = to_set(b);
    std::size_t inter = 0;
    for (const auto& p : sa) {
        inter += sb.count(p);
    }
    return (2.0 * static_cast<double>(inter) + eps) / (static_cast<double>(sa.size() + sb.size()) + eps);
}

/// Breadth-first 4-connected labelling; labels follow raster order of each component's first pixel.
inline Grid flood_fill_labels(const Grid& g) {
    const int h = rows(g);
    const int w = cols(g);
    Grid labels(h, std::vector<int>(w, 0));
    int next = 0;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (g[r][c] == 0 || labels[r][c] != 0) {
                continue;
            }
            ++next;
            std::queue<Point> q;
            q.push({r, c});
            labels[r][c] = next;
            while (!q.empty()) {
                const auto [pr, pc] = q.front();
                q.pop();
                const Point nbrs[] = {{pr - 1, pc}, {pr + 1, pc}, {pr, pc - 1}, {pr, pc + 1}};
                for (const auto& [nr, nc] : nbrs) {
                    if (nr >= 0 && nr < h && nc >= 0 && nc < w && g[nr][nc] != 0 && labels[nr][nc] == 0) {
                        labels[nr][nc] = next;
                        q.push({nr, nc});
                    }
                }
            }
        }
    }
    return labels;
}

inline std::map<int, std::vector<Point>> components(const Grid& g) {
    const Grid labels = flood_fill_labels(g);
    std::map<int, std::vector<Point>> out;
    for (int r = 0; r < rows(g); ++r) {
        for (int c = 0; c < cols(g); ++c) {
            if (labels[r][c] != 0) {
                out[labels[r][c]].push_back({r, c});
            }
        }
    }
    return out;
}

inline Grid remove_small(const Grid& g, int min_area) {
    Grid out(rows(g), std::vector<int>(cols(g), 0));
    for (const auto& [label, pts] : components(g)) {
        if (static_cast<int>(pts.size()) >= min_area) {
            for (const auto& [r, c] : pts) {
                out[r][c] = 1;
            }
        }
    }
    return out;
}

inline std::vector<Point> disk(int radius) {
    std::vector<Point> out;
    for (int i = -radius; i <= radius; ++i) {
        for (int j = -radius; j <= radius; ++j) {
            if (std::sqrt(static_cast<double>(i * i + j * j)) <= radius) {
                out.push_back({i, j});
            }
        }
    }
    return out;
}

/// Minkowski sum, clipped to the grid.
inline PointSet dilate(const PointSet& s, const std::vector<Point>& se, int h, int w) {
    PointSet out;
    for (const auto& [r, c] : s) {
        for (const auto& [dr, dc] : se) {
            const int nr = r + dr;
            const int nc = c + dc;
            if (nr >= 0 && nr < h && nc >= 0 && nc < w) {
                out.insert({nr, nc});
            }
        }
    }
    return out;
}

/// Keeps p when every p + o is in the set or lies outside the grid.
inline PointSet erode(const PointSet& s, const std::vector<Point>& se, int h, int w) {
    PointSet out;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            bool keep = true;
            for (const auto& [dr, dc] : se) {
                const int nr = r + dr;
                const int nc = c + dc;
                const bool outside = nr < 0 || nr >= h || nc < 0 || nc >= w;
                if (!outside && s.count({nr, nc}) == 0) {
                    keep = false;
                    break;
                }
            }
            if (keep) {
                out.insert({r, c});
            }
        }
    }
    return out;
}

inline Grid closing(const Grid& g, int radius) {
    const int h = rows(g);
    const int w = cols(g);
    const auto se = disk(radius);
    return to_grid(erode(dilate(to_set(g), se, h, w), se, h, w), h, w);
}

struct SegmentOutcome {
    int alpha_star = 0;
    Grid mask;
};

/// Exhaustive alpha grid; the first (lowest) alpha with the best raw DSC wins.
inline SegmentOutcome segment(const std::vector<double>& values, int h, int w, const Grid& reference, int alpha_low,
                              int alpha_high, int min_area, int radius, double eps) {
    double best = -1.0;
    SegmentOutcome out;
    Grid best_raw;
    for (int a = alpha_low; a <= alpha_high; ++a) {
        const Grid raw = threshold(values, h, w, a);
        const double d = dice(raw, reference, eps);
        if (d > best) {
            best = d;
            out.alpha_star = a;
            best_raw = raw;
        }
    }
    out.mask = closing(remove_small(best_raw, min_area), radius);
    return out;
}

/// Per-pixel atlas tally: label at (i, j) of an h x w grid is slice[floor(i*X/h)][floor(j*Y/w)].
struct TallyRow {
    int label;
    long count;
};

inline std::vector<TallyRow> tally(const Grid& mask, const std::vector<std::vector<int>>& slice) {
    const int h = rows(mask);
    const int w = cols(mask);
    const int sx = static_cast<int>(slice.size());
    const int sy = static_cast<int>(slice[0].size());
    std::map<int, long> counts;
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            if (mask[i][j] == 0) {
                continue;
            }
            const int si = static_cast<int>(std::floor(static_cast<double>(i) * sx / h));
            const int sj = static_cast<int>(std::floor(static_cast<double>(j) * sy / w));
            const int label = slice[si][sj];
            if (label != 0) {
                ++counts[label];
            }
        }
    }
    std::vector<TallyRow> out;
    for (const auto& [label, n] : counts) {
        out.push_back({label, n});
    }
    std::sort(out.begin(), out.end(), [](const TallyRow& a, const TallyRow& b) {
        return a.count != b.count ? a.count > b.count : a.label < b.label;
    });
    return out;
}

}  // namespace oracle
