#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <random>

#include "neurolens/core.hpp"
#include "test_helpers.hpp"

using namespace neurolens;

TEST(Heatmap, InRangeGridIsUnchanged) {
    const Heatmap h = validate_heatmap({{0.5, 0.5}, {0.5, 0.5}});
    for (double v : h.values()) {
        EXPECT_EQ(v, 0.5);
    }
    EXPECT_EQ(h.shape(), (Shape{2, 2}));
}

TEST(Heatmap, OutOfRangeGridIsMinMaxRescaled) {
    const Heatmap h = validate_heatmap({{0.0, 5.0, 10.0}});
    EXPECT_DOUBLE_EQ(h.at(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(h.at(0, 1), 0.5);
    EXPECT_DOUBLE_EQ(h.at(0, 2), 1.0);
}

TEST(Heatmap, ConstantOutOfRangeGridBecomesZeros) {
    const Heatmap h = validate_heatmap({{7.0, 7.0}, {7.0, 7.0}});
    for (double v : h.values()) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(Heatmap, RejectsEmptyRaggedAndNonFinite) {
    EXPECT_THROW(validate_heatmap({}), InputError);
    EXPECT_THROW(validate_heatmap({{}}), InputError);
    EXPECT_THROW(validate_heatmap({{0.1, 0.2}, {0.3}}), InputError);
    EXPECT_THROW(validate_heatmap({{0.1, std::numeric_limits<double>::quiet_NaN()}}), InputError);
    EXPECT_THROW(validate_heatmap({{0.1, std::numeric_limits<double>::infinity()}}), InputError);
    EXPECT_THROW(Heatmap::from_values({2, 2}, {0.1, 0.2, 0.3}), ShapeMismatch);
}

TEST(HeatmapProperty, ValuesInUnitRangeAndValidationIdempotent) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int trial = 0; trial < 200; ++trial) {
        const Shape shape = neurolens::testing::random_shape(rng, 1, 12);
        std::vector<double> values(shape.size());
        const double scale = trial % 2 == 0 ? 1.0 : 0.01;
        for (auto& v : values) {
            v = u(rng) * scale;
        }
        const Heatmap once = Heatmap::from_values(shape, values);
        const auto [lo, hi] = std::minmax_element(once.values().begin(), once.values().end());
        EXPECT_GE(*lo, 0.0);
        EXPECT_LE(*hi, 1.0);
        const Heatmap twice = Heatmap::from_values(shape, neurolens::testing::to_vector(once));
        EXPECT_EQ(once, twice);
    }
}

TEST(BinaryMask, CountsAndForegroundInRasterOrder) {
    BinaryMask m({3, 4});
    m.set(2, 1);
    m.set(0, 3);
    m.set(1, 0);
    EXPECT_EQ(m.count(), 3U);
    const std::vector<Pixel> expected{{0, 3}, {1, 0}, {2, 1}};
    EXPECT_EQ(m.foreground(), expected);
    EXPECT_THROW(BinaryMask(Shape{2, 2}, std::vector<std::uint8_t>{1, 0, 1}), ShapeMismatch);
    const BinaryMask any_nonzero(Shape{1, 3}, std::vector<std::uint8_t>{0, 7, 255});
    EXPECT_EQ(any_nonzero.count(), 2U);
}

TEST(LabelGrid, RejectsNegativeLabels) {
    EXPECT_THROW(LabelGrid(Shape{1, 2}, std::vector<std::int32_t>{0, -1}), InputError);
    LabelGrid g({2, 2});
    EXPECT_THROW(g.set(0, 0, -3), InputError);
    g.set(1, 1, 9);
    EXPECT_EQ(g.max_label(), 9);
    EXPECT_THROW(LabelGrid(Shape{2, 2}, std::vector<std::int32_t>{1}), ShapeMismatch);
}

TEST(Atlas, ValidatesDimsAndIndexesXFastest) {
    EXPECT_THROW(Atlas({0, 1, 1}, {}, {}), InputError);
    EXPECT_THROW(Atlas({2, 2, 1}, {1, 2, 3}, {}), ShapeMismatch);
    EXPECT_THROW(Atlas({1, 1, 1}, {-4}, {}), InputError);
    const Atlas a({2, 3, 2}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}, {{1, "one"}});
    EXPECT_EQ(a.at(1, 0, 0), 1);
    EXPECT_EQ(a.at(0, 1, 0), 2);
    EXPECT_EQ(a.at(0, 0, 1), 6);
    EXPECT_EQ(a.at(1, 2, 1), 11);
}

TEST(BoundingBox, ContainsUsesInclusiveBounds) {
    const BoundingBox box{4, 1, 5, 2};
    EXPECT_TRUE(box.contains({1, 4}));
    EXPECT_TRUE(box.contains({2, 5}));
    EXPECT_FALSE(box.contains({3, 5}));
    EXPECT_FALSE(box.contains({1, 3}));
}
