#include <gtest/gtest.h>

#include "neurolens/io/file.hpp"
#include "neurolens/io/npy.hpp"
#include "neurolens/io/png.hpp"
#include "test_helpers.hpp"

using namespace neurolens;
using namespace neurolens::io;
using neurolens::testing::data_dir;

namespace {

std::filesystem::path png(const std::string& name) { return data_dir() / "png" / name; }

}  // namespace

TEST(PngRead, EightBitRamp) {
    const GrayImage img = read_png_gray(png("ramp8.png"));
    EXPECT_EQ(img.shape, (Shape{16, 16}));
    EXPECT_EQ(img.bit_depth, 8);
    for (std::size_t i = 0; i < 256; ++i) {
        EXPECT_EQ(img.samples[i], i);
    }
}

TEST(PngRead, SixteenBitRampMatchesNumpyValues) {
    const GrayImage img = read_png_gray(png("ramp16.png"));
    EXPECT_EQ(img.bit_depth, 16);
    const auto expected = npy_values(read_npy(png("ramp16_values.npy")));
    ASSERT_EQ(img.samples.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        EXPECT_EQ(static_cast<double>(img.samples[i]) / 65535.0, expected[i]);
    }
}

TEST(PngRead, RejectsColourAndCorruptFiles) {
    EXPECT_THROW(read_png_gray(png("rgb.png")), FormatError);
    EXPECT_THROW(read_png_gray(png("not_a_png.png")), FormatError);
    EXPECT_THROW(read_png_gray(data_dir() / "npy" / "u8_4x4.npy"), FormatError);
    EXPECT_THROW(read_png_gray(png("missing.png")), InputError);
}

TEST(PngWrite, GrayRoundTripAndDeterministicBytes) {
    neurolens::testing::TempDir tmp;
    std::vector<std::uint8_t> pixels(6 * 9);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        pixels[i] = static_cast<std::uint8_t>(i * 37 % 256);
    }
    write_png_gray8(tmp / "a.png", {6, 9}, pixels);
    write_png_gray8(tmp / "b.png", {6, 9}, pixels);
    EXPECT_EQ(read_file(tmp / "a.png"), read_file(tmp / "b.png"));
    const GrayImage back = read_png_gray(tmp / "a.png");
    EXPECT_EQ(back.shape, (Shape{6, 9}));
    EXPECT_EQ(std::vector<std::uint8_t>(back.samples.begin(), back.samples.end()), pixels);
    EXPECT_THROW(write_png_gray8(tmp / "c.png", {2, 2}, pixels), ShapeMismatch);
    EXPECT_THROW(write_png_gray8(tmp / "no" / "such" / "dir.png", {6, 9}, pixels), InputError);
}
