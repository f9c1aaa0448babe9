#include "neurolens/io/npy.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <regex>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "neurolens/io/file.hpp"

namespace neurolens::io {

namespace {

constexpr std::uint8_t kMagic[] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
constexpr std::size_t kAlign = 64;
constexpr std::size_t kGrowthAxisDigits = 21;

std::string shape_repr(const std::vector<std::size_t>& shape) {
    if (shape.empty()) {
        return "()";
    }
    if (shape.size() == 1) {
        return fmt::format("({},)", shape[0]);
    }
    return fmt::format("({})", fmt::join(shape, ", "));
}

std::vector<std::size_t> parse_shape(const std::string& text) {
    std::vector<std::size_t> shape;
    static const std::regex number(R"(\d+)");
    for (auto it = std::sregex_iterator(text.begin(), text.end(), number); it != std::sregex_iterator(); ++it) {
        shape.push_back(static_cast<std::size_t>(std::stoull(it->str())));
    }
    return shape;
}

template <typename T>
std::vector<std::uint8_t> to_bytes(std::span<const T> values) {
    std::vector<std::uint8_t> out(values.size() * sizeof(T));
    if (!values.empty()) {
        std::memcpy(out.data(), values.data(), out.size());
    }
    return out;
}

template <typename T>
void append_values(const NpyArray& a, std::vector<double>& out) {
    const std::size_t n = a.element_count();
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        T v;
        std::memcpy(&v, a.data.data() + i * sizeof(T), sizeof(T));
        out.push_back(static_cast<double>(v));
    }
}

}  // namespace

std::size_t NpyArray::element_size() const {
    if (descr.size() < 3) {
        throw FormatError(fmt::format("malformed NPY descr '{}'", descr));
    }
    return static_cast<std::size_t>(std::stoul(descr.substr(2)));
}

std::size_t NpyArray::element_count() const noexcept {
    std::size_t n = 1;
    for (auto d : shape) {
        n *= d;
    }
    return n;
}

char NpyArray::kind() const {
    if (descr.size() < 3) {
        throw FormatError(fmt::format("malformed NPY descr '{}'", descr));
    }
    return descr[1];
}

NpyArray parse_npy(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 10 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw FormatError("not an NPY file (bad magic)");
    }
    const std::uint8_t major = bytes[6];
    std::size_t header_len = 0;
    std::size_t offset = 0;
    if (major == 1) {
        header_len = static_cast<std::size_t>(bytes[8]) | (static_cast<std::size_t>(bytes[9]) << 8);
        offset = 10;
    } else if (major == 2 || major == 3) {
        if (bytes.size() < 12) {
            throw FormatError("truncated NPY header");
        }
        header_len = 0;
        for (int i = 3; i >= 0; --i) {
            header_len = (header_len << 8) | bytes[8 + static_cast<std::size_t>(i)];
        }
        offset = 12;
    } else {
        throw FormatError(fmt::format("unsupported NPY version {}", major));
    }
    if (bytes.size() < offset + header_len) {
        throw FormatError("truncated NPY header");
    }
    const std::string header(reinterpret_cast<const char*>(bytes.data() + offset), header_len);

    static const std::regex descr_re(R"('descr'\s*:\s*'([^']*)')");
    static const std::regex fortran_re(R"('fortran_order'\s*:\s*(True|False))");
    static const std::regex shape_re(R"('shape'\s*:\s*\(([^)]*)\))");
    std::smatch m;
    NpyArray array;
    if (!std::regex_search(header, m, descr_re)) {
        throw FormatError("NPY header lacks 'descr'");
    }
    array.descr = m[1].str();
    if (!std::regex_search(header, m, fortran_re)) {
        throw FormatError("NPY header lacks 'fortran_order'");
    }
    if (m[1].str() == "True") {
        throw FormatError("Fortran-ordered NPY arrays are not supported");
    }
    if (!std::regex_search(header, m, shape_re)) {
        throw FormatError("NPY header lacks 'shape'");
    }
    array.shape = parse_shape(m[1].str());

    if (array.descr.size() < 3 || (array.descr[0] != '<' && array.descr[0] != '|' && array.descr[0] != '=')) {
        throw FormatError(fmt::format("unsupported NPY dtype '{}' (only little-endian data)", array.descr));
    }
    const std::size_t payload = array.element_count() * array.element_size();
    const std::size_t start = offset + header_len;
    if (bytes.size() - start < payload) {
        throw FormatError(fmt::format("NPY payload truncated: expected {} bytes, found {}", payload,
                                      bytes.size() - start));
    }
    array.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                      bytes.begin() + static_cast<std::ptrdiff_t>(start + payload));
    return array;
}

std::vector<std::uint8_t> serialize_npy(const NpyArray& array) {
    if (array.data.size() != array.element_count() * array.element_size()) {
        throw InputError("NPY payload size does not match shape and dtype");
    }
    std::string header = fmt::format("{{'descr': '{}', 'fortran_order': False, 'shape': {}, }}", array.descr,
                                     shape_repr(array.shape));
    if (!array.shape.empty()) {
        header.append(kGrowthAxisDigits - std::to_string(array.shape[0]).size(), ' ');
    }
    const std::size_t hlen = header.size() + 1;
    const std::size_t pad = kAlign - ((sizeof(kMagic) + 2 + 2 + hlen) % kAlign);
    header.append(pad, ' ');
    header.push_back('\n');
    if (header.size() > 0xFFFF) {
        throw InputError("NPY header too large for version 1.0");
    }

    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    out.push_back(1);
    out.push_back(0);
    out.push_back(static_cast<std::uint8_t>(header.size() & 0xFF));
    out.push_back(static_cast<std::uint8_t>(header.size() >> 8));
    out.insert(out.end(), header.begin(), header.end());
    out.insert(out.end(), array.data.begin(), array.data.end());
    return out;
}

NpyArray read_npy(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return parse_npy(bytes);
    } catch (const FormatError& e) {
        throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

void write_npy(const std::filesystem::path& path, const NpyArray& array) {
    write_file(path, serialize_npy(array));
}

NpyArray make_npy_f32(std::vector<std::size_t> shape, std::span<const float> values) {
    return {"<f4", std::move(shape), to_bytes(values)};
}

NpyArray make_npy_f64(std::vector<std::size_t> shape, std::span<const double> values) {
    return {"<f8", std::move(shape), to_bytes(values)};
}

NpyArray make_npy_u8(std::vector<std::size_t> shape, std::span<const std::uint8_t> values) {
    return {"|u1", std::move(shape), to_bytes(values)};
}

Shape squeeze_to_2d(const std::vector<std::size_t>& shape) {
    if (shape.size() == 2) {
        return {shape[0], shape[1]};
    }
    std::vector<std::size_t> kept;
    for (auto d : shape) {
        if (d != 1) {
            kept.push_back(d);
        }
    }
    if (kept.size() != 2) {
        throw FormatError(fmt::format("array of shape {} is not 2D after squeezing singleton axes",
                                      shape_repr(shape)));
    }
    return {kept[0], kept[1]};
}

std::vector<double> npy_values(const NpyArray& array) {
    std::vector<double> out;
    const char k = array.kind();
    const std::size_t size = array.element_size();
    if (k == 'f' && size == 4) {
        append_values<float>(array, out);
    } else if (k == 'f' && size == 8) {
        append_values<double>(array, out);
    } else if ((k == 'u' || k == 'b') && size == 1) {
        append_values<std::uint8_t>(array, out);
    } else {
        throw FormatError(fmt::format("unsupported NPY dtype '{}'", array.descr));
    }
    return out;
}

}  // namespace neurolens::io
