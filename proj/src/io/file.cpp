#include "neurolens/io/file.hpp"

#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <zlib.h>

#include "neurolens/core.hpp"

namespace neurolens::io {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError(fmt::format("cannot open '{}'", path.string()));
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text_file(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return {bytes.begin(), bytes.end()};
}

std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw InputError(fmt::format("cannot open '{}'", path.string()));
    }
    gzFile file = gzopen(path.string().c_str(), "rb");
    if (file == nullptr) {
        throw InputError(fmt::format("cannot open '{}'", path.string()));
    }
    std::vector<std::uint8_t> out;
    std::uint8_t buffer[1 << 16];
    for (;;) {
        const int n = gzread(file, buffer, sizeof(buffer));
        if (n < 0) {
            int code = 0;
            const std::string msg = gzerror(file, &code);
            gzclose(file);
            throw FormatError(fmt::format("'{}': decompression failed: {}", path.string(), msg));
        }
        if (n == 0) {
            break;
        }
        out.insert(out.end(), buffer, buffer + n);
    }
    gzclose(file);
    return out;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError(fmt::format("cannot write '{}'", path.string()));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw ProcessingError(fmt::format("write to '{}' failed", path.string()));
    }
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace neurolens::io
