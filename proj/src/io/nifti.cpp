#include "neurolens/io/nifti.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <regex>

#include <fmt/format.h>

#include "neurolens/io/csv.hpp"
#include "neurolens/io/file.hpp"

namespace neurolens::io {

namespace {

constexpr std::size_t kHeaderSize = 348;

class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> bytes, bool swap) : bytes_(bytes), swap_(swap) {}

    template <typename T>
    T read(std::size_t offset) const {
        if (offset + sizeof(T) > bytes_.size()) {
            throw FormatError("NIfTI buffer truncated");
        }
        std::array<std::uint8_t, sizeof(T)> raw{};
        std::memcpy(raw.data(), bytes_.data() + offset, sizeof(T));
        if (swap_) {
            std::reverse(raw.begin(), raw.end());
        }
        T value;
        std::memcpy(&value, raw.data(), sizeof(T));
        return value;
    }

private:
    std::span<const std::uint8_t> bytes_;
    bool swap_;
};

bool is_supported(std::int16_t code) {
    switch (static_cast<NiftiType>(code)) {
        case NiftiType::UInt8:
        case NiftiType::Int16:
        case NiftiType::Int32:
        case NiftiType::Float32:
        case NiftiType::Float64:
        case NiftiType::Int8:
        case NiftiType::UInt16:
        case NiftiType::UInt32:
            return true;
    }
    return false;
}

std::size_t type_size(NiftiType t) {
    switch (t) {
        case NiftiType::UInt8:
        case NiftiType::Int8:
            return 1;
        case NiftiType::Int16:
        case NiftiType::UInt16:
            return 2;
        case NiftiType::Int32:
        case NiftiType::UInt32:
        case NiftiType::Float32:
            return 4;
        case NiftiType::Float64:
            return 8;
    }
    return 0;
}

double read_voxel(const ByteReader& r, NiftiType t, std::size_t offset) {
    switch (t) {
        case NiftiType::UInt8: return r.read<std::uint8_t>(offset);
        case NiftiType::Int8: return r.read<std::int8_t>(offset);
        case NiftiType::Int16: return r.read<std::int16_t>(offset);
        case NiftiType::UInt16: return r.read<std::uint16_t>(offset);
        case NiftiType::Int32: return r.read<std::int32_t>(offset);
        case NiftiType::UInt32: return r.read<std::uint32_t>(offset);
        case NiftiType::Float32: return r.read<float>(offset);
        case NiftiType::Float64: return r.read<double>(offset);
    }
    return 0.0;
}

std::string decode_xml_entities(std::string s) {
    static const std::pair<std::string_view, std::string_view> entities[] = {
        {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""}, {"&apos;", "'"}, {"&amp;", "&"}};
    for (const auto& [from, to] : entities) {
        std::size_t pos = 0;
        while ((pos = s.find(from, pos)) != std::string::npos) {
            s.replace(pos, from.size(), to);
            pos += to.size();
        }
    }
    return s;
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

void insert_label(std::map<std::int32_t, std::string>& table, std::int32_t index, std::string name) {
    if (index < 0) {
        throw FormatError(fmt::format("negative label index {}", index));
    }
    if (!table.emplace(index, std::move(name)).second) {
        throw FormatError(fmt::format("label index {} defined more than once", index));
    }
}

std::filesystem::path with_gz_fallback(const std::filesystem::path& p) {
    if (std::filesystem::exists(p)) {
        return p;
    }
    auto gz = p;
    gz += ".gz";
    return std::filesystem::exists(gz) ? gz : p;
}

std::string lower_extension_stem(const std::filesystem::path& p) {
    std::string name = p.filename().string();
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    if (name.ends_with(".gz")) {
        name.resize(name.size() - 3);
    }
    const auto dot = name.rfind('.');
    return dot == std::string::npos ? std::string{} : name.substr(dot);
}

}  // namespace

NiftiHeader parse_nifti_header(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderSize) {
        throw FormatError(fmt::format("NIfTI header truncated ({} bytes)", bytes.size()));
    }
    // dim[0] outside 1..7 means the file was written with the other byte order.
    std::int16_t dim0 = 0;
    std::memcpy(&dim0, bytes.data() + 40, sizeof(dim0));
    const bool swap = dim0 < 1 || dim0 > 7;
    const ByteReader r(bytes, swap);

    NiftiHeader h;
    h.byte_swapped = swap;
    if (r.read<std::int32_t>(0) != static_cast<std::int32_t>(kHeaderSize)) {
        throw FormatError("NIfTI sizeof_hdr is not 348");
    }
    h.magic.assign(reinterpret_cast<const char*>(bytes.data() + 344), 3);
    if (!((h.magic == "n+1" || h.magic == "ni1") && bytes[347] == 0)) {
        throw FormatError(fmt::format("bad NIfTI magic '{}'",
                                      std::string(reinterpret_cast<const char*>(bytes.data() + 344), 4)));
    }
    for (std::size_t i = 0; i < 8; ++i) {
        h.dim[i] = r.read<std::int16_t>(40 + 2 * i);
    }
    if (h.dim[0] != 3) {
        throw FormatError(fmt::format("NIfTI volume has {} dimensions, expected 3", h.dim[0]));
    }
    for (std::size_t i = 1; i <= 3; ++i) {
        if (h.dim[i] <= 0) {
            throw FormatError(fmt::format("NIfTI dim[{}] = {} is not positive", i, h.dim[i]));
        }
    }
    const auto datatype = r.read<std::int16_t>(70);
    if (!is_supported(datatype)) {
        throw FormatError(fmt::format("unsupported NIfTI datatype code {}", datatype));
    }
    h.datatype = static_cast<NiftiType>(datatype);
    h.bitpix = r.read<std::int16_t>(72);
    for (std::size_t i = 0; i < 3; ++i) {
        h.geometry.pixdim[i] = r.read<float>(76 + 4 * (i + 1));
    }
    h.vox_offset = r.read<float>(108);
    h.scl_slope = r.read<float>(112);
    h.scl_inter = r.read<float>(116);
    h.geometry.qform_code = r.read<std::int16_t>(252);
    h.geometry.sform_code = r.read<std::int16_t>(254);
    for (std::size_t row = 0; row < 3; ++row) {
        for (std::size_t col = 0; col < 4; ++col) {
            h.geometry.srow[row][col] = r.read<float>(280 + 16 * row + 4 * col);
        }
    }
    return h;
}

NiftiVolume parse_nifti(std::span<const std::uint8_t> header_bytes, std::span<const std::uint8_t> image) {
    NiftiVolume volume;
    volume.header = parse_nifti_header(header_bytes);
    const auto& h = volume.header;
    volume.dims = {static_cast<std::size_t>(h.dim[1]), static_cast<std::size_t>(h.dim[2]),
                   static_cast<std::size_t>(h.dim[3])};

    std::span<const std::uint8_t> data;
    if (h.magic == "n+1") {
        const auto offset = static_cast<std::size_t>(std::max(h.vox_offset, static_cast<float>(kHeaderSize)));
        if (offset > header_bytes.size()) {
            throw FormatError("NIfTI vox_offset beyond end of file");
        }
        data = header_bytes.subspan(offset);
    } else {
        const auto offset = static_cast<std::size_t>(std::max(h.vox_offset, 0.0F));
        if (offset > image.size()) {
            throw FormatError("NIfTI vox_offset beyond end of image file");
        }
        data = image.subspan(offset);
    }

    const std::size_t n = volume.dims.voxels();
    const std::size_t size = type_size(h.datatype);
    if (data.size() < n * size) {
        throw FormatError(fmt::format("NIfTI payload truncated: expected {} bytes, found {}", n * size, data.size()));
    }
    const ByteReader r(data, h.byte_swapped);
    const bool scaled = h.scl_slope != 0.0F && std::isfinite(h.scl_slope) && std::isfinite(h.scl_inter);
    volume.voxels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = read_voxel(r, h.datatype, i * size);
        if (scaled) {
            v = v * static_cast<double>(h.scl_slope) + static_cast<double>(h.scl_inter);
        }
        volume.voxels[i] = v;
    }
    return volume;
}

NiftiVolume read_nifti(const std::filesystem::path& path) {
    const std::string ext = lower_extension_stem(path);
    try {
        if (ext == ".hdr" || ext == ".img") {
            auto stem = path;
            if (stem.extension() == ".gz") {
                stem.replace_extension();
            }
            const auto hdr = with_gz_fallback(std::filesystem::path(stem).replace_extension(".hdr"));
            const auto img = with_gz_fallback(std::filesystem::path(stem).replace_extension(".img"));
            const auto header_bytes = read_maybe_gzip(hdr);
            const auto image_bytes = read_maybe_gzip(img);
            return parse_nifti(header_bytes, image_bytes);
        }
        const auto bytes = read_maybe_gzip(path);
        const auto header = parse_nifti_header(bytes);
        if (header.magic == "ni1") {
            // Header-only file saved with a .nii name: look for the paired image.
            const auto img = with_gz_fallback(std::filesystem::path(path).replace_extension(".img"));
            return parse_nifti(bytes, read_maybe_gzip(img));
        }
        return parse_nifti(bytes);
    } catch (const FormatError& e) {
        throw FormatError(fmt::format("'{}': {}", path.string(), e.what()));
    }
}

std::vector<std::int32_t> volume_labels(const NiftiVolume& volume) {
    std::vector<std::int32_t> labels(volume.voxels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double v = std::round(volume.voxels[i]);
        if (!std::isfinite(v) || v < 0.0 || v > 2147483647.0) {
            throw FormatError(fmt::format("voxel {} holds {} which is not a valid label", i, volume.voxels[i]));
        }
        labels[i] = static_cast<std::int32_t>(v);
    }
    return labels;
}

std::map<std::int32_t, std::string> parse_label_csv(std::string_view text) {
    std::map<std::int32_t, std::string> table;
    const auto rows = parse_csv(text);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() == 1 && trim(row[0]).empty()) {
            continue;
        }
        if (row.size() < 2) {
            throw FormatError(fmt::format("label table line {}: expected 'index,name'", i + 1));
        }
        const std::string index_text = trim(row[0]);
        std::int32_t index = 0;
        try {
            std::size_t used = 0;
            index = static_cast<std::int32_t>(std::stol(index_text, &used));
            if (used != index_text.size()) {
                throw std::invalid_argument("trailing characters");
            }
        } catch (const std::exception&) {
            if (i == 0) {
                continue;  // header row
            }
            throw FormatError(fmt::format("label table line {}: '{}' is not an integer index", i + 1, index_text));
        }
        insert_label(table, index, trim(row[1]));
    }
    return table;
}

std::map<std::int32_t, std::string> parse_label_xml(std::string_view text) {
    const std::string doc(text);
    static const std::regex label_re(R"re(<label\b([^>]*)>([\s\S]*?)</label>)re");
    static const std::regex index_re(R"re(\bindex\s*=\s*["'](-?\d+)["'])re");
    static const std::regex atlas_root_re(R"(<atlas\b)");
    const int offset = std::regex_search(doc, atlas_root_re) ? 1 : 0;

    std::map<std::int32_t, std::string> table;
    for (auto it = std::sregex_iterator(doc.begin(), doc.end(), label_re); it != std::sregex_iterator(); ++it) {
        const std::string attrs = (*it)[1].str();
        std::smatch m;
        if (!std::regex_search(attrs, m, index_re)) {
            throw FormatError("XML <label> element without an index attribute");
        }
        const auto index = static_cast<std::int32_t>(std::stol(m[1].str())) + offset;
        insert_label(table, index, decode_xml_entities(trim((*it)[2].str())));
    }
    if (table.empty()) {
        throw FormatError("XML label table contains no <label> elements");
    }
    return table;
}

std::map<std::int32_t, std::string> read_label_table(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        const auto first = text.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
        if (first != std::string::npos && text[first] == '<') {
            return parse_label_xml(text);
        }
        return parse_label_csv(text);
    } catch (const FormatError& e) {
        throw FormatError(fmt::format("'{}': {}", path.string(), e.what()));
    }
}

Atlas read_atlas(const std::filesystem::path& volume_path, const std::filesystem::path& labels_path) {
    const NiftiVolume volume = read_nifti(volume_path);
    auto names = read_label_table(labels_path);
    return Atlas(volume.dims, volume_labels(volume), std::move(names), volume.header.geometry);
}

}  // namespace neurolens::io
