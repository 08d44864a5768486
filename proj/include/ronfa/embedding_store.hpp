#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ronfa/errors.hpp"
#include "ronfa/random.hpp"

namespace ronfa {

/// Embedding coordinates as stored on disk (32-bit IEEE-754).
using FeatureVector = std::vector<float>;

struct LabeledEmbedding {
    FeatureVector features;
    std::uint32_t class_id = 0;

    friend bool operator==(const LabeledEmbedding&, const LabeledEmbedding&) = default;
};

enum class FileFormat { binary, csv };

/// Labeled d-dimensional vectors with a class-name table. Immutable once built;
/// the constructor enforces every invariant, so a live instance is always valid.
class EmbeddingSet {
public:
    EmbeddingSet(std::size_t dim, std::vector<std::string> class_names,
                 std::vector<LabeledEmbedding> items)
        : dim_(dim), class_names_(std::move(class_names)), items_(std::move(items)) {
        if (dim_ == 0) throw ValidationError("embedding dimension must be positive");
        if (dim_ > std::numeric_limits<std::uint32_t>::max())
            throw ValidationError("embedding dimension does not fit in u32");
        std::unordered_set<std::string_view> seen;
        for (const auto& name : class_names_) {
            if (name.empty()) throw ValidationError("class names must be non-empty");
            if (!seen.insert(name).second)
                throw ValidationError("duplicate class name '" + name + "'");
        }
        for (std::size_t i = 0; i < items_.size(); ++i) {
            const auto& item = items_[i];
            if (item.features.size() != dim_)
                throw ValidationError("item " + std::to_string(i) + " has dimension " +
                                      std::to_string(item.features.size()) + ", expected " +
                                      std::to_string(dim_));
            if (item.class_id >= class_names_.size())
                throw ValidationError("item " + std::to_string(i) + " references unknown class index " +
                                      std::to_string(item.class_id));
            for (float v : item.features)
                if (!std::isfinite(v))
                    throw ValidationError("item " + std::to_string(i) + " has a non-finite coordinate");
        }
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return items_.size(); }
    bool empty() const noexcept { return items_.empty(); }
    std::size_t class_count() const noexcept { return class_names_.size(); }
    const std::vector<std::string>& class_names() const noexcept { return class_names_; }
    const std::vector<LabeledEmbedding>& items() const noexcept { return items_; }
    const LabeledEmbedding& operator[](std::size_t i) const { return items_[i]; }

    /// Item indices grouped by class id.
    std::vector<std::vector<std::size_t>> indices_by_class() const {
        std::vector<std::vector<std::size_t>> groups(class_names_.size());
        for (std::size_t i = 0; i < items_.size(); ++i) groups[items_[i].class_id].push_back(i);
        return groups;
    }

    friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;

private:
    std::size_t dim_;
    std::vector<std::string> class_names_;
    std::vector<LabeledEmbedding> items_;
};

// ---------------------------------------------------------------------------
// EMB1 binary format (little-endian):
//   "EMB1" | u32 n | u32 d | u32 m | m x (u16 len, utf-8 bytes) | n x (u32 class, d x f32)

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xFF));
}

inline std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        fields.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return fields;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_binary(const EmbeddingSet& set) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + set.size() * (4 + 4 * set.dim()));
    for (char c : std::string_view("EMB1")) out.push_back(static_cast<std::uint8_t>(c));
    if (set.size() > std::numeric_limits<std::uint32_t>::max() ||
        set.class_count() > std::numeric_limits<std::uint32_t>::max())
        throw ValidationError("set too large for EMB1 (u32 counts)");
    detail::put_u32(out, static_cast<std::uint32_t>(set.size()));
    detail::put_u32(out, static_cast<std::uint32_t>(set.dim()));
    detail::put_u32(out, static_cast<std::uint32_t>(set.class_count()));
    for (const auto& name : set.class_names()) {
        if (name.size() > std::numeric_limits<std::uint16_t>::max())
            throw ValidationError("class name longer than 65535 bytes");
        detail::put_u16(out, static_cast<std::uint16_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
    }
    for (const auto& item : set.items()) {
        detail::put_u32(out, item.class_id);
        for (float v : item.features) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

inline EmbeddingSet decode_binary(const std::vector<std::uint8_t>& bytes) {
    const std::size_t total = bytes.size();
    const std::uint8_t* data = bytes.data();
    auto require = [&](std::size_t offset, std::size_t need, const std::string& what) {
        if (total < offset + need)
            throw FormatError(what + ": expected " + std::to_string(need) + " bytes at offset " +
                                  std::to_string(offset) + ", got " + std::to_string(total - offset),
                              offset);
    };

    require(0, 4, "truncated magic");
    if (std::string_view(reinterpret_cast<const char*>(data), 4) != "EMB1")
        throw FormatError("bad magic at offset 0 (expected \"EMB1\")", 0);
    require(4, 12, "truncated header");
    const std::uint32_t n = detail::get_u32(data + 4);
    const std::uint32_t d = detail::get_u32(data + 8);
    const std::uint32_t m = detail::get_u32(data + 12);
    if (d == 0) throw FormatError("dimension field at offset 8 is zero", 8);

    std::size_t offset = 16;
    std::vector<std::string> names;
    names.reserve(std::min<std::size_t>(m, total));
    for (std::uint32_t c = 0; c < m; ++c) {
        require(offset, 2, "truncated class-name length for class " + std::to_string(c));
        const std::uint16_t len = detail::get_u16(data + offset);
        offset += 2;
        require(offset, len, "truncated class name " + std::to_string(c));
        names.emplace_back(reinterpret_cast<const char*>(data + offset), len);
        offset += len;
    }

    const std::size_t record_bytes = 4 + 4 * static_cast<std::size_t>(d);
    std::vector<LabeledEmbedding> items;
    items.reserve(std::min<std::size_t>(n, (total - offset) / record_bytes + 1));
    for (std::uint32_t i = 0; i < n; ++i) {
        require(offset, record_bytes, "record " + std::to_string(i) + " truncated");
        LabeledEmbedding item;
        item.class_id = detail::get_u32(data + offset);
        if (item.class_id >= m)
            throw ValidationError("record " + std::to_string(i) + " has unknown class index " +
                                  std::to_string(item.class_id) + " (class count " + std::to_string(m) + ")");
        item.features.resize(d);
        for (std::uint32_t k = 0; k < d; ++k)
            item.features[k] = std::bit_cast<float>(detail::get_u32(data + offset + 4 + 4 * k));
        offset += record_bytes;
        items.push_back(std::move(item));
    }
    if (offset != total)
        throw FormatError(std::to_string(total - offset) + " trailing bytes after last record at offset " +
                              std::to_string(offset),
                          offset);
    return EmbeddingSet(d, std::move(names), std::move(items));
}

// ---------------------------------------------------------------------------
// CSV: header "label,f0,...,f{d-1}", one row per item, label is the class name.

inline std::string encode_csv(const EmbeddingSet& set) {
    std::string out = "label";
    for (std::size_t k = 0; k < set.dim(); ++k) out += ",f" + std::to_string(k);
    out += '\n';
    char buf[32];
    for (const auto& item : set.items()) {
        const auto& name = set.class_names()[item.class_id];
        if (name.find_first_of(",\"\r\n") != std::string::npos)
            throw ValidationError("class name '" + name + "' cannot be written to csv");
        out += name;
        for (float v : item.features) {
            std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
            out += ',';
            out += buf;
        }
        out += '\n';
    }
    return out;
}

inline EmbeddingSet decode_csv(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw FormatError("csv is empty (missing header)", 1);

    const auto header = detail::split_commas(lines[0]);
    if (header.size() < 2 || header[0] != "label")
        throw FormatError("csv header must be \"label,f0,...\"", 1);
    const std::size_t dim = header.size() - 1;
    for (std::size_t k = 0; k < dim; ++k)
        if (header[k + 1] != "f" + std::to_string(k))
            throw FormatError("csv header column " + std::to_string(k + 1) + " must be f" + std::to_string(k), 1);

    std::vector<std::string> names;
    std::map<std::string, std::uint32_t, std::less<>> lookup;
    std::vector<LabeledEmbedding> items;
    for (std::size_t row = 1; row < lines.size(); ++row) {
        const auto fields = detail::split_commas(lines[row]);
        if (fields.size() != dim + 1)
            throw FormatError("csv record " + std::to_string(row - 1) + " has " +
                                  std::to_string(fields.size() - 1) + " values, expected " + std::to_string(dim),
                              row + 1);
        LabeledEmbedding item;
        const std::string_view label = fields[0];
        if (auto it = lookup.find(label); it != lookup.end()) {
            item.class_id = it->second;
        } else {
            item.class_id = static_cast<std::uint32_t>(names.size());
            names.emplace_back(label);
            lookup.emplace(std::string(label), item.class_id);
        }
        item.features.resize(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            const auto field = fields[k + 1];
            float value = 0.0f;
            const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
            if (ec != std::errc() || ptr != field.data() + field.size())
                throw FormatError("csv record " + std::to_string(row - 1) + " column f" + std::to_string(k) +
                                      ": cannot parse '" + std::string(field) + "'",
                                  row + 1);
            item.features[k] = value;
        }
        items.push_back(std::move(item));
    }
    return EmbeddingSet(dim, std::move(names), std::move(items));
}

inline EmbeddingSet load_embeddings(const std::filesystem::path& path, FileFormat format = FileFormat::binary) {
    const auto bytes = detail::read_file(path);
    if (format == FileFormat::binary) return decode_binary(bytes);
    return decode_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

inline void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path,
                            FileFormat format = FileFormat::binary) {
    if (format == FileFormat::binary) {
        const auto bytes = encode_binary(set);
        detail::write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    } else {
        detail::write_file(path, encode_csv(set));
    }
}

/// ".csv" selects csv, anything else the binary format.
inline FileFormat format_from_extension(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? FileFormat::csv : FileFormat::binary;
}

// ---------------------------------------------------------------------------

struct SetDiagnostics {
    std::size_t size = 0;
    std::size_t dim = 0;
    std::vector<std::size_t> class_counts;  // indexed by class id
    double norm_min = 0.0;
    double norm_mean = 0.0;
    double norm_max = 0.0;
    /// Groups (size >= 2) of item indices whose vectors are bit-identical.
    std::vector<std::vector<std::size_t>> duplicate_groups;

    bool has_duplicates() const noexcept { return !duplicate_groups.empty(); }
};

inline SetDiagnostics validate_set(const EmbeddingSet& set) {
    SetDiagnostics diag;
    diag.size = set.size();
    diag.dim = set.dim();
    diag.class_counts.assign(set.class_count(), 0);
    if (set.empty()) return diag;

    diag.norm_min = std::numeric_limits<double>::infinity();
    double norm_sum = 0.0;
    // Keyed on raw bits so +0/-0 and equal-valued floats are told apart exactly.
    std::map<std::vector<std::uint32_t>, std::vector<std::size_t>> by_bits;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& item = set[i];
        ++diag.class_counts[item.class_id];
        double sq = 0.0;
        std::vector<std::uint32_t> key(item.features.size());
        for (std::size_t k = 0; k < item.features.size(); ++k) {
            const double v = item.features[k];
            sq += v * v;
            key[k] = std::bit_cast<std::uint32_t>(item.features[k]);
        }
        const double norm = std::sqrt(sq);
        diag.norm_min = std::min(diag.norm_min, norm);
        diag.norm_max = std::max(diag.norm_max, norm);
        norm_sum += norm;
        by_bits[std::move(key)].push_back(i);
    }
    diag.norm_mean = norm_sum / static_cast<double>(set.size());
    for (auto& [key, group] : by_bits)
        if (group.size() > 1) diag.duplicate_groups.push_back(std::move(group));
    std::sort(diag.duplicate_groups.begin(), diag.duplicate_groups.end());
    return diag;
}

// ---------------------------------------------------------------------------

struct SynthSpec {
    std::size_t n_classes = 20;
    std::size_t per_class = 50;
    std::size_t dim = 64;
    double center_radius = 10.0;
    double within_std = 0.5;
};

struct SyntheticSet {
    EmbeddingSet set;
    /// Generating center of each class, in class-id order.
    std::vector<std::vector<double>> centers;
};

/// Class centers uniform on the sphere of radius `center_radius`; items are
/// isotropic Gaussians around their center. Pure function of (spec, seed).
inline SyntheticSet generate_synthetic(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.n_classes == 0 || spec.per_class == 0 || spec.dim == 0)
        throw ConfigError("synthetic spec needs positive class count, per-class count and dimension");
    if (!(spec.center_radius > 0.0) || !(spec.within_std > 0.0))
        throw ConfigError("synthetic spec needs center_radius > 0 and within_std > 0");

    Rng rng(seed);
    std::vector<std::vector<double>> centers(spec.n_classes, std::vector<double>(spec.dim));
    for (auto& center : centers) {
        double sq = 0.0;
        do {
            sq = 0.0;
            for (auto& v : center) {
                v = rng.normal();
                sq += v * v;
            }
        } while (sq == 0.0);
        const double scale = spec.center_radius / std::sqrt(sq);
        for (auto& v : center) v *= scale;
    }

    std::vector<std::string> names;
    names.reserve(spec.n_classes);
    char buf[32];
    for (std::size_t c = 0; c < spec.n_classes; ++c) {
        std::snprintf(buf, sizeof buf, "class_%03zu", c);
        names.emplace_back(buf);
    }

    std::vector<LabeledEmbedding> items;
    items.reserve(spec.n_classes * spec.per_class);
    for (std::size_t c = 0; c < spec.n_classes; ++c) {
        for (std::size_t j = 0; j < spec.per_class; ++j) {
            LabeledEmbedding item;
            item.class_id = static_cast<std::uint32_t>(c);
            item.features.resize(spec.dim);
            for (std::size_t k = 0; k < spec.dim; ++k)
                item.features[k] = static_cast<float>(centers[c][k] + spec.within_std * rng.normal());
            items.push_back(std::move(item));
        }
    }
    return {EmbeddingSet(spec.dim, std::move(names), std::move(items)), std::move(centers)};
}

}  // namespace ronfa
