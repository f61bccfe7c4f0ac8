#pragma once

// Binary field container:
//   16-byte magic "ADMITREC-CONT-01"
//   uint64 LE header length, UTF-8 JSON header
//   raw blobs: float64 LE (re, im) pairs, component-major then voxel order; masks as uint8.
// Blob offsets in the header are relative to the first byte after the JSON header.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "admitrec/fields.hpp"

namespace admitrec {

inline constexpr char container_magic[17] = "ADMITREC-CONT-01";
inline constexpr std::size_t container_magic_size = 16;
inline constexpr int container_version = 1;

using FieldValue = std::variant<ScalarFieldC, VectorFieldC, MatrixFieldC, Mask>;

struct Container {
    Grid3 grid;
    std::vector<std::pair<std::string, FieldValue>> fields;
    nlohmann::json metadata = nlohmann::json::object();

    bool has(const std::string& name) const { return find(name) != nullptr; }

    const FieldValue* find(const std::string& name) const {
        for (const auto& [n, v] : fields)
            if (n == name) return &v;
        return nullptr;
    }

    template <class T>
    const T& get(const std::string& name) const {
        const FieldValue* v = find(name);
        if (!v) throw Error(Errc::invalid_argument, "container has no field '" + name + "'");
        const T* p = std::get_if<T>(v);
        if (!p) throw Error(Errc::invalid_argument, "field '" + name + "' has a different kind");
        return *p;
    }

    template <class T>
    void add(std::string name, T field) {
        const Grid3& g = grid_of(field);
        if (fields.empty() && grid.size() == 0) grid = g;
        require_same_grid(grid, g, "all container fields must share one grid");
        for (auto& [n, v] : fields)
            if (n == name) {
                v = std::move(field);
                return;
            }
        fields.emplace_back(std::move(name), std::move(field));
    }

private:
    template <class T>
    static const Grid3& grid_of(const T& f) {
        return f.grid;
    }
};

namespace detail {

inline std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[std::size_t(i)] = digits[v & 0xf];
    return s;
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out.push_back(std::uint8_t(v >> (8 * b)));
}

inline std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
    return v;
}

inline void put_f64(std::vector<std::uint8_t>& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }
inline double get_f64(const std::uint8_t* p) { return std::bit_cast<double>(get_u64(p)); }

inline int component_count(const FieldValue& v) {
    switch (v.index()) {
        case 0: return 1;
        case 1: return 3;
        case 2: return 9;
        default: return 1;
    }
}

inline const char* kind_name(const FieldValue& v) {
    static constexpr const char* names[] = {"scalar", "vector", "matrix", "mask"};
    return names[v.index()];
}

// Complex component c of voxel i; matrix components are row-major.
inline cplx component_of(const FieldValue& v, int c, std::size_t i) {
    switch (v.index()) {
        case 0: return std::get<0>(v)[i];
        case 1: return std::get<1>(v)[i][c];
        default: return std::get<2>(v)[i](c / 3, c % 3);
    }
}

inline std::vector<std::uint8_t> encode_blob(const FieldValue& v) {
    std::vector<std::uint8_t> out;
    if (const Mask* m = std::get_if<Mask>(&v)) return m->flags;
    const int nc = component_count(v);
    const std::size_t n = std::visit([](const auto& f) { return f.grid.size(); }, v);
    out.reserve(n * std::size_t(nc) * 16);
    for (int c = 0; c < nc; ++c)
        for (std::size_t i = 0; i < n; ++i) {
            const cplx z = component_of(v, c, i);
            put_f64(out, z.real());
            put_f64(out, z.imag());
        }
    return out;
}

inline std::size_t blob_size(const std::string& kind, std::size_t voxels) {
    if (kind == "mask") return voxels;
    if (kind == "scalar") return voxels * 16;
    if (kind == "vector") return voxels * 48;
    if (kind == "matrix") return voxels * 144;
    throw Error(Errc::unknown_format_version, "unknown field kind '" + kind + "'");
}

inline FieldValue decode_blob(const nlohmann::json& entry, const Grid3& g, const std::uint8_t* p) {
    const std::string kind = entry.at("kind").get<std::string>();
    const std::size_t n = g.size();
    auto z = [&](int c, std::size_t i) {
        const std::uint8_t* q = p + (std::size_t(c) * n + i) * 16;
        return cplx(get_f64(q), get_f64(q + 8));
    };
    if (kind == "mask") {
        Mask m(g, false, entry.value("provenance", std::string{}));
        std::memcpy(m.flags.data(), p, n);
        return m;
    }
    if (kind == "scalar") {
        ScalarFieldC f(g);
        for (std::size_t i = 0; i < n; ++i) f[i] = z(0, i);
        return f;
    }
    if (kind == "vector") {
        VectorFieldC f(g);
        for (int c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < n; ++i) f[i][c] = z(c, i);
        return f;
    }
    MatrixFieldC f(g, parse_symmetry(entry.value("symmetry", std::string("general"))));
    for (int c = 0; c < 9; ++c)
        for (std::size_t i = 0; i < n; ++i) f[i](c / 3, c % 3) = z(c, i);
    return f;
}

}  // namespace detail

inline nlohmann::json grid_to_json(const Grid3& g) {
    return {{"dims", g.dims}, {"spacing", g.spacing}, {"origin", g.origin}};
}

inline Grid3 grid_from_json(const nlohmann::json& j) {
    Grid3 g;
    g.dims = j.at("dims").get<std::array<int, 3>>();
    g.spacing = j.at("spacing").get<std::array<double, 3>>();
    g.origin = j.at("origin").get<std::array<double, 3>>();
    return g;
}

/// Serializes to bytes; the file writer and tests share this.
inline std::vector<std::uint8_t> encode_container(const Container& c) {
    nlohmann::json header;
    header["format"] = "ADMITREC-CONT";
    header["version"] = container_version;
    header["grid"] = grid_to_json(c.grid);
    header["metadata"] = c.metadata;
    header["fields"] = nlohmann::json::array();

    std::vector<std::uint8_t> blobs;
    for (const auto& [name, value] : c.fields) {
        std::visit([&](const auto& f) { require_same_grid(c.grid, f.grid, "container field grid"); }, value);
        const auto blob = detail::encode_blob(value);
        nlohmann::json e{{"name", name},
                         {"kind", detail::kind_name(value)},
                         {"offset", blobs.size()},
                         {"length", blob.size()},
                         {"fnv1a64", detail::hex64(detail::fnv1a64(blob.data(), blob.size()))}};
        if (const auto* m = std::get_if<MatrixFieldC>(&value)) e["symmetry"] = symmetry_name(m->symmetry);
        if (const auto* m = std::get_if<Mask>(&value)) e["provenance"] = m->provenance;
        header["fields"].push_back(std::move(e));
        blobs.insert(blobs.end(), blob.begin(), blob.end());
    }

    const std::string text = header.dump();
    std::vector<std::uint8_t> out(container_magic, container_magic + container_magic_size);
    detail::put_u64(out, text.size());
    out.insert(out.end(), text.begin(), text.end());
    out.insert(out.end(), blobs.begin(), blobs.end());
    return out;
}

inline Container decode_container(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < container_magic_size + 8)
        throw Error(Errc::length_mismatch, "file shorter than the fixed preamble");
    if (std::memcmp(bytes.data(), container_magic, 14) != 0)
        throw Error(Errc::unknown_format_version, "bad magic");
    if (std::memcmp(bytes.data() + 14, container_magic + 14, 2) != 0)
        throw Error(Errc::unknown_format_version,
                    "container version '" + std::string(bytes.begin() + 14, bytes.begin() + 16) + "'");
    const std::uint64_t hlen = detail::get_u64(bytes.data() + container_magic_size);
    const std::size_t body = container_magic_size + 8;
    if (hlen > bytes.size() - body) throw Error(Errc::length_mismatch, "header runs past end of file");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.begin() + std::ptrdiff_t(body),
                                       bytes.begin() + std::ptrdiff_t(body + hlen));
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::io_failure, std::string("malformed header: ") + e.what());
    }
    if (header.value("version", 0) != container_version)
        throw Error(Errc::unknown_format_version, "header version " + header.value("version", nlohmann::json()).dump());

    Container c;
    c.grid = grid_from_json(header.at("grid"));
    c.metadata = header.value("metadata", nlohmann::json::object());
    const std::size_t blob_start = body + std::size_t(hlen);
    const std::size_t available = bytes.size() - blob_start;
    std::size_t expected_end = 0;
    for (const auto& e : header.at("fields")) {
        const std::size_t off = e.at("offset").get<std::size_t>();
        const std::size_t len = e.at("length").get<std::size_t>();
        if (len != detail::blob_size(e.at("kind").get<std::string>(), c.grid.size()))
            throw Error(Errc::length_mismatch, "field '" + e.at("name").get<std::string>() +
                                                   "' length disagrees with grid");
        if (off > available || len > available - off)
            throw Error(Errc::length_mismatch, "blob for '" + e.at("name").get<std::string>() + "' is truncated");
        const std::uint8_t* p = bytes.data() + blob_start + off;
        if (e.contains("fnv1a64") && e["fnv1a64"].get<std::string>() != detail::hex64(detail::fnv1a64(p, len)))
            throw Error(Errc::checksum_mismatch, "blob for '" + e.at("name").get<std::string>() + "'");
        c.fields.emplace_back(e.at("name").get<std::string>(), detail::decode_blob(e, c.grid, p));
        expected_end = std::max(expected_end, off + len);
    }
    if (expected_end != available)
        throw Error(Errc::length_mismatch, "trailing bytes after last blob");
    return c;
}

/// Writes atomically: a sibling temp file is renamed over the target.
inline void write_bytes_atomic(const std::filesystem::path& path, const void* data, std::size_t n) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::io_failure, "cannot open '" + tmp.string() + "' for writing");
        out.write(static_cast<const char*>(data), std::streamsize(n));
        if (!out) throw Error(Errc::io_failure, "write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(Errc::io_failure, "rename to '" + path.string() + "': " + ec.message());
}

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    write_bytes_atomic(path, text.data(), text.size());
}

inline void write_container(const std::filesystem::path& path, const Container& c) {
    const auto bytes = encode_container(c);
    write_bytes_atomic(path, bytes.data(), bytes.size());
}

inline Container read_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_failure, "cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_container(bytes);
}

}  // namespace admitrec
