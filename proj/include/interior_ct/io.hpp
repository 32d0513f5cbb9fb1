#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <png.h>

#include "json.hpp"

#include "dbp.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "hilbert.hpp"
#include "image.hpp"

namespace interior_ct {

namespace fs = std::filesystem;

inline constexpr int file_format_version = 1;

namespace detail {

inline std::uint32_t to_little(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    else return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

/// Appends values as little-endian float32.
inline void append_f32(std::vector<char>& out, std::span<const double> values) {
    const std::size_t base = out.size();
    out.resize(base + 4 * values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        const std::uint32_t bits = to_little(std::bit_cast<std::uint32_t>(static_cast<float>(values[k])));
        std::memcpy(out.data() + base + 4 * k, &bits, 4);
    }
}

inline void decode_f32(const char* bytes, std::span<double> values) {
    for (std::size_t k = 0; k < values.size(); ++k) {
        std::uint32_t bits;
        std::memcpy(&bits, bytes + 4 * k, 4);
        values[k] = std::bit_cast<float>(to_little(bits));
    }
}

inline std::vector<char> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

inline void ensure_parent(const fs::path& path) {
    if (!path.has_parent_path()) return;
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
}

inline void write_bytes(const fs::path& path, std::span<const char> bytes) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline void write_text(const fs::path& path, const std::string& text) {
    write_bytes(path, std::span<const char>(text.data(), text.size()));
}

inline nlohmann::json read_json(const fs::path& path) {
    const std::vector<char> bytes = read_bytes(path);
    try {
        return nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed JSON in '" + path.string() + "': " + e.what());
    }
}

/// Header path and payload path for a stem given as `x`, `x.json` or `x.raw`.
inline std::pair<fs::path, fs::path> pair_paths(const fs::path& p) {
    fs::path stem = p;
    if (p.extension() == ".json" || p.extension() == ".raw") stem.replace_extension();
    fs::path header = stem, raw = stem;
    header += ".json";
    raw += ".raw";
    return {header, raw};
}

/// Run lengths of alternating 0 / 1 values, starting with a (possibly empty) run of zeros.
inline std::vector<std::size_t> encode_runs(std::span<const std::uint8_t> bits) {
    std::vector<std::size_t> runs;
    std::uint8_t cur = 0;
    std::size_t len = 0;
    for (auto b : bits) {
        const std::uint8_t v = b ? 1 : 0;
        if (v != cur) {
            runs.push_back(len);
            cur = v;
            len = 0;
        }
        ++len;
    }
    runs.push_back(len);
    return runs;
}

inline std::vector<std::uint8_t> decode_runs(const std::vector<std::size_t>& runs, std::size_t n) {
    std::vector<std::uint8_t> out;
    out.reserve(n);
    std::uint8_t cur = 0;
    for (std::size_t r : runs) {
        if (out.size() + r > n) throw FormatError("mask run lengths exceed the array size");
        out.insert(out.end(), r, cur);
        cur ^= 1;
    }
    if (out.size() != n) throw FormatError("mask run lengths do not cover the array");
    return out;
}

template <typename T>
T header_field(const nlohmann::json& h, const char* key, const fs::path& path) {
    try {
        return h.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw FormatError("'" + path.string() + "': missing or invalid field '" + key + "'");
    }
}

inline void check_header(const nlohmann::json& h, const char* kind, const fs::path& path) {
    const int version = header_field<int>(h, "version", path);
    if (version != file_format_version)
        throw FormatError("'" + path.string() + "': unsupported format version " + std::to_string(version) +
                          " (this reader handles " + std::to_string(file_format_version) + ")");
    const std::string k = header_field<std::string>(h, "kind", path);
    if (k != kind) throw FormatError("'" + path.string() + "': expected a " + kind + " file, found " + k);
}

inline Grid read_payload(const fs::path& raw, int rows, int cols) {
    const std::vector<char> bytes = read_bytes(raw);
    const std::size_t need = 4 * static_cast<std::size_t>(rows) * cols;
    if (bytes.size() != need)
        throw FormatError("'" + raw.string() + "': payload has " + std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(need));
    Grid g(rows, cols, 0.0);
    decode_f32(bytes.data(), g.values());
    return g;
}

} // namespace detail

inline void save_sinogram(const Sinogram& sino, const fs::path& path) {
    const auto [header, raw] = detail::pair_paths(path);
    nlohmann::json h{{"version", file_format_version},
                     {"kind", "sinogram"},
                     {"dtype", "float32le"},
                     {"shape", {sino.n_views(), sino.n_det()}},
                     {"geometry", sino.geom},
                     {"mask", detail::encode_runs(sino.mask)},
                     {"n_det_kept", sino.n_measured()},
                     {"roi_radius", roi_radius(sino.geom, std::max(1, sino.n_measured()))},
                     {"payload", raw.filename().string()}};
    std::vector<char> bytes;
    detail::append_f32(bytes, sino.data.values());
    detail::write_bytes(raw, bytes);
    detail::write_text(header, h.dump(2) + "\n");
}

inline Sinogram load_sinogram(const fs::path& path) {
    const auto [header, raw] = detail::pair_paths(path);
    const nlohmann::json h = detail::read_json(header);
    detail::check_header(h, "sinogram", header);
    Geometry g;
    try {
        g = h.at("geometry").get<Geometry>();
    } catch (const std::exception& e) {
        throw FormatError("'" + header.string() + "': invalid geometry: " + e.what());
    }
    const auto shape = detail::header_field<std::array<int, 2>>(h, "shape", header);
    if (shape[0] != g.n_views || shape[1] != g.n_det)
        throw FormatError("'" + header.string() + "': shape disagrees with geometry");
    Sinogram s{detail::read_payload(raw, shape[0], shape[1]), g,
               detail::decode_runs(detail::header_field<std::vector<std::size_t>>(h, "mask", header),
                                   static_cast<std::size_t>(g.n_det))};
    return s;
}

namespace detail {

inline nlohmann::json image_header(const Image& img, const char* kind, const fs::path& raw) {
    nlohmann::json h{{"version", file_format_version},
                     {"kind", kind},
                     {"dtype", "float32le"},
                     {"shape", {img.n_pix(), img.n_pix()}},
                     {"fov", img.fov},
                     {"pixel_size", img.pixel_size()},
                     {"payload", raw.filename().string()}};
    if (img.roi_mask) h["roi_mask"] = encode_runs(img.roi_mask->values());
    return h;
}

inline Image image_from_header(const nlohmann::json& h, const fs::path& header, const fs::path& raw) {
    const auto shape = header_field<std::array<int, 2>>(h, "shape", header);
    if (shape[0] != shape[1] || shape[0] < 1) throw FormatError("'" + header.string() + "': image must be square");
    const double fov = header_field<double>(h, "fov", header);
    if (!(fov > 0.0)) throw FormatError("'" + header.string() + "': fov must be positive");
    Image img{read_payload(raw, shape[0], shape[1]), fov, std::nullopt};
    if (h.contains("roi_mask")) {
        Mask2D m(shape[0], shape[1], 0);
        m.values() = decode_runs(header_field<std::vector<std::size_t>>(h, "roi_mask", header), m.size());
        img.roi_mask = std::move(m);
    }
    return img;
}

} // namespace detail

inline void save_image(const Image& img, const fs::path& path) {
    const auto [header, raw] = detail::pair_paths(path);
    std::vector<char> bytes;
    detail::append_f32(bytes, img.data.values());
    detail::write_bytes(raw, bytes);
    detail::write_text(header, detail::image_header(img, "image", raw).dump(2) + "\n");
}

inline Image load_image(const fs::path& path) {
    const auto [header, raw] = detail::pair_paths(path);
    const nlohmann::json h = detail::read_json(header);
    const std::string kind = detail::header_field<std::string>(h, "kind", header);
    // A DBP image is an image with a direction; either loads as a plain image.
    detail::check_header(h, kind == "dbp_image" ? "dbp_image" : "image", header);
    return detail::image_from_header(h, header, raw);
}

inline void save_dbp_image(const DbpImage& img, const fs::path& path) {
    const auto [header, raw] = detail::pair_paths(path);
    std::vector<char> bytes;
    detail::append_f32(bytes, img.image.data.values());
    detail::write_bytes(raw, bytes);
    nlohmann::json h = detail::image_header(img.image, "dbp_image", raw);
    h["direction"] = img.direction;
    detail::write_text(header, h.dump(2) + "\n");
}

inline DbpImage load_dbp_image(const fs::path& path) {
    const auto [header, raw] = detail::pair_paths(path);
    const nlohmann::json h = detail::read_json(header);
    detail::check_header(h, "dbp_image", header);
    return DbpImage{detail::image_from_header(h, header, raw),
                    normalize_direction(detail::header_field<double>(h, "direction", header))};
}

struct DisplayWindow {
    double lo_hu = -150.0;
    double hi_hu = 300.0;
};

/// HU relative to a water attenuation of `water` (1 in the phantom units).
inline double to_hu(double value, double water = 1.0) { return 1000.0 * (value - water) / water; }

/// 8-bit grayscale PNG of the image under the HU window.
inline void save_png(const Image& img, const fs::path& path, DisplayWindow window = {}) {
    require(window.hi_hu > window.lo_hu, "png: window upper bound must exceed lower bound");
    const int n = img.n_pix();
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double t = (to_hu(img.data(i, j)) - window.lo_hu) / (window.hi_hu - window.lo_hu);
            pixels[static_cast<std::size_t>(i) * n + j] =
                static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0)));
        }
    detail::ensure_parent(path);
    png_image im;
    std::memset(&im, 0, sizeof im);
    im.version = PNG_IMAGE_VERSION;
    im.width = static_cast<png_uint_32>(n);
    im.height = static_cast<png_uint_32>(n);
    im.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&im, path.string().c_str(), 0, pixels.data(), 0, nullptr))
        throw IoError("cannot write PNG '" + path.string() + "': " + im.message);
}

/// Bilinear samples of the image along the segment (x0, y0) -> (x1, y1) in mm.
inline std::vector<std::pair<double, double>> line_profile(const Image& img, double x0, double y0, double x1,
                                                           double y1, int n_samples) {
    require(n_samples >= 2, "profile: need at least two samples");
    const double px = img.pixel_size(), c = 0.5 * (img.n_pix() - 1);
    const double len = std::hypot(x1 - x0, y1 - y0);
    std::vector<std::pair<double, double>> out;
    for (int k = 0; k < n_samples; ++k) {
        const double a = static_cast<double>(k) / (n_samples - 1);
        const double x = x0 + a * (x1 - x0), y = y0 + a * (y1 - y0);
        const double col = x / px + c, row = c - y / px;
        const int j0 = static_cast<int>(std::floor(col)), i0 = static_cast<int>(std::floor(row));
        const double fx = col - j0, fy = row - i0;
        auto at = [&](int i, int j) {
            return (i >= 0 && j >= 0 && i < img.n_pix() && j < img.n_pix()) ? img.data(i, j) : 0.0;
        };
        const double v = (1 - fy) * ((1 - fx) * at(i0, j0) + fx * at(i0, j0 + 1)) +
                         fy * ((1 - fx) * at(i0 + 1, j0) + fx * at(i0 + 1, j0 + 1));
        out.emplace_back(a * len, v);
    }
    return out;
}

inline void save_profile_csv(const std::vector<std::pair<double, double>>& profile, const fs::path& path) {
    std::ostringstream os;
    os.precision(10);
    os << "position_mm,value\n";
    for (const auto& [p, v] : profile) os << p << ',' << v << '\n';
    detail::write_text(path, os.str());
}

/// Writes `u,value` rows; invalid samples are omitted.
inline void write_chord_csv(std::ostream& os, const ChordSignal& s) {
    os.precision(12);
    os << "u,value\n";
    for (int k = 0; k < s.size(); ++k)
        if (s.is_valid(k)) os << s.position(k) << ',' << s.samples[static_cast<std::size_t>(k)] << '\n';
}

inline void save_chord_csv(const ChordSignal& s, const fs::path& path) {
    std::ostringstream os;
    write_chord_csv(os, s);
    detail::write_text(path, os.str());
}

} // namespace interior_ct
