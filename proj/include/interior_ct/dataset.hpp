#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <zlib.h>

#include "json.hpp"

#include "dbp.hpp"
#include "error.hpp"
#include "fbp.hpp"
#include "geometry.hpp"
#include "image.hpp"
#include "io.hpp"
#include "phantom.hpp"

namespace interior_ct {

inline constexpr int dataset_format_version = 1;

/// Type 1: truncated-FBP input (learn the cupping); type 2: truncated-DBP input (learn the Hilbert inversion).
enum class PairType { fbp = 1, dbp = 2 };

inline PairType parse_pair_type(int t) {
    require(t == 1 || t == 2, "dataset type must be 1 or 2, got " + std::to_string(t));
    return static_cast<PairType>(t);
}

struct PairMeta {
    int n_det_kept = 0;
    double roi_radius = 0.0;
    double pixel_size = 0.0;
    double pitch = 0.0;
    double start_angle = 0.0;
    std::string augmentation = "none";
    int phantom_index = 0;

    friend bool operator==(const PairMeta&, const PairMeta&) = default;
};

/// Input and label share one grid; both are zero outside the ROI disk.
struct DatasetPair {
    Image input;
    Image label;
    PairMeta meta;
};

enum class FlipPolicy { none, append, random };

inline FlipPolicy parse_flip_policy(const std::string& s) {
    if (s == "none") return FlipPolicy::none;
    if (s == "append") return FlipPolicy::append;
    if (s == "random") return FlipPolicy::random;
    throw ValidationError("unknown flip policy '" + s + "' (expected none, append or random)");
}

struct AugmentOptions {
    std::vector<double> rotations_deg{45.0, 90.0, 135.0};
    FlipPolicy flips = FlipPolicy::none;
    std::uint64_t seed = 0;
};

/// A phantom to simulate, with its provenance.
struct PhantomVariant {
    Phantom phantom;
    std::string tag = "none";
    int source = 0;
};

inline std::vector<PhantomVariant> plain_variants(const std::vector<Phantom>& phantoms) {
    std::vector<PhantomVariant> out;
    for (std::size_t k = 0; k < phantoms.size(); ++k) out.push_back({phantoms[k], "none", static_cast<int>(k)});
    return out;
}

namespace detail {

inline std::string degree_tag(double deg) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "rot%g", deg);
    return buf;
}

} // namespace detail

/**
 * Augmentation on the phantom descriptions, so every augmented pair is
 * re-simulated rather than interpolated. Each phantom is kept and rotated by
 * every angle in rotations_deg (1 + 3 = 4x with the defaults). Flips then act
 * on that whole set: `append` adds a horizontal and a vertical mirror of
 * every entry (3x), `random` replaces each entry by itself or one of its
 * mirrors, chosen by the seeded generator.
 */
inline std::vector<PhantomVariant> augment(const std::vector<PhantomVariant>& in, const AugmentOptions& opt) {
    std::vector<PhantomVariant> rotated_set;
    for (const auto& v : in) {
        rotated_set.push_back(v);
        for (double deg : opt.rotations_deg) {
            require(std::isfinite(deg), "augment: rotation angle must be finite");
            const std::string tag = v.tag == "none" ? detail::degree_tag(deg) : v.tag + "+" + detail::degree_tag(deg);
            rotated_set.push_back({rotated(v.phantom, deg * pi / 180.0), tag, v.source});
        }
    }
    auto with = [](const PhantomVariant& v, Phantom p, const char* t) {
        return PhantomVariant{std::move(p), v.tag == "none" ? std::string(t) : v.tag + "+" + t, v.source};
    };
    switch (opt.flips) {
    case FlipPolicy::none:
        return rotated_set;
    case FlipPolicy::append: {
        std::vector<PhantomVariant> out = rotated_set;
        for (const auto& v : rotated_set) out.push_back(with(v, mirrored_horizontal(v.phantom), "hflip"));
        for (const auto& v : rotated_set) out.push_back(with(v, mirrored_vertical(v.phantom), "vflip"));
        return out;
    }
    case FlipPolicy::random: {
        UniformSource rng(opt.seed);
        std::vector<PhantomVariant> out;
        for (const auto& v : rotated_set) {
            const int pick = std::min(2, static_cast<int>(rng() * 3.0));
            if (pick == 0) out.push_back(v);
            else if (pick == 1) out.push_back(with(v, mirrored_horizontal(v.phantom), "hflip"));
            else out.push_back(with(v, mirrored_vertical(v.phantom), "vflip"));
        }
        return out;
    }
    }
    return rotated_set;
}

inline std::vector<PhantomVariant> augment(const std::vector<Phantom>& phantoms, const AugmentOptions& opt) {
    return augment(plain_variants(phantoms), opt);
}

inline void validate_detector_list(const std::vector<int>& detectors, const Geometry& geom) {
    require(!detectors.empty(), "dataset: detector list is empty");
    std::set<int> seen;
    for (int d : detectors) {
        require(d >= 1 && d <= geom.n_det,
                "dataset: detector count " + std::to_string(d) + " outside [1, " + std::to_string(geom.n_det) + "]");
        require(seen.insert(d).second, "dataset: duplicate detector count " + std::to_string(d));
    }
}

/**
 * For every variant x detector count: exact sinogram, truncation to the
 * central channels, input reconstruction (FBP or DBP along x), ROI masking of
 * input and rasterized label. Pairs are ordered variant-major.
 */
inline std::vector<DatasetPair> build_pairs(const std::vector<PhantomVariant>& variants, const Geometry& geom,
                                            const std::vector<int>& detectors, PairType type) {
    validate(geom);
    validate_detector_list(detectors, geom);
    std::vector<DatasetPair> pairs;
    for (const auto& var : variants) {
        const Sinogram full = analytic_sinogram(var.phantom, geom);
        const Image truth = rasterize(var.phantom, geom.n_pix, geom.fov);
        for (int kept : detectors) {
            const Sinogram s = truncate(full, kept);
            const double R = roi_radius(geom, kept);
            const Mask2D roi = disk_mask(geom.n_pix, geom.fov, R);
            Image input = type == PairType::fbp ? fbp_reconstruct(s, geom) : dbp_image(s, geom, 0.0).image;
            input.data = apply_mask(input.data, roi);
            input.roi_mask = roi;
            Image label = truth;
            label.data = apply_mask(label.data, roi);
            label.roi_mask = roi;
            pairs.push_back({std::move(input), std::move(label),
                             PairMeta{kept, R, geom.pixel_size(), geom.pitch, geom.start_angle, var.tag, var.source}});
        }
    }
    return pairs;
}

inline std::vector<DatasetPair> build_pairs(const std::vector<Phantom>& phantoms, const Geometry& geom,
                                            const std::vector<int>& detectors, PairType type) {
    return build_pairs(plain_variants(phantoms), geom, detectors, type);
}

inline void to_json(nlohmann::json& j, const PairMeta& m) {
    j = nlohmann::json{{"n_det_kept", m.n_det_kept},   {"roi_radius", m.roi_radius},
                       {"pixel_size", m.pixel_size},   {"pitch", m.pitch},
                       {"start_angle", m.start_angle}, {"augmentation", m.augmentation},
                       {"phantom_index", m.phantom_index}};
}

inline void from_json(const nlohmann::json& j, PairMeta& m) {
    m.n_det_kept = j.at("n_det_kept").get<int>();
    m.roi_radius = j.at("roi_radius").get<double>();
    m.pixel_size = j.at("pixel_size").get<double>();
    m.pitch = j.at("pitch").get<double>();
    m.start_angle = j.at("start_angle").get<double>();
    m.augmentation = j.at("augmentation").get<std::string>();
    m.phantom_index = j.at("phantom_index").get<int>();
}

struct DatasetManifest {
    int format_version = dataset_format_version;
    PairType type = PairType::fbp;
    Geometry geometry;
    int n_pix = 0;
    std::string blob;
    struct Record {
        std::uint64_t input_offset = 0;
        std::uint64_t label_offset = 0;
        std::uint64_t bytes = 0;  // per image
        std::uint32_t crc32 = 0;  // over input then label bytes
        PairMeta meta;
    };
    std::vector<Record> pairs;
};

namespace detail {

inline std::uint32_t crc32_of(std::span<const char> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const uInt chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
        crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), chunk);
        pos += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

inline fs::path blob_path(const fs::path& manifest) {
    fs::path p = manifest;
    p.replace_extension(".bin");
    return p;
}

} // namespace detail

/**
 * Writes `<stem>.json` (manifest) and `<stem>.bin` (little-endian float32
 * blob: per pair the input then the label, row-major, in manifest order).
 */
inline DatasetManifest write_dataset(const std::vector<DatasetPair>& pairs, const Geometry& geom, PairType type,
                                     const fs::path& manifest_path) {
    fs::path manifest = manifest_path;
    if (manifest.extension() != ".json") manifest += ".json";
    const fs::path blob = detail::blob_path(manifest);
    DatasetManifest m{dataset_format_version, type, geom, geom.n_pix, blob.filename().string(), {}};
    std::vector<char> bytes;
    for (const auto& p : pairs) {
        require(p.input.data.same_shape(p.label.data), "dataset: input and label grids differ");
        require(p.input.n_pix() == geom.n_pix, "dataset: pair grid does not match geometry");
        DatasetManifest::Record r;
        r.input_offset = bytes.size();
        detail::append_f32(bytes, p.input.data.values());
        r.label_offset = bytes.size();
        detail::append_f32(bytes, p.label.data.values());
        r.bytes = r.label_offset - r.input_offset;
        r.crc32 = detail::crc32_of(std::span<const char>(bytes.data() + r.input_offset, 2 * r.bytes));
        r.meta = p.meta;
        m.pairs.push_back(r);
    }
    nlohmann::json j{{"format_version", m.format_version},
                     {"pair_type", static_cast<int>(type)},
                     {"geometry", geom},
                     {"image_shape", {geom.n_pix, geom.n_pix}},
                     {"dtype", "float32le"},
                     {"blob", m.blob},
                     {"pair_count", pairs.size()}};
    j["pairs"] = nlohmann::json::array();
    for (const auto& r : m.pairs)
        j["pairs"].push_back({{"input_offset", r.input_offset},
                              {"label_offset", r.label_offset},
                              {"bytes", r.bytes},
                              {"crc32", r.crc32},
                              {"meta", r.meta}});
    detail::write_bytes(blob, bytes);
    detail::write_text(manifest, j.dump(2) + "\n");
    return m;
}

inline DatasetManifest read_manifest(const fs::path& manifest) {
    const nlohmann::json j = detail::read_json(manifest);
    DatasetManifest m;
    try {
        m.format_version = j.at("format_version").get<int>();
        if (m.format_version != dataset_format_version)
            throw FormatError("'" + manifest.string() + "': dataset format version " +
                              std::to_string(m.format_version) + " is not supported (reader handles " +
                              std::to_string(dataset_format_version) + ")");
        m.type = parse_pair_type(j.at("pair_type").get<int>());
        m.geometry = j.at("geometry").get<Geometry>();
        const auto shape = j.at("image_shape").get<std::array<int, 2>>();
        m.n_pix = shape[0];
        m.blob = j.at("blob").get<std::string>();
        for (const auto& r : j.at("pairs"))
            m.pairs.push_back({r.at("input_offset").get<std::uint64_t>(), r.at("label_offset").get<std::uint64_t>(),
                               r.at("bytes").get<std::uint64_t>(), r.at("crc32").get<std::uint32_t>(),
                               r.at("meta").get<PairMeta>()});
        if (j.at("pair_count").get<std::size_t>() != m.pairs.size())
            throw FormatError("'" + manifest.string() + "': pair_count disagrees with the pair list");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("'" + manifest.string() + "': invalid manifest: " + e.what());
    } catch (const ValidationError& e) {
        throw FormatError("'" + manifest.string() + "': invalid manifest: " + e.what());
    }
    return m;
}

/// Reads and verifies every pair (offsets inside the blob, CRC32 per pair).
inline std::vector<DatasetPair> read_dataset(const fs::path& manifest_path, DatasetManifest* manifest_out = nullptr) {
    const DatasetManifest m = read_manifest(manifest_path);
    const fs::path blob = manifest_path.parent_path() / m.blob;
    const std::vector<char> bytes = detail::read_bytes(blob);
    const std::uint64_t image_bytes = 4ull * static_cast<std::uint64_t>(m.n_pix) * m.n_pix;
    std::vector<DatasetPair> pairs;
    for (std::size_t k = 0; k < m.pairs.size(); ++k) {
        const auto& r = m.pairs[k];
        const std::string where = "'" + blob.string() + "' pair " + std::to_string(k);
        if (r.bytes != image_bytes) throw FormatError(where + ": record size disagrees with the image shape");
        if (r.label_offset != r.input_offset + r.bytes) throw FormatError(where + ": label does not follow input");
        if (r.label_offset + r.bytes > bytes.size())
            throw FormatError(where + ": blob is truncated (" + std::to_string(bytes.size()) + " bytes)");
        const std::uint32_t crc = detail::crc32_of(std::span<const char>(bytes.data() + r.input_offset, 2 * r.bytes));
        if (crc != r.crc32) throw FormatError(where + ": checksum mismatch");
        DatasetPair p{make_image(m.n_pix, m.geometry.fov), make_image(m.n_pix, m.geometry.fov), r.meta};
        detail::decode_f32(bytes.data() + r.input_offset, p.input.data.values());
        detail::decode_f32(bytes.data() + r.label_offset, p.label.data.values());
        const Mask2D roi = disk_mask(m.n_pix, m.geometry.fov, r.meta.roi_radius);
        p.input.roi_mask = roi;
        p.label.roi_mask = roi;
        pairs.push_back(std::move(p));
    }
    if (manifest_out) *manifest_out = m;
    return pairs;
}

} // namespace interior_ct
