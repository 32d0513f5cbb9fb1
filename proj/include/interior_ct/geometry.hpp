#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"

#include "error.hpp"

namespace interior_ct {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/**
 * Circular fan-beam acquisition with a flat, equally spaced, centered
 * detector.
 *
 * Conventions used throughout the library:
 *  - the source sits at dso * (cos b, sin b) for view angle b, angles measured
 *    counterclockwise from +x;
 *  - views are uniformly spaced: b_k = start_angle + k * scan_range / n_views;
 *  - detector coordinate t_k = (k - (n_det - 1) / 2) * pitch runs along
 *    (-sin b, cos b) on the detector plane, dsd away from the source;
 *  - image pixel (row i, col j) sits at x = (j - (n - 1) / 2) * px,
 *    y = ((n - 1) / 2 - i) * px, so row 0 is the top of the image.
 */
struct Geometry {
    int n_det = 0;
    double pitch = 0.0;   // mm, at the detector plane
    int n_views = 0;
    double dso = 0.0;     // mm, source to isocenter
    double dsd = 0.0;     // mm, source to detector
    int n_pix = 0;
    double fov = 0.0;     // mm, image side length
    double scan_range = two_pi;
    double start_angle = 0.0;

    double view_step() const { return scan_range / n_views; }
    double view_angle(int k) const { return start_angle + k * view_step(); }
    double det_center() const { return 0.5 * (n_det - 1); }
    double det_coord(double k) const { return (k - det_center()) * pitch; }
    /// Detector spacing magnified back to the isocenter.
    double iso_pitch() const { return pitch * dso / dsd; }
    double pixel_size() const { return fov / n_pix; }
    /// Half fan angle subtended by the whole detector.
    double fan_half_angle() const { return std::atan(0.5 * n_det * pitch / dsd); }
    bool full_scan() const { return scan_range >= two_pi - 1e-9; }

    friend bool operator==(const Geometry&, const Geometry&) = default;
};

/// Radius at isocenter of the disk seen by the central n_det_kept channels.
inline double roi_radius(const Geometry& geom, int n_det_kept) {
    require(n_det_kept >= 1 && n_det_kept <= geom.n_det,
            "roi_radius: n_det_kept must be in [1, " + std::to_string(geom.n_det) + "], got " +
                std::to_string(n_det_kept));
    return geom.dso * std::sin(std::atan(n_det_kept * geom.pitch / 2.0 / geom.dsd));
}

/// Image side length whose square just inscribes the full-detector field of view.
inline double default_fov(int n_det, double pitch, double dso, double dsd) {
    return 2.0 * dso * std::sin(std::atan(n_det * pitch / 2.0 / dsd));
}

inline void validate(const Geometry& g) {
    require(g.n_det >= 1, "geometry: n_det must be >= 1");
    require(g.pitch > 0.0 && std::isfinite(g.pitch), "geometry: pitch must be > 0");
    require(g.n_views >= 2, "geometry: n_views must be >= 2");
    require(g.dso > 0.0 && std::isfinite(g.dso), "geometry: dso must be > 0");
    require(g.dsd > g.dso && std::isfinite(g.dsd), "geometry: dsd must exceed dso");
    require(g.n_pix >= 1, "geometry: n_pix must be >= 1");
    require(g.fov > 0.0 && std::isfinite(g.fov), "geometry: fov must be > 0");
    require(g.scan_range > 0.0 && g.scan_range <= two_pi + 1e-12,
            "geometry: scan_range must lie in (0, 2*pi]");
    require(std::isfinite(g.start_angle), "geometry: start_angle must be finite");
}

inline Geometry make_geometry(int n_det, double pitch, int n_views, double dso, double dsd, int n_pix,
                              double fov, double scan_range = two_pi, double start_angle = 0.0) {
    Geometry g{n_det, pitch, n_views, dso, dsd, n_pix, fov, scan_range, start_angle};
    validate(g);
    return g;
}

/// The 1440-channel, 1200-view acquisition used for the synthetic experiments.
inline Geometry reference_geometry(int n_pix = 512, int n_views = 1200) {
    return make_geometry(1440, 1.0, n_views, 800.0, 1400.0, n_pix, default_fov(1440, 1.0, 800.0, 1400.0));
}

/// Central-channel ROI: how many channels survive and the radius they cover.
struct RoiSpec {
    int n_det_kept = 0;
    double radius = 0.0;
};

inline RoiSpec make_roi(const Geometry& geom, int n_det_kept) {
    RoiSpec roi{n_det_kept, roi_radius(geom, n_det_kept)};
    require(roi.radius > 0.0, "roi: radius must be positive");
    return roi;
}

/// Half-length of the chord at signed offset v through a disk of radius R.
inline double chord_tau(double radius, double v) {
    require(radius > 0.0, "chord_tau: radius must be positive");
    require(std::abs(v) < radius, "chord_tau: chord offset lies outside the ROI");
    return std::sqrt(radius * radius - v * v);
}

/// A chord of the family with unit direction (cos direction, sin direction).
struct ChordSpec {
    double direction = 0.0;
    double v = 0.0;
    double tau = 0.0;
};

inline ChordSpec make_chord(double direction, double radius, double v) {
    return ChordSpec{direction, v, chord_tau(radius, v)};
}

/// Uniform abscissae on [-tau, tau], both endpoints included.
inline std::vector<double> chord_grid(double tau, int n_samples) {
    require(n_samples >= 2, "chord_grid: need at least two samples");
    require(tau > 0.0, "chord_grid: tau must be positive");
    std::vector<double> u(n_samples);
    const double h = 2.0 * tau / (n_samples - 1);
    for (int k = 0; k < n_samples; ++k) u[k] = -tau + k * h;
    u.back() = tau;
    return u;
}

inline std::vector<double> chord_grid(const ChordSpec& spec, int n_samples) {
    return chord_grid(spec.tau, n_samples);
}

inline void to_json(nlohmann::json& j, const Geometry& g) {
    j = nlohmann::json{{"n_det", g.n_det},     {"pitch", g.pitch}, {"n_views", g.n_views},
                       {"dso", g.dso},         {"dsd", g.dsd},     {"n_pix", g.n_pix},
                       {"fov", g.fov},         {"scan_range", g.scan_range},
                       {"start_angle", g.start_angle}};
}

inline void from_json(const nlohmann::json& j, Geometry& g) {
    try {
        g.n_det = j.at("n_det").get<int>();
        g.pitch = j.at("pitch").get<double>();
        g.n_views = j.at("n_views").get<int>();
        g.dso = j.at("dso").get<double>();
        g.dsd = j.at("dsd").get<double>();
        g.n_pix = j.at("n_pix").get<int>();
        g.fov = j.at("fov").get<double>();
        g.scan_range = j.value("scan_range", two_pi);
        g.start_angle = j.value("start_angle", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("geometry json: ") + e.what());
    }
    validate(g);
}

} // namespace interior_ct
