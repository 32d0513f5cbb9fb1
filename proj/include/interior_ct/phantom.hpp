#pragma once

#include <array>
#include <optional>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "json.hpp"

#include "error.hpp"
#include "geometry.hpp"
#include "image.hpp"
#include "parallel.hpp"

namespace interior_ct {

/**
 * Ellipse with density rho * (1 - r^2)^profile, where r is the normalized
 * radius (r = 1 on the boundary). profile == 0 gives a uniform ellipse.
 */
struct Ellipse {
    std::array<double, 2> center{0.0, 0.0};
    std::array<double, 2> semi_axes{1.0, 1.0};
    double angle = 0.0;
    double density = 1.0;
    int profile = 0;

    friend bool operator==(const Ellipse&, const Ellipse&) = default;
};

/// Densities of overlapping ellipses add.
struct Phantom {
    std::vector<Ellipse> ellipses;

    friend bool operator==(const Phantom&, const Phantom&) = default;
};

inline void validate(const Ellipse& e) {
    require(e.semi_axes[0] > 0.0 && e.semi_axes[1] > 0.0, "ellipse: semi axes must be positive");
    require(std::isfinite(e.center[0]) && std::isfinite(e.center[1]) && std::isfinite(e.angle) &&
                std::isfinite(e.density),
            "ellipse: non-finite parameter");
    require(e.profile >= 0 && e.profile <= 16, "ellipse: profile exponent must be in [0, 16]");
}

inline void validate(const Phantom& p) {
    for (const auto& e : p.ellipses) validate(e);
}

namespace detail {

/// int_{-h}^{h} (h^2 - w^2)^k dw / h^(2k+1), i.e. sqrt(pi) Gamma(k+1) / Gamma(k+3/2).
inline double profile_beta(int k) {
    return std::sqrt(pi) * std::tgamma(k + 1.0) / std::tgamma(k + 1.5);
}

} // namespace detail

inline double density_at(const Ellipse& e, double x, double y) {
    const double c = std::cos(e.angle), s = std::sin(e.angle);
    const double dx = x - e.center[0], dy = y - e.center[1];
    const double xr = (dx * c + dy * s) / e.semi_axes[0];
    const double yr = (-dx * s + dy * c) / e.semi_axes[1];
    const double r2 = xr * xr + yr * yr;
    if (r2 > 1.0) return 0.0;
    return e.profile == 0 ? e.density : e.density * std::pow(1.0 - r2, e.profile);
}

inline double density_at(const Phantom& p, double x, double y) {
    double v = 0.0;
    for (const auto& e : p.ellipses) v += density_at(e, x, y);
    return v;
}

/**
 * Exact integral of one ellipse along the line through `point` with unit
 * direction `dir`. The line is mapped to the frame where the ellipse is the
 * unit disk; there the chord is closed form.
 */
inline double line_integral(const Ellipse& e, std::array<double, 2> point, std::array<double, 2> dir) {
    const double c = std::cos(e.angle), s = std::sin(e.angle);
    const double px = point[0] - e.center[0], py = point[1] - e.center[1];
    const double qx = (px * c + py * s) / e.semi_axes[0];
    const double qy = (-px * s + py * c) / e.semi_axes[1];
    const double dx = (dir[0] * c + dir[1] * s) / e.semi_axes[0];
    const double dy = (-dir[0] * s + dir[1] * c) / e.semi_axes[1];
    const double lambda = std::hypot(dx, dy);
    const double cross = (qx * dy - qy * dx) / lambda;
    const double h2 = 1.0 - cross * cross;
    if (h2 <= 0.0) return 0.0;
    const double h = std::sqrt(h2);
    if (e.profile == 0) return e.density * 2.0 * h / lambda;
    return e.density * std::pow(h, 2 * e.profile + 1) * detail::profile_beta(e.profile) / lambda;
}

inline double line_integral(const Phantom& p, std::array<double, 2> point, std::array<double, 2> dir) {
    double v = 0.0;
    for (const auto& e : p.ellipses) v += line_integral(e, point, dir);
    return v;
}

/// Pixel value = mean density over supersample x supersample points per pixel.
inline Image rasterize(const Phantom& phantom, int n_pix, double fov, int supersample = 1) {
    require(supersample >= 1, "rasterize: supersample must be >= 1");
    validate(phantom);
    Image img = make_image(n_pix, fov);
    const double px = img.pixel_size();
    const double inv = 1.0 / (supersample * supersample);
    parallel_for(n_pix, [&](int i) {
        for (int j = 0; j < n_pix; ++j) {
            double acc = 0.0;
            for (int a = 0; a < supersample; ++a)
                for (int b = 0; b < supersample; ++b) {
                    const double x = img.x(j) + ((b + 0.5) / supersample - 0.5) * px;
                    const double y = img.y(i) - ((a + 0.5) / supersample - 0.5) * px;
                    acc += density_at(phantom, x, y);
                }
            img.data(i, j) = acc * inv;
        }
    });
    return img;
}

/// Source position and unit ray direction for fan-beam channel `det` of view `view`.
inline void fan_ray(const Geometry& g, int view, double det, std::array<double, 2>& source,
                    std::array<double, 2>& dir) {
    const double b = g.view_angle(view);
    const double cb = std::cos(b), sb = std::sin(b);
    const double t = g.det_coord(det);
    source = {g.dso * cb, g.dso * sb};
    const double dx = -g.dsd * cb - t * sb;
    const double dy = -g.dsd * sb + t * cb;
    const double n = std::hypot(dx, dy);
    dir = {dx / n, dy / n};
}

/// Exact line integrals; when n_det_kept is given the data are truncated to the central channels.
inline Sinogram analytic_sinogram(const Phantom& phantom, const Geometry& geom, std::optional<int> n_det_kept = {}) {
    validate(geom);
    validate(phantom);
    Sinogram sino = make_sinogram(geom);
    parallel_for(geom.n_views, [&](int v) {
        for (int d = 0; d < geom.n_det; ++d) {
            std::array<double, 2> src, dir;
            fan_ray(geom, v, d, src, dir);
            sino.data(v, d) = line_integral(phantom, src, dir);
        }
    });
    if (n_det_kept) return truncate(sino, *n_det_kept);
    return sino;
}

/// Rotates the phantom counterclockwise about isocenter.
inline Phantom rotated(const Phantom& p, double angle) {
    Phantom out = p;
    const double c = std::cos(angle), s = std::sin(angle);
    for (auto& e : out.ellipses) {
        const auto [x, y] = e.center;
        e.center = {c * x - s * y, s * x + c * y};
        e.angle += angle;
    }
    return out;
}

/// Mirror x -> -x (left-right flip of the displayed image).
inline Phantom mirrored_horizontal(const Phantom& p) {
    Phantom out = p;
    for (auto& e : out.ellipses) {
        e.center[0] = -e.center[0];
        e.angle = -e.angle;
    }
    return out;
}

/// Mirror y -> -y (up-down flip of the displayed image).
inline Phantom mirrored_vertical(const Phantom& p) {
    Phantom out = p;
    for (auto& e : out.ellipses) {
        e.center[1] = -e.center[1];
        e.angle = -e.angle;
    }
    return out;
}

/// Single uniform body ellipse of water density.
inline Phantom uniform_body_phantom() {
    return Phantom{{Ellipse{{0.0, 0.0}, {180.0, 140.0}, 0.0, 1.0, 0}}};
}

/**
 * Body plus contrast inserts at several radii, including inserts straddling
 * the 380-channel ROI boundary (R ~ 107.6 mm) and dense inserts outside it.
 * `profile` applies to the body only: 0 gives a piecewise-constant phantom.
 */
inline Phantom body_phantom(int body_profile) {
    Phantom p;
    p.ellipses = {
        Ellipse{{0.0, 0.0}, {180.0, 140.0}, 0.0, 1.0, body_profile},
        Ellipse{{0.0, 0.0}, {25.0, 25.0}, 0.0, 0.2, 0},
        Ellipse{{-50.0, 40.0}, {15.0, 25.0}, 0.5, -0.15, 0},
        Ellipse{{60.0, -30.0}, {12.0, 12.0}, 0.0, 0.3, 0},
        Ellipse{{95.0, 0.0}, {8.0, 8.0}, 0.0, 0.25, 0},
        Ellipse{{-70.0, -70.0}, {10.0, 10.0}, 0.0, 0.2, 0},
        Ellipse{{0.0, 100.0}, {20.0, 8.0}, 0.0, -0.1, 0},
        Ellipse{{140.0, 60.0}, {20.0, 15.0}, 0.3, 0.4, 0},
        Ellipse{{-130.0, -40.0}, {18.0, 18.0}, 0.0, 0.3, 0},
    };
    return p;
}

inline Phantom piecewise_constant_phantom() { return body_phantom(0); }

/// Every ellipse has a (1 - r^2)^2 profile, so the density is C^1.
inline Phantom smooth_phantom() {
    Phantom p = body_phantom(2);
    for (auto& e : p.ellipses) e.profile = 2;
    return p;
}

/// Deterministic 53-bit uniform draws; std distributions are not portable across libraries.
class UniformSource {
  public:
    explicit UniformSource(std::uint64_t seed) : engine_(seed) {}
    double operator()() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double operator()(double lo, double hi) { return lo + (hi - lo) * (*this)(); }

  private:
    std::mt19937_64 engine_;
};

/// Procedural body-like phantom: an elliptic body with a handful of random inserts inside it.
inline Phantom random_phantom(UniformSource& rng, int body_profile = 0) {
    Phantom p;
    const double a = rng(140.0, 200.0), b = rng(110.0, 160.0);
    p.ellipses.push_back(Ellipse{{rng(-10.0, 10.0), rng(-10.0, 10.0)}, {a, b}, rng(-0.3, 0.3), 1.0, body_profile});
    const int n_inserts = 4 + static_cast<int>(rng() * 6.0);
    for (int k = 0; k < n_inserts; ++k) {
        const double r = rng(0.0, 0.8), phi = rng(0.0, two_pi);
        const double ex = r * a * 0.85 * std::cos(phi), ey = r * b * 0.85 * std::sin(phi);
        const double sa = rng(5.0, 30.0), sb = rng(5.0, 30.0);
        const double rho = rng() < 0.3 ? rng(-0.2, -0.05) : rng(0.05, 0.5);
        p.ellipses.push_back(Ellipse{{ex, ey}, {sa, sb}, rng(0.0, pi), rho, 0});
    }
    return p;
}

inline void to_json(nlohmann::json& j, const Ellipse& e) {
    j = nlohmann::json{{"center", e.center},
                       {"semi_axes", e.semi_axes},
                       {"angle", e.angle},
                       {"density", e.density},
                       {"profile", e.profile}};
}

inline void from_json(const nlohmann::json& j, Ellipse& e) {
    e.center = j.at("center").get<std::array<double, 2>>();
    e.semi_axes = j.at("semi_axes").get<std::array<double, 2>>();
    e.angle = j.value("angle", 0.0);
    e.density = j.at("density").get<double>();
    e.profile = j.value("profile", 0);
    validate(e);
}

inline void to_json(nlohmann::json& j, const Phantom& p) { j = nlohmann::json{{"ellipses", p.ellipses}}; }

/// Accepts {"ellipses": [...]} or a bare array of ellipse records.
inline void from_json(const nlohmann::json& j, Phantom& p) {
    try {
        const auto& list = j.is_array() ? j : j.at("ellipses");
        p.ellipses = list.get<std::vector<Ellipse>>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("phantom json: ") + e.what());
    }
}

} // namespace interior_ct
