#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "fbp.hpp"
#include "finite_inversion.hpp"
#include "geometry.hpp"
#include "hilbert.hpp"
#include "image.hpp"
#include "parallel.hpp"

namespace interior_ct {

/**
 * Parallel-beam data P(theta, s) = int f(s n + l n_perp) dl with
 * n = (cos theta, sin theta), on theta_k = theta0 + k * dtheta and
 * s_j = (j - (n_s - 1) / 2) * ds. mask(k, j) == 0 marks samples that could
 * not be formed from measured fan data.
 */
struct ParallelSinogram {
    Grid data;
    Mask2D mask;
    double theta0 = 0.0;
    double dtheta = 0.0;
    double ds = 0.0;

    int n_theta() const { return data.rows(); }
    int n_s() const { return data.cols(); }
    double theta(int k) const { return theta0 + k * dtheta; }
    double s_center() const { return 0.5 * (n_s() - 1); }
    double s(int j) const { return (j - s_center()) * ds; }
};

/// Maps an angle into [0, pi).
inline double normalize_direction(double direction) {
    require(std::isfinite(direction), "direction must be finite");
    double d = std::fmod(direction, pi);
    if (d < 0.0) d += pi;
    if (d >= pi) d -= pi;
    return d;
}

namespace detail {

/// Bilinear sample of fan data at (view angle beta, channel position); false when it would touch unmeasured data.
inline bool sample_fan(const Sinogram& sino, double beta, double channel, double& out) {
    const Geometry& g = sino.geom;
    double pos = (beta - g.start_angle) / g.view_step();
    const int nv = g.n_views;
    if (g.full_scan()) {
        pos = std::fmod(pos, static_cast<double>(nv));
        if (pos < 0.0) pos += nv;
    } else if (pos < 0.0 || pos > nv - 1) {
        return false;
    }
    int v0 = static_cast<int>(std::floor(pos));
    const double wv = pos - v0;
    int v1 = v0 + 1;
    if (v0 >= nv) v0 -= nv;
    if (v1 >= nv) v1 = g.full_scan() ? v1 - nv : nv - 1;

    const int c0 = static_cast<int>(std::floor(channel));
    const double wc = channel - c0;
    const int c1 = c0 + 1;
    auto usable = [&](int c, double w) { return w == 0.0 || (c >= 0 && c < g.n_det && sino.mask[c]); };
    if (!usable(c0, 1.0 - wc) || !usable(c1, wc)) return false;
    auto at = [&](int v, int c) { return (c >= 0 && c < g.n_det) ? sino.data(v, c) : 0.0; };
    const double a = (1.0 - wc) * at(v0, c0) + wc * at(v0, c1);
    const double b = (1.0 - wc) * at(v1, c0) + wc * at(v1, c1);
    out = (1.0 - wv) * a + wv * b;
    return true;
}

} // namespace detail

/**
 * P(theta, s) from fan data. The line is sampled by its fan ray
 * (beta = theta + gamma - pi/2, gamma = asin(s / dso)) and by the conjugate
 * ray through (theta + pi, -s); available samples are averaged.
 */
inline bool parallel_sample(const Sinogram& sino, double theta, double s, double& out) {
    const Geometry& g = sino.geom;
    if (std::abs(s) >= g.dso) return false;
    const double gamma = std::asin(s / g.dso);
    const double t = g.dsd * std::tan(gamma);
    const double ch = t / g.pitch + g.det_center();
    const double ch_conj = -t / g.pitch + g.det_center();
    double acc = 0.0, a = 0.0;
    int n = 0;
    if (detail::sample_fan(sino, theta + gamma - 0.5 * pi, ch, a)) acc += a, ++n;
    if (detail::sample_fan(sino, theta - gamma + 0.5 * pi, ch_conj, a)) acc += a, ++n;
    if (n == 0) return false;
    out = acc / n;
    return true;
}

/// Rebins fan data onto n_theta angles from theta0 with step dtheta and n_s centered bins of width ds.
inline ParallelSinogram rebin_to_parallel(const Sinogram& sino, double theta0, double dtheta, int n_theta, double ds,
                                          int n_s) {
    validate(sino.geom);
    require(n_theta >= 1 && n_s >= 1, "rebin: empty output grid");
    require(ds > 0.0 && std::isfinite(dtheta), "rebin: invalid sampling");
    ParallelSinogram p{Grid(n_theta, n_s, 0.0), Mask2D(n_theta, n_s, 0), theta0, dtheta, ds};
    parallel_for(n_theta, [&](int k) {
        const double th = p.theta(k);
        for (int j = 0; j < n_s; ++j) {
            double v = 0.0;
            if (parallel_sample(sino, th, p.s(j), v)) {
                p.data(k, j) = v;
                p.mask(k, j) = 1;
            }
        }
    });
    return p;
}

/// Bin count covering |s| <= dso * sin(fan half angle) at spacing ds, with a two-bin margin.
inline int parallel_bins(const Geometry& g, double ds) {
    const double r = roi_radius(g, g.n_det);
    return 2 * static_cast<int>(std::ceil(r / ds)) + 5;
}

/**
 * Derivative of the projections along s at fixed theta (central difference,
 * one-sided next to unmeasured bins). Samples with no measured neighbour
 * are flagged.
 */
inline ParallelSinogram view_derivative(const ParallelSinogram& p) {
    require(p.n_theta() >= 3, "view_derivative: need at least 3 views, got " + std::to_string(p.n_theta()));
    require(p.n_s() >= 3, "view_derivative: need at least 3 detector bins");
    ParallelSinogram d{Grid(p.n_theta(), p.n_s(), 0.0), Mask2D(p.n_theta(), p.n_s(), 0), p.theta0, p.dtheta, p.ds};
    const int ns = p.n_s();
    parallel_for(p.n_theta(), [&](int k) {
        for (int j = 0; j < ns; ++j) {
            if (!p.mask(k, j)) continue;
            const bool l = j > 0 && p.mask(k, j - 1);
            const bool r = j < ns - 1 && p.mask(k, j + 1);
            double v;
            if (l && r) v = (p.data(k, j + 1) - p.data(k, j - 1)) / (2.0 * p.ds);
            else if (r) v = (p.data(k, j + 1) - p.data(k, j)) / p.ds;
            else if (l) v = (p.data(k, j) - p.data(k, j - 1)) / p.ds;
            else continue;
            d.data(k, j) = v;
            d.mask(k, j) = 1;
        }
    });
    return d;
}

/// Image of 2 pi times the Hilbert transform of f along (cos direction, sin direction).
struct DbpImage {
    Image image;
    double direction = 0.0;

    const Grid& data() const { return image.data; }
};

/**
 * Parallel data on the half turn used by the DBP for direction e: angles
 * direction + pi/2 + (k + 1/2) * pi / n_angles. On that half turn the ray
 * normal satisfies n . e < 0 throughout, so the sign weighting is constant.
 */
inline ParallelSinogram dbp_parallel_data(const Sinogram& sino, double direction, int n_angles = 0) {
    const Geometry& g = sino.geom;
    const int na = n_angles > 0 ? n_angles : g.n_views;
    require(na >= 3, "dbp: need at least 3 parallel angles");
    const double dth = pi / na;
    const double ds = g.iso_pitch();
    return rebin_to_parallel(sino, normalize_direction(direction) + 0.5 * pi + 0.5 * dth, dth, na, ds,
                             parallel_bins(g, ds));
}

/**
 * g(x) = -int_0^pi dP/ds(theta, x . n) sgn(n . e) dtheta at the given
 * points, from derivative data produced by view_derivative(dbp_parallel_data(...)).
 */
inline std::vector<double> dbp_values(const ParallelSinogram& deriv, std::span<const std::array<double, 2>> points) {
    const int na = deriv.n_theta();
    std::vector<double> c(static_cast<std::size_t>(na)), s(static_cast<std::size_t>(na));
    for (int k = 0; k < na; ++k) {
        c[k] = std::cos(deriv.theta(k));
        s[k] = std::sin(deriv.theta(k));
    }
    std::vector<double> out(points.size(), 0.0);
    const double sc = deriv.s_center();
    parallel_for(static_cast<int>(points.size()), [&](int i) {
        const auto [x, y] = points[static_cast<std::size_t>(i)];
        double acc = 0.0;
        for (int k = 0; k < na; ++k) {
            const double pos = (x * c[k] + y * s[k]) / deriv.ds + sc;
            acc += detail::sample_linear(deriv.data.row(k), pos);
        }
        out[static_cast<std::size_t>(i)] = acc * deriv.dtheta;
    });
    return out;
}

/**
 * Differentiated backprojection: fan data rebinned to parallel geometry,
 * differentiated along the detector, and backprojected with the sign weight.
 * For truncated data the result equals the full-data DBP inside the ROI
 * (roi_mask), since every ray through an ROI point is measured.
 */
inline DbpImage dbp_image(const Sinogram& sino, const Geometry& geom, double direction = 0.0, int n_angles = 0) {
    detail::check_sinogram(sino, geom);
    const double dir = normalize_direction(direction);
    const ParallelSinogram deriv = view_derivative(dbp_parallel_data(sino, dir, n_angles));
    Image img = make_image(geom.n_pix, geom.fov);
    std::vector<std::array<double, 2>> pts;
    pts.reserve(img.data.size());
    for (int i = 0; i < geom.n_pix; ++i)
        for (int j = 0; j < geom.n_pix; ++j) pts.push_back({img.x(j), img.y(i)});
    const std::vector<double> vals = dbp_values(deriv, pts);
    std::copy(vals.begin(), vals.end(), img.data.values().begin());
    img.roi_mask = disk_mask(geom.n_pix, geom.fov, measured_roi_radius(sino));
    return DbpImage{std::move(img), dir};
}

/// Line integrals along the chords x . e_perp = v (e_perp = (-sin d, cos d)) for each offset v.
inline std::vector<double> chord_integrals(const Sinogram& sino, double direction, std::span<const double> offsets) {
    const double theta = normalize_direction(direction) + 0.5 * pi;
    std::vector<double> c(offsets.size(), 0.0);
    for (std::size_t k = 0; k < offsets.size(); ++k) {
        double val = 0.0;
        require(parallel_sample(sino, theta, offsets[k], val),
                "chord_integrals: chord at v = " + std::to_string(offsets[k]) + " is not measured");
        c[k] = val;
    }
    return c;
}

/**
 * Chord family used by bpf_reconstruct: offsets v_m and chord nodes on a
 * lattice of the pixel spacing with the parity of the pixel centers, so for
 * direction 0 (or pi/2) nodes coincide with pixel centers.
 */
struct ChordLattice {
    double spacing = 0.0;
    double center = 0.0; // lattice index of the origin
    int count = 0;
    double radius = 0.0;

    double position(int k) const { return (k - center) * spacing; }
};

inline ChordLattice chord_lattice(const Geometry& geom, double radius) {
    ChordLattice l;
    l.spacing = geom.pixel_size();
    l.radius = radius;
    const double parity = (geom.n_pix % 2 == 0) ? 0.5 : 0.0;
    const int half = static_cast<int>(std::floor(radius / l.spacing - parity));
    l.count = 2 * half + 1 + (parity > 0.0 ? 1 : 0);
    l.center = 0.5 * (l.count - 1);
    return l;
}

/// Chord offsets v used by bpf_reconstruct for this geometry.
inline std::vector<double> bpf_chord_offsets(const Geometry& geom) {
    const ChordLattice lat = chord_lattice(geom, roi_radius(geom, geom.n_det));
    std::vector<double> v;
    for (int m = 0; m < lat.count; ++m) v.push_back(lat.position(m));
    return v;
}

/**
 * Backprojection filtration from full data: on each chord parallel to e,
 * g~ = g / (2 pi) of the DBP is inverted with finite_hilbert_inverse using
 * the chord integral c (computed from the data when `chord_c` is empty,
 * otherwise one value per bpf_chord_offsets entry). Chords span the full
 * field of view, which holds the whole object. Truncated data is rejected
 * unless allow_truncated is set, in which case unmeasured chord integrals
 * are taken as zero (a demonstration of the ill-posed case, not a solver).
 */
inline Image bpf_reconstruct(const Sinogram& sino, const Geometry& geom, double direction = 0.0,
                             std::span<const double> chord_c = {}, bool allow_truncated = false) {
    detail::check_sinogram(sino, geom);
    require(allow_truncated || !sino.truncated(),
            "bpf: the interior problem is ill-posed without prior knowledge; truncated data needs an interior "
            "solver (e.g. --method tv)");
    const double dir = normalize_direction(direction);
    const double R = roi_radius(geom, geom.n_det);
    const ChordLattice lat = chord_lattice(geom, R);
    const std::vector<double> offsets = bpf_chord_offsets(geom);
    require(chord_c.empty() || chord_c.size() == offsets.size(),
            "bpf: expected " + std::to_string(offsets.size()) + " chord integrals");
    std::vector<double> c(chord_c.begin(), chord_c.end());
    if (chord_c.empty()) {
        if (sino.truncated()) {
            c.assign(offsets.size(), 0.0);
            for (std::size_t m = 0; m < offsets.size(); ++m)
                if (double val = 0.0; parallel_sample(sino, dir + 0.5 * pi, offsets[m], val)) c[m] = val;
        } else {
            c = chord_integrals(sino, dir, offsets);
        }
    }

    const double ce = std::cos(dir), se = std::sin(dir);
    const ParallelSinogram deriv = view_derivative(dbp_parallel_data(sino, dir));

    // Node values f(u_k, v_m) on the lattice; zero off the chords.
    Grid nodes(lat.count, lat.count, 0.0);
    parallel_for(lat.count, [&](int m) {
        const double v = lat.position(m);
        if (std::abs(v) >= R) return;
        const double reach = std::sqrt(R * R - v * v);
        int first = 0;
        while (first < lat.count && lat.position(first) < -reach) ++first;
        const int last = lat.count - 1 - first;
        const int n = last - first + 1;
        if (n < 3) return;
        std::vector<std::array<double, 2>> pts(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            const double u = lat.position(first + k);
            pts[static_cast<std::size_t>(k)] = {u * ce - v * se, u * se + v * ce};
        }
        std::vector<double> g = dbp_values(deriv, pts);
        for (double& x : g) x /= two_pi;
        const ChordSignal f = finite_hilbert_inverse(ChordSignal{g, -lat.position(first), v, {}}, c[m]);
        for (int k = 0; k < n; ++k) nodes(m, first + k) = f.samples[static_cast<std::size_t>(k)];
    });

    Image img = make_image(geom.n_pix, geom.fov);
    parallel_for(geom.n_pix, [&](int i) {
        for (int j = 0; j < geom.n_pix; ++j) {
            const double x = img.x(j), y = img.y(i);
            const double pu = (x * ce + y * se) / lat.spacing + lat.center;
            const double pv = (-x * se + y * ce) / lat.spacing + lat.center;
            const int u0 = static_cast<int>(std::floor(pu)), v0 = static_cast<int>(std::floor(pv));
            const double wu = pu - u0, wv = pv - v0;
            auto at = [&](int m, int k) {
                return (m >= 0 && m < lat.count && k >= 0 && k < lat.count) ? nodes(m, k) : 0.0;
            };
            img.data(i, j) = (1.0 - wv) * ((1.0 - wu) * at(v0, u0) + wu * at(v0, u0 + 1)) +
                             wv * ((1.0 - wu) * at(v0 + 1, u0) + wu * at(v0 + 1, u0 + 1));
        }
    });
    return img;
}

} // namespace interior_ct
