#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "image.hpp"
#include "parallel.hpp"
#include "phantom.hpp"

namespace interior_ct {

namespace detail {

/// Parameter interval where the line src + t*dir crosses the square [-half, half]^2.
inline bool clip_to_square(const std::array<double, 2>& src, const std::array<double, 2>& dir, double half,
                           double& t0, double& t1) {
    t0 = -1e300;
    t1 = 1e300;
    for (int a = 0; a < 2; ++a) {
        if (std::abs(dir[a]) < 1e-15) {
            if (std::abs(src[a]) > half) return false;
            continue;
        }
        double lo = (-half - src[a]) / dir[a], hi = (half - src[a]) / dir[a];
        if (lo > hi) std::swap(lo, hi);
        t0 = std::max(t0, lo);
        t1 = std::min(t1, hi);
    }
    return t1 > t0;
}

/**
 * Visits the bilinear taps of every integration sample along one ray:
 * visit(padded_index, weight) with weight = interpolation weight * step.
 * Indices address an (n_pix + 2)^2 buffer holding the image with a one-pixel
 * zero border, so no tap needs a bounds check. Samples sit at the midpoints
 * of equal sub-intervals of the clipped ray with step <= 0.5 pixel.
 */
template <typename Visit>
void trace_ray(int n_pix, double fov, const std::array<double, 2>& src, const std::array<double, 2>& dir,
               Visit&& visit) {
    const double px = fov / n_pix;
    const double half = 0.5 * fov + 0.5 * px;
    double t0, t1;
    if (!clip_to_square(src, dir, half, t0, t1)) return;
    const int n = std::max(1, static_cast<int>(std::ceil((t1 - t0) / (0.5 * px))));
    const double step = (t1 - t0) / n;
    const double c = 0.5 * (n_pix - 1) + 1.0;
    const std::size_t stride = static_cast<std::size_t>(n_pix) + 2;
    double col = (src[0] + (t0 + 0.5 * step) * dir[0]) / px + c;
    double row = c - (src[1] + (t0 + 0.5 * step) * dir[1]) / px;
    const double dcol = step * dir[0] / px, drow = -step * dir[1] / px;
    const double hi = static_cast<double>(n_pix) + 1.0 - 1e-9;
    for (int k = 0; k < n; ++k, col += dcol, row += drow) {
        const double cc = std::clamp(col, 0.0, hi), rr = std::clamp(row, 0.0, hi);
        const int j0 = static_cast<int>(cc), i0 = static_cast<int>(rr);
        const double fx = cc - j0, fy = rr - i0;
        const std::size_t base = static_cast<std::size_t>(i0) * stride + static_cast<std::size_t>(j0);
        visit(base, (1 - fx) * (1 - fy) * step);
        visit(base + 1, fx * (1 - fy) * step);
        visit(base + stride, (1 - fx) * fy * step);
        visit(base + stride + 1, fx * fy * step);
    }
}

/// Copies an image into a buffer with a one-pixel zero border.
inline std::vector<double> pad_image(const Grid& g) {
    const int n = g.rows();
    const std::size_t stride = static_cast<std::size_t>(n) + 2;
    std::vector<double> out(stride * stride, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out[(i + 1) * stride + (j + 1)] = g(i, j);
    return out;
}

} // namespace detail

/**
 * Ray-driven fan-beam projection of a bilinearly interpolated image.
 * Channels with a zero entry in `channel_mask` (when given) are skipped and
 * returned as zero; the result's mask copies channel_mask.
 */
inline Sinogram forward_project(const Image& img, const Geometry& geom,
                                const std::vector<std::uint8_t>* channel_mask = nullptr) {
    validate(geom);
    require(img.data.rows() == img.data.cols(), "forward_project: image must be square");
    require(std::abs(img.fov - geom.fov) <= 1e-9 * geom.fov, "forward_project: image fov differs from geometry fov");
    require(!channel_mask || static_cast<int>(channel_mask->size()) == geom.n_det,
            "forward_project: channel mask size mismatch");
    Sinogram sino = make_sinogram(geom);
    if (channel_mask) sino.mask = *channel_mask;
    const int n = img.n_pix();
    const std::vector<double> f = detail::pad_image(img.data);
    parallel_for(geom.n_views, [&](int v) {
        for (int d = 0; d < geom.n_det; ++d) {
            if (!sino.mask[d]) continue;
            std::array<double, 2> src, dir;
            fan_ray(geom, v, d, src, dir);
            double acc = 0.0;
            detail::trace_ray(n, img.fov, src, dir, [&](std::size_t idx, double w) { acc += w * f[idx]; });
            sino.data(v, d) = acc;
        }
    });
    return sino;
}

/// Exact adjoint of forward_project restricted to the sinogram's measured channels.
inline Image back_project_rays(const Sinogram& sino, int n_pix, double fov) {
    const Geometry& geom = sino.geom;
    const int nt = thread_count();
    const std::size_t stride = static_cast<std::size_t>(n_pix) + 2;
    std::vector<std::vector<double>> partial(static_cast<std::size_t>(nt), std::vector<double>(stride * stride, 0.0));
    parallel_for(geom.n_views, [&](int v) {
        auto& acc = partial[static_cast<std::size_t>(thread_index())];
        for (int d = 0; d < geom.n_det; ++d) {
            if (!sino.mask[d]) continue;
            const double val = sino.data(v, d);
            if (val == 0.0) continue;
            std::array<double, 2> src, dir;
            fan_ray(geom, v, d, src, dir);
            detail::trace_ray(n_pix, fov, src, dir, [&](std::size_t idx, double w) { acc[idx] += w * val; });
        }
    });
    Image out = make_image(n_pix, fov);
    for (const auto& p : partial)
        for (int i = 0; i < n_pix; ++i)
            for (int j = 0; j < n_pix; ++j) out.data(i, j) += p[(i + 1) * stride + (j + 1)];
    return out;
}

/**
 * Keeps n_views_kept uniformly spaced views over the same scan range. When the
 * count divides n_views the views are picked exactly; otherwise each kept
 * angle is linearly interpolated between its neighbouring measured views.
 */
inline Sinogram subsample_views(const Sinogram& sino, int n_views_kept) {
    require(n_views_kept >= 2, "subsample_views: need at least two views");
    require(n_views_kept <= sino.n_views(), "subsample_views: cannot add views");
    Geometry g = sino.geom;
    g.n_views = n_views_kept;
    Sinogram out{Grid(n_views_kept, sino.n_det(), 0.0), g, sino.mask};
    const int n = sino.n_views();
    const bool periodic = sino.geom.full_scan();
    for (int k = 0; k < n_views_kept; ++k) {
        if (n % n_views_kept == 0) {
            const int src = k * (n / n_views_kept);
            for (int d = 0; d < sino.n_det(); ++d) out.data(k, d) = sino.data(src, d);
            continue;
        }
        const double pos = static_cast<double>(k) * n / n_views_kept;
        int i0 = static_cast<int>(std::floor(pos));
        const double w = pos - i0;
        int i1 = i0 + 1;
        if (i1 >= n) i1 = periodic ? 0 : n - 1;
        for (int d = 0; d < sino.n_det(); ++d)
            out.data(k, d) = (1.0 - w) * sino.data(i0, d) + w * sino.data(i1, d);
    }
    return out;
}

/**
 * Extracts the contiguous arc of views starting nearest to `start_angle`
 * covering `scan_range` from a full-scan sinogram (short-scan experiments).
 */
inline Sinogram select_arc(const Sinogram& sino, double start_angle, double scan_range) {
    require(sino.geom.full_scan(), "select_arc: source sinogram must be a full scan");
    require(scan_range > 0.0 && scan_range <= two_pi, "select_arc: scan_range must be in (0, 2*pi]");
    const double step = sino.geom.view_step();
    const int n = sino.n_views();
    const int m = std::clamp(static_cast<int>(std::ceil(scan_range / step - 1e-9)), 2, n);
    double rel = std::fmod(start_angle - sino.geom.start_angle, two_pi);
    if (rel < 0) rel += two_pi;
    const int first = static_cast<int>(std::lround(rel / step)) % n;
    Geometry g = sino.geom;
    g.n_views = m;
    g.scan_range = m * step;
    g.start_angle = sino.geom.start_angle + first * step;
    Sinogram out{Grid(m, sino.n_det(), 0.0), g, sino.mask};
    for (int k = 0; k < m; ++k)
        for (int d = 0; d < sino.n_det(); ++d) out.data(k, d) = sino.data((first + k) % n, d);
    return out;
}

} // namespace interior_ct
