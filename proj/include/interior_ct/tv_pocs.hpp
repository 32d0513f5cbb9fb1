#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "error.hpp"
#include "fbp.hpp"
#include "geometry.hpp"
#include "image.hpp"
#include "parallel.hpp"
#include "projector.hpp"

namespace interior_ct {

struct TvParams {
    int n_outer = 30;
    /// TV descent step as a fraction of the size of the preceding data update.
    double tv_step = 0.2;
    int tv_inner = 20;
    /// Stop once the measured-ray residual falls below data_tol * ||p||.
    double data_tol = 1e-4;
    bool nonneg = true;
    double relaxation = 0.2;
    /// Views per ordered subset of the data-consistency sweep.
    int views_per_subset = 1;
};

inline void validate(const TvParams& p) {
    require(p.n_outer >= 1, "tv: n_outer must be >= 1");
    require(p.tv_step >= 0.0 && std::isfinite(p.tv_step), "tv: tv_step must be >= 0");
    require(p.tv_inner >= 0, "tv: tv_inner must be >= 0");
    require(p.data_tol >= 0.0, "tv: data_tol must be >= 0");
    require(p.relaxation > 0.0 && std::isfinite(p.relaxation), "tv: relaxation must be positive");
    require(p.views_per_subset >= 1, "tv: views_per_subset must be >= 1");
}

struct TvLogEntry {
    int iteration = 0;
    double data_residual = 0.0;
    double tv = 0.0;
};

struct TvResult {
    Image image;
    std::vector<TvLogEntry> log;
};

inline void write_residual_csv(std::ostream& os, const std::vector<TvLogEntry>& log) {
    os << "iteration,data_residual,tv\n";
    os.precision(17);
    for (const auto& e : log) os << e.iteration << ',' << e.data_residual << ',' << e.tv << '\n';
}

/// Thrown when the data residual grows for 5 consecutive outer iterations or overflows; carries the last iterate.
class DivergenceError : public std::runtime_error {
  public:
    DivergenceError(const std::string& what, TvResult partial)
        : std::runtime_error(what), partial_(std::move(partial)) {}
    const TvResult& partial() const { return partial_; }

  private:
    TvResult partial_;
};

namespace detail {

/// Smoothed isotropic TV: sum sqrt(dx^2 + dy^2 + eps^2) with forward differences.
inline double tv_value(const Grid& f, double eps) {
    const int n = f.rows(), m = f.cols();
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            const double dx = j + 1 < m ? f(i, j + 1) - f(i, j) : 0.0;
            const double dy = i + 1 < n ? f(i + 1, j) - f(i, j) : 0.0;
            acc += std::sqrt(dx * dx + dy * dy + eps * eps);
        }
    return acc;
}

inline Grid tv_gradient(const Grid& f, double eps) {
    const int n = f.rows(), m = f.cols();
    Grid g(n, m, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            const double dx = j + 1 < m ? f(i, j + 1) - f(i, j) : 0.0;
            const double dy = i + 1 < n ? f(i + 1, j) - f(i, j) : 0.0;
            const double r = std::sqrt(dx * dx + dy * dy + eps * eps);
            const double ax = dx / r, ay = dy / r;
            g(i, j) -= ax + ay;
            if (j + 1 < m) g(i, j + 1) += ax;
            if (i + 1 < n) g(i + 1, j) += ay;
        }
    return g;
}

inline double dynamic_range(const Grid& f) {
    const auto [lo, hi] = std::minmax_element(f.values().begin(), f.values().end());
    return *hi - *lo;
}

/**
 * Normalized-gradient TV descent; each step is halved until TV does not
 * increase, so the phase is monotone in TV.
 */
inline void tv_descent(Grid& f, double step, int iterations, double eps) {
    double tv = tv_value(f, eps);
    for (int it = 0; it < iterations && step > 0.0; ++it) {
        const Grid g = tv_gradient(f, eps);
        const double norm = l2_norm(g.values());
        if (norm == 0.0) return;
        double a = step / norm;
        for (int tries = 0; tries < 30; ++tries, a *= 0.5) {
            Grid trial = f;
            for (std::size_t k = 0; k < trial.size(); ++k) trial.values()[k] -= a * g.values()[k];
            const double t = tv_value(trial, eps);
            if (t <= tv) {
                f = std::move(trial);
                tv = t;
                break;
            }
        }
    }
}

/**
 * One ordered-subset SART sweep over the measured rays: for each subset of
 * views, f += relaxation * A^T (r / A 1) / (A^T 1) with r = p - A f, the
 * normalizers accumulated while tracing.
 */
inline void sart_sweep(Grid& f, double fov, const Sinogram& sino, const Geometry& geom, double relaxation,
                       int views_per_subset) {
    const int n = f.rows();
    const std::size_t stride = static_cast<std::size_t>(n) + 2;
    const int n_sub = (geom.n_views + views_per_subset - 1) / views_per_subset;
    std::vector<int> channels;
    for (int d = 0; d < geom.n_det; ++d)
        if (sino.mask[d]) channels.push_back(d);
    const int nc = static_cast<int>(channels.size());
    std::vector<double> inside(stride * stride, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) inside[(i + 1) * stride + (j + 1)] = 1.0;
    const double floor_len = 1e-3 * fov / n;
    const int nt = thread_count();
    std::vector<std::vector<double>> num(static_cast<std::size_t>(nt)), den(static_cast<std::size_t>(nt));

    for (int s = 0; s < n_sub; ++s) {
        std::vector<int> views;
        for (int v = s; v < geom.n_views; v += n_sub) views.push_back(v);
        const int nr = static_cast<int>(views.size()) * nc;
        const std::vector<double> fp = pad_image(f);
        for (int t = 0; t < nt; ++t) {
            num[t].assign(stride * stride, 0.0);
            den[t].assign(stride * stride, 0.0);
        }
        parallel_for(nr, [&](int r) {
            const int v = views[static_cast<std::size_t>(r / nc)], d = channels[static_cast<std::size_t>(r % nc)];
            std::array<double, 2> src, dir;
            fan_ray(geom, v, d, src, dir);
            double proj = 0.0, len = 0.0;
            trace_ray(n, fov, src, dir, [&](std::size_t idx, double w) {
                proj += w * fp[idx];
                len += w * inside[idx];
            });
            if (len <= floor_len) return;
            const double corr = (sino.data(v, d) - proj) / len;
            auto& nb = num[static_cast<std::size_t>(thread_index())];
            auto& db = den[static_cast<std::size_t>(thread_index())];
            trace_ray(n, fov, src, dir, [&](std::size_t idx, double w) {
                nb[idx] += w * corr;
                db[idx] += w;
            });
        });
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const std::size_t idx = (i + 1) * stride + (j + 1);
                double a = 0.0, b = 0.0;
                for (int t = 0; t < nt; ++t) {
                    a += num[t][idx];
                    b += den[t][idx];
                }
                if (b > 0.0) f(i, j) += relaxation * a / b;
            }
    }
}

} // namespace detail

/**
 * TV-regularized POCS for truncated data: ordered-subset SART sweeps over
 * the measured rays, tv_inner steps of TV descent whose length is tv_step
 * times the size of the data update, then an optional nonnegativity clamp.
 * Starts from `init` or, by default, the truncated-data FBP image.
 */
inline TvResult tv_pocs_reconstruct(const Sinogram& sino, const Geometry& geom, const TvParams& params = {},
                                    const std::optional<Image>& init = {}) {
    detail::check_sinogram(sino, geom);
    validate(params);
    require(sino.n_measured() >= 1, "tv: sinogram has no measured channels");
    Image f = init ? *init : fbp_reconstruct(sino, geom);
    require(f.n_pix() == geom.n_pix && std::abs(f.fov - geom.fov) <= 1e-9 * geom.fov,
            "tv: initial image grid does not match geometry");
    f.roi_mask.reset();
    const int n_pix = geom.n_pix;
    const double fov = geom.fov;

    const double p_norm = l2_norm(sino.data.values());
    auto residual = [&](const Image& img) {
        const Sinogram ax = forward_project(img, geom, &sino.mask);
        double acc = 0.0;
        for (int v = 0; v < geom.n_views; ++v)
            for (int d = 0; d < geom.n_det; ++d)
                if (sino.mask[d]) {
                    const double r = sino.data(v, d) - ax.data(v, d);
                    acc += r * r;
                }
        return std::sqrt(acc);
    };

    const double eps = 1e-8 * std::max(detail::dynamic_range(f.data), 1e-12);
    TvResult result{f, {}};
    double prev = residual(f);
    int increases = 0;
    for (int it = 1; it <= params.n_outer; ++it) {
        const Grid before = f.data;
        detail::sart_sweep(f.data, fov, sino, geom, params.relaxation, params.views_per_subset);
        double change = 0.0;
        for (std::size_t k = 0; k < f.data.size(); ++k) {
            const double d = f.data.values()[k] - before.values()[k];
            change += d * d;
        }
        detail::tv_descent(f.data, params.tv_step * std::sqrt(change), params.tv_inner, eps);
        if (params.nonneg)
            for (auto& v : f.data.values()) v = std::max(v, 0.0);

        const double res = residual(f);
        result.log.push_back({it, res, detail::tv_value(f.data, eps)});
        result.image = f;
        if (!std::isfinite(res))
            throw DivergenceError("tv: data residual is not finite (iteration " + std::to_string(it) + ")", result);
        increases = res > prev ? increases + 1 : 0;
        prev = res;
        if (increases >= 5)
            throw DivergenceError("tv: data residual increased for 5 consecutive iterations (iteration " +
                                      std::to_string(it) + ")",
                                  result);
        if (p_norm > 0.0 && res <= params.data_tol * p_norm) break;
    }
    if (sino.truncated()) result.image.roi_mask = disk_mask(n_pix, fov, measured_roi_radius(sino));
    return result;
}

} // namespace interior_ct
