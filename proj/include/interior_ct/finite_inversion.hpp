#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "error.hpp"
#include "geometry.hpp"
#include "hilbert.hpp"

namespace interior_ct {

/// w_tau(u) = pi * sqrt(tau^2 - u^2) on |u| <= tau.
inline double weight_w(double tau, double u) {
    require(tau > 0.0, "weight_w: tau must be positive");
    require(std::abs(u) <= tau * (1.0 + 1e-12), "weight_w: |u| exceeds tau");
    return pi * std::sqrt(std::max(0.0, tau * tau - u * u));
}

/**
 * p.v. int_{-tau}^{tau} sqrt(tau^2 - s^2) phi(s) / (u - s) ds at every node,
 * using p.v. int sqrt(tau^2 - s^2) / (u - s) ds = pi u for the subtracted
 * part. The weight vanishes at +-tau, so endpoint samples of phi may be
 * invalid; at such nodes the result is invalid too.
 */
inline ChordSignal weighted_cauchy(const ChordSignal& phi) {
    validate(phi);
    const int n = phi.size();
    const double tau = phi.tau;
    for (int k = 1; k < n - 1; ++k) require(phi.is_valid(k), "weighted_cauchy: interior samples must be valid");
    auto w = [&](int k) {
        if (k == 0 || k == n - 1) return 0.0;
        const double s = phi.position(k);
        return std::sqrt(std::max(0.0, tau * tau - s * s));
    };
    ChordSignal out{std::vector<double>(static_cast<std::size_t>(n), 0.0), tau, phi.v, {}};
    for (int i = 0; i < n; ++i) {
        if (!phi.is_valid(i)) {
            out.invalidate(i);
            continue;
        }
        const double u = phi.position(i);
        out.samples[static_cast<std::size_t>(i)] =
            detail::subtracted_cauchy(phi, i, w) + phi.samples[static_cast<std::size_t>(i)] * pi * u;
    }
    return out;
}

/**
 * Inverse finite Hilbert transform:
 *   f(u) = c / (pi sqrt(tau^2 - u^2))
 *          - 1 / (pi sqrt(tau^2 - u^2)) p.v. int sqrt(tau^2 - s^2) g~(s) / (u - s) ds
 * with c = int f. Returned on the open interior: the endpoints are invalid.
 */
inline ChordSignal finite_hilbert_inverse(const ChordSignal& g_tilde, double c) {
    validate(g_tilde);
    require(g_tilde.size() >= 3, "finite_hilbert_inverse: degenerate grid (need >= 3 samples)");
    require(std::isfinite(c), "finite_hilbert_inverse: chord integral must be finite");
    const ChordSignal cauchy = weighted_cauchy(g_tilde);
    const int n = g_tilde.size();
    ChordSignal f{std::vector<double>(static_cast<std::size_t>(n), 0.0), g_tilde.tau, g_tilde.v, {}};
    for (int i = 0; i < n; ++i) {
        const double u = f.position(i);
        if (i == 0 || i == n - 1 || !cauchy.is_valid(i)) {
            f.invalidate(i);
            continue;
        }
        f.samples[static_cast<std::size_t>(i)] = (c - cauchy.samples[static_cast<std::size_t>(i)]) / weight_w(f.tau, u);
    }
    return f;
}

/**
 * A function living outside the chord interval: values from `value`, support
 * given as closed intervals [a, b].
 */
struct ExteriorFunction {
    std::function<double(double)> value;
    std::vector<std::pair<double, double>> support;
};

namespace detail {

inline void check_exterior(const ExteriorFunction& psi, double tau) {
    require(tau > 0.0, "exterior function: tau must be positive");
    require(static_cast<bool>(psi.value) || psi.support.empty(), "exterior function: missing evaluator");
    for (const auto& [a, b] : psi.support) {
        require(a < b, "exterior function: support interval must have a < b");
        require(b <= -tau || a >= tau, "exterior function: support overlaps [-tau, tau]");
    }
}

inline bool touches(const ExteriorFunction& psi, double u) {
    for (const auto& [a, b] : psi.support)
        if (a == u || b == u) return true;
    return false;
}

} // namespace detail

/**
 * f_N(u) = -(1/pi) int_{R \ [-tau, tau]} psi(u') / (u - u') du' at the given
 * points (each strictly inside (-tau, tau)). No singularity arises there;
 * tanh-sinh handles supports that touch +-tau.
 */
inline std::vector<double> null_space_values(const ExteriorFunction& psi, double tau, std::span<const double> points) {
    detail::check_exterior(psi, tau);
    boost::math::quadrature::tanh_sinh<double> q;
    std::vector<double> out(points.size(), 0.0);
    for (std::size_t k = 0; k < points.size(); ++k) {
        const double u = points[k];
        require(std::abs(u) < tau, "null_space_values: evaluation point outside (-tau, tau)");
        double acc = 0.0;
        for (const auto& [a, b] : psi.support)
            acc += q.integrate([&](double s) { return psi.value(s) / (u - s); }, a, b);
        out[k] = -acc / pi;
    }
    return out;
}

/**
 * null_space_values on chord_grid(tau, n). Endpoints where the support
 * touches +-tau (the signal is unbounded there) are returned invalid.
 */
inline ChordSignal null_space_signal(const ExteriorFunction& psi, double tau, int n) {
    detail::check_exterior(psi, tau);
    const std::vector<double> u = chord_grid(tau, n);
    ChordSignal out{std::vector<double>(u.size(), 0.0), tau, 0.0, {}};
    std::vector<double> inner(u.begin() + 1, u.end() - 1);
    const std::vector<double> vals = null_space_values(psi, tau, inner);
    for (std::size_t k = 0; k < vals.size(); ++k) out.samples[k + 1] = vals[k];
    boost::math::quadrature::tanh_sinh<double> q;
    for (int end : {0, n - 1}) {
        const double ue = u[static_cast<std::size_t>(end)];
        if (detail::touches(psi, ue)) {
            out.invalidate(end);
            continue;
        }
        double acc = 0.0;
        for (const auto& [a, b] : psi.support)
            acc += q.integrate([&](double s) { return psi.value(s) / (ue - s); }, a, b);
        out.samples[static_cast<std::size_t>(end)] = -acc / pi;
    }
    return out;
}

/// A function on the whole chord line with compact support [lo, hi].
struct LineFunction {
    std::function<double(double)> value;
    double lo = 0.0;
    double hi = 0.0;
};

/// The exterior part of f on the line, as an ExteriorFunction relative to [-tau, tau].
inline ExteriorFunction exterior_part(const LineFunction& f, double tau) {
    require(f.lo < f.hi, "line function: empty support");
    ExteriorFunction psi{f.value, {}};
    if (f.lo < -tau) psi.support.emplace_back(f.lo, std::min(-tau, f.hi));
    if (f.hi > tau) psi.support.emplace_back(std::max(tau, f.lo), f.hi);
    return psi;
}

/**
 * g_N(u) = -(1/pi) int_{R \ [-tau, tau]} f(u') / (u - u') du', the part of
 * the full-line Hilbert data H f contributed by f outside the chord
 * interval, so that H f = T_tau f - g_N on (-tau, tau).
 */
inline ChordSignal dbp_null_component(const LineFunction& f, double tau, int n) {
    return null_space_signal(exterior_part(f, tau), tau, n);
}

/**
 * eps(u) = c - p.v. int sqrt(tau^2 - s^2) g_N(s) / (u - s) ds with
 * c = int_{-tau}^{tau} f. Needs g_N, which an interior scan never measures,
 * so this is a validation path.
 */
inline ChordSignal offset_epsilon(const ChordSignal& g_null, double c) {
    require(std::isfinite(c), "offset_epsilon: chord integral must be finite");
    ChordSignal eps = weighted_cauchy(g_null);
    for (int i = 0; i < eps.size(); ++i)
        if (eps.is_valid(i)) eps.samples[static_cast<std::size_t>(i)] = c - eps.samples[static_cast<std::size_t>(i)];
    return eps;
}

/// Relative half-width of the band next to +-tau where chord_inversion withholds values.
inline constexpr double chord_boundary_band = 0.02;

/**
 * Weighted inversion from truncated Hilbert data g and offset eps:
 *   (w_tau f)(u) = eps(u) - p.v. int sqrt(tau^2 - s^2) g(s) / (u - s) ds,
 * i.e. eps - h * (w_tau g) with h the 1/(pi u) kernel, then divided by w_tau.
 * Samples with |u| > (1 - chord_boundary_band) tau are flagged invalid.
 */
inline ChordSignal chord_inversion(const ChordSignal& g, const ChordSignal& eps) {
    validate(g);
    validate(eps);
    require(g.size() == eps.size() && std::abs(g.tau - eps.tau) <= 1e-12 * g.tau,
            "chord_inversion: g and eps must share a grid");
    const ChordSignal cauchy = weighted_cauchy(g);
    ChordSignal f{std::vector<double>(g.samples.size(), 0.0), g.tau, g.v, {}};
    for (int i = 0; i < g.size(); ++i) {
        const double u = f.position(i);
        if (std::abs(u) > (1.0 - chord_boundary_band) * g.tau || !cauchy.is_valid(i) || !eps.is_valid(i)) {
            f.invalidate(i);
            continue;
        }
        f.samples[static_cast<std::size_t>(i)] =
            (eps.samples[static_cast<std::size_t>(i)] - cauchy.samples[static_cast<std::size_t>(i)]) / weight_w(g.tau, u);
    }
    return f;
}

/// ||a - b|| / ||b|| over samples valid in both and with |u| <= (1 - band) tau.
inline double chord_relative_l2(const ChordSignal& a, const ChordSignal& b, double band = chord_boundary_band) {
    require(a.size() == b.size(), "chord_relative_l2: size mismatch");
    double num = 0.0, den = 0.0;
    for (int k = 0; k < a.size(); ++k) {
        if (!a.is_valid(k) || !b.is_valid(k)) continue;
        if (std::abs(a.position(k)) > (1.0 - band) * a.tau) continue;
        const double d = a.samples[static_cast<std::size_t>(k)] - b.samples[static_cast<std::size_t>(k)];
        num += d * d;
        den += b.samples[static_cast<std::size_t>(k)] * b.samples[static_cast<std::size_t>(k)];
    }
    require(den > 0.0, "chord_relative_l2: reference vanishes on the compared samples");
    return std::sqrt(num / den);
}

} // namespace interior_ct
