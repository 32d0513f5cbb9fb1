#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "error.hpp"
#include "fft.hpp"
#include "geometry.hpp"

namespace interior_ct {

/**
 * A function sampled on the uniform grid chord_grid(tau, n) of the chord at
 * offset v. Samples flagged invalid (valid[k] == 0) carry no information,
 * e.g. points where the represented quantity is unbounded; they hold 0.
 * An empty `valid` means every sample is valid.
 */
struct ChordSignal {
    std::vector<double> samples;
    double tau = 1.0;
    double v = 0.0;
    std::vector<std::uint8_t> valid;

    int size() const { return static_cast<int>(samples.size()); }
    double spacing() const { return 2.0 * tau / (size() - 1); }
    double position(int k) const { return k == size() - 1 ? tau : -tau + k * spacing(); }
    bool is_valid(int k) const { return valid.empty() || valid[static_cast<std::size_t>(k)] != 0; }
    void invalidate(int k) {
        if (valid.empty()) valid.assign(samples.size(), 1);
        valid[static_cast<std::size_t>(k)] = 0;
        samples[static_cast<std::size_t>(k)] = 0.0;
    }
};

inline void validate(const ChordSignal& s) {
    require(s.size() >= 2, "chord signal: need at least two samples");
    require(s.tau > 0.0 && std::isfinite(s.tau), "chord signal: tau must be positive");
    require(s.valid.empty() || s.valid.size() == s.samples.size(), "chord signal: validity mask size mismatch");
    for (int k = 0; k < s.size(); ++k)
        require(!s.is_valid(k) || std::isfinite(s.samples[static_cast<std::size_t>(k)]),
                "chord signal: non-finite valid sample");
}

/// Samples f on chord_grid(tau, n).
template <typename F>
ChordSignal sample_chord(F&& f, double tau, int n, double v = 0.0) {
    const std::vector<double> u = chord_grid(tau, n);
    ChordSignal s{std::vector<double>(u.size()), tau, v, {}};
    for (std::size_t k = 0; k < u.size(); ++k) s.samples[k] = f(u[k]);
    return s;
}

/**
 * Discrete Hilbert transform with the 1/(pi (u - eta)) kernel (H cos = sin).
 * The spatial kernel of the ideal -i sgn(nu) multiplier on sampled data,
 * 2 / (pi n) at odd lags and 0 at even lags, is applied as a frequency-domain
 * product on a buffer zero padded to at least 4x the signal length, which
 * makes the convolution linear rather than circular.
 */
inline std::vector<double> hilbert_1d(std::span<const double> signal) {
    require(signal.size() >= 2, "hilbert_1d: need at least two samples");
    const std::size_t n = signal.size();
    const std::size_t len = next_pow2(4 * n);
    FftPlan kernel(len);
    auto kb = kernel.data();
    for (std::size_t k = 0; k < len; ++k) {
        const long m = signed_bin(k, len);
        kb[k] = (m % 2 != 0 && k != len / 2) ? 2.0 / (pi * static_cast<double>(m)) : 0.0;
    }
    kernel.forward();
    FftPlan plan(len);
    auto buf = plan.data();
    for (std::size_t k = 0; k < len; ++k) buf[k] = k < n ? signal[k] : 0.0;
    plan.forward();
    for (std::size_t k = 0; k < len; ++k) buf[k] *= kb[k];
    plan.backward();
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = buf[k].real();
    return out;
}

namespace detail {

/// Derivative of the valid samples at node k (central where possible).
inline double node_derivative(const ChordSignal& f, int k) {
    const int n = f.size();
    const double h = f.spacing();
    const bool left = k > 0 && f.is_valid(k - 1);
    const bool right = k < n - 1 && f.is_valid(k + 1);
    const auto& s = f.samples;
    if (left && right) return (s[k + 1] - s[k - 1]) / (2.0 * h);
    if (right) return (s[k + 1] - s[k]) / h;
    if (left) return (s[k] - s[k - 1]) / h;
    return 0.0;
}

/**
 * p.v. int_{-tau}^{tau} w(s) (phi(s) - phi(u_i)) / (u_i - s) ds by the
 * trapezoid rule on the signal's grid, where the node s = u_i contributes the
 * limit -w(u_i) phi'(u_i). Invalid nodes must have w = 0 there.
 */
template <typename Weight>
double subtracted_cauchy(const ChordSignal& phi, int i, Weight&& w) {
    const int n = phi.size();
    const double h = phi.spacing();
    const double ui = phi.position(i);
    const double fi = phi.samples[static_cast<std::size_t>(i)];
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        const double wk = w(k);
        if (wk == 0.0) continue;
        const double trap = (k == 0 || k == n - 1) ? 0.5 * h : h;
        double term;
        if (k == i) {
            term = -wk * node_derivative(phi, k);
        } else {
            if (!phi.is_valid(k)) continue;
            term = wk * (phi.samples[static_cast<std::size_t>(k)] - fi) / (ui - phi.position(k));
        }
        acc += trap * term;
    }
    return acc;
}

} // namespace detail

/**
 * Finite Hilbert transform T_tau f(u) = p.v. int_{-tau}^{tau} f(s) / (pi (u - s)) ds
 * of a sampled chord signal, by singularity subtraction:
 *   int (f(s) - f(u)) / (pi (u - s)) ds + f(u) / pi * ln((tau + u) / (tau - u)).
 * At u = +-tau the log term diverges unless f vanishes there; such endpoint
 * samples are returned invalid.
 */
inline ChordSignal finite_hilbert(const ChordSignal& f) {
    validate(f);
    for (int k = 1; k < f.size() - 1; ++k)
        require(f.is_valid(k), "finite_hilbert: interior samples must be valid");
    const int n = f.size();
    ChordSignal out{std::vector<double>(static_cast<std::size_t>(n), 0.0), f.tau, f.v, {}};
    const double tol = 1e-12 * (1.0 + [&] {
        double m = 0.0;
        for (double x : f.samples) m = std::max(m, std::abs(x));
        return m;
    }());
    for (int i = 0; i < n; ++i) {
        const double u = f.position(i);
        const double fi = f.samples[static_cast<std::size_t>(i)];
        const bool endpoint = i == 0 || i == n - 1;
        if (endpoint && (!f.is_valid(i) || std::abs(fi) > tol)) {
            out.invalidate(i);
            continue;
        }
        double val = detail::subtracted_cauchy(f, i, [&](int k) { return f.is_valid(k) ? 1.0 : 0.0; });
        if (!endpoint) val += fi * std::log((f.tau + u) / (f.tau - u));
        out.samples[static_cast<std::size_t>(i)] = val / pi;
    }
    return out;
}

/**
 * T_tau f at a single point for a callable f, by the same subtraction with
 * both halves integrated by tanh-sinh quadrature (robust to integrable
 * endpoint singularities such as 1/sqrt(tau^2 - s^2)). Requires |u| < tau.
 */
template <typename F>
double finite_hilbert_at(F&& f, double tau, double u) {
    require(std::abs(u) < tau, "finite_hilbert_at: point must lie inside (-tau, tau)");
    const double fu = f(u);
    // Two-argument form: sc is the signed distance to the nearer endpoint.
    // Abscissae that round onto +-tau are dropped (an integrable endpoint
    // singularity contributes O(sqrt(ulp)) there).
    auto integrand = [&](double s, double sc) {
        const double d = u - s;
        if (std::abs(d) < 1e-13 * tau || std::abs(sc) <= 0.0 || std::abs(s) >= tau) return 0.0;
        return (f(s) - fu) / d;
    };
    boost::math::quadrature::tanh_sinh<double> q;
    const double left = q.integrate(integrand, -tau, u);
    const double right = q.integrate(integrand, u, tau);
    return (left + right + fu * std::log((tau + u) / (tau - u))) / pi;
}

/// T_tau f of a callable on chord_grid(tau, n); the endpoints are returned invalid.
template <typename F>
ChordSignal finite_hilbert(F&& f, double tau, int n, double v = 0.0) {
    const std::vector<double> u = chord_grid(tau, n);
    ChordSignal out{std::vector<double>(u.size(), 0.0), tau, v, {}};
    for (int k = 1; k < n - 1; ++k) out.samples[static_cast<std::size_t>(k)] = finite_hilbert_at(f, tau, u[static_cast<std::size_t>(k)]);
    out.invalidate(0);
    out.invalidate(n - 1);
    return out;
}

} // namespace interior_ct
