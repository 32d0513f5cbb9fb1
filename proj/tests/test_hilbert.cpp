#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <interior_ct/hilbert.hpp>

using namespace interior_ct;
using Catch::Approx;

namespace {

double max_error(const ChordSignal& got, const std::function<double(double)>& want, double band) {
    double e = 0.0;
    for (int k = 0; k < got.size(); ++k) {
        const double u = got.position(k);
        if (std::abs(u) > (1.0 - band) * got.tau || !got.is_valid(k)) continue;
        e = std::max(e, std::abs(got.samples[k] - want(u)));
    }
    return e;
}

} // namespace

TEST_CASE("hilbert_1d maps cos to sin", "[hilbert]") {
    const int n = 1024;
    const double w = 2 * pi * 12 / n;
    std::vector<double> c(n);
    for (int k = 0; k < n; ++k) c[k] = std::cos(w * k);
    const auto h = hilbert_1d(c);
    double e = 0.0;
    for (int k = n / 4; k < 3 * n / 4; ++k) e = std::max(e, std::abs(h[k] - std::sin(w * k)));
    CHECK(e < 0.05);
}

TEST_CASE("hilbert_1d of a constant row is the transform of a box", "[hilbert]") {
    // The row is not periodized, so a constant is a box on [-1/2, n - 1/2]:
    // H = (c / pi) ln((k + 1/2) / (n - 1/2 - k)), which vanishes only at the center.
    const int n = 512;
    const std::vector<double> c(n, 3.0);
    const auto h = hilbert_1d(c);
    for (int k = 64; k < n - 64; ++k) CHECK(h[k] == Approx(3.0 / pi * std::log((k + 0.5) / (n - 0.5 - k))).margin(0.02));
    CHECK(std::abs(h[n / 2]) < 0.01);
    CHECK_THROWS_AS(hilbert_1d(std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("hilbert_1d applied twice is minus identity on a localized signal", "[hilbert][property]") {
    const int n = 2048;
    std::vector<double> f(n);
    for (int k = 0; k < n; ++k) {
        // Zero mean and first moment, so H f decays fast enough to fit in the row.
        const double x = (k - n / 2) / 30.0;
        f[k] = (4 * x * x - 2) * std::exp(-x * x);
    }
    const auto hh = hilbert_1d(hilbert_1d(f));
    double num = 0.0, den = 0.0;
    for (int k = 0; k < n; ++k) {
        num += (hh[k] + f[k]) * (hh[k] + f[k]);
        den += f[k] * f[k];
    }
    CHECK(std::sqrt(num / den) < 0.02);
}

TEST_CASE("hilbert_1d is linear and odd-symmetric", "[hilbert][property]") {
    std::mt19937 rng(5);
    std::normal_distribution<double> g;
    std::vector<double> a(301), b(301), ab(301), rev(301);
    for (int k = 0; k < 301; ++k) {
        a[k] = g(rng);
        b[k] = g(rng);
        ab[k] = 0.5 * a[k] - 3.0 * b[k];
        rev[300 - k] = a[k];
    }
    const auto ha = hilbert_1d(a), hb = hilbert_1d(b), hab = hilbert_1d(ab), hrev = hilbert_1d(rev);
    for (int k = 0; k < 301; ++k) {
        CHECK(hab[k] == Approx(0.5 * ha[k] - 3.0 * hb[k]).margin(1e-9));
        CHECK(hrev[300 - k] == Approx(-ha[k]).margin(1e-9));
    }
}

TEST_CASE("finite hilbert of the airfoil profile", "[hilbert]") {
    const ChordSignal f = sample_chord([](double s) { return std::sqrt(std::max(0.0, 1 - s * s)); }, 1.0, 2049);
    const ChordSignal t = finite_hilbert(f);
    CHECK(max_error(t, [](double u) { return u; }, 0.02) < 2e-3);
    CHECK(finite_hilbert_at([](double s) { return std::sqrt(1 - s * s); }, 1.0, 0.37) == Approx(0.37).margin(1e-8));
}

TEST_CASE("finite hilbert of a constant", "[hilbert]") {
    const ChordSignal one = sample_chord([](double) { return 1.0; }, 1.0, 1025);
    const ChordSignal t = finite_hilbert(one);
    auto want = [](double u) { return std::log((1 + u) / (1 - u)) / pi; };
    CHECK(max_error(t, want, 0.02) < 1e-10);
    CHECK_FALSE(t.is_valid(0));
    CHECK_FALSE(t.is_valid(1024));
    CHECK(finite_hilbert_at([](double) { return 1.0; }, 1.0, -0.5) == Approx(want(-0.5)).epsilon(1e-10));
}

TEST_CASE("finite hilbert of zero is zero", "[hilbert]") {
    const ChordSignal t = finite_hilbert(sample_chord([](double) { return 0.0; }, 2.0, 65));
    for (int k = 0; k < t.size(); ++k) CHECK(t.samples[k] == 0.0);
}

TEST_CASE("finite hilbert parity and scaling", "[hilbert][property]") {
    auto even = [](double s) { return std::exp(-4 * s * s) - std::exp(-4.0); };
    const ChordSignal t = finite_hilbert(sample_chord(even, 1.0, 801));
    for (int k = 1; k < 400; ++k) CHECK(t.samples[k] == Approx(-t.samples[800 - k]).margin(1e-10));
    CHECK(t.samples[400] == Approx(0.0).margin(1e-12));
    // T_tau of f(s / a) at a*u equals T_1 of f at u.
    const double a = 37.0;
    const ChordSignal ts = finite_hilbert(sample_chord([&](double s) { return even(s / a); }, a, 801));
    for (int k = 1; k < 800; k += 17) CHECK(ts.samples[k] == Approx(t.samples[k]).margin(1e-10));
}

TEST_CASE("finite hilbert rejects malformed chords", "[hilbert]") {
    CHECK_THROWS_AS(finite_hilbert(ChordSignal{{1.0}, 1.0, 0.0, {}}), ValidationError);
    CHECK_THROWS_AS(finite_hilbert(ChordSignal{{1.0, 2.0, 3.0}, 0.0, 0.0, {}}), ValidationError);
    CHECK_THROWS_AS(finite_hilbert(ChordSignal{{1.0, NAN, 3.0}, 1.0, 0.0, {}}), ValidationError);
    CHECK_THROWS_AS(finite_hilbert(ChordSignal{{1.0, 2.0, 3.0}, 1.0, 0.0, {1, 0, 1}}), ValidationError);
    CHECK_THROWS_AS(finite_hilbert_at([](double) { return 1.0; }, 1.0, 1.0), ValidationError);
}

TEST_CASE("tricomi weight is in the null space", "[hilbert]") {
    for (double tau : {0.5, 1.0, 50.0})
        for (double u : {-0.9, -0.3, 0.0, 0.45, 0.9}) {
            const double v = finite_hilbert_at([tau](double s) { return 1.0 / std::sqrt(tau * tau - s * s); }, tau,
                                               u * tau);
            CHECK(std::abs(v) < 1e-2 / tau);
        }
}

TEST_CASE("discrete finite hilbert converges under refinement", "[hilbert][property]") {
    auto f = [](double s) { return std::cos(3 * s) * (1 - s * s); };
    const double u0 = 0.25;
    const double exact = finite_hilbert_at(f, 1.0, u0);
    double prev = 1e300;
    for (int n : {129, 257, 513, 1025}) {
        const ChordSignal t = finite_hilbert(sample_chord(f, 1.0, n));
        const int k = static_cast<int>(std::lround((u0 + 1.0) / t.spacing()));
        REQUIRE(t.position(k) == Approx(u0));
        const double e = std::abs(t.samples[k] - exact);
        CHECK(e < prev);
        prev = e;
    }
    CHECK(prev < 1e-5);
}
