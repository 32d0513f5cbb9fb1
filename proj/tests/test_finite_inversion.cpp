#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <iostream>

#include <interior_ct/finite_inversion.hpp>

using namespace interior_ct;
using Catch::Approx;

namespace {

double trapezoid(const ChordSignal& f) {
    double c = 0.0;
    for (int k = 0; k < f.size(); ++k) c += (k == 0 || k == f.size() - 1 ? 0.5 : 1.0) * f.spacing() * f.samples[k];
    return c;
}

double bump(double u, double center, double half) {
    const double x = (u - center) / half;
    return x * x < 1.0 ? std::pow(1.0 - x * x, 3) : 0.0;
}

} // namespace

TEST_CASE("weight_w", "[inversion]") {
    CHECK(weight_w(2.0, 0.0) == Approx(2 * pi));
    CHECK(weight_w(1.0, 1.0) == 0.0);
    CHECK(weight_w(1.0, -1.0) == 0.0);
    CHECK(weight_w(1.0, 0.6) == Approx(0.8 * pi));
    CHECK_THROWS_AS(weight_w(1.0, 1.1), ValidationError);
    CHECK_THROWS_AS(weight_w(0.0, 0.0), ValidationError);
}

TEST_CASE("inverse of the airfoil data", "[inversion]") {
    const ChordSignal g = sample_chord([](double u) { return u; }, 1.0, 2049);
    const ChordSignal f = finite_hilbert_inverse(g, pi / 2);
    const ChordSignal want = sample_chord([](double u) { return std::sqrt(std::max(0.0, 1 - u * u)); }, 1.0, 2049);
    CHECK(chord_relative_l2(f, want) < 1e-2);
    CHECK_FALSE(f.is_valid(0));
    CHECK_FALSE(f.is_valid(2048));
}

TEST_CASE("inverse of zero data with zero mass is zero", "[inversion]") {
    const ChordSignal f = finite_hilbert_inverse(sample_chord([](double) { return 0.0; }, 3.0, 101), 0.0);
    for (int k = 1; k < 100; ++k) CHECK(f.samples[k] == 0.0);
    CHECK_THROWS_AS(finite_hilbert_inverse(ChordSignal{{0.0, 0.0}, 1.0, 0.0, {}}, 0.0), ValidationError);
    CHECK_THROWS_AS(finite_hilbert_inverse(ChordSignal{{0.0, 0.0, 0.0}, 1.0, 0.0, {}}, NAN), ValidationError);
}

TEST_CASE("mass alone inverts to the tricomi density", "[inversion]") {
    const double tau = 2.0, c = 3.0;
    const ChordSignal f = finite_hilbert_inverse(sample_chord([](double) { return 0.0; }, tau, 201), c);
    for (int k = 1; k < 200; ++k) CHECK(f.samples[k] == Approx(c / (pi * std::sqrt(tau * tau - std::pow(f.position(k), 2)))));
}

TEST_CASE("roundtrip converges under refinement", "[inversion][property]") {
    for (double tau : {1.0, 50.0}) {
        auto f = [tau](double u) { return bump(u, 0.1 * tau, 0.75 * tau) + 0.5 * bump(u, -0.4 * tau, 0.3 * tau); };
        double prev = 1e300;
        for (int n : {512, 1024, 2048}) {
            const ChordSignal F = sample_chord(f, tau, n + 1);
            const double e = chord_relative_l2(finite_hilbert_inverse(finite_hilbert(F), trapezoid(F)), F);
            CHECK(e < prev);
            prev = e;
        }
        CHECK(prev < 1e-2);
    }
}

TEST_CASE("null signal of an indicator", "[inversion]") {
    const ExteriorFunction psi{[](double) { return 1.0; }, {{1.5, 2.5}}};
    const ChordSignal fn = null_space_signal(psi, 1.0, 101);
    // -(1/pi) int_{1.5}^{2.5} ds / (u - s) = (1/pi) ln|(u - 2.5) / (u - 1.5)|
    for (int k = 0; k < fn.size(); ++k) {
        const double u = fn.position(k);
        CHECK(fn.samples[k] == Approx(std::log(std::abs((u - 2.5) / (u - 1.5))) / pi).epsilon(1e-10));
    }
    CHECK(fn.samples[50] > 0.0);
}

TEST_CASE("null signal edge cases", "[inversion]") {
    const ExteriorFunction zero{[](double) { return 0.0; }, {{-3.0, -1.5}}};
    for (double v : null_space_signal(zero, 1.0, 33).samples) CHECK(v == 0.0);
    const ExteriorFunction overlap{[](double) { return 1.0; }, {{0.5, 2.0}}};
    CHECK_THROWS_AS(null_space_signal(overlap, 1.0, 33), ValidationError);
}

TEST_CASE("null signal of a symmetric exterior function is odd", "[inversion][property]") {
    const ExteriorFunction psi{[](double s) { return std::exp(-std::abs(s)); }, {{-4.0, -1.2}, {1.2, 4.0}}};
    const ChordSignal fn = null_space_signal(psi, 1.0, 41);
    for (int k = 0; k <= 20; ++k) CHECK(fn.samples[k] == Approx(-fn.samples[40 - k]).margin(1e-12));
}

TEST_CASE("null signal blows up where the exterior touches the chord", "[inversion]") {
    const double tau = 0.5;
    const ExteriorFunction psi{[](double) { return 1.0; }, {{-1.0, -0.5}, {0.5, 1.5}}};
    const ChordSignal fn = null_space_signal(psi, tau, 401);
    CHECK_FALSE(fn.is_valid(0));
    CHECK_FALSE(fn.is_valid(400));
    for (int k = 360; k < 399; ++k) CHECK(std::abs(fn.samples[k + 1]) > std::abs(fn.samples[k]));
    for (int k = 1; k < 40; ++k) CHECK(std::abs(fn.samples[k]) > std::abs(fn.samples[k + 1]));
}

TEST_CASE("decomposition of the line hilbert transform", "[inversion]") {
    // H f = T_tau f - g_N on the chord, with H f from a closed form.
    // f = 1 on [-2, 2]: H f(u) = (1/pi) ln|(u + 2) / (u - 2)|.
    const LineFunction line{[](double) { return 1.0; }, -2.0, 2.0};
    const double tau = 1.0;
    const int n = 401;
    const ChordSignal t = finite_hilbert(sample_chord(line.value, tau, n));
    const ChordSignal gn = dbp_null_component(line, tau, n);
    double num = 0.0, den = 0.0;
    for (int k = 1; k < n - 1; ++k) {
        const double u = t.position(k);
        const double hf = std::log(std::abs((u + 2) / (u - 2))) / pi;
        num += std::pow(t.samples[k] - gn.samples[k] - hf, 2);
        den += hf * hf;
    }
    CHECK(std::sqrt(num / std::max(den, 1e-300)) < 1e-3);
}

TEST_CASE("dbp null component: interior support and scaling", "[inversion]") {
    const LineFunction inside{[](double u) { return bump(u, 0.0, 0.9); }, -0.9, 0.9};
    for (double v : dbp_null_component(inside, 1.0, 65).samples) CHECK(v == 0.0);
    const LineFunction f{[](double u) { return bump(u, 0.3, 2.0); }, -1.7, 2.3};
    const LineFunction f2{[](double u) { return 2.0 * bump(u, 0.3, 2.0); }, -1.7, 2.3};
    const ChordSignal a = dbp_null_component(f, 1.0, 65), b = dbp_null_component(f2, 1.0, 65);
    for (int k = 0; k < 65; ++k) CHECK(b.samples[k] == Approx(2 * a.samples[k]).margin(1e-12));
}

TEST_CASE("offset without a null component is the chord mass", "[inversion]") {
    const ChordSignal zero = sample_chord([](double) { return 0.0; }, 1.0, 33);
    const ChordSignal eps = offset_epsilon(zero, 1.7);
    for (double v : eps.samples) CHECK(v == 1.7);
}

TEST_CASE("chord inversion with the exact offset recovers f", "[inversion]") {
    const int n = 2049;
    const LineFunction line{[](double u) { return bump(u, -0.2, 1.4) * (1.0 + 0.3 * u); }, -1.6, 1.2};
    const ChordSignal f = sample_chord(line.value, 1.0, n);
    const ChordSignal gn = dbp_null_component(line, 1.0, n);
    ChordSignal g = finite_hilbert(f);
    for (int k = 1; k < n - 1; ++k) g.samples[k] -= gn.samples[k];
    const ChordSignal eps = offset_epsilon(gn, trapezoid(f));
    CHECK(chord_relative_l2(chord_inversion(g, eps), f) < 1e-2);
}

TEST_CASE("chord inversion of zero is zero and offsets act through the weight", "[inversion]") {
    const ChordSignal zero = sample_chord([](double) { return 0.0; }, 1.0, 201);
    const ChordSignal out = chord_inversion(zero, zero);
    for (double v : out.samples) CHECK(v == 0.0);
    const double delta = 0.01;
    ChordSignal eps = zero;
    for (auto& v : eps.samples) v = delta;
    const ChordSignal shifted = chord_inversion(zero, eps);
    for (int k = 0; k < 201; ++k) {
        if (!shifted.is_valid(k)) {
            CHECK(std::abs(shifted.position(k)) > 0.98);
            continue;
        }
        CHECK(shifted.samples[k] == Approx(delta / (pi * std::sqrt(1 - std::pow(shifted.position(k), 2)))));
    }
    CHECK(std::abs(shifted.samples[2]) > 4 * std::abs(shifted.samples[100]));
    CHECK_THROWS_AS(chord_inversion(zero, sample_chord([](double) { return 0.0; }, 1.0, 101)), ValidationError);
}

TEST_CASE("wrong offset constant: residual report", "[inversion][open]") {
    // Using the interior mass as the constant without the null correction leaves a
    // residual that measures how much the exterior matters for this chord.
    const int n = 1025;
    const LineFunction line{[](double u) { return bump(u, 0.0, 2.0); }, -2.0, 2.0};
    const ChordSignal f = sample_chord(line.value, 1.0, n);
    const ChordSignal gn = dbp_null_component(line, 1.0, n);
    ChordSignal g = finite_hilbert(f);
    for (int k = 1; k < n - 1; ++k) g.samples[k] -= gn.samples[k];
    ChordSignal naive = sample_chord([&](double) { return trapezoid(f); }, 1.0, n);
    const double exact = chord_relative_l2(chord_inversion(g, offset_epsilon(gn, trapezoid(f))), f);
    const double wrong = chord_relative_l2(chord_inversion(g, naive), f);
    std::cout << "null-component residual: exact offset " << exact << ", naive offset " << wrong << '\n';
    CHECK(exact < 1e-2);
    CHECK(wrong > 10 * exact);
}

TEST_CASE("finite hilbert of the exterior null signal: residual report", "[inversion][open]") {
    // The classical T_tau null function c / sqrt(tau^2 - u^2) is annihilated; the
    // signal built from an exterior psi is not, so only its size is reported.
    const double tau = 1.0;
    auto fn = [](double u) { return std::log(std::abs((u - 2.5) / (u - 1.5))) / pi; };
    double num = 0.0, den = 0.0, classical = 0.0;
    for (int k = -9; k <= 9; ++k) {
        const double u = 0.1 * k;
        const double t = finite_hilbert_at(fn, tau, u);
        num += t * t;
        den += fn(u) * fn(u);
        classical = std::max(classical, std::abs(finite_hilbert_at([](double s) { return 1.0 / std::sqrt(1 - s * s); }, tau, u)));
    }
    const double residual = std::sqrt(num / den);
    std::cout << "||T f_N|| / ||f_N|| on |u| <= 0.9 tau for psi = 1 on [1.5, 2.5]: " << residual << '\n';
    CHECK(std::isfinite(residual));
    CHECK(classical < 1e-6);
}
