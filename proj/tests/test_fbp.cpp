#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <interior_ct/fbp.hpp>
#include <interior_ct/metrics.hpp>
#include <interior_ct/phantom.hpp>
#include <interior_ct/projector.hpp>

using namespace interior_ct;
using Catch::Approx;

namespace {

const Geometry& geom() {
    static const Geometry g = reference_geometry(128, 240);
    return g;
}

double mean_over(const Grid& g, const Mask2D& m) {
    double s = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
        if (m.values()[k]) s += g.values()[k];
    return s / static_cast<double>(count(m));
}

} // namespace

TEST_CASE("impulse row returns the Ram-Lak kernel", "[fbp]") {
    const double d = 0.7;
    Grid row(1, 65, 0.0);
    row(0, 32) = 1.0;
    const Grid h = filter_rows(row, d, {});
    CHECK(h(0, 32) == Approx(1.0 / (4 * d * d)).epsilon(1e-9));
    for (int n : {1, 3, 5, 15}) {
        const double odd = -1.0 / std::pow(pi * n * d, 2);
        CHECK(h(0, 32 + n) == Approx(odd).epsilon(1e-9));
        CHECK(h(0, 32 - n) == Approx(odd).epsilon(1e-9));
    }
    for (int n : {2, 4, 10}) CHECK(h(0, 32 + n) == Approx(0.0).margin(1e-12));
}

TEST_CASE("ramp filter removes the DC level of a constant row", "[fbp]") {
    const double d = 1.0;
    Grid row(1, 256, 1.0);
    const Grid h = filter_rows(row, d, {});
    double mean = 0.0;
    for (int k = 0; k < 256; ++k) mean += h(0, k) / 256.0;
    CHECK(std::abs(mean) < 0.02 * (1.0 / (4 * d * d)));
    // Away from the row ends the response is nearly flat zero.
    CHECK(std::abs(h(0, 128)) < 1e-2 * (1.0 / (4 * d * d)));
}

TEST_CASE("filter kinds and padding", "[fbp]") {
    CHECK(parse_filter_kind("ramp") == FilterKind::ramp);
    CHECK(parse_filter_kind("ramp-hann") == FilterKind::ramp_hann);
    CHECK_THROWS_AS(parse_filter_kind("shepp"), ValidationError);
    CHECK(filter_length(100, {}) == 256);
    CHECK_THROWS_AS(filter_length(100, FilterSpec{FilterKind::ramp, 1}), ValidationError);
    const auto r = ramp_response(64, 1.0, FilterKind::ramp);
    const auto h = ramp_response(64, 1.0, FilterKind::ramp_hann);
    CHECK(h[32] == Approx(0.0).margin(1e-12));
    CHECK(h[8] < r[8]);
    CHECK(r[16] > r[8]);
}

TEST_CASE("parker weights are complementary on conjugate rays", "[fbp][property]") {
    const double gm = 0.3;
    for (double beta : {0.05, 0.3, 0.9, 2.0, 3.0, 3.5}) {
        for (double gamma : {-0.25, -0.1, 0.0, 0.12, 0.29}) {
            const double conj_beta = beta + pi - 2 * gamma;
            if (conj_beta > pi + 2 * gm) continue;
            CHECK(parker_weight(beta, gamma, gm) + parker_weight(conj_beta, -gamma, gm) == Approx(1.0).margin(1e-12));
        }
    }
    CHECK(parker_weight(-0.1, 0.0, gm) == 0.0);
    CHECK(parker_weight(pi + 2 * gm + 0.1, 0.0, gm) == 0.0);
    CHECK(parker_weight(pi / 2, 0.0, gm) == 1.0);
}

TEST_CASE("fbp of zero data is zero", "[fbp]") {
    const Image img = fbp_reconstruct(make_sinogram(geom()), geom());
    for (double v : img.data.values()) CHECK(v == 0.0);
}

TEST_CASE("full-data fbp reproduces the phantom", "[fbp]") {
    const Phantom p = body_phantom(1);
    const Image rec = fbp_reconstruct(analytic_sinogram(p, geom()), geom());
    const Mask2D m = disk_mask(geom().n_pix, geom().fov, 0.45 * geom().fov);
    CHECK(psnr(rec.data, rasterize(p, geom().n_pix, geom().fov).data, PsnrMode::standard, &m) >= 38.0);
    CHECK_FALSE(rec.roi_mask.has_value());
}

TEST_CASE("short-scan fbp with parker weights", "[fbp]") {
    const Phantom p = body_phantom(1);
    const Geometry full = reference_geometry(128, 720);
    const Sinogram arc = select_arc(analytic_sinogram(p, full), 0.0, pi + 2 * full.fan_half_angle() + 0.02);
    const Image rec = fbp_reconstruct(arc, arc.geom);
    const Mask2D m = disk_mask(full.n_pix, full.fov, 0.45 * full.fov);
    CHECK(psnr(rec.data, rasterize(p, full.n_pix, full.fov).data, PsnrMode::standard, &m) >= 30.0);
    Geometry too_short = arc.geom;
    too_short.scan_range = pi;
    Sinogram bad = arc;
    bad.geom = too_short;
    CHECK_THROWS_AS(fbp_reconstruct(bad, too_short), ValidationError);
}

TEST_CASE("fbp rejects mismatched geometry", "[fbp]") {
    Geometry other = geom();
    other.dso = 700;
    CHECK_THROWS_AS(fbp_reconstruct(make_sinogram(geom()), other), ValidationError);
    CHECK_THROWS_AS(fbp_reconstruct(make_sinogram(reference_geometry(128, 120)), geom()), ValidationError);
}

TEST_CASE("cupping of full data vanishes", "[fbp]") {
    const Phantom p = uniform_body_phantom();
    const Image gt = rasterize(p, geom().n_pix, geom().fov);
    const Image cup = cupping_image(analytic_sinogram(p, geom()), geom(), gt);
    const Mask2D m = disk_mask(geom().n_pix, geom().fov, 0.45 * geom().fov);
    CHECK(std::abs(mean_over(cup.data, m)) < 0.01);
}

TEST_CASE("truncated fbp shows a cup that rises toward the roi boundary", "[fbp]") {
    const Phantom p = uniform_body_phantom();
    const int kept = 380;
    const Image gt = rasterize(p, geom().n_pix, geom().fov);
    const Sinogram s = analytic_sinogram(p, geom(), kept);
    const Image cup = cupping_image(s, geom(), gt);
    REQUIRE(cup.roi_mask.has_value());
    const double R = roi_radius(geom(), kept);
    CHECK(count(*cup.roi_mask) == count(disk_mask(geom().n_pix, geom().fov, R)));
    CHECK(cup.data(0, 0) == 0.0);
    double prev = -1e300;
    for (double r0 : {0.0, 0.3, 0.55, 0.8}) {
        const double m = mean_over(cup.data, annulus_mask(geom().n_pix, geom().fov, r0 * R, (r0 + 0.15) * R));
        CHECK(m > prev);
        CHECK(m > 0.0);
        prev = m;
    }
    CHECK(fbp_reconstruct(s, geom()).roi_mask.has_value());
}
