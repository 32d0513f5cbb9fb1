#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include <interior_ct/metrics.hpp>
#include <interior_ct/phantom.hpp>
#include <interior_ct/tv_pocs.hpp>

using namespace interior_ct;
using Catch::Approx;

namespace {

const Geometry& geom() {
    static const Geometry g = make_geometry(360, 4.0, 90, 800, 1400, 64, default_fov(360, 4.0, 800, 1400));
    return g;
}

Grid random_grid(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    Grid g(n, n);
    for (auto& v : g.values()) v = u(rng);
    return g;
}

} // namespace

TEST_CASE("tv parameters are validated", "[tv]") {
    CHECK_NOTHROW(validate(TvParams{}));
    CHECK(TvParams{}.views_per_subset == 1);
    TvParams p;
    p.n_outer = 0;
    CHECK_THROWS_AS(validate(p), ValidationError);
    p = {};
    p.relaxation = 0.0;
    CHECK_THROWS_AS(validate(p), ValidationError);
    p = {};
    p.tv_step = -1;
    CHECK_THROWS_AS(validate(p), ValidationError);
    p = {};
    p.views_per_subset = 0;
    CHECK_THROWS_AS(validate(p), ValidationError);
    p = {};
    p.tv_inner = -1;
    CHECK_THROWS_AS(validate(p), ValidationError);
}

TEST_CASE("tv gradient matches finite differences", "[tv][property]") {
    const Grid f = random_grid(9, 1);
    const double eps = 1e-3;
    const Grid g = detail::tv_gradient(f, eps);
    for (auto [i, j] : std::vector<std::pair<int, int>>{{0, 0}, {4, 4}, {8, 3}, {2, 8}}) {
        Grid a = f, b = f;
        a(i, j) += 1e-6;
        b(i, j) -= 1e-6;
        CHECK(g(i, j) == Approx((detail::tv_value(a, eps) - detail::tv_value(b, eps)) / 2e-6).margin(1e-5));
    }
}

TEST_CASE("tv descent never increases tv", "[tv][property]") {
    for (unsigned seed : {2u, 3u, 4u}) {
        Grid f = random_grid(24, seed);
        const double before = detail::tv_value(f, 1e-8);
        detail::tv_descent(f, 5.0, 10, 1e-8);
        CHECK(detail::tv_value(f, 1e-8) <= before);
        CHECK(detail::tv_value(f, 1e-8) < 0.9 * before);
    }
    Grid flat(8, 8, 2.0);
    detail::tv_descent(flat, 1.0, 5, 1e-8);
    for (double v : flat.values()) CHECK(v == 2.0);
}

TEST_CASE("a vanishing step returns the initial image", "[tv]") {
    const Sinogram s = analytic_sinogram(body_phantom(0), geom(), 200);
    const Image init = fbp_reconstruct(s, geom());
    TvParams p;
    p.n_outer = 1;
    p.tv_inner = 0;
    p.relaxation = 1e-12;
    p.nonneg = false;
    const TvResult r = tv_pocs_reconstruct(s, geom(), p, init);
    CHECK(relative_l2(r.image.data, init.data) < 1e-9);
    REQUIRE(r.log.size() == 1);
    CHECK(r.image.roi_mask.has_value());
}

TEST_CASE("zero data stays zero", "[tv]") {
    const Sinogram s = make_sinogram(geom());
    TvParams p;
    p.n_outer = 2;
    const TvResult r = tv_pocs_reconstruct(s, geom(), p);
    for (double v : r.image.data.values()) CHECK(v == 0.0);
}

TEST_CASE("data residual falls on consistent truncated data", "[tv]") {
    const Phantom ph = body_phantom(0);
    const Sinogram s = analytic_sinogram(ph, geom(), 200);
    TvParams p;
    p.n_outer = 6;
    const TvResult r = tv_pocs_reconstruct(s, geom(), p);
    REQUIRE(r.log.size() == 6);
    CHECK(r.log.back().data_residual < r.log.front().data_residual);
    for (double v : r.image.data.values()) CHECK(v >= 0.0);
    std::ostringstream os;
    write_residual_csv(os, r.log);
    CHECK(os.str().rfind("iteration,data_residual,tv\n1,", 0) == 0);
    const Image truth = rasterize(ph, geom().n_pix, geom().fov);
    const Mask2D roi = *r.image.roi_mask;
    CHECK(psnr(r.image.data, truth.data, PsnrMode::standard, &roi) >
          psnr(fbp_reconstruct(s, geom()).data, truth.data, PsnrMode::standard, &roi));
}

TEST_CASE("full data: tv stays close to fbp", "[tv]") {
    const Phantom ph = body_phantom(0);
    const Sinogram s = analytic_sinogram(ph, geom());
    const Image truth = rasterize(ph, geom().n_pix, geom().fov);
    const Mask2D m = disk_mask(geom().n_pix, geom().fov, 0.45 * geom().fov);
    const double fbp = psnr(fbp_reconstruct(s, geom()).data, truth.data, PsnrMode::standard, &m);
    TvParams p;
    p.n_outer = 10;
    const double tv = psnr(tv_pocs_reconstruct(s, geom(), p).image.data, truth.data, PsnrMode::standard, &m);
    CHECK(tv >= fbp - 1.0);
}

TEST_CASE("divergence raises with the last iterate", "[tv]") {
    const Sinogram s = analytic_sinogram(body_phantom(0), geom(), 200);
    TvParams p;
    p.n_outer = 12;
    p.relaxation = 2.5;
    p.tv_step = 0.0;
    p.nonneg = false;
    try {
        tv_pocs_reconstruct(s, geom(), p);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        REQUIRE(e.partial().log.size() == 5);
        for (std::size_t k = 1; k < 5; ++k) CHECK(e.partial().log[k].data_residual > e.partial().log[k - 1].data_residual);
        CHECK(e.partial().image.n_pix() == geom().n_pix);
    }
    p.relaxation = 100.0;
    try {
        tv_pocs_reconstruct(s, geom(), p);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.partial().log.size() == 1);
    }
}

TEST_CASE("tv rejects a mismatched initial image", "[tv]") {
    const Sinogram s = make_sinogram(geom());
    CHECK_THROWS_AS(tv_pocs_reconstruct(s, geom(), {}, make_image(32, geom().fov)), ValidationError);
}
