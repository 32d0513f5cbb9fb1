#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <interior_ct/phantom.hpp>
#include <interior_ct/projector.hpp>

using namespace interior_ct;
using Catch::Approx;

namespace {

const Geometry& geom() {
    static const Geometry g = make_geometry(256, 2.0, 90, 500, 900, 64, default_fov(256, 2.0, 500, 900));
    return g;
}

} // namespace

TEST_CASE("zero image projects to zero", "[projector]") {
    const Sinogram s = forward_project(make_image(64, geom().fov), geom());
    for (double v : s.data.values()) CHECK(v == 0.0);
}

TEST_CASE("projector matches analytic line integrals", "[projector]") {
    const Geometry g = reference_geometry(128, 90);
    const Phantom p = body_phantom(1);
    const double e = relative_l2(forward_project(rasterize(p, g.n_pix, g.fov, 2), g).data, analytic_sinogram(p, g).data);
    CHECK(e < 0.01);
}

TEST_CASE("projector is linear and masks channels", "[projector]") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    Image a = make_image(64, geom().fov), b = a;
    for (auto& v : a.data.values()) v = u(rng);
    for (auto& v : b.data.values()) v = u(rng);
    Image ab = a;
    for (std::size_t k = 0; k < ab.data.size(); ++k) ab.data.values()[k] = 2 * a.data.values()[k] - b.data.values()[k];
    const Sinogram pa = forward_project(a, geom()), pb = forward_project(b, geom()), pab = forward_project(ab, geom());
    for (std::size_t k = 0; k < pab.data.size(); ++k)
        CHECK(pab.data.values()[k] == Approx(2 * pa.data.values()[k] - pb.data.values()[k]).margin(1e-9));

    std::vector<std::uint8_t> mask(256, 0);
    for (int d = 100; d < 150; ++d) mask[d] = 1;
    const Sinogram pm = forward_project(a, geom(), &mask);
    CHECK(pm.mask == mask);
    CHECK(pm.data(5, 10) == 0.0);
    CHECK(pm.data(5, 120) == pa.data(5, 120));
}

TEST_CASE("back projection is the adjoint", "[projector][property]") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    Image x = make_image(64, geom().fov);
    for (auto& v : x.data.values()) v = u(rng);
    Sinogram y = truncate(make_sinogram(geom()), 180);
    for (int v = 0; v < y.n_views(); ++v)
        for (int d = 0; d < y.n_det(); ++d)
            if (y.mask[d]) y.data(v, d) = u(rng);
    const Sinogram ax = forward_project(x, geom(), &y.mask);
    const Image aty = back_project_rays(y, 64, geom().fov);
    double lhs = 0, rhs = 0;
    for (std::size_t k = 0; k < ax.data.size(); ++k) lhs += ax.data.values()[k] * y.data.values()[k];
    for (std::size_t k = 0; k < x.data.size(); ++k) rhs += x.data.values()[k] * aty.data.values()[k];
    CHECK(lhs == Approx(rhs).epsilon(1e-10));
}

TEST_CASE("truncate", "[projector]") {
    const Geometry g = reference_geometry(32, 4);
    Sinogram s = make_sinogram(g);
    for (auto& v : s.data.values()) v = 1.0;
    const Sinogram same = truncate(s, 1440);
    CHECK(same.data == s.data);
    CHECK_FALSE(same.truncated());
    const Sinogram t = truncate(s, 380);
    CHECK(t.n_measured() == 380);
    int zeroed = 0;
    for (int d = 0; d < g.n_det; ++d) zeroed += t.data(0, d) == 0.0;
    CHECK(zeroed == 1060);
    CHECK(t.mask[kept_block_start(1440, 380)] == 1);
    CHECK(t.mask[kept_block_start(1440, 380) - 1] == 0);
    CHECK(kept_block_start(1440, 380) == 530);
    // Truncation composes as the narrower block.
    CHECK(truncate(truncate(s, 600), 380).mask == t.mask);
    CHECK_THROWS_AS(truncate(s, 0), ValidationError);
    CHECK_THROWS_AS(truncate(s, 1441), ValidationError);
}

TEST_CASE("subsample views", "[projector]") {
    const Geometry g = reference_geometry(32, 1200);
    Sinogram s = make_sinogram(g);
    for (int v = 0; v < 1200; ++v) s.data(v, 0) = v;
    CHECK(subsample_views(s, 1200).data == s.data);
    const Sinogram k180 = subsample_views(s, 180);
    CHECK(k180.n_views() == 180);
    CHECK(k180.geom.view_step() == Approx(two_pi / 180));
    CHECK(k180.data(1, 0) == Approx(1200.0 / 180));
    const Sinogram k300 = subsample_views(s, 300);
    for (int k = 0; k < 300; ++k) CHECK(k300.data(k, 0) == 4 * k);
    CHECK_THROWS_AS(subsample_views(s, 1), ValidationError);
    CHECK_THROWS_AS(subsample_views(s, 1201), ValidationError);
}

TEST_CASE("select arc", "[projector]") {
    const Geometry g = reference_geometry(32, 120);
    Sinogram s = make_sinogram(g);
    for (int v = 0; v < 120; ++v) s.data(v, 7) = v;
    const Sinogram arc = select_arc(s, 3 * pi / 2, pi);
    CHECK(arc.n_views() == 60);
    CHECK(arc.geom.start_angle == Approx(3 * pi / 2));
    CHECK(arc.data(0, 7) == 90);
    CHECK(arc.data(59, 7) == 29);
    CHECK_FALSE(arc.geom.full_scan());
    CHECK_THROWS_AS(select_arc(arc, 0, pi), ValidationError);
}
