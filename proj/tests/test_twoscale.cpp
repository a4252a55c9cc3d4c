#include <catch2/catch.hpp>

#include "perihom/twoscale.hpp"
#include "perihom/funineq.hpp"
#include "oracles.hpp"

#include <random>

using namespace perihom;

namespace {

UnitCell center_cell(int m = 8) {
    Rational q(1, 4), t(3, 4);
    return build_unit_cell({q, q, t, t}, m);
}

C1Field random_field(const C1Space& space, std::mt19937& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    C1Field f(space);
    for (int i = 0; i < space.ndof(); ++i) f[i] = dist(rng);
    return f;
}

}  // namespace

TEST_CASE("unfolding a constant field") {
    UnitCell cell = center_cell();
    PerforatedDomain dom = build_domain(cell, {1, 2}, {Face::Left});
    C1Space space = C1Space::on_domain(dom);
    C1Field cst = space.interpolate([](const Vec2&, Vec2& v, Mat2& g, Tens3& h) {
        v = Vec2(1.25, -0.5);
        g.setZero();
        h = Tens3::zero();
    });
    TwoScaleSamples s = unfold(dom, cst, JetOrder::Value);
    for (int cell_id = 0; cell_id < s.n_cells(); ++cell_id)
        for (int q = 0; q < s.n_micro(); ++q) {
            CHECK(s.at(cell_id, q, 0) == Approx(1.25).margin(1e-13));
            CHECK(s.at(cell_id, q, 1) == Approx(-0.5).margin(1e-13));
        }
}

TEST_CASE("unfolding the coordinate map separates scales") {
    UnitCell cell = center_cell();
    PerforatedDomain dom = build_domain(cell, {1, 4}, {Face::Left});
    C1Space space = C1Space::on_domain(dom);
    C1Field coord = identity_field(space);
    TwoScaleSamples s = unfold(dom, coord, JetOrder::Value);
    double eps = dom.eps();
    for (int ky = 0; ky < dom.cells_y; ++ky)
        for (int kx = 0; kx < dom.cells_x; ++kx) {
            int cell_id = ky * dom.cells_x + kx;
            for (int q = 0; q < s.n_micro(); ++q) {
                Vec2 y = s.micro_pts[q];
                CHECK(s.at(cell_id, q, 0) == Approx(eps * (kx + y.x())).margin(1e-13));
                CHECK(s.at(cell_id, q, 1) == Approx(eps * (ky + y.y())).margin(1e-13));
            }
        }
}

TEST_CASE("unfolding isometry for random fields") {
    UnitCell cell = center_cell();
    std::mt19937 rng(101);
    for (int inv : {2, 4, 8}) {
        PerforatedDomain dom = build_domain(cell, {1, inv}, {Face::Left});
        C1Space space = C1Space::on_domain(dom);
        for (int trial = 0; trial < 50; ++trial) {
            C1Field f = random_field(space, rng);
            TwoScaleSamples s = unfold(dom, f, JetOrder::Value);
            double direct = integrate(
                space, [](const Vec2&, const Jet2& j) { return j.value.squaredNorm(); }, f);
            CHECK(std::abs(s.squared_norm() - direct) <= 1e-12 * std::max(1.0, direct));
        }
    }
}

TEST_CASE("unfolding is linear in the field") {
    UnitCell cell = center_cell();
    PerforatedDomain dom = build_domain(cell, {1, 2}, {Face::Left});
    C1Space space = C1Space::on_domain(dom);
    std::mt19937 rng(55);
    C1Field a = random_field(space, rng), b = random_field(space, rng);
    C1Field combo(space);
    combo.coeffs() = 2.0 * a.coeffs() - 0.5 * b.coeffs();
    TwoScaleSamples sa = unfold(dom, a, JetOrder::Grad);
    TwoScaleSamples sb = unfold(dom, b, JetOrder::Grad);
    TwoScaleSamples sc = unfold(dom, combo, JetOrder::Grad);
    double worst = 0.0;
    for (int cell_id = 0; cell_id < sc.n_cells(); ++cell_id)
        for (int q = 0; q < sc.n_micro(); ++q)
            for (int c = 0; c < 4; ++c)
                worst = std::max(worst, std::abs(sc.at(cell_id, q, c) - 2.0 * sa.at(cell_id, q, c) +
                                                 0.5 * sb.at(cell_id, q, c)));
    CHECK(worst < 1e-11);
}

TEST_CASE("gradient scaling of unfolded samples") {
    // d/dy of u(eps([x/eps] + y)) = eps (grad u)(...): finite differences in y
    // against the evaluated gradient, on a smooth interpolated field.
    UnitCell cell = solid_unit_cell(8);
    PerforatedDomain dom = build_domain(cell, {1, 4}, {Face::Left});
    C1Space space = C1Space::on_domain(dom);
    C1Field f = space.interpolate([](const Vec2& x, Vec2& v, Mat2& g, Tens3& h) {
        v = Vec2(std::sin(2 * x.x() + x.y()), std::cos(x.x() - x.y()));
        g(0, 0) = 2 * std::cos(2 * x.x() + x.y());
        g(0, 1) = std::cos(2 * x.x() + x.y());
        g(1, 0) = -std::sin(x.x() - x.y());
        g(1, 1) = std::sin(x.x() - x.y());
        h = Tens3::zero();  // mixed slots only; fine for an FD check
        h(0, 0, 1) = -2 * std::sin(2 * x.x() + x.y());
        h(1, 0, 1) = std::cos(x.x() - x.y());
    });
    double eps = dom.eps();
    double dy = 1.0 / 64.0;
    double worst = 0.0;
    for (auto [kx, ky] : {std::pair{0, 0}, {1, 2}, {3, 1}}) {
        for (double y1 : {0.25, 0.5}) {
            for (double y2 : {0.25, 0.75}) {
                auto value_at = [&](double a, double b) {
                    Vec2 x = eps * Vec2(kx + a, ky + b);
                    return space.eval_jet(f, x);
                };
                Jet2 mid = value_at(y1, y2);
                double fd1 = (value_at(y1 + dy, y2).value[0] - value_at(y1 - dy, y2).value[0]) /
                             (2 * dy);
                double fd2 = (value_at(y1, y2 + dy).value[1] - value_at(y1, y2 - dy).value[1]) /
                             (2 * dy);
                worst = std::max(worst, std::abs(fd1 - eps * mid.grad(0, 0)));
                worst = std::max(worst, std::abs(fd2 - eps * mid.grad(1, 1)));
            }
        }
    }
    CHECK(worst < 5.0 * dy * dy);
}

TEST_CASE("local averages of simple fields") {
    UnitCell cell = solid_unit_cell(8);
    PerforatedDomain dom = build_domain(cell, {1, 4}, {Face::Left});
    C1Space space = C1Space::on_domain(dom);

    C1Field cst = space.interpolate([](const Vec2&, Vec2& v, Mat2& g, Tens3& h) {
        v = Vec2(3.0, -2.0);
        g.setZero();
        h = Tens3::zero();
    });
    auto avg = local_average(dom, cst);
    for (const Vec2& a : avg) CHECK((a - Vec2(3.0, -2.0)).norm() < 1e-12);

    C1Field coord = identity_field(space);
    auto avg2 = local_average(dom, coord);
    double eps = dom.eps();
    for (int ky = 0; ky < dom.cells_y; ++ky)
        for (int kx = 0; kx < dom.cells_x; ++kx) {
            Vec2 a = avg2[ky * dom.cells_x + kx];
            CHECK(a.x() == Approx(eps * (kx + 0.5)).margin(1e-13));
            CHECK(a.y() == Approx(eps * (ky + 0.5)).margin(1e-13));
        }
}

TEST_CASE("global mean is preserved by local averaging") {
    UnitCell cell = solid_unit_cell(8);
    PerforatedDomain dom = build_domain(cell, {1, 4}, {Face::Left});
    C1Space space = C1Space::on_domain(dom);
    std::mt19937 rng(77);
    C1Field f = random_field(space, rng);
    auto avg = local_average(dom, f);
    Vec2 mean_of_avg = Vec2::Zero();
    double eps = dom.eps();
    for (const Vec2& a : avg) mean_of_avg += eps * eps * a;
    Vec2 global = Vec2::Zero();
    global.x() = integrate(space, [](const Vec2&, const Jet2& j) { return j.value[0]; }, f);
    global.y() = integrate(space, [](const Vec2&, const Jet2& j) { return j.value[1]; }, f);
    CHECK((mean_of_avg - global).norm() < 1e-12);
}

TEST_CASE("local averaging requires a global field") {
    UnitCell cell = center_cell();
    PerforatedDomain dom = build_domain(cell, {1, 2}, {Face::Left});
    C1Space space = C1Space::on_domain(dom);
    C1Field f = identity_field(space);
    CHECK_THROWS_AS(local_average(dom, f), FieldNotGlobal);
}

TEST_CASE("two-scale distance of matching smooth fields") {
    UnitCell cell = center_cell();
    PerforatedDomain dom = build_domain(cell, {1, 2}, {Face::Left});
    C1Space micro_space = C1Space::on_domain(dom);
    PerforatedDomain mdom = build_domain(solid_unit_cell(16), {1, 1}, {Face::Left});
    C1Space macro_space = C1Space::on_domain(mdom);

    // A global cubic is represented exactly on both grids.
    auto cubic = [](const Vec2& x, Vec2& v, Mat2& g, Tens3& h) {
        v = Vec2(x.x() * x.x() * x.x(), x.x() * x.y());
        g.setZero();
        g(0, 0) = 3 * x.x() * x.x();
        g(1, 0) = x.y();
        g(1, 1) = x.x();
        h = Tens3::zero();
        h(0, 0, 0) = 6 * x.x();
        h(1, 0, 1) = h(1, 1, 0) = 1.0;
    };
    C1Field u_micro = micro_space.interpolate(cubic);
    C1Field u_macro = macro_space.interpolate(cubic);
    CHECK(two_scale_distance(dom, u_micro, u_macro, JetOrder::Value) < 1e-10);
    CHECK(two_scale_distance(dom, u_micro, u_macro, JetOrder::Grad) < 1e-10);

    C1Field id_micro = identity_field(micro_space);
    C1Field id_macro = identity_field(macro_space);
    CHECK(two_scale_distance(dom, id_micro, id_macro, JetOrder::Grad) < 1e-12);
}

TEST_CASE("hess-order distance needs a corrector") {
    UnitCell cell = center_cell();
    PerforatedDomain dom = build_domain(cell, {1, 2}, {Face::Left});
    C1Space micro_space = C1Space::on_domain(dom);
    PerforatedDomain mdom = build_domain(solid_unit_cell(8), {1, 1}, {Face::Left});
    C1Space macro_space = C1Space::on_domain(mdom);
    C1Field a = identity_field(micro_space), b = identity_field(macro_space);
    CHECK_THROWS_AS(two_scale_distance(dom, a, b, JetOrder::Hess), MissingCorrector);
    CHECK(two_scale_distance(dom, a, b, JetOrder::Hess, nullptr, true) < 1e-11);
}

TEST_CASE("boundary unfolding carries the surface scaling") {
    UnitCell cell = center_cell();
    std::mt19937 rng(13);
    for (int inv : {2, 4}) {
        PerforatedDomain dom = build_domain(cell, {1, inv}, {Face::Left});
        C1Space space = C1Space::on_domain(dom);
        C1Field f = random_field(space, rng);
        BoundarySamples bs = unfold_boundary(dom, f);
        // Direct facet quadrature of |u|^2 over the hole boundary.
        QuadRule rule = QuadRule::gauss(4);
        double direct = 0.0;
        for (const auto& facet : dom.facets) {
            if (facet.tag != FacetTag::GammaEps) continue;
            int ex, ey;
            double tfix;
            if (facet.axis == 0) {
                ey = facet.iy;
                ex = (facet.ix > 0 && dom.is_solid(facet.ix - 1, ey)) ? facet.ix - 1 : facet.ix;
                tfix = (ex == facet.ix) ? 0.0 : 1.0;
            } else {
                ex = facet.ix;
                ey = (facet.iy > 0 && dom.is_solid(ex, facet.iy - 1)) ? facet.iy - 1 : facet.iy;
                tfix = (ey == facet.iy) ? 0.0 : 1.0;
            }
            for (size_t q = 0; q < rule.pts.size(); ++q) {
                double tx = facet.axis == 0 ? tfix : rule.pts[q];
                double ty = facet.axis == 0 ? rule.pts[q] : tfix;
                Jet2 j = space.eval_jet_local(f, ex, ey, tx, ty);
                direct += rule.wts[q] * dom.h * j.value.squaredNorm();
            }
        }
        CHECK(bs.squared_norm() ==
              Approx(dom.eps() * direct).epsilon(1e-12));
    }
}
