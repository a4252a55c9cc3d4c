#include <catch2/catch.hpp>

#include "perihom/materials.hpp"
#include "oracles.hpp"

using namespace perihom;

TEST_CASE("elastic law at the identity") {
    Vec2 y(0.3, 0.7);
    ElasticLaw sf;  // stress-free, q = 4, alpha default
    sf.alpha = ScalarCoefficient::constant(1.0);
    auto [w, dw] = elastic_eval(sf, y, Mat2::Identity());
    CHECK(w == Approx(5.0).epsilon(1e-14));
    CHECK(dw.norm() < 1e-14);

    ElasticLaw plain = sf;
    plain.stress_free_id = false;
    auto [w2, dw2] = elastic_eval(plain, y, Mat2::Identity());
    CHECK(w2 == Approx(3.0).epsilon(1e-14));
    CHECK((dw2 + 2.0 * Mat2::Identity()).norm() < 1e-13);
}

TEST_CASE("elastic law rejects non-positive determinants") {
    ElasticLaw law;
    Mat2 F;
    F << 1, 2, 2, 1;  // det = -3
    CHECK_THROWS_AS(law.eval(Vec2::Zero(), F), NonPositiveDet);
}

TEST_CASE("elastic stress matches finite differences") {
    std::mt19937 rng(11);
    ElasticLaw law;  // oscillating alpha
    std::uniform_real_distribution<double> yd(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        Vec2 y(yd(rng), yd(rng));
        Mat2 F = oracles::random_gl_plus(rng);
        auto [w, dw] = elastic_eval(law, y, F);
        Mat2 fd = oracles::fd_matrix_gradient(
            [&](const Mat2& M) { return law.eval(y, M); }, F);
        CHECK((dw - fd).norm() / std::max(1.0, fd.norm()) < 1e-6);
    }
}

TEST_CASE("strain gradient law values") {
    StrainGradientLaw law;
    law.beta = ScalarCoefficient::constant(1.0);
    Vec2 y(0.2, 0.9);

    auto [h0, dh0] = gradient_eval(law, y, Tens3::zero());
    CHECK(h0 == 0.0);
    CHECK(dh0.norm() == 0.0);

    Tens3 g;
    g(0, 0, 0) = 1.0;  // |g| = 1
    auto [h, dh] = gradient_eval(law, y, g);
    CHECK(h == Approx(0.25).epsilon(1e-14));
    CHECK(dh.norm() == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("strain gradient stress matches finite differences") {
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> yd(0.0, 1.0);
    for (double p : {4.0, 2.0, 3.0}) {
        StrainGradientLaw law;
        law.p = p;
        for (int i = 0; i < 100; ++i) {
            Vec2 y(yd(rng), yd(rng));
            Tens3 G = oracles::random_tens3(rng);
            auto [h, dh] = gradient_eval(law, y, G);
            Tens3 fd = oracles::fd_tensor_gradient(
                [&](const Tens3& T) { return law.eval(y, T); }, G);
            CHECK((dh - fd).norm() / std::max(1.0, fd.norm()) < 1e-6);
        }
    }
}

TEST_CASE("strain gradient convexity at midpoints") {
    std::mt19937 rng(17);
    StrainGradientLaw law;
    std::uniform_real_distribution<double> yd(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        Vec2 y(yd(rng), yd(rng));
        Tens3 a = oracles::random_tens3(rng, 2.0);
        Tens3 b = oracles::random_tens3(rng, 2.0);
        Tens3 mid = 0.5 * (a + b);
        CHECK(law.eval(y, mid) <= 0.5 * (law.eval(y, a) + law.eval(y, b)) + 1e-12);
    }
}

TEST_CASE("dissipation values and rigid-rate invariance") {
    DissipationLaw law;
    law.delta = ScalarCoefficient::constant(1.0);
    Vec2 y(0.4, 0.6);

    auto [r, dr] = dissipation_eval(law, y, Mat2::Identity(), Mat2::Identity());
    CHECK(r == Approx(4.0).epsilon(1e-14));
    CHECK((dr - 4.0 * Mat2::Identity()).norm() < 1e-13);

    Mat2 skew;
    skew << 0, 1, -1, 0;
    auto [rs, drs] = dissipation_eval(law, y, Mat2::Identity(), skew);
    CHECK(rs == 0.0);
    CHECK(drs.norm() < 1e-15);
}

TEST_CASE("dissipation vanishes for skew rates at any state") {
    std::mt19937 rng(19);
    DissipationLaw law;
    std::uniform_real_distribution<double> yd(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        Vec2 y(yd(rng), yd(rng));
        Mat2 F = oracles::random_gl_plus(rng);
        Mat2 R0 = oracles::random_mat2(rng);
        Mat2 S = 0.5 * (R0 - R0.transpose());
        auto [r, dr] = dissipation_eval(law, y, F, S * F);
        CHECK(std::abs(r) < 1e-22);
        (void)dr;
    }
}

TEST_CASE("dissipation rate derivative matches finite differences") {
    std::mt19937 rng(23);
    DissipationLaw law;
    std::uniform_real_distribution<double> yd(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        Vec2 y(yd(rng), yd(rng));
        Mat2 F = oracles::random_gl_plus(rng);
        Mat2 Fdot = oracles::random_mat2(rng);
        auto [r, dr] = dissipation_eval(law, y, F, Fdot);
        Mat2 fd = oracles::fd_matrix_gradient(
            [&](const Mat2& V) { return law.eval(y, F, V); }, Fdot);
        CHECK((dr - fd).norm() / std::max(1.0, fd.norm()) < 1e-6);
        (void)r;
    }
}

TEST_CASE("dissipation is quadratic in the rate") {
    std::mt19937 rng(29);
    DissipationLaw law;
    Vec2 y(0.1, 0.8);
    Mat2 F = oracles::random_gl_plus(rng);
    Mat2 V = oracles::random_mat2(rng);
    double r1 = law.eval(y, F, V);
    CHECK(law.eval(y, F, 3.0 * V) == Approx(9.0 * r1).epsilon(1e-12));
}

TEST_CASE("growth bounds hold pointwise") {
    std::mt19937 rng(31);
    MaterialBundle b;  // defaults: oscillating coefficients in [1/2, 3/2]
    std::uniform_real_distribution<double> yd(0.0, 1.0);
    double c0w = b.elastic.growth_c0();
    for (int i = 0; i < 500; ++i) {
        Vec2 y(yd(rng), yd(rng));
        Mat2 F = oracles::random_gl_plus(rng, 0.6);
        double det = F.determinant();
        double w = b.elastic.eval(y, F);
        CHECK(w >= c0w * (F.squaredNorm() + std::pow(det, -b.elastic.q)) - 1e-12);

        Mat2 Fdot = oracles::random_mat2(rng);
        Mat2 Cdot = Fdot.transpose() * F + F.transpose() * Fdot;
        double r = b.dissipation.eval(y, F, Fdot);
        double c0 = b.dissipation.delta.min_value(), C0 = b.dissipation.delta.max_value();
        CHECK(2.0 * r >= c0 * Cdot.squaredNorm() - 1e-12);
        CHECK(2.0 * r <= C0 * Cdot.squaredNorm() + 1e-12);
    }
}

TEST_CASE("dissipation curvature is the exact quadratic form") {
    std::mt19937 rng(37);
    DissipationLaw law;
    Vec2 y(0.5, 0.25);
    Mat2 F = oracles::random_gl_plus(rng);
    Eigen::Matrix4d H = law.curvature(y, F);
    Mat2 V = oracles::random_mat2(rng);
    Eigen::Vector4d v(V(0, 0), V(0, 1), V(1, 0), V(1, 1));
    CHECK(0.5 * v.dot(H * v) == Approx(law.eval(y, F, V)).epsilon(1e-12));
}
