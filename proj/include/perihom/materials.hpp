#pragma once

// Concrete material laws: a polyconvex-type elastic potential with a
// det^{-q} barrier, a convex power-law strain-gradient potential, and a
// quadratic dissipation in the rate of the Cauchy-Green tensor. All laws
// carry an oscillating periodic coefficient and analytic first derivatives.

#include "perihom/common.hpp"

namespace perihom {

namespace detail {
// x^n for small non-negative integer n.
inline double ipow(double x, int n) {
    double r = 1.0;
    while (n > 0) {
        if (n & 1) r *= x;
        x *= x;
        n >>= 1;
    }
    return r;
}
// x^e with a fast path for small integer exponents.
inline double rpow(double x, double e) {
    int n = int(e);
    if (double(n) == e && n >= 0 && n <= 16) return ipow(x, n);
    return std::pow(x, e);
}
}  // namespace detail

// Y-periodic continuous coefficient 1-ish field: base + amp*sin(2*pi*y1)*sin(2*pi*y2).
struct ScalarCoefficient {
    double base = 1.0;
    double amp = 0.5;

    double operator()(const Vec2& y) const {
        return base + amp * std::sin(2.0 * M_PI * y.x()) * std::sin(2.0 * M_PI * y.y());
    }
    double min_value() const { return base - std::abs(amp); }
    double max_value() const { return base + std::abs(amp); }

    static ScalarCoefficient constant(double c) { return {c, 0.0}; }
};

// W(y,F) = alpha(y) * (|F|^2 + det(F)^{-q} [+ (q-2) det(F)])
// The optional linear det term makes u = id stress free.
struct ElasticLaw {
    ScalarCoefficient alpha;
    double q = 4.0;
    bool stress_free_id = true;

    double growth_c0() const { return alpha.min_value(); }  // W >= c0(|F|^2 + det^{-q}) - C0
    double growth_C0() const { return 0.0; }

    double eval(const Vec2& y, const Mat2& F, Mat2* dW = nullptr) const {
        double det = F.determinant();
        if (!(det > 0.0))
            throw NonPositiveDet("det(F) = " + std::to_string(det) + " at y = (" +
                                 std::to_string(y.x()) + ", " + std::to_string(y.y()) + ")");
        double a = alpha(y);
        double det_mq = 1.0 / detail::rpow(det, q);
        double w = F.squaredNorm() + det_mq;
        if (stress_free_id) w += (q - 2.0) * det;
        if (dW) {
            Mat2 cof;  // det(F) * F^{-T}
            cof << F(1, 1), -F(1, 0), -F(0, 1), F(0, 0);
            double scale = -q * det_mq / det;
            if (stress_free_id) scale += (q - 2.0);
            *dW = a * (2.0 * F + scale * cof);
        }
        return a * w;
    }
};

// H(y,G) = beta(y)/p * |G|^p, convex, with dH = beta |G|^{p-2} G.
struct StrainGradientLaw {
    ScalarCoefficient beta;
    double p = 4.0;

    bool quadratic() const { return p == 2.0; }

    double eval(const Vec2& y, const Tens3& G, Tens3* dH = nullptr) const {
        double b = beta(y);
        double n2 = G.squaredNorm();
        if (n2 == 0.0) {
            if (dH) *dH = Tens3::zero();
            return 0.0;
        }
        double np = detail::rpow(n2, p / 2.0);
        if (dH) {
            double c = b * detail::rpow(n2, (p - 2.0) / 2.0);
            *dH = c * G;
        }
        return b / p * np;
    }

    // Second derivative of H at G, as c1 * Id + c2 * G x G on tensor space.
    void curvature(const Vec2& y, const Tens3& G, double& c1, double& c2) const {
        double b = beta(y);
        double n2 = G.squaredNorm();
        if (p == 2.0) {
            c1 = b;
            c2 = 0.0;
            return;
        }
        if (n2 == 0.0) {
            c1 = 0.0;
            c2 = 0.0;
            return;
        }
        c1 = b * detail::rpow(n2, (p - 2.0) / 2.0);
        c2 = b * (p - 2.0) * detail::rpow(n2, (p - 4.0) / 2.0);
    }
};

// R(y,F,Fdot) = 1/2 delta(y) |Cdot|^2 with C = F^T F,
// Cdot = Fdot^T F + F^T Fdot, and d_{Fdot} R = 2 delta(y) F Cdot.
struct DissipationLaw {
    ScalarCoefficient delta;

    double eval(const Vec2& y, const Mat2& F, const Mat2& Fdot, Mat2* dRdot = nullptr) const {
        double d = delta(y);
        Mat2 Cdot = Fdot.transpose() * F + F.transpose() * Fdot;
        if (dRdot) *dRdot = 2.0 * d * (F * Cdot);
        return 0.5 * d * Cdot.squaredNorm();
    }

    // Exact Hessian in Fdot as a 4x4 over vec(F) = (F11,F12,F21,F22):
    // Hess[(ab),(cd)] = delta * L(E_ab) : L(E_cd) with L(V) = V^T F + F^T V.
    Eigen::Matrix4d curvature(const Vec2& y, const Mat2& F) const {
        double d = delta(y);
        std::array<Mat2, 4> L;
        for (int a = 0; a < 4; ++a) {
            Mat2 E = Mat2::Zero();
            E(a / 2, a % 2) = 1.0;
            L[a] = E.transpose() * F + F.transpose() * E;
        }
        Eigen::Matrix4d hess;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) hess(a, b) = d * L[a].cwiseProduct(L[b]).sum();
        return hess;
    }
};

struct MaterialBundle {
    ElasticLaw elastic;
    StrainGradientLaw gradient;
    DissipationLaw dissipation;

    static MaterialBundle defaults() { return {}; }

    static MaterialBundle with_exponents(double p, double q, double amp = 0.5,
                                         bool stress_free = true) {
        MaterialBundle b;
        b.elastic.q = q;
        b.elastic.stress_free_id = stress_free;
        b.elastic.alpha.amp = amp;
        b.gradient.p = p;
        b.gradient.beta.amp = amp;
        b.dissipation.delta.amp = amp;
        return b;
    }
};

// Free-function entry points matching the library's operation names.

inline std::pair<double, Mat2> elastic_eval(const ElasticLaw& law, const Vec2& y, const Mat2& F) {
    Mat2 dW;
    double w = law.eval(y, F, &dW);
    return {w, dW};
}

inline std::pair<double, Tens3> gradient_eval(const StrainGradientLaw& law, const Vec2& y,
                                              const Tens3& G) {
    Tens3 dH;
    double h = law.eval(y, G, &dH);
    return {h, dH};
}

inline std::pair<double, Mat2> dissipation_eval(const DissipationLaw& law, const Vec2& y,
                                                const Mat2& F, const Mat2& Fdot) {
    Mat2 dR;
    double r = law.eval(y, F, Fdot, &dR);
    return {r, dR};
}

}  // namespace perihom
