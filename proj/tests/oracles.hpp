#pragma once

// Test-only oracles, independent of the library's solver paths: central
// finite differences for derivative checks, a dense trust-region minimizer,
// and small dense eigensolves.

#include "perihom/common.hpp"

#include <Eigen/Eigenvalues>

#include <functional>
#include <random>

namespace oracles {

using perihom::Mat2;
using perihom::Tens3;
using perihom::Vec2;

// Central finite-difference gradient of a scalar function of a Mat2.
inline Mat2 fd_matrix_gradient(const std::function<double(const Mat2&)>& f, const Mat2& F,
                               double step = 1e-5) {
    Mat2 g;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            Mat2 Fp = F, Fm = F;
            Fp(i, j) += step;
            Fm(i, j) -= step;
            g(i, j) = (f(Fp) - f(Fm)) / (2.0 * step);
        }
    return g;
}

inline Tens3 fd_tensor_gradient(const std::function<double(const Tens3&)>& f, const Tens3& G,
                                double step = 1e-5) {
    Tens3 g;
    for (int a = 0; a < 8; ++a) {
        Tens3 Gp = G, Gm = G;
        Gp[a] += step;
        Gm[a] -= step;
        g[a] = (f(Gp) - f(Gm)) / (2.0 * step);
    }
    return g;
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

inline Mat2 random_mat2(std::mt19937& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> d(-scale, scale);
    Mat2 m;
    m << d(rng), d(rng), d(rng), d(rng);
    return m;
}

// Random matrix near the identity with determinant bounded well away from 0.
inline Mat2 random_gl_plus(std::mt19937& rng, double spread = 0.3) {
    for (;;) {
        Mat2 F = Mat2::Identity() + random_mat2(rng, spread);
        if (F.determinant() > 0.25) return F;
    }
}

inline Tens3 random_tens3(std::mt19937& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> d(-scale, scale);
    Tens3 t;
    for (int a = 0; a < 8; ++a) t[a] = d(rng);
    return t;
}

// Derivative-symmetric random tensor (hessian-like).
inline Tens3 random_sym_tens3(std::mt19937& rng, double scale = 1.0) {
    Tens3 t = random_tens3(rng, scale);
    for (int c = 0; c < 2; ++c) {
        double s = 0.5 * (t(c, 0, 1) + t(c, 1, 0));
        t(c, 0, 1) = t(c, 1, 0) = s;
    }
    return t;
}

// Dense trust-region (Levenberg-type) minimizer over free coordinates of a
// vector, with finite-difference gradient and Hessian of the objective.
// Deliberately knows nothing about Newton line searches or assembly.
inline Eigen::VectorXd dense_trust_region_minimize(
    const std::function<double(const Eigen::VectorXd&)>& objective, Eigen::VectorXd x,
    const std::vector<uint8_t>& fixed_mask, double grad_tol = 1e-8, int max_iters = 120) {
    const int n = int(x.size());
    std::vector<int> free_ids;
    for (int i = 0; i < n; ++i)
        if (fixed_mask.empty() || !fixed_mask[i]) free_ids.push_back(i);
    const int nf = int(free_ids.size());

    auto eval = [&](const Eigen::VectorXd& xf) {
        Eigen::VectorXd full = x;
        for (int i = 0; i < nf; ++i) full[free_ids[i]] = xf[i];
        return objective(full);
    };
    Eigen::VectorXd xf(nf);
    for (int i = 0; i < nf; ++i) xf[i] = x[free_ids[i]];

    auto fd_grad = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd g(nf);
        double h = 1e-6;
        for (int i = 0; i < nf; ++i) {
            Eigen::VectorXd pp = p, pm = p;
            pp[i] += h;
            pm[i] -= h;
            g[i] = (eval(pp) - eval(pm)) / (2.0 * h);
        }
        return g;
    };
    // Symmetric second differences of the objective, computed once at the
    // start; the model is refreshed implicitly through the damping parameter.
    auto fd_hess = [&](const Eigen::VectorXd& p) {
        Eigen::MatrixXd H(nf, nf);
        double h = 5e-4;
        double f0 = eval(p);
        std::vector<double> fp(nf), fm(nf);
        for (int i = 0; i < nf; ++i) {
            Eigen::VectorXd q = p;
            q[i] = p[i] + h;
            fp[i] = eval(q);
            q[i] = p[i] - h;
            fm[i] = eval(q);
        }
        for (int i = 0; i < nf; ++i) {
            H(i, i) = (fp[i] - 2.0 * f0 + fm[i]) / (h * h);
            for (int j = i + 1; j < nf; ++j) {
                Eigen::VectorXd q = p;
                q[i] += h;
                q[j] += h;
                double fpp = eval(q);
                q[j] -= 2.0 * h;
                double fpm = eval(q);
                q[i] -= 2.0 * h;
                double fmm = eval(q);
                q[j] += 2.0 * h;
                double fmp = eval(q);
                H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            }
        }
        return H;
    };

    double f = eval(xf);
    double mu = 1e-8;
    Eigen::MatrixXd H;
    bool have_hess = false;
    for (int it = 0; it < max_iters; ++it) {
        Eigen::VectorXd g = fd_grad(xf);
        if (g.norm() <= grad_tol) break;
        if (!have_hess) {
            H = fd_hess(xf);
            have_hess = true;
        }
        for (int attempt = 0; attempt < 40; ++attempt) {
            Eigen::MatrixXd Hmu = H + mu * Eigen::MatrixXd::Identity(nf, nf);
            Eigen::LDLT<Eigen::MatrixXd> ldlt(Hmu);
            Eigen::VectorXd step = ldlt.solve(-g);
            double trial = eval(xf + step);
            if (std::isfinite(trial) && trial < f) {
                xf += step;
                f = trial;
                mu = std::max(mu / 4.0, 1e-12);
                break;
            }
            mu *= 10.0;
        }
    }
    Eigen::VectorXd full = x;
    for (int i = 0; i < nf; ++i) full[free_ids[i]] = xf[i];
    return full;
}

// Smallest eigenvalue of the dense pencil K x = lambda M x.
inline double dense_smallest_eigenvalue(const Eigen::MatrixXd& K, const Eigen::MatrixXd& M) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M);
    if (es.info() != Eigen::Success) throw std::runtime_error("dense eigensolve failed");
    return es.eigenvalues()[0];
}

}  // namespace oracles
