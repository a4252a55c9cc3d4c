#pragma once

// Element assembly and Newton minimization for second-grade energy densities
// e(x, grad u, hess u), with optional incremental dissipation against a
// previous state and linear load functionals. One assembler serves the
// micro stepper, the periodic cell problems, and the macroscopic solver.

#include "perihom/c1grid.hpp"
#include "perihom/materials.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace perihom {

using SparseMat = Eigen::SparseMatrix<double>;
using Matrix8d = Eigen::Matrix<double, 8, 8>;

// Curvature of a density in the second-gradient argument, either in the
// scaled-identity-plus-rank-one form of power laws or as a full 8x8 block.
struct GCurvature {
    double c1 = 0.0;
    double c2 = 0.0;
    Tens3 gdir;
    const Matrix8d* full = nullptr;
};

namespace detail {

// B-matrices mapping local element DOFs (32) to vec(F) (4) and vec(G) (8),
// fixed per quadrature point for the whole structured grid.
struct QpKinematics {
    Eigen::Matrix<double, 4, 32> Bg;
    Eigen::Matrix<double, 8, 32> Bh;
    Eigen::Matrix<double, 32, 32> BhtBh;
};

inline std::vector<QpKinematics> build_kinematics(const C1Space& space) {
    std::vector<QpKinematics> out(space.n_quad_per_elem());
    const auto& table = space.shape_table();
    for (int q = 0; q < space.n_quad_per_elem(); ++q) {
        auto& K = out[q];
        K.Bg.setZero();
        K.Bh.setZero();
        for (int b = 0; b < C1Space::kLocalScalar; ++b) {
            const auto& sv = table[q][b];
            for (int c = 0; c < 2; ++c) {
                int L = b * 2 + c;
                K.Bg(c * 2 + 0, L) = sv.nx;
                K.Bg(c * 2 + 1, L) = sv.ny;
                K.Bh(c * 4 + 0, L) = sv.nxx;  // (j,k) = (0,0)
                K.Bh(c * 4 + 1, L) = sv.nxy;  // (0,1)
                K.Bh(c * 4 + 2, L) = sv.nxy;  // (1,0)
                K.Bh(c * 4 + 3, L) = sv.nyy;  // (1,1)
            }
        }
        K.BhtBh = K.Bh.transpose() * K.Bh;
    }
    return out;
}

inline void local_jet(const C1Field& u, const std::array<int, 32>& dofs,
                      const QpKinematics& K, Mat2& F, Tens3& G) {
    Eigen::Matrix<double, 32, 1> ue;
    for (int L = 0; L < 32; ++L) ue[L] = u[dofs[L]];
    Eigen::Matrix<double, 4, 1> f = K.Bg * ue;
    Eigen::Matrix<double, 8, 1> g = K.Bh * ue;
    F << f[0], f[1], f[2], f[3];
    for (int a = 0; a < 8; ++a) G[a] = g[a];
}

}  // namespace detail

// Finite-difference curvature of an elastic law (central differences of the
// analytic stress). Used because the model only assumes W once differentiable.
inline Eigen::Matrix4d fd_elastic_curvature(const ElasticLaw& law, const Vec2& y, const Mat2& F) {
    double eta = 1e-5 * std::max(1.0, F.norm());
    Eigen::Matrix4d hess;
    for (int a = 0; a < 4; ++a) {
        Mat2 E = Mat2::Zero();
        E(a / 2, a % 2) = 1.0;
        Mat2 Fp = F + eta * E, Fm = F - eta * E;
        Mat2 dWp, dWm;
        // One-sided fallback keeps the probe inside GL+(2).
        if (Fp.determinant() > 0 && Fm.determinant() > 0) {
            law.eval(y, Fp, &dWp);
            law.eval(y, Fm, &dWm);
        } else {
            law.eval(y, F, &dWm);
            Mat2& probe = (Fp.determinant() > 0) ? Fp : Fm;
            double sign = (Fp.determinant() > 0) ? 1.0 : -1.0;
            law.eval(y, probe, &dWp);
            dWp = dWm + sign * 2.0 * (dWp - dWm);  // rescale one-sided slope
        }
        Mat2 col = (dWp - dWm) / (2.0 * eta);
        hess(0, a) = col(0, 0);
        hess(1, a) = col(0, 1);
        hess(2, a) = col(1, 0);
        hess(3, a) = col(1, 1);
    }
    return 0.5 * (hess + hess.transpose());
}

// Density of one incremental minimization step on the perforated micro grid:
//   W(x/eps, F) + H(x/eps, G) + (1/tau) R(x/eps, F_prev, F - F_prev).
struct MicroStepDensity {
    const MaterialBundle* bundle;
    double eps = 1.0;
    double inv_tau = 0.0;  // 0 disables the dissipation term (pure energy)

    static constexpr bool kUsesPrev = true;

    Vec2 micro_coord(const Vec2& x) const { return Vec2(fract01(x.x() / eps), fract01(x.y() / eps)); }
    bool needs_positive_det() const { return true; }

    double energy(const Vec2& x, const Mat2& F, const Tens3& G, const Mat2& Fprev) const {
        Vec2 y = micro_coord(x);
        double e = bundle->elastic.eval(y, F) + bundle->gradient.eval(y, G);
        if (inv_tau > 0.0) e += inv_tau * bundle->dissipation.eval(y, Fprev, F - Fprev);
        return e;
    }

    double grad(const Vec2& x, const Mat2& F, const Tens3& G, const Mat2& Fprev, Mat2& dF,
                Tens3& dG) const {
        Vec2 y = micro_coord(x);
        double e = bundle->elastic.eval(y, F, &dF);
        e += bundle->gradient.eval(y, G, &dG);
        if (inv_tau > 0.0) {
            Mat2 dR;
            e += inv_tau * bundle->dissipation.eval(y, Fprev, F - Fprev, &dR);
            dF += inv_tau * dR;
        }
        return e;
    }

    void curvature(const Vec2& x, const Mat2& F, const Tens3& G, const Mat2& Fprev,
                   Eigen::Matrix4d& hFF, GCurvature& hGG) const {
        Vec2 y = micro_coord(x);
        hFF = fd_elastic_curvature(bundle->elastic, y, F);
        if (inv_tau > 0.0) hFF += inv_tau * bundle->dissipation.curvature(y, Fprev);
        bundle->gradient.curvature(y, G, hGG.c1, hGG.c2);
        hGG.gdir = G;
        hGG.full = nullptr;
    }
};

// Density of the periodic cell problem: H(y, G_macro + G) over Y_s.
struct CellProblemDensity {
    const StrainGradientLaw* law;
    Tens3 G_macro;

    static constexpr bool kUsesPrev = false;
    bool needs_positive_det() const { return false; }

    double energy(const Vec2& y, const Mat2&, const Tens3& G, const Mat2&) const {
        return law->eval(y, G_macro + G);
    }
    double grad(const Vec2& y, const Mat2&, const Tens3& G, const Mat2&, Mat2& dF,
                Tens3& dG) const {
        dF.setZero();
        return law->eval(y, G_macro + G, &dG);
    }
    void curvature(const Vec2& y, const Mat2&, const Tens3& G, const Mat2&, Eigen::Matrix4d& hFF,
                   GCurvature& hGG) const {
        hFF.setZero();
        Tens3 A = G_macro + G;
        law->curvature(y, A, hGG.c1, hGG.c2);
        hGG.gdir = A;
        hGG.full = nullptr;
    }
};

// ---------------------------------------------------------------------------

struct AssemblyResult {
    double energy = 0.0;
    Eigen::VectorXd grad;
    SparseMat hess;
};

template <class Density>
class Assembler {
  public:
    Assembler(const C1Space& space, Density density)
        : space_(space), density_(density), kin_(detail::build_kinematics(space)) {}

    const C1Space& space() const { return space_; }
    Density& density() { return density_; }
    const Density& density() const { return density_; }

    double energy(const C1Field& u, const C1Field* prev = nullptr) const {
        double total = 0.0;
        for_each_qp(u, prev, [&](const Vec2& x, int, const Mat2& F, const Tens3& G,
                                 const Mat2& Fprev, double w, const std::array<int, 32>&,
                                 const detail::QpKinematics&) {
            total += w * density_.energy(x, F, G, Fprev);
        });
        return total;
    }

    // Gradient of the energy functional (no load contribution).
    void gradient(const C1Field& u, const C1Field* prev, Eigen::VectorXd& out) const {
        out.setZero(space_.ndof());
        for_each_qp(u, prev, [&](const Vec2& x, int, const Mat2& F, const Tens3& G,
                                 const Mat2& Fprev, double w, const std::array<int, 32>& dofs,
                                 const detail::QpKinematics& K) {
            Mat2 dF;
            Tens3 dG;
            density_.grad(x, F, G, Fprev, dF, dG);
            Eigen::Matrix<double, 4, 1> f(dF(0, 0), dF(0, 1), dF(1, 0), dF(1, 1));
            Eigen::Matrix<double, 8, 1> g;
            for (int a = 0; a < 8; ++a) g[a] = dG[a];
            Eigen::Matrix<double, 32, 1> ge = K.Bg.transpose() * (w * f) + K.Bh.transpose() * (w * g);
            for (int L = 0; L < 32; ++L) out[dofs[L]] += ge[L];
        });
    }

    double energy_and_hessian(const C1Field& u, const C1Field* prev, Eigen::VectorXd& grad,
                              std::vector<Eigen::Triplet<double>>& trips) const {
        grad.setZero(space_.ndof());
        trips.clear();
        trips.reserve(space_.solid_elems().size() * 32 * 32);
        double total = 0.0;
        Eigen::Matrix<double, 32, 32> Ke;
        Eigen::Matrix<double, 32, 1> ge;
        int last_elem = -1;
        std::array<int, 32> cur_dofs{};
        auto flush = [&](const std::array<int, 32>& dofs) {
            for (int L = 0; L < 32; ++L) {
                grad[dofs[L]] += ge[L];
                for (int M = 0; M < 32; ++M)
                    trips.emplace_back(dofs[L], dofs[M], Ke(L, M));
            }
        };
        for_each_qp(u, prev, [&](const Vec2& x, int elem, const Mat2& F, const Tens3& G,
                                 const Mat2& Fprev, double w, const std::array<int, 32>& dofs,
                                 const detail::QpKinematics& K) {
            if (elem != last_elem) {
                if (last_elem >= 0) flush(cur_dofs);
                Ke.setZero();
                ge.setZero();
                last_elem = elem;
                cur_dofs = dofs;
            }
            Mat2 dF;
            Tens3 dG;
            total += w * density_.grad(x, F, G, Fprev, dF, dG);
            Eigen::Matrix<double, 4, 1> f(dF(0, 0), dF(0, 1), dF(1, 0), dF(1, 1));
            Eigen::Matrix<double, 8, 1> g;
            for (int a = 0; a < 8; ++a) g[a] = dG[a];
            ge += K.Bg.transpose() * (w * f) + K.Bh.transpose() * (w * g);

            Eigen::Matrix4d hFF;
            GCurvature hGG;
            density_.curvature(x, F, G, Fprev, hFF, hGG);
            Ke += K.Bg.transpose() * (w * hFF) * K.Bg;
            if (hGG.full) {
                Ke += K.Bh.transpose() * (w * (*hGG.full)) * K.Bh;
            } else {
                if (hGG.c1 != 0.0) Ke += (w * hGG.c1) * K.BhtBh;
                if (hGG.c2 != 0.0) {
                    Eigen::Matrix<double, 8, 1> gd;
                    for (int a = 0; a < 8; ++a) gd[a] = hGG.gdir[a];
                    Eigen::Matrix<double, 32, 1> r = K.Bh.transpose() * gd;
                    Ke += (w * hGG.c2) * (r * r.transpose());
                }
            }
        });
        if (last_elem >= 0) flush(cur_dofs);
        return total;
    }

    // Minimum of det(grad u) over all quadrature points; worst point reported.
    double min_det(const C1Field& u, Vec2* argmin = nullptr) const {
        double best = std::numeric_limits<double>::infinity();
        Vec2 where = Vec2::Zero();
        for_each_qp(u, nullptr, [&](const Vec2& x, int, const Mat2& F, const Tens3&, const Mat2&,
                                    double, const std::array<int, 32>&,
                                    const detail::QpKinematics&) {
            double d = F.determinant();
            if (d < best) {
                best = d;
                where = x;
            }
        });
        if (argmin) *argmin = where;
        return best;
    }

  private:
    template <class Fn>
    void for_each_qp(const C1Field& u, const C1Field* prev, Fn&& fn) const {
        int nq = space_.n_quad_per_elem();
        std::array<int, 32> dofs{};
        for (int e : space_.solid_elems()) {
            int ex = e % space_.nex(), ey = e / space_.nex();
            space_.gather_dofs(ex, ey, dofs);
            for (int q = 0; q < nq; ++q) {
                Mat2 F, Fprev = Mat2::Zero();
                Tens3 G;
                detail::local_jet(u, dofs, kin_[q], F, G);
                if constexpr (Density::kUsesPrev) {
                    if (prev) {
                        Tens3 Gp;
                        detail::local_jet(*prev, dofs, kin_[q], Fprev, Gp);
                    }
                }
                fn(space_.quad_point(ex, ey, q), e, F, G, Fprev, space_.quad_weight(q), dofs,
                   kin_[q]);
            }
        }
    }

    const C1Space& space_;
    Density density_;
    std::vector<detail::QpKinematics> kin_;
};

// ---------------------------------------------------------------------------
// H2-Gram of the test space; dual norms of residual vectors are measured
// against it. Built once per (space, constraint set).

class GramSolver {
  public:
    GramSolver() = default;

    void build(const C1Space& space, const std::vector<uint8_t>& fixed_mask) {
        const int ndof = space.ndof();
        free_index_.assign(ndof, -1);
        n_free_ = 0;
        for (int i = 0; i < ndof; ++i)
            if (fixed_mask.empty() || !fixed_mask[i]) free_index_[i] = n_free_++;

        auto kin = detail::build_kinematics(space);
        // Value part of the Gram needs shape values, which QpKinematics drops;
        // rebuild the per-qp value row here.
        int nq = space.n_quad_per_elem();
        std::vector<Eigen::Matrix<double, 2, 32>> Bv(nq);
        const auto& table = space.shape_table();
        for (int q = 0; q < nq; ++q) {
            Bv[q].setZero();
            for (int b = 0; b < 16; ++b)
                for (int c = 0; c < 2; ++c) Bv[q](c, b * 2 + c) = table[q][b].n;
        }
        std::vector<Eigen::Triplet<double>> trips;
        std::array<int, 32> dofs{};
        Eigen::Matrix<double, 32, 32> Qe;
        for (int e : space.solid_elems()) {
            int ex = e % space.nex(), ey = e / space.nex();
            space.gather_dofs(ex, ey, dofs);
            Qe.setZero();
            for (int q = 0; q < nq; ++q) {
                double w = space.quad_weight(q);
                Qe += w * (Bv[q].transpose() * Bv[q] + kin[q].Bg.transpose() * kin[q].Bg +
                           kin[q].BhtBh);
            }
            for (int L = 0; L < 32; ++L) {
                int gi = free_index_[dofs[L]];
                if (gi < 0) continue;
                for (int M = 0; M < 32; ++M) {
                    int gj = free_index_[dofs[M]];
                    if (gj >= 0) trips.emplace_back(gi, gj, Qe(L, M));
                }
            }
        }
        SparseMat Q(n_free_, n_free_);
        Q.setFromTriplets(trips.begin(), trips.end());
        solver_.compute(Q);
        if (solver_.info() != Eigen::Success)
            throw SingularSystem("H2 Gram factorization failed");
    }

    int n_free() const { return n_free_; }
    const std::vector<int>& free_index() const { return free_index_; }

    // Dual norm sqrt(r^T Q^{-1} r) of a full-length residual vector
    // restricted to the free DOFs.
    double dual_norm(const Eigen::VectorXd& residual_full) const {
        Eigen::VectorXd r(n_free_);
        for (size_t i = 0; i < free_index_.size(); ++i)
            if (free_index_[i] >= 0) r[free_index_[i]] = residual_full[int(i)];
        Eigen::VectorXd z = solver_.solve(r);
        return std::sqrt(std::max(0.0, r.dot(z)));
    }

  private:
    std::vector<int> free_index_;
    int n_free_ = 0;
    Eigen::SimplicialLDLT<SparseMat> solver_;
};

// ---------------------------------------------------------------------------
// Newton with backtracking line search and determinant floor.

struct NewtonOptions {
    double tol_residual = 1e-9;  // dual norm against the H2 Gram
    int max_iters = 50;
    double det_floor = 1e-3;
    bool enforce_det = true;
    int max_backtracks = 60;
};

struct NewtonReport {
    int iters = 0;
    double residual = 0.0;
    double objective = 0.0;
    double det_min = 1.0;
};

// Minimizes energy(u) - load.u over the affine space { fixed DOFs pinned,
// C u = C u_init } and leaves the minimizer in `u`. The fixed DOF set is the
// complement of the Gram solver's free set.
template <class Density>
NewtonReport newton_minimize(Assembler<Density>& assembler, const C1Field* prev,
                             const Eigen::VectorXd* load, C1Field& u,
                             const Eigen::MatrixXd* constraint_rows, const GramSolver& gram,
                             const NewtonOptions& opts) {
    const C1Space& space = assembler.space();
    const int ndof = space.ndof();
    const auto& free_index = gram.free_index();
    const int n_free = gram.n_free();
    const int n_con = constraint_rows ? int(constraint_rows->rows()) : 0;
    const int n_sys = n_free + n_con;

    auto objective = [&](const C1Field& v) {
        double e = assembler.energy(v, prev);
        if (load) e -= load->dot(v.coeffs());
        return e;
    };

    Eigen::VectorXd grad;
    std::vector<Eigen::Triplet<double>> trips;
    NewtonReport report;
    double obj = 0.0;

    for (int iter = 0;; ++iter) {
        double e = assembler.energy_and_hessian(u, prev, grad, trips);
        obj = e - (load ? load->dot(u.coeffs()) : 0.0);
        if (load) grad -= *load;

        report.residual = gram.dual_norm(grad);
        report.iters = iter;
        report.objective = obj;
        if (report.residual <= opts.tol_residual) break;
        if (iter >= opts.max_iters)
            throw MaxItersExceeded("Newton did not reach tol " +
                                   std::to_string(opts.tol_residual) + " in " +
                                   std::to_string(opts.max_iters) + " iterations (residual " +
                                   std::to_string(report.residual) + ")");

        // Reduced KKT system: [H C^T; C 0] with Dirichlet DOFs eliminated.
        std::vector<Eigen::Triplet<double>> sys_trips;
        sys_trips.reserve(trips.size() + size_t(2) * n_con * n_free);
        for (const auto& t : trips) {
            int gi = free_index[t.row()], gj = free_index[t.col()];
            if (gi >= 0 && gj >= 0) sys_trips.emplace_back(gi, gj, t.value());
        }
        for (int c = 0; c < n_con; ++c)
            for (int j = 0; j < ndof; ++j) {
                double v = (*constraint_rows)(c, j);
                if (v != 0.0 && free_index[j] >= 0) {
                    sys_trips.emplace_back(n_free + c, free_index[j], v);
                    sys_trips.emplace_back(free_index[j], n_free + c, v);
                }
            }

        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_sys);
        for (int i = 0; i < ndof; ++i)
            if (free_index[i] >= 0) rhs[free_index[i]] = -grad[i];

        Eigen::VectorXd step_free;
        double damping = 0.0;
        for (int attempt = 0;; ++attempt) {
            std::vector<Eigen::Triplet<double>> damped = sys_trips;
            if (damping > 0.0)
                for (int i = 0; i < n_free; ++i) damped.emplace_back(i, i, damping);
            SparseMat K(n_sys, n_sys);
            K.setFromTriplets(damped.begin(), damped.end());
            Eigen::SparseLU<SparseMat> lu;
            lu.compute(K);
            bool ok = lu.info() == Eigen::Success;
            if (ok) {
                Eigen::VectorXd sol = lu.solve(rhs);
                ok = lu.info() == Eigen::Success && sol.head(n_free).allFinite();
                if (ok) {
                    step_free = sol.head(n_free);
                    // Descent check; damp if the curvature model is indefinite.
                    double slope = -step_free.dot(rhs.head(n_free));
                    if (slope < 0.0) break;
                    ok = false;
                }
            }
            if (!ok) {
                if (attempt >= 12)
                    throw SingularSystem("Newton system could not be solved (damping " +
                                         std::to_string(damping) + ")");
                damping = (damping == 0.0) ? 1e-6 : damping * 100.0;
            }
        }

        Eigen::VectorXd step = Eigen::VectorXd::Zero(ndof);
        for (int i = 0; i < ndof; ++i)
            if (free_index[i] >= 0) step[i] = step_free[free_index[i]];

        double slope = grad.dot(step);  // < 0 by construction
        double alpha = 1.0;
        bool accepted = false;
        C1Field trial = u;
        for (int bt = 0; bt < opts.max_backtracks; ++bt, alpha *= 0.5) {
            trial.coeffs() = u.coeffs() + alpha * step;
            if (opts.enforce_det && assembler.density().needs_positive_det()) {
                if (assembler.min_det(trial) < opts.det_floor) continue;
            }
            double trial_obj;
            try {
                trial_obj = objective(trial);
            } catch (const NonPositiveDet&) {
                continue;
            }
            if (trial_obj <= obj + 1e-4 * alpha * slope ||
                trial_obj <= obj + 1e-14 * std::abs(obj)) {
                u.coeffs() = trial.coeffs();
                obj = trial_obj;
                accepted = true;
                break;
            }
        }
        if (!accepted)
            throw LineSearchFailed("no acceptable step at iteration " + std::to_string(iter) +
                                   " (residual " + std::to_string(report.residual) + ")");
    }

    if (assembler.density().needs_positive_det()) report.det_min = assembler.min_det(u);
    report.objective = obj;
    return report;
}

// ---------------------------------------------------------------------------
// Load functionals.

// Volume load: l[dof] = int_{Omega_eps} f(x) . phi_dof dx.
inline Eigen::VectorXd assemble_volume_load(const C1Space& space,
                                            const std::function<Vec2(const Vec2&)>& f) {
    Eigen::VectorXd l = Eigen::VectorXd::Zero(space.ndof());
    const auto& table = space.shape_table();
    int nq = space.n_quad_per_elem();
    std::array<int, 32> dofs{};
    for (int e : space.solid_elems()) {
        int ex = e % space.nex(), ey = e / space.nex();
        space.gather_dofs(ex, ey, dofs);
        for (int q = 0; q < nq; ++q) {
            double w = space.quad_weight(q);
            Vec2 fx = f(space.quad_point(ex, ey, q));
            for (int b = 0; b < 16; ++b) {
                double n = table[q][b].n;
                l[dofs[b * 2 + 0]] += w * n * fx[0];
                l[dofs[b * 2 + 1]] += w * n * fx[1];
            }
        }
    }
    return l;
}

// Surface load over facets with a given tag:
// l[dof] = int g(x) . phi_dof dsigma, 1-D Gauss per facet, trace taken from
// the adjacent solid element.
inline Eigen::VectorXd assemble_surface_load(const C1Space& space, const PerforatedDomain& domain,
                                             FacetTag tag,
                                             const std::function<Vec2(const Vec2&)>& g,
                                             int n_gauss = 4) {
    Eigen::VectorXd l = Eigen::VectorXd::Zero(space.ndof());
    QuadRule rule = QuadRule::gauss(n_gauss);
    double h = space.h();
    std::array<int, 32> dofs{};
    for (const auto& facet : domain.facets) {
        if (facet.tag != tag) continue;
        // Adjacent solid element and the local coordinate of the facet in it.
        int ex, ey;
        double tfix;
        if (facet.axis == 0) {
            ey = facet.iy;
            if (facet.ix > 0 && domain.is_solid(facet.ix - 1, ey)) {
                ex = facet.ix - 1;
                tfix = 1.0;
            } else {
                ex = facet.ix;
                tfix = 0.0;
            }
        } else {
            ex = facet.ix;
            if (facet.iy > 0 && domain.is_solid(ex, facet.iy - 1)) {
                ey = facet.iy - 1;
                tfix = 1.0;
            } else {
                ey = facet.iy;
                tfix = 0.0;
            }
        }
        space.gather_dofs(ex, ey, dofs);
        for (size_t q = 0; q < rule.pts.size(); ++q) {
            double t = rule.pts[q];
            double w = rule.wts[q] * h;
            double tx = (facet.axis == 0) ? tfix : t;
            double ty = (facet.axis == 0) ? t : tfix;
            Vec2 x = space.origin() + Vec2((ex + tx) * h, (ey + ty) * h);
            Vec2 gx = g(x);
            for (int b = 0; b < 16; ++b) {
                auto sv = hermite::shape(b, tx, ty, h);
                l[dofs[b * 2 + 0]] += w * sv.n * gx[0];
                l[dofs[b * 2 + 1]] += w * sv.n * gx[1];
            }
        }
    }
    return l;
}

}  // namespace perihom
