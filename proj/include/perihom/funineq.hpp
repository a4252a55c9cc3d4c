#pragma once

// Discrete functional-inequality laboratory: the cell-wise second-order
// extension operator (affine part plus biharmonic-minimal hole fill) and
// direct Rayleigh-quotient estimates of Korn and Poincare constants on the
// perforated grid.

#include "perihom/assembly.hpp"

#include <Eigen/Cholesky>

namespace perihom {

// ---------------------------------------------------------------------------
// Extension operator. Per micro-cell: subtract the affine map matching the
// mean of u and grad u over the solid part, fill the hole DOFs of the
// remainder by minimizing the hessian energy over the void elements with the
// boundary jet on Gamma as data, and add the affine part back. Solid DOFs are
// copied verbatim, so the restriction to Omega_eps is the input, bitwise.

class ExtensionOperator {
  public:
    ExtensionOperator(const PerforatedDomain& domain, const C1Space& solid_space,
                      int quad_order = 4)
        : domain_(domain),
          solid_space_(solid_space),
          full_space_(std::make_shared<C1Space>(C1Space::on_full_grid(domain, quad_order))) {
        build_fill_system();
    }

    const std::shared_ptr<C1Space>& full_space() const { return full_space_; }

    C1Field extend(const C1Field& u) const {
        C1Field out(*full_space_);
        // Copy every DOF that exists in the perforated space.
        for (int iy = 0; iy <= domain_.ney; ++iy)
            for (int ix = 0; ix <= domain_.nex; ++ix) {
                int as = solid_space_.node_active(ix, iy);
                if (as < 0) continue;
                int af = full_space_->node_active(ix, iy);
                for (int c = 0; c < 2; ++c)
                    for (int s = 0; s < 4; ++s)
                        out[full_space_->dof_index(af, c, s)] = u[solid_space_.dof_index(as, c, s)];
            }
        if (interior_nodes_.empty()) return out;

        const int m = domain_.cell.m;
        for (int ky = 0; ky < domain_.cells_y; ++ky)
            for (int kx = 0; kx < domain_.cells_x; ++kx) {
                // Affine map of this cell: F = mean gradient over the solid
                // part, b chosen so that the mean values match.
                Mat2 F = Mat2::Zero();
                Vec2 mean_u = Vec2::Zero(), mean_x = Vec2::Zero();
                double area = 0.0;
                int nq = solid_space_.n_quad_per_elem();
                int nqd = solid_space_.quad_order();
                for (int ey = ky * m; ey < (ky + 1) * m; ++ey)
                    for (int ex = kx * m; ex < (kx + 1) * m; ++ex) {
                        if (!domain_.is_solid(ex, ey)) continue;
                        for (int q = 0; q < nq; ++q) {
                            double w = solid_space_.quad_weight(q);
                            Jet2 j = solid_space_.eval_jet_local(
                                u, ex, ey, solid_space_.quad().pts[q % nqd],
                                solid_space_.quad().pts[q / nqd]);
                            F += w * j.grad;
                            mean_u += w * j.value;
                            mean_x += w * solid_space_.quad_point(ex, ey, q);
                            area += w;
                        }
                    }
                F /= area;
                Vec2 b = (mean_u - F * mean_x) / area;

                fill_cell(u, kx, ky, F, b, out);
            }
        return out;
    }

  private:
    // Hole-interior nodes (cell-local grid coordinates) and the boundary ring
    // feeding the fill system. Identical for every cell.
    void build_fill_system() {
        const UnitCell& cell = domain_.cell;
        if (!cell.hole) return;
        const int m = cell.m;
        auto interior = [&](int ix, int iy) {
            // adjacent elements all void
            for (int dy = -1; dy <= 0; ++dy)
                for (int dx = -1; dx <= 0; ++dx) {
                    int ex = ix + dx, ey = iy + dy;
                    if (ex < 0 || ex >= m || ey < 0 || ey >= m) return false;
                    if (cell.is_solid(ex, ey)) return false;
                }
            return true;
        };
        std::map<std::pair<int, int>, int> node_slot;
        for (int iy = 0; iy <= m; ++iy)
            for (int ix = 0; ix <= m; ++ix)
                if (interior(ix, iy)) {
                    node_slot[{ix, iy}] = int(interior_nodes_.size());
                    interior_nodes_.push_back({ix, iy});
                }
        if (interior_nodes_.empty()) return;

        // All nodes of void elements, interior ones unknown, the rest data.
        std::map<std::pair<int, int>, int> boundary_slot;
        for (int ey = cell.hy0; ey < cell.hy1; ++ey)
            for (int ex = cell.hx0; ex < cell.hx1; ++ex)
                for (int ln = 0; ln < 4; ++ln) {
                    std::pair<int, int> nd{ex + (ln & 1), ey + (ln >> 1)};
                    if (!node_slot.count(nd) && !boundary_slot.count(nd)) {
                        boundary_slot[nd] = int(boundary_nodes_.size());
                        boundary_nodes_.push_back({nd.first, nd.second});
                    }
                }

        const int nI = int(interior_nodes_.size()) * 4;
        const int nB = int(boundary_nodes_.size()) * 4;
        Eigen::MatrixXd KII = Eigen::MatrixXd::Zero(nI, nI);
        KIB_ = Eigen::MatrixXd::Zero(nI, nB);

        // Scalar hessian-energy element matrix on one void element (all void
        // elements share it: same size h).
        double h = domain_.h;
        QuadRule rule = QuadRule::gauss(solid_space_.quad_order());
        int nqd = int(rule.pts.size());
        Eigen::Matrix<double, 16, 16> Ae = Eigen::Matrix<double, 16, 16>::Zero();
        for (int qy = 0; qy < nqd; ++qy)
            for (int qx = 0; qx < nqd; ++qx) {
                double w = rule.wts[qx] * rule.wts[qy] * h * h;
                std::array<hermite::ShapeValue, 16> sv;
                for (int b = 0; b < 16; ++b) sv[b] = hermite::shape(b, rule.pts[qx], rule.pts[qy], h);
                for (int a = 0; a < 16; ++a)
                    for (int b = 0; b < 16; ++b)
                        Ae(a, b) += w * (sv[a].nxx * sv[b].nxx + sv[a].nyy * sv[b].nyy +
                                         2.0 * sv[a].nxy * sv[b].nxy);
            }

        auto slot_of = [&](int ix, int iy, int s, bool& is_interior) -> int {
            auto it = node_slot.find({ix, iy});
            if (it != node_slot.end()) {
                is_interior = true;
                return it->second * 4 + s;
            }
            is_interior = false;
            return boundary_slot.at({ix, iy}) * 4 + s;
        };
        for (int ey = cell.hy0; ey < cell.hy1; ++ey)
            for (int ex = cell.hx0; ex < cell.hx1; ++ex) {
                for (int la = 0; la < 16; ++la)
                    for (int lb = 0; lb < 16; ++lb) {
                        bool ia, ib;
                        int sa = slot_of(ex + (la / 4 & 1), ey + (la / 4 >> 1), la % 4, ia);
                        int sb = slot_of(ex + (lb / 4 & 1), ey + (lb / 4 >> 1), lb % 4, ib);
                        if (ia && ib) KII(sa, sb) += Ae(la, lb);
                        else if (ia && !ib) KIB_(sa, sb) += Ae(la, lb);
                    }
            }
        fill_solver_.compute(KII);
        if (fill_solver_.info() != Eigen::Success ||
            (KII.diagonal().array() <= 0.0).any())
            throw SingularFill("hole fill system is singular");
    }

    void fill_cell(const C1Field& u, int kx, int ky, const Mat2& F, const Vec2& b,
                   C1Field& out) const {
        const int m = domain_.cell.m;
        for (int c = 0; c < 2; ++c) {
            // Boundary data of w = u - m_u (affine DOFs: value Fx+b, grads F).
            Eigen::VectorXd wB(boundary_nodes_.size() * 4);
            for (size_t i = 0; i < boundary_nodes_.size(); ++i) {
                int ix = kx * m + boundary_nodes_[i][0];
                int iy = ky * m + boundary_nodes_[i][1];
                int as = solid_space_.node_active(ix, iy);
                Vec2 x = solid_space_.node_pos(as);
                double mval = F.row(c).dot(x) + b[c];
                wB[i * 4 + 0] = u[solid_space_.dof_index(as, c, 0)] - mval;
                wB[i * 4 + 1] = u[solid_space_.dof_index(as, c, 1)] - F(c, 0);
                wB[i * 4 + 2] = u[solid_space_.dof_index(as, c, 2)] - F(c, 1);
                wB[i * 4 + 3] = u[solid_space_.dof_index(as, c, 3)];
            }
            Eigen::VectorXd wI = fill_solver_.solve(-(KIB_ * wB));
            for (size_t i = 0; i < interior_nodes_.size(); ++i) {
                int ix = kx * m + interior_nodes_[i][0];
                int iy = ky * m + interior_nodes_[i][1];
                int af = full_space_->node_active(ix, iy);
                Vec2 x = full_space_->node_pos(af);
                out[full_space_->dof_index(af, c, 0)] = wI[i * 4 + 0] + F.row(c).dot(x) + b[c];
                out[full_space_->dof_index(af, c, 1)] = wI[i * 4 + 1] + F(c, 0);
                out[full_space_->dof_index(af, c, 2)] = wI[i * 4 + 2] + F(c, 1);
                out[full_space_->dof_index(af, c, 3)] = wI[i * 4 + 3];
            }
        }
    }

    const PerforatedDomain& domain_;
    const C1Space& solid_space_;
    std::shared_ptr<C1Space> full_space_;
    std::vector<std::array<int, 2>> interior_nodes_;
    std::vector<std::array<int, 2>> boundary_nodes_;
    Eigen::MatrixXd KIB_;
    Eigen::LDLT<Eigen::MatrixXd> fill_solver_;
};

inline C1Field extend_field(const ExtensionOperator& op, const C1Field& u) {
    return op.extend(u);
}

// ---------------------------------------------------------------------------
// Korn and Poincare constants as generalized Rayleigh quotients.

struct CoefficientField {
    std::string name;
    std::function<Mat2(const Vec2&)> A;
    double mu0 = 0.0;       // certified lower bound on det A
    int cert_grid = 64;     // certification sampling per axis

    // Samples det A over the closed domain; throws if the bound fails.
    void certify(const Vec2& lo, const Vec2& hi) const {
        for (int j = 0; j <= cert_grid; ++j)
            for (int i = 0; i <= cert_grid; ++i) {
                Vec2 x = lo + Vec2((hi.x() - lo.x()) * i / cert_grid,
                                   (hi.y() - lo.y()) * j / cert_grid);
                double d = A(x).determinant();
                if (!(d >= mu0))
                    throw Error("coefficient field '" + name + "' violates det >= " +
                                std::to_string(mu0) + " at (" + std::to_string(x.x()) + ", " +
                                std::to_string(x.y()) + "): det = " + std::to_string(d));
            }
    }

    static CoefficientField identity() {
        return {"identity", [](const Vec2&) { return Mat2::Identity(); }, 0.9, 16};
    }
    // Gradient of the smooth deformation x + 0.15 (sin(pi x1) sin(pi x2), x1 x2).
    static CoefficientField smooth_deformation() {
        return {"smooth_deformation",
                [](const Vec2& x) {
                    Mat2 A = Mat2::Identity();
                    double a = 0.15;
                    A(0, 0) += a * M_PI * std::cos(M_PI * x.x()) * std::sin(M_PI * x.y());
                    A(0, 1) += a * M_PI * std::sin(M_PI * x.x()) * std::cos(M_PI * x.y());
                    A(1, 0) += a * x.y();
                    A(1, 1) += a * x.x();
                    return A;
                },
                0.5, 64};
    }
    // Slowly rotating frame, det = 1 everywhere.
    static CoefficientField rotation_field() {
        return {"rotation_field",
                [](const Vec2& x) {
                    double th = 0.4 * std::sin(M_PI * x.x()) * std::cos(M_PI * x.y());
                    Mat2 R;
                    R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
                    return R;
                },
                0.9, 32};
    }
};

struct ConstantEstimate {
    double value = 0.0;
    double eigen_residual = 0.0;
    int dof_count = 0;
    double eps = 0.0;
};

namespace detail {

// Assembles the symmetric Gram matrices needed by the constant estimates on
// the free DOFs (fields vanishing on the Dirichlet part: value + tangential
// slots constrained).
struct KornGrams {
    SparseMat Ke;     // <e_A(v), e_A(v)>_{L2}
    SparseMat stiff;  // <grad v, grad v>_{L2}
    SparseMat mass;   // <v, v>_{L2}
    int n_free = 0;
};

inline KornGrams assemble_korn_grams(const C1Space& space,
                                     const std::function<Mat2(const Vec2&)>& A) {
    DirichletSet dir = dirichlet_id_constraints(space, true);
    auto fixed = dir.mask(space.ndof());
    std::vector<int> free_index(space.ndof(), -1);
    int n_free = 0;
    for (int i = 0; i < space.ndof(); ++i)
        if (!fixed[i]) free_index[i] = n_free++;

    auto kin = detail::build_kinematics(space);
    int nq = space.n_quad_per_elem();
    const auto& table = space.shape_table();
    std::vector<Eigen::Matrix<double, 2, 32>> Bv(nq);
    for (int q = 0; q < nq; ++q) {
        Bv[q].setZero();
        for (int b = 0; b < 16; ++b)
            for (int c = 0; c < 2; ++c) Bv[q](c, b * 2 + c) = table[q][b].n;
    }

    std::vector<Eigen::Triplet<double>> te, ts, tm;
    std::array<int, 32> dofs{};
    Eigen::Matrix<double, 32, 32> Ee, Es, Em;
    for (int e : space.solid_elems()) {
        int ex = e % space.nex(), ey = e / space.nex();
        space.gather_dofs(ex, ey, dofs);
        Ee.setZero();
        Es.setZero();
        Em.setZero();
        for (int q = 0; q < nq; ++q) {
            double w = space.quad_weight(q);
            Mat2 Aq = A(space.quad_point(ex, ey, q));
            // Rows of A grad v over local DOFs: (A grad v)_{ij} = A_ik d_j v_k.
            Eigen::Matrix<double, 1, 32> r00 = Aq(0, 0) * kin[q].Bg.row(0) + Aq(0, 1) * kin[q].Bg.row(2);
            Eigen::Matrix<double, 1, 32> r01 = Aq(0, 0) * kin[q].Bg.row(1) + Aq(0, 1) * kin[q].Bg.row(3);
            Eigen::Matrix<double, 1, 32> r10 = Aq(1, 0) * kin[q].Bg.row(0) + Aq(1, 1) * kin[q].Bg.row(2);
            Eigen::Matrix<double, 1, 32> r11 = Aq(1, 0) * kin[q].Bg.row(1) + Aq(1, 1) * kin[q].Bg.row(3);
            Eigen::Matrix<double, 1, 32> roff = 0.5 * (r01 + r10);
            Ee += w * (r00.transpose() * r00 + r11.transpose() * r11 +
                       2.0 * roff.transpose() * roff);
            Es += w * (kin[q].Bg.transpose() * kin[q].Bg);
            Em += w * (Bv[q].transpose() * Bv[q]);
        }
        for (int L = 0; L < 32; ++L) {
            int gi = free_index[dofs[L]];
            if (gi < 0) continue;
            for (int M = 0; M < 32; ++M) {
                int gj = free_index[dofs[M]];
                if (gj < 0) continue;
                te.emplace_back(gi, gj, Ee(L, M));
                ts.emplace_back(gi, gj, Es(L, M));
                tm.emplace_back(gi, gj, Em(L, M));
            }
        }
    }
    KornGrams g;
    g.n_free = n_free;
    g.Ke.resize(n_free, n_free);
    g.stiff.resize(n_free, n_free);
    g.mass.resize(n_free, n_free);
    g.Ke.setFromTriplets(te.begin(), te.end());
    g.stiff.setFromTriplets(ts.begin(), ts.end());
    g.mass.setFromTriplets(tm.begin(), tm.end());
    return g;
}

// Smallest eigenvalue of K x = lambda M x by inverse iteration (both SPD).
inline std::pair<double, double> smallest_eigenvalue(const SparseMat& K, const SparseMat& M,
                                                     double tol = 1e-9, int max_iters = 4000) {
    Eigen::SimplicialLDLT<SparseMat> solver;
    solver.compute(K);
    if (solver.info() != Eigen::Success)
        throw SingularSystem("Rayleigh quotient matrix factorization failed");
    int n = int(K.rows());
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    for (int i = 0; i < n; ++i) x[i] += 1e-3 * std::sin(0.7 * i);  // deterministic de-symmetrizer
    x /= std::sqrt(x.dot(M * x));
    double lambda = x.dot(K * x);
    for (int it = 0; it < max_iters; ++it) {
        Eigen::VectorXd y = solver.solve(M * x);
        double ny = std::sqrt(y.dot(M * y));
        if (!(ny > 0.0)) throw EigenNoConvergence("inverse iteration collapsed");
        x = y / ny;
        lambda = x.dot(K * x);
        Eigen::VectorXd r = K * x - lambda * (M * x);
        double rel = r.norm() / (lambda * (M * x).norm());
        if (rel <= tol) return {lambda, rel};
    }
    throw EigenNoConvergence("inverse iteration did not reach tolerance");
}

}  // namespace detail

// C in ||v||_{W^{1,2}(Omega_eps)} <= C ||e_A(v)||_{L2(Omega_eps)} over fields
// vanishing on the Dirichlet part, computed as lambda_min(Ke, M_H1)^{-1/2}.
inline ConstantEstimate korn_constant(const PerforatedDomain& domain, const C1Space& space,
                                      const CoefficientField& A) {
    A.certify(Vec2(domain.lo[0], domain.lo[1]), Vec2(domain.hi[0], domain.hi[1]));
    auto grams = detail::assemble_korn_grams(space, A.A);
    SparseMat H1 = grams.stiff + grams.mass;
    auto [lambda, rel] = detail::smallest_eigenvalue(grams.Ke, H1);
    ConstantEstimate est;
    est.value = 1.0 / std::sqrt(lambda);
    est.eigen_residual = rel;
    est.dof_count = grams.n_free;
    est.eps = domain.eps();
    return est;
}

// C in ||v||_{L2} <= C ||grad v||_{L2} over the same constrained fields.
inline ConstantEstimate poincare_constant(const PerforatedDomain& domain, const C1Space& space) {
    auto grams = detail::assemble_korn_grams(space, [](const Vec2&) { return Mat2::Identity(); });
    auto [lambda, rel] = detail::smallest_eigenvalue(grams.stiff, grams.mass);
    ConstantEstimate est;
    est.value = 1.0 / std::sqrt(lambda);
    est.eigen_residual = rel;
    est.dof_count = grams.n_free;
    est.eps = domain.eps();
    return est;
}

}  // namespace perihom
