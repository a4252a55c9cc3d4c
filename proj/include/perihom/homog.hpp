#pragma once

// Cell problems and the homogenized model. The strain-gradient cell problem
// is a periodic minimization over the unit cell; its value defines the
// homogenized potential. First-order laws homogenize to plain averages over
// the solid part of the cell. The macroscopic solver reuses the incremental
// minimization machinery with these effective laws.

#include "perihom/micro.hpp"

#include <map>
#include <memory>

namespace perihom {

using Matrix6d = Eigen::Matrix<double, 6, 6>;

// Corrector and value of the cell problem at one macroscopic second gradient.
struct CellSolution {
    Tens3 G;
    std::shared_ptr<const C1Space> space;  // periodic space on Y_s
    Eigen::VectorXd u2;                    // mean-zero periodic corrector
    double value = 0.0;                    // homogenized potential at G
    Tens3 hstress;                         // int_{Y_s} dH(y, G + hess u2) dy
    double residual_norm = 0.0;

    Jet2 corrector_jet(const Vec2& y) const {
        C1Field f(*space);
        f.coeffs() = u2;
        return space->eval_jet(f, y);
    }
    double u2_l2_norm() const {
        C1Field f(*space);
        f.coeffs() = u2;
        return std::sqrt(integrate(
            *space, [](const Vec2&, const Jet2& j) { return j.value.squaredNorm(); }, f));
    }
};

// Periodic cell-problem solver. Holds the periodic space, the mean-zero
// constraint, and (for quadratic laws) the factorized linear system, so
// repeated solves at different G are cheap.
class CellSolver {
  public:
    CellSolver(const UnitCell& cell, const StrainGradientLaw& law, int quad_order = 4)
        : cell_(cell),
          law_(law),
          space_(std::make_shared<C1Space>(C1Space::on_cell(cell, true, quad_order))) {
        gram_.build(*space_, {});
        build_mean_rows();
        if (law_.quadratic()) factorize_quadratic();
    }

    const C1Space& space() const { return *space_; }
    const StrainGradientLaw& law() const { return law_; }

    CellSolution solve(const Tens3& G, const Eigen::VectorXd* warm_start = nullptr) {
        C1Field u2(*space_);
        if (warm_start && warm_start->size() == space_->ndof()) u2.coeffs() = *warm_start;

        Assembler<CellProblemDensity> asmr(*space_, CellProblemDensity{&law_, G});
        if (law_.quadratic()) {
            solve_quadratic(asmr, u2);
        } else {
            NewtonOptions opts;
            opts.tol_residual = 1e-9;
            opts.enforce_det = false;
            opts.max_iters = 80;
            try {
                newton_minimize(asmr, nullptr, nullptr, u2, &mean_rows_, gram_, opts);
            } catch (const SingularSystem& err) {
                throw IndefiniteSystem(err.what());
            }
        }
        pin_mean(u2);

        CellSolution sol;
        sol.G = G;
        sol.space = space_;
        sol.u2 = u2.coeffs();
        sol.value = asmr.energy(u2, nullptr);
        Eigen::VectorXd grad;
        asmr.gradient(u2, nullptr, grad);
        sol.residual_norm = gram_.dual_norm(grad);
        sol.hstress = stress_at(u2, G);
        last_u2_ = u2.coeffs();
        return sol;
    }

    const Eigen::VectorXd* last_solution() const {
        return last_u2_.size() ? &last_u2_ : nullptr;
    }

  private:
    void build_mean_rows() {
        mean_rows_.setZero(2, space_->ndof());
        const auto& table = space_->shape_table();
        int nq = space_->n_quad_per_elem();
        std::array<int, 32> dofs{};
        for (int e : space_->solid_elems()) {
            int ex = e % space_->nex(), ey = e / space_->nex();
            space_->gather_dofs(ex, ey, dofs);
            for (int q = 0; q < nq; ++q) {
                double w = space_->quad_weight(q);
                for (int b = 0; b < 16; ++b)
                    for (int c = 0; c < 2; ++c) mean_rows_(c, dofs[b * 2 + c]) += w * table[q][b].n;
            }
        }
    }

    // Subtracts the quadrature mean from each component; the energy only sees
    // hess u2, so this fixes the representative without changing the value.
    void pin_mean(C1Field& u2) const {
        double area = cell_.solid_area();
        for (int c = 0; c < 2; ++c) {
            double mean = mean_rows_.row(c).dot(u2.coeffs()) / area;
            for (int a = 0; a < space_->n_nodes(); ++a)
                u2[space_->dof_index(a, c, 0)] -= mean;
        }
    }

    void factorize_quadratic() {
        Assembler<CellProblemDensity> asmr(*space_, CellProblemDensity{&law_, Tens3::zero()});
        C1Field zero(*space_);
        Eigen::VectorXd grad;
        std::vector<Eigen::Triplet<double>> trips;
        asmr.energy_and_hessian(zero, nullptr, grad, trips);
        const int n = space_->ndof();
        for (int c = 0; c < 2; ++c)
            for (int j = 0; j < n; ++j) {
                double v = mean_rows_(c, j);
                if (v != 0.0) {
                    trips.emplace_back(n + c, j, v);
                    trips.emplace_back(j, n + c, v);
                }
            }
        SparseMat K(n + 2, n + 2);
        K.setFromTriplets(trips.begin(), trips.end());
        lu_ = std::make_unique<Eigen::SparseLU<SparseMat>>();
        lu_->compute(K);
        if (lu_->info() != Eigen::Success)
            throw IndefiniteSystem("quadratic cell system factorization failed");
    }

    void solve_quadratic(Assembler<CellProblemDensity>& asmr, C1Field& u2) {
        // Gradient is affine in u2; one solve from the zero state suffices.
        C1Field zero(*space_);
        Eigen::VectorXd rhs0;
        asmr.gradient(zero, nullptr, rhs0);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(space_->ndof() + 2);
        rhs.head(space_->ndof()) = -rhs0;
        Eigen::VectorXd sol = lu_->solve(rhs);
        if (lu_->info() != Eigen::Success)
            throw IndefiniteSystem("quadratic cell solve failed");
        u2.coeffs() = sol.head(space_->ndof());
    }

    Tens3 stress_at(const C1Field& u2, const Tens3& G) const {
        Tens3 total;
        int nq = space_->n_quad_per_elem();
        int nqd = space_->quad_order();
        for (int e : space_->solid_elems()) {
            int ex = e % space_->nex(), ey = e / space_->nex();
            for (int q = 0; q < nq; ++q) {
                Jet2 j = space_->eval_jet_local(u2, ex, ey, space_->quad().pts[q % nqd],
                                                space_->quad().pts[q / nqd]);
                Vec2 y = space_->quad_point(ex, ey, q);
                Tens3 dH;
                law_.eval(y, G + j.hess, &dH);
                total += space_->quad_weight(q) * dH;
            }
        }
        return total;
    }

    UnitCell cell_;
    StrainGradientLaw law_;
    std::shared_ptr<C1Space> space_;
    GramSolver gram_;
    Eigen::MatrixXd mean_rows_;
    std::unique_ptr<Eigen::SparseLU<SparseMat>> lu_;
    Eigen::VectorXd last_u2_;
};

inline CellSolution solve_cell(const UnitCell& cell, const StrainGradientLaw& law, const Tens3& G,
                               const Eigen::VectorXd* warm_start = nullptr, int quad_order = 4) {
    CellSolver solver(cell, law, quad_order);
    return solver.solve(G, warm_start);
}

// ---------------------------------------------------------------------------
// Quadratic homogenized tensor on the 6-dim basis of tensors symmetric in the
// derivative pair. Basis order: (comp, pair) with pairs xx, yy, xy, i.e.
// a = comp*3 + {0:xx, 1:yy, 2:xy}; the xy basis tensor carries both (0,1)
// and (1,0) entries set to 1.

inline Tens3 sym_basis_tensor(int a) {
    int comp = a / 3, pair = a % 3;
    Tens3 t;
    if (pair == 0) t(comp, 0, 0) = 1.0;
    if (pair == 1) t(comp, 1, 1) = 1.0;
    if (pair == 2) {
        t(comp, 0, 1) = 1.0;
        t(comp, 1, 0) = 1.0;
    }
    return t;
}

// Coefficients of a (derivative-symmetric) tensor in that basis.
inline Eigen::Matrix<double, 6, 1> sym_basis_coords(const Tens3& G) {
    Eigen::Matrix<double, 6, 1> c;
    for (int comp = 0; comp < 2; ++comp) {
        c[comp * 3 + 0] = G(comp, 0, 0);
        c[comp * 3 + 1] = G(comp, 1, 1);
        c[comp * 3 + 2] = 0.5 * (G(comp, 0, 1) + G(comp, 1, 0));
    }
    return c;
}

struct QuadraticTensor {
    Matrix6d mat = Matrix6d::Zero();
    Matrix8d full = Matrix8d::Zero();  // same quadratic form over all 8 entries
    double asymmetry = 0.0;            // max |M - M^T| before symmetrization

    double value(const Tens3& G) const {
        auto c = sym_basis_coords(G);
        return 0.5 * c.dot(mat * c);
    }
    Tens3 stress(const Tens3& G) const {
        auto d = (mat * sym_basis_coords(G)).eval();
        Tens3 t;
        for (int comp = 0; comp < 2; ++comp) {
            t(comp, 0, 0) = d[comp * 3 + 0];
            t(comp, 1, 1) = d[comp * 3 + 1];
            t(comp, 0, 1) = t(comp, 1, 0) = 0.5 * d[comp * 3 + 2];
        }
        return t;
    }
};

inline QuadraticTensor homogenized_tensor(CellSolver& solver) {
    if (!solver.law().quadratic())
        throw Error("homogenized tensor requires the quadratic strain-gradient mode (p = 2)");
    std::array<CellSolution, 6> sols;
    for (int a = 0; a < 6; ++a) sols[a] = solver.solve(sym_basis_tensor(a));

    QuadraticTensor t;
    Matrix6d raw;
    for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) raw(a, b) = sols[a].hstress.dot(sym_basis_tensor(b));
    t.asymmetry = (raw - raw.transpose()).cwiseAbs().maxCoeff();
    t.mat = 0.5 * (raw + raw.transpose());

    // Expand to the full 8-entry representation: P maps entries to basis
    // coordinates; the form is P^T M P.
    Eigen::Matrix<double, 6, 8> P = Eigen::Matrix<double, 6, 8>::Zero();
    for (int comp = 0; comp < 2; ++comp) {
        P(comp * 3 + 0, comp * 4 + 0) = 1.0;                  // (comp,0,0)
        P(comp * 3 + 1, comp * 4 + 3) = 1.0;                  // (comp,1,1)
        P(comp * 3 + 2, comp * 4 + 1) = 0.5;                  // (comp,0,1)
        P(comp * 3 + 2, comp * 4 + 2) = 0.5;                  // (comp,1,0)
    }
    t.full = P.transpose() * t.mat * P;
    return t;
}

inline QuadraticTensor homogenized_tensor(const UnitCell& cell, const StrainGradientLaw& law,
                                          int quad_order = 4) {
    CellSolver solver(cell, law, quad_order);
    return homogenized_tensor(solver);
}

// ---------------------------------------------------------------------------
// Averaged first-order laws and the homogenized strain-gradient potential.

enum class HhomMode { Quadratic, Nested };

// The concrete laws are a periodic coefficient times a fixed shape in F (or
// Fdot), so averaging over Y_s reduces exactly to averaging the coefficient.
// The coefficient integrals are evaluated once by the cell quadrature.
class HomogenizedLaw {
  public:
    HomogenizedLaw(const UnitCell& cell, const MaterialBundle& bundle, HhomMode mode,
                   int quad_order = 4)
        : cell_(cell), bundle_(bundle), mode_(mode) {
        C1Space probe = C1Space::on_cell(cell, true, quad_order);
        alpha_bar_ = integrate_coefficient(probe, bundle.elastic.alpha);
        delta_bar_ = integrate_coefficient(probe, bundle.dissipation.delta);
        beta_bar_ = integrate_coefficient(probe, bundle.gradient.beta);

        wbar_ = bundle.elastic;
        wbar_.alpha = ScalarCoefficient::constant(alpha_bar_);
        rbar_ = bundle.dissipation;
        rbar_.delta = ScalarCoefficient::constant(delta_bar_);
        hbar_ = bundle.gradient;
        hbar_.beta = ScalarCoefficient::constant(beta_bar_);

        cells_ = std::make_shared<CellSolver>(cell, bundle.gradient, quad_order);
        if (mode == HhomMode::Quadratic) {
            if (!bundle.gradient.quadratic())
                throw Error("quadratic homogenized mode requires p = 2");
            tensor_ = homogenized_tensor(*cells_);
        }
    }

    HhomMode mode() const { return mode_; }
    const ElasticLaw& Wbar() const { return wbar_; }
    const DissipationLaw& Rbar() const { return rbar_; }
    const StrainGradientLaw& Hbar() const { return hbar_; }  // no-corrector upper bound
    const QuadraticTensor& tensor() const { return tensor_; }
    CellSolver& cell_solver() { return *cells_; }
    double solid_area() const { return cell_.solid_area(); }
    double hole_perimeter() const { return cell_.hole_perimeter(); }
    int cache_size() const { return int(cache_.size()); }

    double hhom(const Tens3& G, Tens3* stress = nullptr) const {
        if (mode_ == HhomMode::Quadratic) {
            if (stress) *stress = tensor_.stress(G);
            return tensor_.value(G);
        }
        const CellSolution& sol = cached_solution(G);
        if (stress) *stress = sol.hstress;
        return sol.value;
    }

    // Curvature surrogate for the assembly: exact tensor in quadratic mode,
    // the no-corrector (Voigt) bound in nested mode. The nested surrogate
    // overestimates the envelope curvature, which only costs Newton steps.
    void hhom_curvature(const Tens3& G, GCurvature& out) const {
        if (mode_ == HhomMode::Quadratic) {
            out.full = &tensor_.full;
            out.c1 = out.c2 = 0.0;
        } else {
            hbar_.curvature(Vec2::Zero(), G, out.c1, out.c2);
            out.gdir = G;
            out.full = nullptr;
        }
    }

  private:
    static double integrate_coefficient(const C1Space& probe, const ScalarCoefficient& c) {
        C1Field zero(probe);
        return integrate(probe, [&](const Vec2& y, const Jet2&) { return c(y); }, zero);
    }

    const CellSolution& cached_solution(const Tens3& G) const {
        std::array<long long, 8> key;
        for (int a = 0; a < 8; ++a) key[a] = llround(G[a] * 1e6);
        auto it = cache_.find(key);
        if (it != cache_.end()) {
            // Same quantization bucket: re-solve only if G actually moved.
            if ((it->second.G - G).norm() <= 1e-12) return it->second;
        }
        const Eigen::VectorXd* warm =
            it != cache_.end() ? &it->second.u2 : cells_->last_solution();
        CellSolution sol = cells_->solve(G, warm);
        if (cache_.size() >= kCacheCap) {
            cache_.clear();  // warm starts still come from the solver's last state
            it = cache_.end();
        }
        auto [pos, inserted] = cache_.insert_or_assign(key, std::move(sol));
        return pos->second;
    }

    static constexpr size_t kCacheCap = 50000;

    UnitCell cell_;
    MaterialBundle bundle_;
    HhomMode mode_;
    double alpha_bar_ = 0.0, delta_bar_ = 0.0, beta_bar_ = 0.0;
    ElasticLaw wbar_;
    DissipationLaw rbar_;
    StrainGradientLaw hbar_;
    QuadraticTensor tensor_;
    std::shared_ptr<CellSolver> cells_;
    mutable std::map<std::array<long long, 8>, CellSolution> cache_;
};

inline HomogenizedLaw averaged_laws(const UnitCell& cell, const MaterialBundle& bundle,
                                    HhomMode mode = HhomMode::Nested, int quad_order = 4) {
    return HomogenizedLaw(cell, bundle, mode, quad_order);
}

// ---------------------------------------------------------------------------
// Macroscopic incremental step density: Wbar(F) + Hhom(G) + (1/tau) Rbar.

struct MacroStepDensity {
    const HomogenizedLaw* law;
    double inv_tau = 0.0;

    static constexpr bool kUsesPrev = true;
    bool needs_positive_det() const { return true; }

    double energy(const Vec2&, const Mat2& F, const Tens3& G, const Mat2& Fprev) const {
        double e = law->Wbar().eval(Vec2::Zero(), F) + law->hhom(G);
        if (inv_tau > 0.0) e += inv_tau * law->Rbar().eval(Vec2::Zero(), Fprev, F - Fprev);
        return e;
    }
    double grad(const Vec2&, const Mat2& F, const Tens3& G, const Mat2& Fprev, Mat2& dF,
                Tens3& dG) const {
        double e = law->Wbar().eval(Vec2::Zero(), F, &dF);
        e += law->hhom(G, &dG);
        if (inv_tau > 0.0) {
            Mat2 dR;
            e += inv_tau * law->Rbar().eval(Vec2::Zero(), Fprev, F - Fprev, &dR);
            dF += inv_tau * dR;
        }
        return e;
    }
    void curvature(const Vec2&, const Mat2& F, const Tens3& G, const Mat2& Fprev,
                   Eigen::Matrix4d& hFF, GCurvature& hGG) const {
        hFF = fd_elastic_curvature(law->Wbar(), Vec2::Zero(), F);
        if (inv_tau > 0.0) hFF += inv_tau * law->Rbar().curvature(Vec2::Zero(), Fprev);
        law->hhom_curvature(G, hGG);
    }
};

// Macroscopic solver on the unperforated domain; mirrors the micro stepper
// with averaged loads fbar = |Y_s| f + |Gamma| ghat.
class MacroSolver {
  public:
    MacroSolver(const PerforatedDomain& macro_domain, const C1Space& space,
                const HomogenizedLaw& law, StepperOptions opts = {})
        : space_(space), law_(law), opts_(opts) {
        dirichlet_ = dirichlet_id_constraints(space);
        fixed_mask_ = dirichlet_.mask(space.ndof());
        gram_.build(space, fixed_mask_);
        (void)macro_domain;
    }

    const C1Space& space() const { return space_; }
    const HomogenizedLaw& law() const { return law_; }

    double mechanical_energy(const C1Field& u) const {
        Assembler<MacroStepDensity> pure(space_, MacroStepDensity{&law_, 0.0});
        Vec2 worst;
        double dmin = pure.min_det(u, &worst);
        if (!(dmin > 0.0))
            throw NonPositiveDet("det(grad u) = " + std::to_string(dmin) + " at (" +
                                 std::to_string(worst.x()) + ", " + std::to_string(worst.y()) + ")");
        return pure.energy(u, nullptr);
    }

    Eigen::VectorXd step_load(const Loads& loads, const TimeGrid& grid, int k) const {
        double t_mid = (double(k) - 0.5) * grid.tau.value();
        Vec2 fbar = law_.solid_area() * loads.f(t_mid) + law_.hole_perimeter() * loads.ghat(t_mid);
        return assemble_volume_load(space_, [&](const Vec2&) { return fbar; });
    }

    std::pair<C1Field, StepReport> incremental_step(const C1Field& u_prev, double tau,
                                                    const Eigen::VectorXd& load_k, int k = 0) {
        Assembler<MacroStepDensity> step_asm(space_, MacroStepDensity{&law_, 1.0 / tau});
        Assembler<MacroStepDensity> energy_asm(space_, MacroStepDensity{&law_, 0.0});

        double energy_prev = energy_asm.energy(u_prev, nullptr);
        double obj_prev = energy_prev - load_k.dot(u_prev.coeffs());

        C1Field u = u_prev;
        NewtonOptions nopts;
        nopts.tol_residual = opts_.tol_newton;
        nopts.det_floor = opts_.det_floor;
        nopts.max_iters = opts_.max_iters;
        NewtonReport nrep =
            newton_minimize(step_asm, &u_prev, &load_k, u, nullptr, gram_, nopts);

        StepReport rep;
        rep.k = k;
        rep.energy = energy_asm.energy(u, nullptr);
        rep.dissipation = dissipation_value(u_prev, u, tau);
        rep.det_min = nrep.det_min;
        rep.newton_iters = nrep.iters;
        rep.residual_norm = nrep.residual;
        rep.load_work = load_k.dot(u.coeffs());
        rep.load_work_prev = load_k.dot(u_prev.coeffs());
        rep.objective_drop = obj_prev - nrep.objective;
        rep.rate_norm_sq = rate_gradient_norm_sq(u, u_prev, tau);
        return {std::move(u), rep};
    }

    Trajectory run_trajectory(const Loads& loads, const TimeGrid& grid, const C1Field& u_init) {
        Trajectory traj;
        traj.grid = grid;
        traj.states.push_back(u_init);
        double tau = grid.tau.value();
        for (int k = 1; k <= grid.n_steps; ++k) {
            Eigen::VectorXd lk = step_load(loads, grid, k);
            try {
                auto [u, rep] = incremental_step(traj.states.back(), tau, lk, k);
                traj.dissipation_sum += tau * rep.rate_norm_sq;
                traj.states.push_back(std::move(u));
                traj.reports.push_back(rep);
            } catch (const Error& err) {
                throw Error("macro step " + std::to_string(k) + " failed: " + err.what());
            }
        }
        return traj;
    }

    double dissipation_value(const C1Field& u_prev, const C1Field& u, double tau) const {
        double total = 0.0;
        int nq = space_.n_quad_per_elem();
        int nqd = space_.quad_order();
        for (int e : space_.solid_elems()) {
            int ex = e % space_.nex(), ey = e / space_.nex();
            for (int q = 0; q < nq; ++q) {
                double tx = space_.quad().pts[q % nqd], ty = space_.quad().pts[q / nqd];
                Jet2 jp = space_.eval_jet_local(u_prev, ex, ey, tx, ty);
                Jet2 ju = space_.eval_jet_local(u, ex, ey, tx, ty);
                total += space_.quad_weight(q) *
                         law_.Rbar().eval(Vec2::Zero(), jp.grad, ju.grad - jp.grad);
            }
        }
        return total / tau;
    }

    double rate_gradient_norm_sq(const C1Field& u, const C1Field& u_prev, double tau) const {
        C1Field diff = u;
        diff.coeffs() = (u.coeffs() - u_prev.coeffs()) / tau;
        return integrate(space_, [](const Vec2&, const Jet2& j) { return j.grad.squaredNorm(); },
                         diff);
    }

  private:
    const C1Space& space_;
    const HomogenizedLaw& law_;
    StepperOptions opts_;
    DirichletSet dirichlet_;
    std::vector<uint8_t> fixed_mask_;
    GramSolver gram_;
};

// Unperforated macro domain over the same extent, with its own resolution.
inline PerforatedDomain macro_domain(const PerforatedDomain& micro, int elems_per_side) {
    return build_domain(solid_unit_cell(elems_per_side), Rational(1, 1), micro.dirichlet_faces,
                        micro.lo, micro.hi);
}

}  // namespace perihom
