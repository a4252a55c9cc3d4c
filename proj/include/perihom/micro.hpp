#pragma once

// Incremental minimization time-stepper for the microscopic viscoelastic
// problem, with per-step diagnostics: energy, dissipation, determinant
// minimum, and the first-order optimality residual in the dual norm.

#include "perihom/assembly.hpp"

namespace perihom {

// Body force f(t,x) = f_const + t * f_ramp and hole-boundary traction with
// amplitude ghat(t) = g_const + t * g_ramp. The traction applied on the
// micro scale is eps * ghat, which keeps its L2(Gamma_eps) norm of order
// sqrt(eps); the Neumann part of the outer boundary stays traction free.
struct Loads {
    Vec2 f_const = Vec2::Zero();
    Vec2 f_ramp = Vec2::Zero();
    Vec2 g_const = Vec2::Zero();
    Vec2 g_ramp = Vec2::Zero();

    Vec2 f(double t) const { return f_const + t * f_ramp; }
    Vec2 ghat(double t) const { return g_const + t * g_ramp; }
    bool has_g() const { return g_const.squaredNorm() + g_ramp.squaredNorm() > 0.0; }
};

struct TimeGrid {
    Rational T{1, 10};
    Rational tau{1, 100};
    int n_steps = 0;

    static TimeGrid make(const Rational& T, const Rational& tau) {
        Rational ratio = T / tau;
        if (!ratio.is_integer() || ratio.num < 1)
            throw ConfigError("tau = " + tau.str() + " must evenly divide T = " + T.str());
        TimeGrid g;
        g.T = T;
        g.tau = tau;
        g.n_steps = int(ratio.num);
        return g;
    }
};

struct StepReport {
    int k = 0;
    double energy = 0.0;        // M(u^k)
    double dissipation = 0.0;   // tau^{-1} R(u^{k-1}, u^k - u^{k-1})
    double det_min = 0.0;
    int newton_iters = 0;
    double residual_norm = 0.0;
    double objective_drop = 0.0;  // objective(u^{k-1}) - objective(u^k), same load
    double load_work_prev = 0.0;  // <l^k, u^{k-1}>
    double load_work = 0.0;       // <l^k, u^k>
    double rate_norm_sq = 0.0;    // || delta_tau grad u^k ||_{L2}^2

    // The discrete energy inequality this step certifies:
    // M(u^k) + tau^{-1} R - <l,u^k>  <=  M(u^{k-1}) - <l,u^{k-1}> + tol.
    bool energy_inequality_ok(double energy_prev, double rel_tol = 1e-8) const {
        double lhs = energy + dissipation - load_work;
        double rhs = energy_prev - load_work_prev;
        return lhs <= rhs + rel_tol * (1.0 + std::abs(energy_prev));
    }
};

struct Trajectory {
    TimeGrid grid;
    std::vector<C1Field> states;     // n_steps + 1, states[0] = initial
    std::vector<StepReport> reports; // n_steps
    double dissipation_sum = 0.0;    // sum_k tau * ||delta_tau grad u^k||^2
};

struct StepperOptions {
    double tol_newton = 1e-9;
    double tol_step = 1e-8;  // relative slack in the per-step inequality
    double det_floor = 1e-3;
    int max_iters = 50;
};

// Shared per-space context for a micro run: assembler + Gram + constraints.
class MicroSolver {
  public:
    MicroSolver(const PerforatedDomain& domain, const C1Space& space, const MaterialBundle& bundle,
                StepperOptions opts = {})
        : domain_(domain),
          space_(space),
          bundle_(bundle),
          opts_(opts),
          assembler_(space, MicroStepDensity{&bundle_, domain.eps(), 0.0}) {
        dirichlet_ = dirichlet_id_constraints(space);
        fixed_mask_ = dirichlet_.mask(space.ndof());
        gram_.build(space, fixed_mask_);
    }

    const C1Space& space() const { return space_; }
    const DirichletSet& dirichlet() const { return dirichlet_; }
    const GramSolver& gram() const { return gram_; }
    const StepperOptions& options() const { return opts_; }

    double mechanical_energy(const C1Field& u) const {
        Vec2 worst;
        double dmin = assembler_.min_det(u, &worst);
        if (!(dmin > 0.0))
            throw NonPositiveDet("det(grad u) = " + std::to_string(dmin) +
                                 " at quadrature point (" + std::to_string(worst.x()) + ", " +
                                 std::to_string(worst.y()) + ")");
        Assembler<MicroStepDensity> pure(space_, MicroStepDensity{&bundle_, domain_.eps(), 0.0});
        return pure.energy(u, nullptr);
    }

    double det_min(const C1Field& u) const { return assembler_.min_det(u); }

    // tau^{-1} R_eps(u_prev, u - u_prev), integrated directly.
    double dissipation_value(const C1Field& u_prev, const C1Field& u, double tau) const {
        double total = 0.0;
        double eps = domain_.eps();
        int nq = space_.n_quad_per_elem();
        int nqd = space_.quad_order();
        for (int e : space_.solid_elems()) {
            int ex = e % space_.nex(), ey = e / space_.nex();
            for (int q = 0; q < nq; ++q) {
                double tx = space_.quad().pts[q % nqd], ty = space_.quad().pts[q / nqd];
                Jet2 jp = space_.eval_jet_local(u_prev, ex, ey, tx, ty);
                Jet2 ju = space_.eval_jet_local(u, ex, ey, tx, ty);
                Vec2 x = space_.quad_point(ex, ey, q);
                Vec2 y(fract01(x.x() / eps), fract01(x.y() / eps));
                total += space_.quad_weight(q) *
                         bundle_.dissipation.eval(y, jp.grad, ju.grad - jp.grad);
            }
        }
        return total / tau;
    }

    // Load functional for step k: midpoint-in-time average over the step.
    Eigen::VectorXd step_load(const Loads& loads, const TimeGrid& grid, int k) const {
        double t_mid = (double(k) - 0.5) * grid.tau.value();
        Vec2 f = loads.f(t_mid);
        Eigen::VectorXd l = assemble_volume_load(space_, [&](const Vec2&) { return f; });
        if (loads.has_g()) {
            Vec2 g = domain_.eps() * loads.ghat(t_mid);
            l += assemble_surface_load(space_, domain_, FacetTag::GammaEps,
                                       [&](const Vec2&) { return g; });
        }
        return l;
    }

    std::pair<C1Field, StepReport> incremental_step(const C1Field& u_prev, double tau,
                                                    const Eigen::VectorXd& load_k, int k = 0) {
        Assembler<MicroStepDensity> step_asm(space_,
                                             MicroStepDensity{&bundle_, domain_.eps(), 1.0 / tau});
        Assembler<MicroStepDensity> energy_asm(space_, MicroStepDensity{&bundle_, domain_.eps(), 0.0});

        if (step_asm.min_det(u_prev) < opts_.det_floor)
            throw NonPositiveDet("previous state violates the determinant floor");
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
        if (rep.objective_drop < -opts_.tol_step * (1.0 + std::abs(energy_prev)))
            throw Error("incremental step increased the objective by " +
                        std::to_string(-rep.objective_drop));
        return {std::move(u), rep};
    }

    Trajectory run_trajectory(const Loads& loads, const TimeGrid& grid, const C1Field& u_init) {
        {
            double d0 = det_min(u_init);
            if (!(d0 > 0.0))
                throw NonPositiveDet("initial state has det(grad u) = " + std::to_string(d0));
            mechanical_energy(u_init);  // must be finite
        }
        Trajectory traj;
        traj.grid = grid;
        traj.states.reserve(grid.n_steps + 1);
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
                throw Error("step " + std::to_string(k) + " failed: " + err.what());
            }
        }
        return traj;
    }

    // Dual norm (H2 Gram of the test space vanishing on the Dirichlet part)
    // of the discrete Euler-Lagrange residual of the incremental step.
    double weak_residual(const C1Field& u_k, const C1Field& u_prev, double tau,
                         const Eigen::VectorXd& load_k) const {
        Assembler<MicroStepDensity> step_asm(space_,
                                             MicroStepDensity{&bundle_, domain_.eps(), 1.0 / tau});
        double dmin = step_asm.min_det(u_k);
        if (!(dmin >= opts_.det_floor))
            throw NonPositiveDet("state violates the determinant floor: " + std::to_string(dmin));
        Eigen::VectorXd grad;
        step_asm.gradient(u_k, &u_prev, grad);
        grad -= load_k;
        return gram_.dual_norm(grad);
    }

    // || (grad u - grad u_prev) / tau ||_{L2(Omega_eps)}^2
    double rate_gradient_norm_sq(const C1Field& u, const C1Field& u_prev, double tau) const {
        C1Field diff = u;
        diff.coeffs() = (u.coeffs() - u_prev.coeffs()) / tau;
        return integrate(space_, [](const Vec2&, const Jet2& j) { return j.grad.squaredNorm(); },
                         diff);
    }

  private:
    const PerforatedDomain& domain_;
    const C1Space& space_;
    MaterialBundle bundle_;
    StepperOptions opts_;
    Assembler<MicroStepDensity> assembler_;
    DirichletSet dirichlet_;
    std::vector<uint8_t> fixed_mask_;
    GramSolver gram_;
};

}  // namespace perihom
