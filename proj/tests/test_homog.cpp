#include <catch2/catch.hpp>

#include "perihom/homog.hpp"
#include "oracles.hpp"

#include <random>

using namespace perihom;

namespace {

UnitCell center_cell(int m = 8) {
    Rational q(1, 4), t(3, 4);
    return build_unit_cell({q, q, t, t}, m);
}

StrainGradientLaw power_law(double p, double amp) {
    StrainGradientLaw law;
    law.p = p;
    law.beta.amp = amp;
    return law;
}

}  // namespace

TEST_CASE("full cell with constant coefficient has zero corrector") {
    UnitCell full = solid_unit_cell(8);
    StrainGradientLaw law = power_law(4.0, 0.0);
    CellSolver solver(full, law);
    std::mt19937 rng(3);
    for (int i = 0; i < 10; ++i) {
        Tens3 G = oracles::random_sym_tens3(rng);
        CellSolution sol = solver.solve(G);
        CHECK(sol.u2_l2_norm() <= 1e-6);
        double direct = law.eval(Vec2::Zero(), G) * 1.0;  // beta constant, |Y| = 1
        CHECK(sol.value == Approx(direct).epsilon(1e-10));
        CHECK(sol.residual_norm <= 1e-9);
    }
}

TEST_CASE("zero macroscopic gradient gives the zero corrector") {
    CellSolver solver(center_cell(), power_law(4.0, 0.5));
    CellSolution sol = solver.solve(Tens3::zero());
    CHECK(sol.u2_l2_norm() <= 1e-12);
    CHECK(sol.value == Approx(0.0).margin(1e-14));
}

TEST_CASE("quadratic cell solve matches an independent direct solve") {
    UnitCell cell = center_cell();
    StrainGradientLaw law = power_law(2.0, 0.5);
    CellSolver solver(cell, law);
    Tens3 G = sym_basis_tensor(0);  // e1 x e1 x e1
    CellSolution sol = solver.solve(G);
    CHECK(sol.residual_norm <= 1e-9);

    // Oracle: stiffness columns by finite differences of the analytic
    // gradient, mean constraints appended, dense LU solve.
    const C1Space& space = solver.space();
    const int n = space.ndof();
    Assembler<CellProblemDensity> asmr(space, CellProblemDensity{&law, G});
    auto grad_at = [&](const Eigen::VectorXd& x) {
        C1Field f(space);
        f.coeffs() = x;
        Eigen::VectorXd g;
        asmr.gradient(f, nullptr, g);
        return g;
    };
    Eigen::VectorXd b = grad_at(Eigen::VectorXd::Zero(n));
    Eigen::MatrixXd K(n, n);
    double h = 1e-6;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd xp = Eigen::VectorXd::Zero(n), xm = xp;
        xp[i] += h;
        xm[i] -= h;
        K.col(i) = (grad_at(xp) - grad_at(xm)) / (2.0 * h);
    }
    // Mean rows of the value slots, assembled independently of the solver.
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2, n);
    {
        C1Field probe(space);
        for (int c = 0; c < 2; ++c)
            for (int i = 0; i < n; ++i) {
                probe.coeffs().setZero();
                probe[i] = 1.0;
                C(c, i) = integrate(
                    space, [&](const Vec2&, const Jet2& j) { return j.value[c]; }, probe);
            }
    }
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + 2, n + 2);
    kkt.topLeftCorner(n, n) = K;
    kkt.block(n, 0, 2, n) = C;
    kkt.block(0, n, n, 2) = C.transpose();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 2);
    rhs.head(n) = -b;
    Eigen::VectorXd x = Eigen::FullPivLU<Eigen::MatrixXd>(kkt).solve(rhs);

    CHECK((x.head(n) - sol.u2).norm() < 1e-8);
}

TEST_CASE("quadratic tensor of the full cell is the basis Gram") {
    QuadraticTensor t = homogenized_tensor(solid_unit_cell(8), power_law(2.0, 0.0));
    Matrix6d expect = Matrix6d::Zero();
    expect.diagonal() << 1, 1, 2, 1, 1, 2;
    CHECK((t.mat - expect).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(t.asymmetry <= 1e-10);
}

TEST_CASE("perforation relaxes the tensor eigenvalue-wise") {
    StrainGradientLaw law = power_law(2.0, 0.5);
    QuadraticTensor hole = homogenized_tensor(center_cell(), law);
    QuadraticTensor full = homogenized_tensor(solid_unit_cell(8), law);
    Eigen::SelfAdjointEigenSolver<Matrix6d> eh(hole.mat), ef(full.mat);
    for (int i = 0; i < 6; ++i) {
        CHECK(eh.eigenvalues()[i] <= ef.eigenvalues()[i] + 1e-12);
        CHECK(eh.eigenvalues()[i] > 0.0);  // SPD
    }
    CHECK(hole.asymmetry <= 1e-10);
}

TEST_CASE("averaged laws reproduce the solid-fraction scaling") {
    UnitCell cell = center_cell();
    MaterialBundle constant = MaterialBundle::with_exponents(2.0, 4.0, 0.0);
    HomogenizedLaw law = averaged_laws(cell, constant, HhomMode::Quadratic);
    CHECK(law.Wbar().eval(Vec2::Zero(), Mat2::Identity()) == Approx(5.0 * 0.75).epsilon(1e-12));
    CHECK(law.Rbar().eval(Vec2::Zero(), Mat2::Identity(), Mat2::Identity()) ==
          Approx(4.0 * 0.75).epsilon(1e-12));
}

TEST_CASE("averaged elastic law with oscillating coefficient") {
    UnitCell cell = center_cell();
    MaterialBundle bundle = MaterialBundle::with_exponents(2.0, 4.0, 0.5);
    HomogenizedLaw law = averaged_laws(cell, bundle, HhomMode::Quadratic);
    // Independent midpoint quadrature of alpha over Y_s.
    int n = 1024;
    double hh = 1.0 / n, alpha_bar = 0.0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            Vec2 y((i + 0.5) * hh, (j + 0.5) * hh);
            int ex = std::min(int(y.x() * cell.m), cell.m - 1);
            int ey = std::min(int(y.y() * cell.m), cell.m - 1);
            if (cell.is_solid(ex, ey)) alpha_bar += bundle.elastic.alpha(y) * hh * hh;
        }
    CHECK(law.Wbar().eval(Vec2::Zero(), Mat2::Identity()) ==
          Approx(5.0 * alpha_bar).epsilon(1e-6));
}

TEST_CASE("power-law homogeneity of the cell value") {
    UnitCell cell = center_cell();
    StrainGradientLaw law = power_law(4.0, 0.5);
    CellSolver solver(cell, law);
    std::mt19937 rng(9);
    Tens3 G = oracles::random_sym_tens3(rng);
    CellSolution base = solver.solve(G);
    for (double s : {2.0, 0.5}) {
        Eigen::VectorXd warm = s * base.u2;  // minimizer scales with s
        CellSolution scaled = solver.solve(s * G, &warm);
        CHECK(scaled.value ==
              Approx(detail::ipow(s, 4) * base.value).epsilon(1e-6));
    }
}

TEST_CASE("cell value never exceeds the no-corrector bound") {
    UnitCell cell = center_cell();
    StrainGradientLaw law = power_law(4.0, 0.5);
    CellSolver solver(cell, law);
    C1Space probe = C1Space::on_cell(cell, true);
    C1Field zero(probe);
    std::mt19937 rng(21);
    for (int i = 0; i < 5; ++i) {
        Tens3 G = oracles::random_sym_tens3(rng);
        CellSolution sol = solver.solve(G);
        double upper =
            integrate(probe, [&](const Vec2& y, const Jet2&) { return law.eval(y, G); }, zero);
        CHECK(sol.value <= upper + 1e-10);
        CHECK(sol.value >= 0.0);
        CHECK(sol.residual_norm <= 1e-9);
    }
}

TEST_CASE("quadratic-mode stress agrees with the cell-solve stress") {
    UnitCell cell = center_cell();
    StrainGradientLaw law = power_law(2.0, 0.5);
    CellSolver solver(cell, law);
    QuadraticTensor tensor = homogenized_tensor(solver);
    std::mt19937 rng(33);
    for (int i = 0; i < 4; ++i) {
        Tens3 G = oracles::random_sym_tens3(rng);
        Tens3 Ghat = oracles::random_sym_tens3(rng);
        CellSolution sol = solver.solve(G);
        double from_tensor = tensor.stress(G).dot(Ghat);
        double from_cell = sol.hstress.dot(Ghat);
        CHECK(from_tensor == Approx(from_cell).margin(1e-7));
    }
}

TEST_CASE("macro zero-load run stays at the identity") {
    UnitCell cell = center_cell();
    MaterialBundle bundle = MaterialBundle::with_exponents(2.0, 4.0, 0.5);
    HomogenizedLaw law = averaged_laws(cell, bundle, HhomMode::Quadratic);
    PerforatedDomain mdom = build_domain(solid_unit_cell(8), {1, 1}, {Face::Left});
    C1Space mspace = C1Space::on_domain(mdom);
    MacroSolver solver(mdom, mspace, law);
    Trajectory traj =
        solver.run_trajectory(Loads{}, TimeGrid::make({1, 10}, {1, 40}), identity_field(mspace));
    CHECK((traj.states.back().coeffs() - traj.states.front().coeffs()).norm() < 1e-9);
}

TEST_CASE("macro per-step inequality under a ramp load") {
    UnitCell cell = center_cell();
    MaterialBundle bundle = MaterialBundle::with_exponents(2.0, 4.0, 0.5);
    HomogenizedLaw law = averaged_laws(cell, bundle, HhomMode::Quadratic);
    PerforatedDomain mdom = build_domain(solid_unit_cell(12), {1, 1}, {Face::Left});
    C1Space mspace = C1Space::on_domain(mdom);
    MacroSolver solver(mdom, mspace, law);
    Loads loads;
    loads.f_ramp = Vec2(0.05, 0.0);
    Trajectory traj =
        solver.run_trajectory(loads, TimeGrid::make({1, 10}, {1, 40}), identity_field(mspace));
    double energy_prev = solver.mechanical_energy(traj.states.front());
    for (const auto& rep : traj.reports) {
        CHECK(rep.energy_inequality_ok(energy_prev));
        CHECK(rep.residual_norm <= 1e-9);
        energy_prev = rep.energy;
    }
}

TEST_CASE("nested and quadratic modes agree on a quadratic law") {
    UnitCell cell = center_cell();
    MaterialBundle bundle = MaterialBundle::with_exponents(2.0, 4.0, 0.5);
    HomogenizedLaw quad = averaged_laws(cell, bundle, HhomMode::Quadratic);
    HomogenizedLaw nested = averaged_laws(cell, bundle, HhomMode::Nested);

    PerforatedDomain mdom = build_domain(solid_unit_cell(6), {1, 1}, {Face::Left});
    C1Space mspace = C1Space::on_domain(mdom);
    Loads loads;
    loads.f_ramp = Vec2(0.1, -0.05);
    TimeGrid grid = TimeGrid::make({3, 100}, {1, 100});

    MacroSolver s_quad(mdom, mspace, quad);
    MacroSolver s_nest(mdom, mspace, nested);
    Trajectory t_quad = s_quad.run_trajectory(loads, grid, identity_field(mspace));
    Trajectory t_nest = s_nest.run_trajectory(loads, grid, identity_field(mspace));
    double err = (t_quad.states.back().coeffs() - t_nest.states.back().coeffs()).norm();
    CHECK(err < 1e-7);
}

TEST_CASE("one-shot cell solve entry point") {
    UnitCell cell = center_cell();
    StrainGradientLaw law = power_law(2.0, 0.5);
    Tens3 G = sym_basis_tensor(1);
    CellSolution a = solve_cell(cell, law, G);
    CellSolver solver(cell, law);
    CellSolution b = solver.solve(G);
    CHECK(a.value == Approx(b.value).epsilon(1e-12));
    CHECK((a.u2 - b.u2).norm() < 1e-10);
    CHECK(a.residual_norm <= 1e-9);
    // Warm starting from the known solution converges immediately.
    CellSolution warm = solve_cell(cell, law, G, &b.u2);
    CHECK(warm.value == Approx(b.value).epsilon(1e-12));
}
