#pragma once

// Experiment drivers behind the CLI subcommands: they build the objects from
// an ExperimentConfig, run, and persist manifests plus gnuplot-friendly CSV
// tables. Everything is sequential and deterministically ordered, so reruns
// with the same config and seed reproduce the outputs byte for byte.

#include "perihom/config.hpp"
#include "perihom/funineq.hpp"
#include "perihom/twoscale.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

namespace perihom {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace runio {

inline std::string fmt(double v) { return cfgio::fmt_double(v); }

inline std::string eps_dirname(const Rational& eps) {
    return "eps_" + std::to_string(eps.num) + "_" + std::to_string(eps.den);
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path.string());
    os << text;
}

inline void write_csv(const fs::path& path, const std::string& header,
                      const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream os;
    os << header << "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << "\n";
    }
    write_text(path, os.str());
}

inline void write_state_csv(const fs::path& path, const C1Field& f) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(f.space().ndof());
    for (int i = 0; i < f.space().ndof(); ++i) {
        int comp = (i / C1Space::kSlots) % C1Space::kComps;
        rows.push_back({std::to_string(i), std::to_string(comp), fmt(f[i])});
    }
    write_csv(path, "dof,component,value", rows);
}

inline void write_steps_csv(const fs::path& path, const Trajectory& traj) {
    std::vector<std::vector<std::string>> rows;
    double tau = traj.grid.tau.value();
    for (const auto& r : traj.reports)
        rows.push_back({std::to_string(r.k), fmt(r.k * tau), fmt(r.energy), fmt(r.dissipation),
                        fmt(r.det_min), std::to_string(r.newton_iters), fmt(r.residual_norm),
                        fmt(r.objective_drop), fmt(r.rate_norm_sq)});
    write_csv(path, "k,t,energy,dissipation,det_min,newton_iters,residual_norm,objective_drop,rate_norm_sq",
              rows);
}

}  // namespace runio

// Collects checks and file references for one manifest.
class RunRecorder {
  public:
    RunRecorder(const fs::path& dir, const ExperimentConfig& cfg, const std::string& subcommand)
        : dir_(dir) {
        fs::create_directories(dir);
        manifest_["tool"] = {{"name", "perihom"}, {"version", kVersion}};
        manifest_["subcommand"] = subcommand;
        manifest_["config"] = cfg.serialize();
        manifest_["hypothesis"] = {
            {"p", cfg.p},
            {"space_dimension", 2},
            {"p_exceeds_dimension", cfg.p_exceeds_dimension()},
            {"note", cfg.p_exceeds_dimension()
                         ? "strain-gradient exponent satisfies p > n"
                         : "quadratic mode runs with p = 2 <= n; the analysis requires p > n"}};
        manifest_["runs"] = json::array();
        manifest_["checks"] = json::array();
        manifest_["files"] = json::array();
    }

    const fs::path& dir() const { return dir_; }

    void add_file(const std::string& rel) { manifest_["files"].push_back(rel); }
    void add_run(const json& summary) { manifest_["runs"].push_back(summary); }

    void add_check(const std::string& name, bool pass, const std::string& detail) {
        manifest_["checks"].push_back({{"name", name}, {"pass", pass}, {"detail", detail}});
        checks_.push_back({name, pass, detail});
    }

    bool all_pass() const {
        for (const auto& c : checks_)
            if (!c.pass) return false;
        return true;
    }
    const std::vector<CheckResult>& checks() const { return checks_; }

    void finalize() { runio::write_text(dir_ / "manifest.json", manifest_.dump(2) + "\n"); }

  private:
    fs::path dir_;
    json manifest_;
    std::vector<CheckResult> checks_;
};

namespace runners {

inline C1Field random_field(const C1Space& space, std::mt19937& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    C1Field f(space);
    for (int i = 0; i < space.ndof(); ++i) f[i] = dist(rng);
    return f;
}

// Per-step checks common to micro and macro trajectories.
inline void check_trajectory(RunRecorder& rec, const std::string& tag, const Trajectory& traj,
                             double initial_energy) {
    double energy_prev = initial_energy;
    bool ineq = true, floor_ok = true, resid = true;
    double worst_slack = 0.0, min_det = 1e300, max_resid = 0.0;
    for (const auto& r : traj.reports) {
        if (!r.energy_inequality_ok(energy_prev)) ineq = false;
        double lhs = r.energy + r.dissipation - r.load_work;
        double rhs = energy_prev - r.load_work_prev;
        worst_slack = std::max(worst_slack, (lhs - rhs) / (1.0 + std::abs(energy_prev)));
        min_det = std::min(min_det, r.det_min);
        max_resid = std::max(max_resid, r.residual_norm);
        if (r.det_min < 1e-3) floor_ok = false;
        if (r.residual_norm > 1e-9) resid = false;
        energy_prev = r.energy;
    }
    rec.add_check(tag + ".energy_inequality", ineq,
                  "worst relative slack " + runio::fmt(worst_slack) + " (tol 1e-8)");
    rec.add_check(tag + ".det_floor", floor_ok,
                  "min det " + runio::fmt(min_det) + " (floor 1e-3)");
    rec.add_check(tag + ".residuals", resid,
                  "max residual " + runio::fmt(max_resid) + " (tol 1e-9)");
}

inline json trajectory_summary(const Trajectory& traj) {
    double min_det = 1e300, diss = traj.dissipation_sum;
    for (const auto& r : traj.reports) min_det = std::min(min_det, r.det_min);
    json s;
    s["steps"] = traj.reports.size();
    s["final_energy"] = traj.reports.empty() ? 0.0 : traj.reports.back().energy;
    s["min_det"] = min_det;
    s["dissipation_sum"] = diss;
    s["report_table"] = json::array();
    for (const auto& r : traj.reports)
        s["report_table"].push_back({{"k", r.k},
                                     {"energy", r.energy},
                                     {"dissipation", r.dissipation},
                                     {"det_min", r.det_min},
                                     {"newton_iters", r.newton_iters},
                                     {"residual_norm", r.residual_norm},
                                     {"objective_drop", r.objective_drop}});
    return s;
}

struct MicroRunResult {
    PerforatedDomain domain;
    std::shared_ptr<C1Space> space;
    Trajectory traj;
    double initial_energy = 0.0;
};

inline MicroRunResult run_micro_once(const ExperimentConfig& cfg, const Rational& eps,
                                     const fs::path& dir, RunRecorder& rec,
                                     const std::string& rel_prefix) {
    MicroRunResult out{cfg.domain(eps), nullptr, {}, 0.0};
    out.space = std::make_shared<C1Space>(C1Space::on_domain(out.domain, cfg.quad_order));
    MaterialBundle bundle = cfg.bundle();
    MicroSolver solver(out.domain, *out.space, bundle);
    C1Field init = identity_field(*out.space);
    out.initial_energy = solver.mechanical_energy(init);
    out.traj = solver.run_trajectory(cfg.loads(), cfg.time_grid(), init);

    fs::create_directories(dir);
    runio::write_steps_csv(dir / "steps.csv", out.traj);
    rec.add_file(rel_prefix + "steps.csv");
    for (size_t k = 0; k < out.traj.states.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "state_%03zu.csv", k);
        runio::write_state_csv(dir / name, out.traj.states[k]);
        rec.add_file(rel_prefix + name);
    }
    json summary = trajectory_summary(out.traj);
    summary["eps"] = eps.str();
    summary["dofs"] = out.space->ndof();
    summary["initial_energy"] = out.initial_energy;
    rec.add_run(summary);
    check_trajectory(rec, "micro." + runio::eps_dirname(eps), out.traj, out.initial_energy);
    return out;
}

struct MacroRunResult {
    PerforatedDomain domain;
    std::shared_ptr<C1Space> space;
    std::shared_ptr<HomogenizedLaw> law;
    Trajectory traj;
    double initial_energy = 0.0;
};

inline MacroRunResult run_macro_once(const ExperimentConfig& cfg, const fs::path& dir,
                                     RunRecorder& rec, const std::string& rel_prefix) {
    MacroRunResult out;
    out.domain = cfg.macro_domain();
    out.space = std::make_shared<C1Space>(C1Space::on_domain(out.domain, cfg.quad_order));
    out.law = std::make_shared<HomogenizedLaw>(cfg.unit_cell(), cfg.bundle(), cfg.hhom,
                                               cfg.quad_order);
    MacroSolver solver(out.domain, *out.space, *out.law);
    C1Field init = identity_field(*out.space);
    out.initial_energy = solver.mechanical_energy(init);
    out.traj = solver.run_trajectory(cfg.loads(), cfg.time_grid(), init);

    fs::create_directories(dir);
    runio::write_steps_csv(dir / "macro_steps.csv", out.traj);
    rec.add_file(rel_prefix + "macro_steps.csv");
    runio::write_state_csv(dir / "macro_final.csv", out.traj.states.back());
    rec.add_file(rel_prefix + "macro_final.csv");
    if (cfg.hhom == HhomMode::Quadratic) {
        std::vector<std::vector<std::string>> rows;
        for (int a = 0; a < 6; ++a) {
            std::vector<std::string> row;
            for (int b = 0; b < 6; ++b) row.push_back(runio::fmt(out.law->tensor().mat(a, b)));
            rows.push_back(row);
        }
        runio::write_csv(dir / "hhom_tensor.csv",
                         "# rows/cols ordered (comp,pair): (1,xx),(1,yy),(1,xy),(2,xx),(2,yy),(2,xy)",
                         rows);
        rec.add_file(rel_prefix + "hhom_tensor.csv");
    }
    json summary = trajectory_summary(out.traj);
    summary["grid"] = cfg.macro_elems;
    summary["mode"] = cfg.hhom == HhomMode::Quadratic ? "quadratic" : "nested";
    rec.add_run(summary);
    check_trajectory(rec, "macro", out.traj, out.initial_energy);
    return out;
}

inline void run_cell(const ExperimentConfig& cfg, RunRecorder& rec) {
    UnitCell cell = cfg.unit_cell();
    MaterialBundle bundle = cfg.bundle();
    CellSolver solver(cell, bundle.gradient, cfg.quad_order);
    Tens3 G = sym_basis_tensor(0);
    CellSolution sol = solver.solve(G);

    {
        std::vector<std::vector<std::string>> rows;
        for (int i = 0; i < sol.u2.size(); ++i) {
            int comp = (i / C1Space::kSlots) % C1Space::kComps;
            rows.push_back({std::to_string(i), std::to_string(comp), runio::fmt(sol.u2[i])});
        }
        runio::write_csv(rec.dir() / "cell_u2.csv", "dof,component,value", rows);
        rec.add_file("cell_u2.csv");
    }

    C1Space probe = C1Space::on_cell(cell, true, cfg.quad_order);
    C1Field zero(probe);
    double upper = integrate(
        probe, [&](const Vec2& y, const Jet2&) { return bundle.gradient.eval(y, G); }, zero);
    double u2_norm = sol.u2_l2_norm();

    std::vector<std::vector<std::string>> rows;
    rows.push_back({"value", runio::fmt(sol.value)});
    rows.push_back({"no_corrector_bound", runio::fmt(upper)});
    rows.push_back({"u2_l2_norm", runio::fmt(u2_norm)});
    rows.push_back({"residual_norm", runio::fmt(sol.residual_norm)});
    for (int a = 0; a < 8; ++a)
        rows.push_back({"hstress_" + std::to_string(a), runio::fmt(sol.hstress[a])});
    runio::write_csv(rec.dir() / "cell_report.csv", "quantity,value", rows);
    rec.add_file("cell_report.csv");

    rec.add_check("cell.stationarity", sol.residual_norm <= 1e-9,
                  "residual " + runio::fmt(sol.residual_norm) + " (tol 1e-9)");
    rec.add_check("cell.infimum_bound", sol.value <= upper * (1.0 + 1e-12) + 1e-14,
                  "value " + runio::fmt(sol.value) + " vs bound " + runio::fmt(upper));
    if (!cfg.hole && cfg.beta_amp == 0.0) {
        rec.add_check("cell.trivial_corrector", u2_norm <= 1e-6,
                      "u2 L2 norm " + runio::fmt(u2_norm) + " (tol 1e-6)");
        bool same = std::abs(sol.value - upper) <= 1e-10 * std::max(1.0, std::abs(upper));
        rec.add_check("cell.trivial_value", same,
                      "relative gap " + runio::fmt(std::abs(sol.value - upper) /
                                                   std::max(1.0, std::abs(upper))));
    }

    if (bundle.gradient.quadratic()) {
        QuadraticTensor tensor = homogenized_tensor(solver);
        std::vector<std::vector<std::string>> trows;
        for (int a = 0; a < 6; ++a) {
            std::vector<std::string> row;
            for (int b = 0; b < 6; ++b) row.push_back(runio::fmt(tensor.mat(a, b)));
            trows.push_back(row);
        }
        runio::write_csv(rec.dir() / "hhom_tensor.csv",
                         "# rows/cols ordered (comp,pair): (1,xx),(1,yy),(1,xy),(2,xx),(2,yy),(2,xy)",
                         trows);
        rec.add_file("hhom_tensor.csv");
        Eigen::SelfAdjointEigenSolver<Matrix6d> es(tensor.mat);
        rec.add_check("cell.tensor_symmetric", tensor.asymmetry <= 1e-10,
                      "max asymmetry " + runio::fmt(tensor.asymmetry));
        rec.add_check("cell.tensor_spd", es.eigenvalues()[0] > 0.0,
                      "min eigenvalue " + runio::fmt(es.eigenvalues()[0]));
    }
    json summary;
    summary["value"] = sol.value;
    summary["u2_norm"] = u2_norm;
    summary["residual"] = sol.residual_norm;
    rec.add_run(summary);
}

inline void run_korn(const ExperimentConfig& cfg, RunRecorder& rec) {
    std::vector<CoefficientField> family = {CoefficientField::identity(),
                                            CoefficientField::smooth_deformation(),
                                            CoefficientField::rotation_field()};
    std::vector<std::vector<std::string>> rows;
    for (const auto& A : family) {
        double lo = 1e300, hi = 0.0, worst_resid = 0.0;
        for (const Rational& eps : cfg.eps_list) {
            PerforatedDomain dom = cfg.domain(eps);
            C1Space space = C1Space::on_domain(dom, cfg.quad_order);
            ConstantEstimate est = korn_constant(dom, space, A);
            rows.push_back({A.name, eps.str(), std::to_string(est.dof_count),
                            runio::fmt(est.value), runio::fmt(est.eigen_residual)});
            lo = std::min(lo, est.value);
            hi = std::max(hi, est.value);
            worst_resid = std::max(worst_resid, est.eigen_residual);
        }
        rec.add_check("korn." + A.name + ".uniform", hi / lo <= 1.5,
                      "max/min = " + runio::fmt(hi / lo) + " (bound 1.5)");
        rec.add_check("korn." + A.name + ".eigen_residual", worst_resid <= 1e-8,
                      "worst residual " + runio::fmt(worst_resid) + " (tol 1e-8)");
    }
    runio::write_csv(rec.dir() / "korn_constants.csv", "field,eps,dof_count,value,eigen_residual",
                     rows);
    rec.add_file("korn_constants.csv");
    json summary;
    summary["fields"] = family.size();
    summary["eps_count"] = cfg.eps_list.size();
    rec.add_run(summary);
}

inline void run_extend(const ExperimentConfig& cfg, RunRecorder& rec, int corpus = 50) {
    std::vector<std::vector<std::string>> rows;
    double worst[3] = {0, 0, 0};
    for (size_t ei = 0; ei < cfg.eps_list.size(); ++ei) {
        const Rational& eps = cfg.eps_list[ei];
        PerforatedDomain dom = cfg.domain(eps);
        C1Space space = C1Space::on_domain(dom, cfg.quad_order);
        ExtensionOperator ext(dom, space);
        std::mt19937 rng(unsigned(cfg.seed + 1000 * ei));
        double r[3] = {0, 0, 0};
        for (int t = 0; t < corpus; ++t) {
            C1Field u = random_field(space, rng);
            C1Field e = ext.extend(u);
            const C1Space& fsp = e.space();
            auto semi = [](const C1Space& s, const C1Field& f, int order) {
                auto dens = [order](const Vec2&, const Jet2& j) {
                    if (order == 0) return j.value.squaredNorm();
                    if (order == 1) return j.grad.squaredNorm();
                    return j.hess.squaredNorm();
                };
                return std::sqrt(integrate(s, dens, f));
            };
            double denom0 = semi(space, u, 0) + dom.eps() * semi(space, u, 1);
            r[0] = std::max(r[0], semi(fsp, e, 0) / denom0);
            r[1] = std::max(r[1], semi(fsp, e, 1) / semi(space, u, 1));
            r[2] = std::max(r[2], semi(fsp, e, 2) / semi(space, u, 2));
        }
        rows.push_back({eps.str(), runio::fmt(r[0]), runio::fmt(r[1]), runio::fmt(r[2])});
        for (int k = 0; k < 3; ++k) worst[k] = std::max(worst[k], r[k]);
    }
    runio::write_csv(rec.dir() / "extension_ratios.csv", "eps,ratio_l2,ratio_grad,ratio_hess",
                     rows);
    rec.add_file("extension_ratios.csv");
    for (int k = 0; k < 3; ++k) {
        std::string name = k == 0 ? "l2" : (k == 1 ? "grad" : "hess");
        rec.add_check("extend.ratio_" + name + "_finite", std::isfinite(worst[k]) && worst[k] < 100.0,
                      "sweep max " + runio::fmt(worst[k]));
    }
    json summary;
    summary["ratio_l2"] = worst[0];
    summary["ratio_grad"] = worst[1];
    summary["ratio_hess"] = worst[2];
    rec.add_run(summary);
}

inline void run_unfold(const ExperimentConfig& cfg, RunRecorder& rec, int corpus = 50) {
    const Rational& eps = cfg.eps_list.front();
    PerforatedDomain dom = cfg.domain(eps);
    C1Space space = C1Space::on_domain(dom, cfg.quad_order);
    std::mt19937 rng(unsigned(cfg.seed));
    double worst = 0.0;
    C1Field last(space);
    for (int t = 0; t < corpus; ++t) {
        C1Field u = random_field(space, rng);
        TwoScaleSamples s = unfold(dom, u, JetOrder::Value, false, cfg.quad_order);
        double direct = integrate(
            space, [](const Vec2&, const Jet2& j) { return j.value.squaredNorm(); }, u);
        worst = std::max(worst,
                         std::abs(s.squared_norm() - direct) / std::max(1.0, std::abs(direct)));
        last = u;
    }
    TwoScaleSamples s = unfold(dom, last, JetOrder::Value, false, cfg.quad_order);
    std::vector<std::vector<std::string>> rows;
    for (int cell = 0; cell < s.n_cells(); ++cell)
        for (int q = 0; q < s.n_micro(); ++q)
            rows.push_back({std::to_string(cell), runio::fmt(s.micro_pts[q].x()),
                            runio::fmt(s.micro_pts[q].y()), runio::fmt(s.at(cell, q, 0)),
                            runio::fmt(s.at(cell, q, 1))});
    runio::write_csv(rec.dir() / "unfold_samples.csv", "cell,y1,y2,u1,u2", rows);
    rec.add_file("unfold_samples.csv");
    rec.add_check("unfold.isometry", worst <= 1e-12,
                  "worst relative defect " + runio::fmt(worst) + " over " +
                      std::to_string(corpus) + " fields (tol 1e-12)");
    json summary;
    summary["eps"] = eps.str();
    summary["isometry_defect"] = worst;
    rec.add_run(summary);
}

inline void run_compare(const ExperimentConfig& cfg, RunRecorder& rec) {
    rec.add_run({{"two_scale_convention",
                  "macro jets evaluated at the physical point eps*([x/eps] + y), not at the "
                  "cell anchor; distances measured in L2(Omega x Y_s)"}});
    MacroRunResult macro = run_macro_once(cfg, rec.dir() / "macro", rec, "macro/");
    std::vector<std::vector<std::string>> rows;
    double prev_grad = -1.0;
    bool decreasing = true;
    double det_lo = 1e300, det_hi = 0.0;
    for (const Rational& eps : cfg.eps_list) {
        fs::path sub = rec.dir() / runio::eps_dirname(eps);
        MicroRunResult micro =
            run_micro_once(cfg, eps, sub, rec, runio::eps_dirname(eps) + "/");
        ExtensionOperator ext(micro.domain, *micro.space, cfg.quad_order);
        C1Field extended = ext.extend(micro.traj.states.back());
        double dv = two_scale_distance(micro.domain, extended, macro.traj.states.back(),
                                       JetOrder::Value, nullptr, false, cfg.quad_order);
        double dg = two_scale_distance(micro.domain, extended, macro.traj.states.back(),
                                       JetOrder::Grad, nullptr, false, cfg.quad_order);
        rows.push_back({eps.str(), runio::fmt(dv), runio::fmt(dg)});
        if (prev_grad >= 0.0 && dg >= prev_grad) decreasing = false;
        prev_grad = dg;
        for (const auto& r : micro.traj.reports) {
            det_lo = std::min(det_lo, r.det_min);
            det_hi = std::max(det_hi, r.det_min);
        }
    }
    runio::write_csv(rec.dir() / "distances.csv", "eps,dist_value,dist_grad", rows);
    rec.add_file("distances.csv");
    rec.add_check("compare.grad_distance_decreasing", decreasing,
                  "grad column of distances.csv must strictly decrease");
    rec.add_check("compare.det_min_spread", det_hi / det_lo <= 2.0,
                  "max/min over the sweep = " + runio::fmt(det_hi / det_lo) + " (bound 2)");
}

}  // namespace runners

// Exit codes: 0 success, 1 recorded check failed, 2 config invalid,
// 3 solver failure, 4 manifest missing or corrupt (report).
inline int run_subcommand(const std::string& sub, const ExperimentConfig& cfg,
                          const fs::path& out_root) {
    fs::path dir = out_root / cfg.out_dir;
    try {
        RunRecorder rec(dir, cfg, sub);
        if (sub == "micro") {
            runners::run_micro_once(cfg, cfg.eps_list.front(), dir, rec, "");
        } else if (sub == "macro") {
            runners::run_macro_once(cfg, dir, rec, "");
        } else if (sub == "cell") {
            runners::run_cell(cfg, rec);
        } else if (sub == "korn") {
            runners::run_korn(cfg, rec);
        } else if (sub == "extend") {
            runners::run_extend(cfg, rec);
        } else if (sub == "unfold") {
            runners::run_unfold(cfg, rec);
        } else if (sub == "compare") {
            runners::run_compare(cfg, rec);
        } else {
            throw ConfigError("unknown subcommand '" + sub + "'");
        }
        rec.finalize();
        return 0;
    } catch (const ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return 2;
    } catch (const Error& err) {
        std::cerr << "solver error: " << err.what() << "\n";
        return 3;
    }
}

// Runs a subcommand once per eps in the sweep list, each into its own
// subdirectory; the summary manifest is merged sequentially.
inline int run_sweep(const std::string& sub, const ExperimentConfig& cfg,
                     const fs::path& out_root) {
    fs::path dir = out_root / cfg.out_dir;
    try {
        RunRecorder top(dir, cfg, "sweep " + sub);
        for (const Rational& eps : cfg.eps_list) {
            ExperimentConfig sub_cfg = cfg;
            sub_cfg.eps_list = {eps};
            sub_cfg.out_dir = (fs::path(cfg.out_dir) / runio::eps_dirname(eps)).string();
            int rc = run_subcommand(sub, sub_cfg, out_root);
            if (rc != 0) return rc;
            top.add_run({{"eps", eps.str()},
                         {"manifest", runio::eps_dirname(eps) + "/manifest.json"}});
            top.add_file(runio::eps_dirname(eps) + "/manifest.json");
        }
        top.add_check("sweep.completed", true,
                      std::to_string(cfg.eps_list.size()) + " members");
        top.finalize();
        return 0;
    } catch (const Error& err) {
        std::cerr << "solver error: " << err.what() << "\n";
        return 3;
    }
}

// Prints one PASS/FAIL line per recorded check. Never mutates artifacts.
inline int report_manifest(const fs::path& manifest_path, std::ostream& os = std::cout) {
    std::ifstream in(manifest_path);
    if (!in) {
        std::cerr << "manifest missing: " << manifest_path << "\n";
        return 4;
    }
    json doc;
    try {
        in >> doc;
        if (!doc.contains("checks") || !doc["checks"].is_array()) throw std::runtime_error("no checks");
    } catch (const std::exception& err) {
        std::cerr << "manifest corrupt: " << err.what() << "\n";
        return 4;
    }
    os << "perihom " << doc.value("subcommand", "?") << " report\n";
    if (doc.contains("hypothesis"))
        os << "hypothesis: " << doc["hypothesis"].value("note", "") << "\n";
    bool all = true;
    for (const auto& c : doc["checks"]) {
        bool pass = c.value("pass", false);
        all = all && pass;
        os << (pass ? "PASS" : "FAIL") << "  " << c.value("name", "?") << "  ("
           << c.value("detail", "") << ")\n";
    }
    os << (all ? "all checks passed\n" : "CHECK FAILURES PRESENT\n");
    return all ? 0 : 1;
}

}  // namespace perihom
