#pragma once

// Unfolding operator, local averaging, and two-scale distances. The unfolded
// samples are taken at the quadrature points of the unit cell, which map
// exactly onto the physical quadrature points of the micro grid, so the
// unfolding isometry holds to rounding.

#include "perihom/homog.hpp"

namespace perihom {

enum class JetOrder { Value, Grad, Hess };

inline int jet_order_comps(JetOrder o) {
    switch (o) {
        case JetOrder::Value: return 2;
        case JetOrder::Grad: return 4;
        case JetOrder::Hess: return 8;
    }
    return 0;
}

// Samples of an unfolded field: one macro block per micro-cell (the unfolding
// is cell-constant in the macro variable), micro points on the unit cell.
struct TwoScaleSamples {
    int cells_x = 0, cells_y = 0;
    double eps = 1.0;
    int comps = 1;
    std::vector<Vec2> micro_pts;      // in Y
    std::vector<double> micro_wts;    // cell quadrature weights
    std::vector<double> values;       // ((cell, micro), comp)

    int n_cells() const { return cells_x * cells_y; }
    int n_micro() const { return int(micro_pts.size()); }
    double& at(int cell, int q, int c) {
        return values[(size_t(cell) * n_micro() + q) * comps + c];
    }
    double at(int cell, int q, int c) const {
        return values[(size_t(cell) * n_micro() + q) * comps + c];
    }

    // L2(Omega x Y_s)^2 with macro weight eps^2 per cell.
    double squared_norm() const {
        double total = 0.0;
        int nm = n_micro();
        for (int cell = 0; cell < n_cells(); ++cell)
            for (int q = 0; q < nm; ++q) {
                double s = 0.0;
                for (int c = 0; c < comps; ++c) {
                    double v = at(cell, q, c);
                    s += v * v;
                }
                total += eps * eps * micro_wts[q] * s;
            }
        return total;
    }
};

namespace detail {

// Quadrature points of the unit cell (solid part, or all of Y), listed per
// element in lexicographic order. Weights are cell-level (h = 1/m).
struct CellSampling {
    std::vector<Vec2> pts;
    std::vector<double> wts;
    std::vector<std::array<int, 2>> elems;  // element (ex,ey) per point
    std::vector<int> qp_in_elem;
};

inline CellSampling cell_quad_sampling(const UnitCell& cell, bool include_void, int quad_order) {
    CellSampling s;
    QuadRule rule = QuadRule::gauss(quad_order);
    double h = 1.0 / cell.m;
    for (int ey = 0; ey < cell.m; ++ey)
        for (int ex = 0; ex < cell.m; ++ex) {
            if (!include_void && !cell.is_solid(ex, ey)) continue;
            int nq = int(rule.pts.size());
            for (int q = 0; q < nq * nq; ++q) {
                s.pts.emplace_back((ex + rule.pts[q % nq]) * h, (ey + rule.pts[q / nq]) * h);
                s.wts.push_back(rule.wts[q % nq] * rule.wts[q / nq] * h * h);
                s.elems.push_back({ex, ey});
                s.qp_in_elem.push_back(q);
            }
        }
    return s;
}

}  // namespace detail

// Unfolds the chosen jet order of a field living on the (possibly extended)
// micro grid. `domain` fixes the cell layout; the field's own grid must match
// its resolution. include_void samples all of Y and requires a field whose
// space covers the holes.
inline TwoScaleSamples unfold(const PerforatedDomain& domain, const C1Field& field, JetOrder order,
                              bool include_void = false, int quad_order = 4) {
    const C1Space& fs = field.space();
    if (fs.nex() != domain.nex || fs.ney() != domain.ney)
        throw Error("field grid does not match the domain resolution");
    TwoScaleSamples out;
    out.cells_x = domain.cells_x;
    out.cells_y = domain.cells_y;
    out.eps = domain.eps();
    out.comps = jet_order_comps(order);
    auto sampling = detail::cell_quad_sampling(domain.cell, include_void, quad_order);
    out.micro_pts = sampling.pts;
    out.micro_wts = sampling.wts;
    out.values.assign(size_t(out.n_cells()) * out.n_micro() * out.comps, 0.0);

    QuadRule rule = QuadRule::gauss(quad_order);
    int m = domain.cell.m;
    int nq = int(rule.pts.size());
    for (int ky = 0; ky < domain.cells_y; ++ky)
        for (int kx = 0; kx < domain.cells_x; ++kx) {
            int cell_id = ky * domain.cells_x + kx;
            for (int s = 0; s < out.n_micro(); ++s) {
                int ex = kx * m + sampling.elems[s][0];
                int ey = ky * m + sampling.elems[s][1];
                if (!fs.elem_is_solid(ex, ey))
                    throw PointInVoid("unfolding sample in a void element of the field grid");
                int q = sampling.qp_in_elem[s];
                Jet2 jet = fs.eval_jet_local(field, ex, ey, rule.pts[q % nq], rule.pts[q / nq]);
                double* dst = &out.at(cell_id, s, 0);
                switch (order) {
                    case JetOrder::Value:
                        dst[0] = jet.value[0];
                        dst[1] = jet.value[1];
                        break;
                    case JetOrder::Grad:
                        for (int a = 0; a < 4; ++a) dst[a] = jet.grad(a / 2, a % 2);
                        break;
                    case JetOrder::Hess:
                        for (int a = 0; a < 8; ++a) dst[a] = jet.hess[a];
                        break;
                }
            }
        }
    return out;
}

// Cell averages over the full cell Y: one value per micro-cell. The field
// must be defined on all of Omega (extend perforated fields first).
inline std::vector<Vec2> local_average(const PerforatedDomain& domain, const C1Field& field,
                                       int quad_order = 4) {
    const C1Space& fs = field.space();
    if (int(fs.solid_elems().size()) != fs.nex() * fs.ney())
        throw FieldNotGlobal("local averaging needs a field defined on all of Omega");
    TwoScaleSamples samples = unfold(domain, field, JetOrder::Value, true, quad_order);
    std::vector<Vec2> out(samples.n_cells(), Vec2::Zero());
    for (int cell = 0; cell < samples.n_cells(); ++cell) {
        Vec2 acc = Vec2::Zero();
        for (int q = 0; q < samples.n_micro(); ++q)
            acc += samples.micro_wts[q] * Vec2(samples.at(cell, q, 0), samples.at(cell, q, 1));
        out[cell] = acc;  // |Y| = 1
    }
    return out;
}

// || T_eps(D^order u_eps) - (D^order u_0 [+ hess_y u2]) ||_{L2(Omega x Y_s)}.
// The macro field is evaluated at the physical point eps([x/eps] + y).
inline double two_scale_distance(const PerforatedDomain& domain, const C1Field& micro_field,
                                 const C1Field& macro_field, JetOrder order,
                                 const CellSolution* corrector = nullptr,
                                 bool zero_corrector = false, int quad_order = 4) {
    if (order == JetOrder::Hess && !corrector && !zero_corrector)
        throw MissingCorrector("hess-order distance needs a corrector (or an explicit zero)");
    TwoScaleSamples micro = unfold(domain, micro_field, order, false, quad_order);
    const C1Space& ms = macro_field.space();
    double eps = domain.eps();
    double total = 0.0;
    for (int ky = 0; ky < domain.cells_y; ++ky)
        for (int kx = 0; kx < domain.cells_x; ++kx) {
            int cell_id = ky * domain.cells_x + kx;
            for (int q = 0; q < micro.n_micro(); ++q) {
                Vec2 y = micro.micro_pts[q];
                Vec2 x = domain.origin() + eps * Vec2(kx + y.x(), ky + y.y());
                Jet2 mj = ms.eval_jet(macro_field, x);
                double s = 0.0;
                switch (order) {
                    case JetOrder::Value:
                        for (int c = 0; c < 2; ++c) {
                            double d = micro.at(cell_id, q, c) - mj.value[c];
                            s += d * d;
                        }
                        break;
                    case JetOrder::Grad:
                        for (int a = 0; a < 4; ++a) {
                            double d = micro.at(cell_id, q, a) - mj.grad(a / 2, a % 2);
                            s += d * d;
                        }
                        break;
                    case JetOrder::Hess: {
                        Tens3 corr;
                        if (corrector) corr = corrector->corrector_jet(y).hess;
                        for (int a = 0; a < 8; ++a) {
                            double d = micro.at(cell_id, q, a) - mj.hess[a] - corr[a];
                            s += d * d;
                        }
                        break;
                    }
                }
                total += eps * eps * micro.micro_wts[q] * s;
            }
        }
    return std::sqrt(total);
}

// Boundary unfolding on the hole boundary Gamma (load-convergence
// diagnostic): samples of the trace on Omega x Gamma, with the eps-scaled
// surface weights, so that ||T(u)||_{L2(Omega x Gamma)}^2 = eps ||u||_{L2(Gamma_eps)}^2.
struct BoundarySamples {
    int n_cells = 0;
    double eps = 1.0;
    std::vector<Vec2> micro_pts;   // on Gamma
    std::vector<double> micro_wts; // surface weights on the cell
    std::vector<Vec2> values;      // per (cell, micro)

    double squared_norm() const {
        double total = 0.0;
        int nm = int(micro_pts.size());
        for (int cell = 0; cell < n_cells; ++cell)
            for (int q = 0; q < nm; ++q)
                total += eps * eps * micro_wts[q] * values[size_t(cell) * nm + q].squaredNorm();
        return total;
    }
};

inline BoundarySamples unfold_boundary(const PerforatedDomain& domain, const C1Field& field,
                                       int n_gauss = 4) {
    const C1Space& fs = field.space();
    BoundarySamples out;
    out.n_cells = domain.n_cells();
    out.eps = domain.eps();
    const UnitCell& cell = domain.cell;
    if (!cell.hole) return out;
    QuadRule rule = QuadRule::gauss(n_gauss);
    double hc = 1.0 / cell.m;

    // Facets of the hole boundary within the reference cell, with the solid
    // element they belong to and the facet-local coordinate map.
    struct RefFacet {
        int ex, ey;     // solid element in cell coordinates
        int axis;       // 0: vertical facet, 1: horizontal
        double tfix;    // local coordinate pinned to 0 or 1
    };
    std::vector<RefFacet> facets;
    for (int ey = 0; ey < cell.m; ++ey)
        for (int ex = 0; ex < cell.m; ++ex) {
            if (!cell.is_solid(ex, ey)) continue;
            if (ex + 1 < cell.m && !cell.is_solid(ex + 1, ey)) facets.push_back({ex, ey, 0, 1.0});
            if (ex > 0 && !cell.is_solid(ex - 1, ey)) facets.push_back({ex, ey, 0, 0.0});
            if (ey + 1 < cell.m && !cell.is_solid(ex, ey + 1)) facets.push_back({ex, ey, 1, 1.0});
            if (ey > 0 && !cell.is_solid(ex, ey - 1)) facets.push_back({ex, ey, 1, 0.0});
        }
    for (const auto& f : facets)
        for (size_t q = 0; q < rule.pts.size(); ++q) {
            double t = rule.pts[q];
            double tx = (f.axis == 0) ? f.tfix : t;
            double ty = (f.axis == 0) ? t : f.tfix;
            out.micro_pts.emplace_back((f.ex + tx) * hc, (f.ey + ty) * hc);
            out.micro_wts.push_back(rule.wts[q] * hc);
        }

    int m = cell.m;
    out.values.resize(size_t(out.n_cells) * out.micro_pts.size());
    for (int ky = 0; ky < domain.cells_y; ++ky)
        for (int kx = 0; kx < domain.cells_x; ++kx) {
            int cell_id = ky * domain.cells_x + kx;
            size_t s = 0;
            for (const auto& f : facets)
                for (size_t q = 0; q < rule.pts.size(); ++q, ++s) {
                    double t = rule.pts[q];
                    double tx = (f.axis == 0) ? f.tfix : t;
                    double ty = (f.axis == 0) ? t : f.tfix;
                    Jet2 jet = fs.eval_jet_local(field, kx * m + f.ex, ky * m + f.ey, tx, ty);
                    out.values[size_t(cell_id) * out.micro_pts.size() + s] = jet.value;
                }
        }
    return out;
}

}  // namespace perihom
