#pragma once

// Perforated geometry: the unit cell Y with a grid-aligned rectangular hole,
// and the scaled domain built from eps-copies of the cell, with facet tags
// for the hole boundary and the outer Dirichlet/Neumann decomposition.

#include "perihom/common.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace perihom {

enum class FacetTag { Interior, GammaEps, GammaD, GammaN };

enum class Face { Left, Right, Bottom, Top };  // Left = {x_1 = min}

inline std::string face_name(Face f) {
    switch (f) {
        case Face::Left: return "left";
        case Face::Right: return "right";
        case Face::Bottom: return "bottom";
        case Face::Top: return "top";
    }
    return "?";
}

struct HoleRect {
    Rational x0, y0, x1, y1;  // open rectangle, corners on the element grid
};

// Unit cell Y = (0,1)^2 partitioned into m x m square elements; the hole (if
// any) is a union of whole elements, so the solid part Y_s is exactly a mask.
struct UnitCell {
    int m = 0;
    std::optional<HoleRect> hole;
    std::vector<uint8_t> solid;  // m*m, index ey*m+ex
    // hole element bounds [hx0,hx1) x [hy0,hy1) in element indices; empty if no hole
    int hx0 = 0, hx1 = 0, hy0 = 0, hy1 = 0;

    bool is_solid(int ex, int ey) const { return solid[size_t(ey) * m + ex] != 0; }

    int solid_elem_count() const {
        return int(std::count(solid.begin(), solid.end(), uint8_t(1)));
    }

    // |Y_s|, exact from element counts.
    double solid_area() const { return double(solid_elem_count()) / double(m) / double(m); }

    // Length of Gamma = boundary of the hole inside Y.
    double hole_perimeter() const {
        if (!hole) return 0.0;
        return 2.0 * ((hole->x1 - hole->x0).value() + (hole->y1 - hole->y0).value());
    }
};

namespace detail {

inline void check_grid_aligned(const Rational& r, int m, const char* what) {
    Rational scaled = r * Rational(m);
    if (!scaled.is_integer())
        throw MisalignedHole(std::string(what) + " = " + r.str() + " is not on the 1/" +
                             std::to_string(m) + " grid");
}

// Flood fill over a solid element mask; returns number of reached elements.
// `neighbors` yields the (up to 4) adjacent element indices.
template <class NeighborFn>
int flood_fill_count(int n_elems, int seed, NeighborFn neighbors) {
    std::vector<uint8_t> seen(n_elems, 0);
    std::vector<int> stack{seed};
    seen[seed] = 1;
    int count = 0;
    while (!stack.empty()) {
        int e = stack.back();
        stack.pop_back();
        ++count;
        neighbors(e, [&](int nb) {
            if (!seen[nb]) {
                seen[nb] = 1;
                stack.push_back(nb);
            }
        });
    }
    return count;
}

}  // namespace detail

// Builds the perforated unit cell. The hole closure must stay strictly inside
// (0,1)^2 and its corners must lie on the m-grid.
inline UnitCell build_unit_cell(const HoleRect& hole, int m) {
    if (m < 4) throw Error("unit cell subdivision m must be >= 4");
    Rational zero(0), one(1);
    if (!(zero < hole.x0 && hole.x0 < hole.x1 && hole.x1 < one &&
          zero < hole.y0 && hole.y0 < hole.y1 && hole.y1 < one))
        throw HoleTouchesBoundary("hole closure must be strictly inside (0,1)^2");
    detail::check_grid_aligned(hole.x0, m, "hole.x0");
    detail::check_grid_aligned(hole.x1, m, "hole.x1");
    detail::check_grid_aligned(hole.y0, m, "hole.y0");
    detail::check_grid_aligned(hole.y1, m, "hole.y1");

    UnitCell cell;
    cell.m = m;
    cell.hole = hole;
    cell.hx0 = int((hole.x0 * Rational(m)).num);
    cell.hx1 = int((hole.x1 * Rational(m)).num);
    cell.hy0 = int((hole.y0 * Rational(m)).num);
    cell.hy1 = int((hole.y1 * Rational(m)).num);
    cell.solid.assign(size_t(m) * m, 1);
    for (int ey = cell.hy0; ey < cell.hy1; ++ey)
        for (int ex = cell.hx0; ex < cell.hx1; ++ex)
            cell.solid[size_t(ey) * m + ex] = 0;

    // Connectivity of Y_s (periodic across cell faces).
    int n_solid = cell.solid_elem_count();
    int seed = -1;
    for (int e = 0; e < m * m; ++e)
        if (cell.solid[e]) { seed = e; break; }
    int reached = detail::flood_fill_count(m * m, seed, [&](int e, auto&& visit) {
        int ex = e % m, ey = e / m;
        auto try_nb = [&](int nx, int ny) {
            nx = (nx + m) % m;
            ny = (ny + m) % m;
            int nb = ny * m + nx;
            if (cell.solid[nb]) visit(nb);
        };
        try_nb(ex - 1, ey);
        try_nb(ex + 1, ey);
        try_nb(ex, ey - 1);
        try_nb(ex, ey + 1);
    });
    if (reached != n_solid) throw DisconnectedSolid("unit cell solid part is disconnected");
    return cell;
}

// Full cell without perforation (used for macro grids and the no-hole case).
inline UnitCell solid_unit_cell(int m) {
    if (m < 1) throw Error("unit cell subdivision m must be >= 1");
    UnitCell cell;
    cell.m = m;
    cell.solid.assign(size_t(m) * m, 1);
    return cell;
}

struct Facet {
    // A facet of the element grid: axis = 0 means the facet is normal to x
    // (a vertical segment at grid line ix), axis = 1 normal to y.
    int axis;
    int ix, iy;  // For axis=0: line x=ix*h, spanning [iy,iy+1]*h. For axis=1 swapped roles.
    FacetTag tag;
};

// The macroscopic domain Omega (hyper-rectangle with integer corners) minus
// the eps-periodic holes. Elements form one global structured grid of size
// h = eps/m per side; every element is fully solid or fully void.
struct PerforatedDomain {
    UnitCell cell;
    int inv_eps = 1;                  // eps = 1/inv_eps
    std::array<int, 2> lo{0, 0};      // integer corners of Omega
    std::array<int, 2> hi{1, 1};
    std::set<Face> dirichlet_faces;

    int cells_x = 0, cells_y = 0;     // micro-cells per axis
    int nex = 0, ney = 0;             // global elements per axis
    double h = 0;                     // element side
    std::vector<uint8_t> elem_solid;  // nex*ney
    std::vector<Facet> facets;        // all tagged facets (non-Interior, plus Interior omitted)
    int n_gamma_eps = 0, n_gamma_d = 0, n_gamma_n = 0;

    double eps() const { return 1.0 / inv_eps; }
    Vec2 origin() const { return Vec2(double(lo[0]), double(lo[1])); }
    int n_cells() const { return cells_x * cells_y; }
    bool is_solid(int ex, int ey) const { return elem_solid[size_t(ey) * nex + ex] != 0; }
    int solid_elem_count() const {
        return int(std::count(elem_solid.begin(), elem_solid.end(), uint8_t(1)));
    }
    double solid_area() const { return solid_elem_count() * h * h; }

    // Index of the micro-cell containing element (ex,ey).
    std::pair<int, int> cell_of_elem(int ex, int ey) const { return {ex / cell.m, ey / cell.m}; }
};

inline PerforatedDomain build_domain(const UnitCell& cell, const Rational& eps,
                                     const std::set<Face>& dirichlet_faces,
                                     std::array<int, 2> lo = {0, 0},
                                     std::array<int, 2> hi = {1, 1}) {
    if (eps.num != 1 || eps.den < 1)
        throw NonIntegerInverseEps("eps = " + eps.str() + " is not 1/N with integer N >= 1");
    if (dirichlet_faces.empty())
        throw Error("dirichlet face set must be nonempty");
    if (!(lo[0] < hi[0] && lo[1] < hi[1]))
        throw Error("macro extent must have lo < hi");

    PerforatedDomain d;
    d.cell = cell;
    d.inv_eps = int(eps.den);
    d.lo = lo;
    d.hi = hi;
    d.dirichlet_faces = dirichlet_faces;
    d.cells_x = (hi[0] - lo[0]) * d.inv_eps;
    d.cells_y = (hi[1] - lo[1]) * d.inv_eps;
    int m = cell.m;
    d.nex = d.cells_x * m;
    d.ney = d.cells_y * m;
    d.h = d.eps() / m;
    d.elem_solid.assign(size_t(d.nex) * d.ney, 0);
    for (int ey = 0; ey < d.ney; ++ey)
        for (int ex = 0; ex < d.nex; ++ex)
            d.elem_solid[size_t(ey) * d.nex + ex] = cell.is_solid(ex % m, ey % m) ? 1 : 0;

    // Connectivity of Omega_eps.
    int n_solid = d.solid_elem_count();
    int seed = -1;
    for (size_t e = 0; e < d.elem_solid.size(); ++e)
        if (d.elem_solid[e]) { seed = int(e); break; }
    if (seed < 0) throw DisconnectedSolid("domain has no solid elements");
    int reached = detail::flood_fill_count(d.nex * d.ney, seed, [&](int e, auto&& visit) {
        int ex = e % d.nex, ey = e / d.nex;
        auto try_nb = [&](int nx, int ny) {
            if (nx < 0 || nx >= d.nex || ny < 0 || ny >= d.ney) return;
            int nb = ny * d.nex + nx;
            if (d.elem_solid[nb]) visit(nb);
        };
        try_nb(ex - 1, ey);
        try_nb(ex + 1, ey);
        try_nb(ex, ey - 1);
        try_nb(ex, ey + 1);
    });
    if (reached != n_solid) throw DisconnectedSolid("perforated domain is disconnected");

    auto outer_tag = [&](Face f) {
        return dirichlet_faces.count(f) ? FacetTag::GammaD : FacetTag::GammaN;
    };
    // Vertical facets (normal to x) at grid lines ix = 0..nex.
    for (int ix = 0; ix <= d.nex; ++ix) {
        for (int iy = 0; iy < d.ney; ++iy) {
            bool left = ix > 0 && d.is_solid(ix - 1, iy);
            bool right = ix < d.nex && d.is_solid(ix, iy);
            FacetTag tag;
            if (ix == 0) {
                if (!right) continue;
                tag = outer_tag(Face::Left);
            } else if (ix == d.nex) {
                if (!left) continue;
                tag = outer_tag(Face::Right);
            } else if (left != right) {
                tag = FacetTag::GammaEps;
            } else {
                continue;  // interior or fully void
            }
            d.facets.push_back({0, ix, iy, tag});
        }
    }
    // Horizontal facets (normal to y).
    for (int iy = 0; iy <= d.ney; ++iy) {
        for (int ix = 0; ix < d.nex; ++ix) {
            bool below = iy > 0 && d.is_solid(ix, iy - 1);
            bool above = iy < d.ney && d.is_solid(ix, iy);
            FacetTag tag;
            if (iy == 0) {
                if (!above) continue;
                tag = outer_tag(Face::Bottom);
            } else if (iy == d.ney) {
                if (!below) continue;
                tag = outer_tag(Face::Top);
            } else if (below != above) {
                tag = FacetTag::GammaEps;
            } else {
                continue;
            }
            d.facets.push_back({1, ix, iy, tag});
        }
    }
    for (const auto& f : d.facets) {
        if (f.tag == FacetTag::GammaEps) ++d.n_gamma_eps;
        if (f.tag == FacetTag::GammaD) ++d.n_gamma_d;
        if (f.tag == FacetTag::GammaN) ++d.n_gamma_n;
    }
    return d;
}

inline double boundary_measure(const PerforatedDomain& d, FacetTag tag) {
    switch (tag) {
        case FacetTag::GammaEps: return d.n_gamma_eps * d.h;
        case FacetTag::GammaD: return d.n_gamma_d * d.h;
        case FacetTag::GammaN: return d.n_gamma_n * d.h;
        default: throw UnknownTag("interior facets have no boundary measure");
    }
}

}  // namespace perihom
