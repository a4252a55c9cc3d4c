#pragma once

// C1-conforming vector fields on structured perforated grids, discretized
// with bicubic Hermite (Bogner-Fox-Schmit) elements. Each active node carries
// four scalar slots per component: value, d/dx, d/dy, d2/dxdy, stored as
// physical derivative values. The element basis reproduces all bicubic
// polynomials exactly and is C1 across shared edges of the structured grid.

#include "perihom/common.hpp"
#include "perihom/geometry.hpp"

#include <functional>

namespace perihom {

// Value / first / second derivatives of a vector field at one point.
// grad(i,j) = d_j u_i, hess(i,j,k) = d_jk u_i (symmetric in j,k).
struct Jet2 {
    Vec2 value = Vec2::Zero();
    Mat2 grad = Mat2::Zero();
    Tens3 hess;
};

namespace hermite {

// Cubic Hermite basis on [0,1]: value/derivative pairs at each endpoint.
inline void shape1d(double t, int corner, int kind, double& f, double& df, double& ddf) {
    // kind 0: value slot, kind 1: derivative slot (unit slope), both at `corner`.
    if (corner == 0) {
        if (kind == 0) { f = 1 + t * t * (2 * t - 3); df = 6 * t * (t - 1); ddf = 12 * t - 6; }
        else { f = t * (1 + t * (t - 2)); df = 1 + t * (3 * t - 4); ddf = 6 * t - 4; }
    } else {
        if (kind == 0) { f = t * t * (3 - 2 * t); df = 6 * t * (1 - t); ddf = 6 - 12 * t; }
        else { f = t * t * (t - 1); df = t * (3 * t - 2); ddf = 6 * t - 2; }
    }
}

struct ShapeValue {
    double n, nx, ny, nxx, nyy, nxy;
};

// Scalar basis function b = ln*4 + slot on an element of side h, evaluated
// at local coordinates (tx,ty) in [0,1]^2. Local nodes: 0=(0,0), 1=(1,0),
// 2=(0,1), 3=(1,1). Slots: 0=value, 1=dx, 2=dy, 3=dxy.
inline ShapeValue shape(int b, double tx, double ty, double h) {
    int ln = b / 4, slot = b % 4;
    int cx = ln & 1, cy = ln >> 1;
    int kx = (slot == 1 || slot == 3) ? 1 : 0;
    int ky = (slot == 2 || slot == 3) ? 1 : 0;
    double X, dX, ddX, Y, dY, ddY;
    shape1d(tx, cx, kx, X, dX, ddX);
    shape1d(ty, cy, ky, Y, dY, ddY);
    double sx = kx ? h : 1.0;  // derivative slots scale with h so DOFs are physical derivatives
    double sy = ky ? h : 1.0;
    double s = sx * sy;
    ShapeValue out;
    out.n = s * X * Y;
    out.nx = s * dX * Y / h;
    out.ny = s * X * dY / h;
    out.nxx = s * ddX * Y / (h * h);
    out.nyy = s * X * ddY / (h * h);
    out.nxy = s * dX * dY / (h * h);
    return out;
}

}  // namespace hermite

class C1Field;

// Discrete carrier for W^{2,p}-type vector fields on the structured grid; in
// periodic mode the node grid is a torus (cell problems on Y_s).
class C1Space {
  public:
    static constexpr int kSlots = 4;   // value, dx, dy, dxy
    static constexpr int kComps = 2;
    static constexpr int kLocalScalar = 16;  // 4 nodes x 4 slots
    static constexpr int kLocalDofs = 32;    // x 2 components

    // Non-periodic space over a perforated macro domain.
    static C1Space on_domain(const PerforatedDomain& domain, int quad_order = 4) {
        C1Space s;
        s.init_grid(domain.nex, domain.ney, domain.h, domain.origin(), false, domain.elem_solid,
                    quad_order);
        s.dirichlet_faces_ = domain.dirichlet_faces;
        return s;
    }

    // Space over the unit cell Y_s; periodic=true identifies opposite faces.
    static C1Space on_cell(const UnitCell& cell, bool periodic, int quad_order = 4) {
        C1Space s;
        std::vector<uint8_t> mask(cell.solid.begin(), cell.solid.end());
        s.init_grid(cell.m, cell.m, 1.0 / cell.m, Vec2::Zero(), periodic, mask, quad_order);
        return s;
    }

    // Space over the same grid as `domain` with the holes filled in (carrier
    // for extended fields).
    static C1Space on_full_grid(const PerforatedDomain& domain, int quad_order = 4) {
        C1Space s;
        std::vector<uint8_t> mask(size_t(domain.nex) * domain.ney, 1);
        s.init_grid(domain.nex, domain.ney, domain.h, domain.origin(), false, mask, quad_order);
        s.dirichlet_faces_ = domain.dirichlet_faces;
        return s;
    }

    bool periodic() const { return periodic_; }
    int nex() const { return nex_; }
    int ney() const { return ney_; }
    double h() const { return h_; }
    Vec2 origin() const { return origin_; }
    int n_nodes() const { return n_nodes_; }
    int ndof() const { return n_nodes_ * kSlots * kComps; }
    int quad_order() const { return int(quad_.pts.size()); }
    const QuadRule& quad() const { return quad_; }
    const std::vector<int>& solid_elems() const { return solid_elems_; }
    const std::set<Face>& dirichlet_faces() const { return dirichlet_faces_; }
    bool elem_is_solid(int ex, int ey) const { return elem_solid_[size_t(ey) * nex_ + ex] != 0; }

    int n_quad_per_elem() const { return int(quad_.pts.size() * quad_.pts.size()); }
    // Physical quadrature point q of element (ex,ey); weight includes h^2.
    Vec2 quad_point(int ex, int ey, int q) const {
        int nq = int(quad_.pts.size());
        return origin_ + Vec2((ex + quad_.pts[q % nq]) * h_, (ey + quad_.pts[q / nq]) * h_);
    }
    double quad_weight(int q) const {
        int nq = int(quad_.pts.size());
        return quad_.wts[q % nq] * quad_.wts[q / nq] * h_ * h_;
    }

    // Raw node grid index -> active node index (or -1).
    int node_active(int ix, int iy) const {
        if (periodic_) {
            ix = (ix % nex_ + nex_) % nex_;
            iy = (iy % ney_ + ney_) % ney_;
            return node_index_[size_t(iy) * nex_ + ix];
        }
        return node_index_[size_t(iy) * (nex_ + 1) + ix];
    }

    // Position of raw node (periodic nodes use their principal copy).
    Vec2 node_pos(int active) const {
        int raw = active_nodes_[active];
        int stride = periodic_ ? nex_ : nex_ + 1;
        return origin_ + Vec2((raw % stride) * h_, (raw / stride) * h_);
    }

    int dof_index(int active_node, int comp, int slot) const {
        return (active_node * kComps + comp) * kSlots + slot;
    }

    // Active node indices of the 4 corners of element (ex,ey).
    std::array<int, 4> elem_nodes(int ex, int ey) const {
        return {node_active(ex, ey), node_active(ex + 1, ey), node_active(ex, ey + 1),
                node_active(ex + 1, ey + 1)};
    }

    // Global dof of local vector dof L = b*2 + comp for element (ex,ey).
    void gather_dofs(int ex, int ey, std::array<int, kLocalDofs>& out) const {
        auto nodes = elem_nodes(ex, ey);
        for (int ln = 0; ln < 4; ++ln)
            for (int slot = 0; slot < kSlots; ++slot)
                for (int c = 0; c < kComps; ++c)
                    out[(ln * 4 + slot) * 2 + c] = dof_index(nodes[ln], c, slot);
    }

    // Shape table at the tensor quadrature points (same for all elements).
    const std::vector<std::array<hermite::ShapeValue, kLocalScalar>>& shape_table() const {
        return shape_table_;
    }

    C1Field make_field() const;
    C1Field interpolate(const std::function<void(const Vec2&, Vec2&, Mat2&, Tens3&)>& jet_fn) const;

    Jet2 eval_jet_local(const C1Field& f, int ex, int ey, double tx, double ty) const;
    Jet2 eval_jet(const C1Field& f, const Vec2& x) const;

    // Locate the element containing x (clamped to the closed domain).
    void locate(const Vec2& x, int& ex, int& ey, double& tx, double& ty) const {
        double gx = (x.x() - origin_.x()) / h_;
        double gy = (x.y() - origin_.y()) / h_;
        if (periodic_) {
            gx -= std::floor(gx / nex_) * nex_;
            gy -= std::floor(gy / ney_) * ney_;
        }
        ex = std::min(std::max(int(std::floor(gx)), 0), nex_ - 1);
        ey = std::min(std::max(int(std::floor(gy)), 0), ney_ - 1);
        tx = gx - ex;
        ty = gy - ey;
    }

  private:
    void init_grid(int nex, int ney, double h, Vec2 origin, bool periodic,
                   const std::vector<uint8_t>& elem_solid, int quad_order) {
        if (quad_order < 3)
            throw Error("quad_order must be >= 3 for the cubic basis, got " +
                        std::to_string(quad_order));
        nex_ = nex;
        ney_ = ney;
        h_ = h;
        origin_ = origin;
        periodic_ = periodic;
        elem_solid_ = elem_solid;
        quad_ = QuadRule::gauss(quad_order);

        int nnx = periodic ? nex : nex + 1;
        int nny = periodic ? ney : ney + 1;
        node_index_.assign(size_t(nnx) * nny, -1);

        auto elem_solid_at = [&](int ex, int ey) -> bool {
            if (periodic) {
                ex = (ex % nex + nex) % nex;
                ey = (ey % ney + ney) % ney;
            } else if (ex < 0 || ex >= nex || ey < 0 || ey >= ney) {
                return false;
            }
            return elem_solid[size_t(ey) * nex + ex] != 0;
        };

        // Nodes adjacent to at least one solid element carry DOFs.
        n_nodes_ = 0;
        for (int iy = 0; iy < nny; ++iy)
            for (int ix = 0; ix < nnx; ++ix) {
                bool adj = elem_solid_at(ix - 1, iy - 1) || elem_solid_at(ix, iy - 1) ||
                           elem_solid_at(ix - 1, iy) || elem_solid_at(ix, iy);
                if (adj) {
                    node_index_[size_t(iy) * nnx + ix] = n_nodes_++;
                    active_nodes_.push_back(iy * nnx + ix);
                }
            }

        for (int ey = 0; ey < ney; ++ey)
            for (int ex = 0; ex < nex; ++ex)
                if (elem_solid[size_t(ey) * nex + ex]) solid_elems_.push_back(ey * nex + ex);

        int nq = int(quad_.pts.size());
        shape_table_.resize(size_t(nq) * nq);
        for (int qy = 0; qy < nq; ++qy)
            for (int qx = 0; qx < nq; ++qx)
                for (int b = 0; b < kLocalScalar; ++b)
                    shape_table_[size_t(qy) * nq + qx][b] =
                        hermite::shape(b, quad_.pts[qx], quad_.pts[qy], h_);
    }

    int nex_ = 0, ney_ = 0;
    double h_ = 0;
    Vec2 origin_ = Vec2::Zero();
    bool periodic_ = false;
    std::vector<uint8_t> elem_solid_;
    std::vector<int> node_index_;
    std::vector<int> active_nodes_;
    int n_nodes_ = 0;
    std::vector<int> solid_elems_;
    QuadRule quad_;
    std::vector<std::array<hermite::ShapeValue, kLocalScalar>> shape_table_;
    std::set<Face> dirichlet_faces_;
};

// Coefficients of one vector field in a C1Space (DOF-ordered).
class C1Field {
  public:
    C1Field() = default;
    explicit C1Field(const C1Space& space) : space_(&space), coeffs_(Eigen::VectorXd::Zero(space.ndof())) {}

    const C1Space& space() const { return *space_; }
    Eigen::VectorXd& coeffs() { return coeffs_; }
    const Eigen::VectorXd& coeffs() const { return coeffs_; }
    double& operator[](int i) { return coeffs_[i]; }
    double operator[](int i) const { return coeffs_[i]; }

  private:
    const C1Space* space_ = nullptr;
    Eigen::VectorXd coeffs_;
};

inline C1Field C1Space::make_field() const { return C1Field(*this); }

// Sets DOFs from an analytic jet (value, gradient, dxy of each component).
inline C1Field C1Space::interpolate(
    const std::function<void(const Vec2&, Vec2&, Mat2&, Tens3&)>& jet_fn) const {
    C1Field f(*this);
    for (int a = 0; a < n_nodes_; ++a) {
        Vec2 x = node_pos(a), val;
        Mat2 grad;
        Tens3 hess;
        jet_fn(x, val, grad, hess);
        for (int c = 0; c < kComps; ++c) {
            f[dof_index(a, c, 0)] = val[c];
            f[dof_index(a, c, 1)] = grad(c, 0);
            f[dof_index(a, c, 2)] = grad(c, 1);
            f[dof_index(a, c, 3)] = hess(c, 0, 1);
        }
    }
    return f;
}

inline Jet2 C1Space::eval_jet_local(const C1Field& f, int ex, int ey, double tx, double ty) const {
    Jet2 jet;
    auto nodes = elem_nodes(ex, ey);
    for (int ln = 0; ln < 4; ++ln) {
        for (int slot = 0; slot < kSlots; ++slot) {
            auto sv = hermite::shape(ln * 4 + slot, tx, ty, h_);
            for (int c = 0; c < kComps; ++c) {
                double u = f[dof_index(nodes[ln], c, slot)];
                jet.value[c] += u * sv.n;
                jet.grad(c, 0) += u * sv.nx;
                jet.grad(c, 1) += u * sv.ny;
                jet.hess(c, 0, 0) += u * sv.nxx;
                jet.hess(c, 1, 1) += u * sv.nyy;
                jet.hess(c, 0, 1) += u * sv.nxy;
            }
        }
    }
    for (int c = 0; c < kComps; ++c) jet.hess(c, 1, 0) = jet.hess(c, 0, 1);
    return jet;
}

inline Jet2 C1Space::eval_jet(const C1Field& f, const Vec2& x) const {
    int ex, ey;
    double tx, ty;
    locate(x, ex, ey, tx, ty);
    if (!elem_is_solid(ex, ey)) {
        // Points on the closure of a solid element are fine; try the grid
        // neighbors sharing this location before giving up.
        bool found = false;
        for (int dy = -1; dy <= 0 && !found; ++dy)
            for (int dx = -1; dx <= 0 && !found; ++dx) {
                int nx = ex + dx, ny = ey + dy;
                if (periodic_) {
                    nx = (nx + nex_) % nex_;
                    ny = (ny + ney_) % ney_;
                } else if (nx < 0 || ny < 0) {
                    continue;
                }
                double sx = tx - dx, sy = ty - dy;
                if (sx >= 0.0 && sx <= 1.0 && sy >= 0.0 && sy <= 1.0 && elem_is_solid(nx, ny)) {
                    ex = nx; ey = ny; tx = sx; ty = sy;
                    found = true;
                }
            }
        if (!found)
            throw PointInVoid("point (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) +
                              ") lies in a void element");
    }
    return eval_jet_local(f, ex, ey, tx, ty);
}

inline std::vector<Jet2> eval_jet(const C1Field& f, const std::vector<Vec2>& points) {
    std::vector<Jet2> out;
    out.reserve(points.size());
    for (const auto& x : points) out.push_back(f.space().eval_jet(f, x));
    return out;
}

// Gauss quadrature of a pointwise density over the solid elements.
// Deterministic: elements in lexicographic order, fixed point order.
template <class Density>
double integrate(const C1Space& space, Density&& density, const C1Field& field) {
    double total = 0.0;
    int nq = space.n_quad_per_elem();
    for (int e : space.solid_elems()) {
        int ex = e % space.nex(), ey = e / space.nex();
        for (int q = 0; q < nq; ++q) {
            int nqd = space.quad_order();
            Jet2 jet = space.eval_jet_local(field, ex, ey, space.quad().pts[q % nqd],
                                            space.quad().pts[q / nqd]);
            Vec2 x = space.quad_point(ex, ey, q);
            double val = density(x, jet);
            if (!std::isfinite(val))
                throw NonFiniteDensity("density not finite at quadrature point (" +
                                       std::to_string(x.x()) + ", " + std::to_string(x.y()) + ")");
            total += space.quad_weight(q) * val;
        }
    }
    return total;
}

// Dirichlet data: constrained DOF indices with target values, sorted by index.
struct DirichletSet {
    std::vector<int> dofs;
    std::vector<double> values;

    std::vector<uint8_t> mask(int ndof) const {
        std::vector<uint8_t> m(ndof, 0);
        for (int d : dofs) m[d] = 1;
        return m;
    }
};

// Constrains value and tangential-derivative slots on the Dirichlet faces to
// the trace of the identity map (or zero for homogeneous=true). Normal and
// mixed slots stay free: the natural boundary conditions are enforced weakly.
inline DirichletSet dirichlet_id_constraints(const C1Space& space, bool homogeneous = false) {
    if (space.periodic()) throw PeriodicSpace("Dirichlet data is only defined on macro spaces");
    if (space.dirichlet_faces().empty())
        throw ZeroDirichletSet("space carries no Dirichlet faces");

    std::map<int, double> entries;
    auto add = [&](int dof, double v) { entries[dof] = v; };

    auto constrain_node = [&](int ix, int iy, int normal_axis) {
        int a = space.node_active(ix, iy);
        if (a < 0) return;
        Vec2 x = space.node_pos(a);
        int tang = 1 - normal_axis;
        for (int c = 0; c < 2; ++c) {
            add(space.dof_index(a, c, 0), homogeneous ? 0.0 : x[c]);
            // slot 1 = d/dx, slot 2 = d/dy; tangential derivative of id is e_tang
            add(space.dof_index(a, c, 1 + tang), homogeneous ? 0.0 : (c == tang ? 1.0 : 0.0));
        }
    };

    for (Face f : space.dirichlet_faces()) {
        switch (f) {
            case Face::Left:
                for (int iy = 0; iy <= space.ney(); ++iy) constrain_node(0, iy, 0);
                break;
            case Face::Right:
                for (int iy = 0; iy <= space.ney(); ++iy) constrain_node(space.nex(), iy, 0);
                break;
            case Face::Bottom:
                for (int ix = 0; ix <= space.nex(); ++ix) constrain_node(ix, 0, 1);
                break;
            case Face::Top:
                for (int ix = 0; ix <= space.nex(); ++ix) constrain_node(ix, space.ney(), 1);
                break;
        }
    }
    DirichletSet set;
    for (auto& [dof, v] : entries) {
        set.dofs.push_back(dof);
        set.values.push_back(v);
    }
    if (set.dofs.empty()) throw ZeroDirichletSet("no Dirichlet DOFs found");
    return set;
}

inline void apply_dirichlet(const DirichletSet& set, C1Field& f) {
    for (size_t i = 0; i < set.dofs.size(); ++i) f[set.dofs[i]] = set.values[i];
}

// Applies the identity trace on the Dirichlet faces to `field` and returns
// the constrained DOF set for the solver.
inline DirichletSet apply_dirichlet_id(const C1Space& space, C1Field& field) {
    DirichletSet set = dirichlet_id_constraints(space);
    apply_dirichlet(set, field);
    return set;
}

// Factory entry points taking an explicit periodicity flag.
inline C1Space build_space(const PerforatedDomain& domain, bool periodic, int quad_order = 4) {
    if (periodic)
        throw PeriodicOnMacroDomain("periodic identification is only defined on a unit cell");
    return C1Space::on_domain(domain, quad_order);
}
inline C1Space build_space(const UnitCell& cell, bool periodic, int quad_order = 4) {
    return C1Space::on_cell(cell, periodic, quad_order);
}

// Identity deformation (u(x) = x).
inline C1Field identity_field(const C1Space& space) {
    return space.interpolate([](const Vec2& x, Vec2& v, Mat2& g, Tens3& hess) {
        v = x;
        g = Mat2::Identity();
        hess = Tens3::zero();
    });
}

}  // namespace perihom
