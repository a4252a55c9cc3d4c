#pragma once

// Experiment configuration: a sectioned key/value text format with exact
// rationals wherever grid alignment matters. Parsing and serialization
// round-trip bit-exactly, which is what makes sweep reruns reproducible.

#include "perihom/geometry.hpp"
#include "perihom/homog.hpp"

#include <cstdio>
#include <sstream>

namespace perihom {

struct ExperimentConfig {
    // geometry
    std::optional<HoleRect> hole = HoleRect{{1, 4}, {1, 4}, {3, 4}, {3, 4}};
    int m = 8;
    std::vector<Rational> eps_list = {{1, 2}, {1, 4}, {1, 8}};
    std::set<Face> dirichlet = {Face::Left};
    std::array<int, 4> extent = {0, 0, 1, 1};

    // material
    double p = 4.0;
    double q = 4.0;
    double alpha_amp = 0.5;
    double beta_amp = 0.5;
    double delta_amp = 0.5;
    bool stress_free_id = true;

    // time
    Rational T{1, 10};
    Rational tau{1, 100};

    // load
    Vec2 f_const = Vec2::Zero();
    Vec2 f_ramp = Vec2::Zero();
    Vec2 g_const = Vec2::Zero();
    Vec2 g_ramp = Vec2::Zero();

    // mode
    HhomMode hhom = HhomMode::Quadratic;
    bool deterministic = true;
    int quad_order = 4;
    int macro_elems = 16;

    // run
    std::string out_dir = "out";
    unsigned long seed = 1234;

    bool operator==(const ExperimentConfig& o) const { return serialize() == o.serialize(); }

    UnitCell unit_cell() const {
        return hole ? build_unit_cell(*hole, m) : solid_unit_cell(m);
    }
    PerforatedDomain domain(const Rational& eps) const {
        return build_domain(unit_cell(), eps, dirichlet, {extent[0], extent[1]},
                            {extent[2], extent[3]});
    }
    PerforatedDomain macro_domain() const {
        return build_domain(solid_unit_cell(macro_elems), Rational(1), dirichlet,
                            {extent[0], extent[1]}, {extent[2], extent[3]});
    }
    MaterialBundle bundle() const {
        MaterialBundle b = MaterialBundle::with_exponents(p, q, 0.0, stress_free_id);
        b.elastic.alpha.amp = alpha_amp;
        b.gradient.beta.amp = beta_amp;
        b.dissipation.delta.amp = delta_amp;
        return b;
    }
    Loads loads() const { return Loads{f_const, f_ramp, g_const, g_ramp}; }
    TimeGrid time_grid() const { return TimeGrid::make(T, tau); }
    bool p_exceeds_dimension() const { return p > 2.0; }

    // Walks every derived object once so that malformed fields surface as
    // ConfigError with the offending field named.
    void validate() const {
        for (const Rational& e : eps_list)
            if (e.num != 1 || e.den < 1)
                throw ConfigError("eps: '" + e.str() + "' is not 1/N with integer N >= 1");
        if (eps_list.empty()) throw ConfigError("eps: list must be nonempty");
        try {
            unit_cell();
        } catch (const Error& err) {
            throw ConfigError("hole/m: " + std::string(err.what()));
        }
        if (dirichlet.empty()) throw ConfigError("dirichlet: face set must be nonempty");
        if (!(extent[0] < extent[2] && extent[1] < extent[3]))
            throw ConfigError("extent: must satisfy lo < hi");
        try {
            time_grid();
        } catch (const Error& err) {
            throw ConfigError("tau: " + std::string(err.what()));
        }
        if (p < 2.0) throw ConfigError("p: exponent must be >= 2");
        if (q < 2.0) throw ConfigError("q: exponent must be >= 2");
        if (hhom == HhomMode::Quadratic && p != 2.0)
            throw ConfigError("hhom: quadratic mode requires p = 2");
        if (quad_order < 3) throw ConfigError("quad_order: must be >= 3");
        if (macro_elems < 4) throw ConfigError("macro_elems: must be >= 4");
        if (std::abs(alpha_amp) >= 1.0 || std::abs(beta_amp) >= 1.0 || std::abs(delta_amp) >= 1.0)
            throw ConfigError("coefficient amplitude must keep the coefficient positive (|amp| < 1)");
    }

    std::string serialize() const;
    static ExperimentConfig parse(const std::string& text);
};

namespace cfgio {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

inline double parse_double(const std::string& field, const std::string& s) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(field + ": not a number: '" + s + "'");
    }
}

inline long parse_int(const std::string& field, const std::string& s) {
    try {
        size_t pos = 0;
        long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(field + ": not an integer: '" + s + "'");
    }
}

inline bool parse_bool(const std::string& field, const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError(field + ": not a boolean: '" + s + "'");
}

inline Rational parse_rational(const std::string& field, const std::string& s) {
    try {
        return Rational::parse(s);
    } catch (const Error&) {
        throw ConfigError(field + ": not a rational p/q: '" + s + "'");
    }
}

inline Vec2 parse_vec2(const std::string& field, const std::string& s) {
    auto toks = split_ws(s);
    if (toks.size() != 2) throw ConfigError(field + ": expected two numbers, got '" + s + "'");
    return Vec2(parse_double(field, toks[0]), parse_double(field, toks[1]));
}

inline Face parse_face(const std::string& field, const std::string& s) {
    if (s == "left") return Face::Left;
    if (s == "right") return Face::Right;
    if (s == "bottom") return Face::Bottom;
    if (s == "top") return Face::Top;
    throw ConfigError(field + ": unknown face '" + s + "' (left|right|bottom|top)");
}

}  // namespace cfgio

inline std::string ExperimentConfig::serialize() const {
    using cfgio::fmt_double;
    std::ostringstream os;
    os << "[geometry]\n";
    if (hole)
        os << "hole = " << hole->x0.str() << " " << hole->y0.str() << " " << hole->x1.str() << " "
           << hole->y1.str() << "\n";
    else
        os << "hole = none\n";
    os << "m = " << m << "\n";
    os << "eps =";
    for (const auto& e : eps_list) os << " " << e.str();
    os << "\n";
    os << "dirichlet =";
    for (Face f : dirichlet) os << " " << face_name(f);
    os << "\n";
    os << "extent = " << extent[0] << " " << extent[1] << " " << extent[2] << " " << extent[3]
       << "\n\n";

    os << "[material]\n";
    os << "p = " << fmt_double(p) << "\n";
    os << "q = " << fmt_double(q) << "\n";
    os << "alpha_amp = " << fmt_double(alpha_amp) << "\n";
    os << "beta_amp = " << fmt_double(beta_amp) << "\n";
    os << "delta_amp = " << fmt_double(delta_amp) << "\n";
    os << "stress_free_id = " << (stress_free_id ? "true" : "false") << "\n\n";

    os << "[time]\n";
    os << "T = " << T.str() << "\n";
    os << "tau = " << tau.str() << "\n\n";

    os << "[load]\n";
    os << "f_const = " << fmt_double(f_const.x()) << " " << fmt_double(f_const.y()) << "\n";
    os << "f_ramp = " << fmt_double(f_ramp.x()) << " " << fmt_double(f_ramp.y()) << "\n";
    os << "g_const = " << fmt_double(g_const.x()) << " " << fmt_double(g_const.y()) << "\n";
    os << "g_ramp = " << fmt_double(g_ramp.x()) << " " << fmt_double(g_ramp.y()) << "\n\n";

    os << "[mode]\n";
    os << "hhom = " << (hhom == HhomMode::Quadratic ? "quadratic" : "nested") << "\n";
    os << "deterministic = " << (deterministic ? "true" : "false") << "\n";
    os << "quad_order = " << quad_order << "\n";
    os << "macro_elems = " << macro_elems << "\n\n";

    os << "[run]\n";
    os << "out_dir = " << out_dir << "\n";
    os << "seed = " << seed << "\n";
    return os.str();
}

inline ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    using namespace cfgio;
    ExperimentConfig cfg;
    cfg.eps_list.clear();
    cfg.dirichlet.clear();
    cfg.hole.reset();
    bool saw_hole = false, saw_eps = false, saw_dirichlet = false;

    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = line.substr(1, line.size() - 2);
            if (section != "geometry" && section != "material" && section != "time" &&
                section != "load" && section != "mode" && section != "run")
                throw ConfigError("unknown section [" + section + "]");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        std::string field = section + "." + key;

        if (section == "geometry") {
            if (key == "hole") {
                saw_hole = true;
                if (val == "none") {
                    cfg.hole.reset();
                } else {
                    auto toks = split_ws(val);
                    if (toks.size() != 4)
                        throw ConfigError("hole: expected four rationals or 'none'");
                    cfg.hole = HoleRect{parse_rational("hole", toks[0]), parse_rational("hole", toks[1]),
                                        parse_rational("hole", toks[2]), parse_rational("hole", toks[3])};
                }
            } else if (key == "m") {
                cfg.m = int(parse_int("m", val));
            } else if (key == "eps") {
                saw_eps = true;
                for (const auto& tok : split_ws(val)) {
                    Rational e = parse_rational("eps", tok);
                    if (e.num != 1 || e.den < 1)
                        throw ConfigError("eps: '" + tok + "' is not 1/N with integer N >= 1");
                    cfg.eps_list.push_back(e);
                }
            } else if (key == "dirichlet") {
                saw_dirichlet = true;
                for (const auto& tok : split_ws(val)) cfg.dirichlet.insert(parse_face("dirichlet", tok));
            } else if (key == "extent") {
                auto toks = split_ws(val);
                if (toks.size() != 4) throw ConfigError("extent: expected four integers");
                for (int i = 0; i < 4; ++i) cfg.extent[i] = int(parse_int("extent", toks[i]));
            } else {
                throw ConfigError("unknown key '" + field + "'");
            }
        } else if (section == "material") {
            if (key == "p") cfg.p = parse_double(field, val);
            else if (key == "q") cfg.q = parse_double(field, val);
            else if (key == "alpha_amp") cfg.alpha_amp = parse_double(field, val);
            else if (key == "beta_amp") cfg.beta_amp = parse_double(field, val);
            else if (key == "delta_amp") cfg.delta_amp = parse_double(field, val);
            else if (key == "stress_free_id") cfg.stress_free_id = parse_bool(field, val);
            else throw ConfigError("unknown key '" + field + "'");
        } else if (section == "time") {
            if (key == "T") cfg.T = parse_rational("T", val);
            else if (key == "tau") cfg.tau = parse_rational("tau", val);
            else throw ConfigError("unknown key '" + field + "'");
        } else if (section == "load") {
            if (key == "f_const") cfg.f_const = parse_vec2(field, val);
            else if (key == "f_ramp") cfg.f_ramp = parse_vec2(field, val);
            else if (key == "g_const") cfg.g_const = parse_vec2(field, val);
            else if (key == "g_ramp") cfg.g_ramp = parse_vec2(field, val);
            else throw ConfigError("unknown key '" + field + "'");
        } else if (section == "mode") {
            if (key == "hhom") {
                if (val == "quadratic") cfg.hhom = HhomMode::Quadratic;
                else if (val == "nested") cfg.hhom = HhomMode::Nested;
                else throw ConfigError("hhom: expected quadratic|nested, got '" + val + "'");
            } else if (key == "deterministic") cfg.deterministic = parse_bool(field, val);
            else if (key == "quad_order") cfg.quad_order = int(parse_int(field, val));
            else if (key == "macro_elems") cfg.macro_elems = int(parse_int(field, val));
            else throw ConfigError("unknown key '" + field + "'");
        } else if (section == "run") {
            if (key == "out_dir") cfg.out_dir = val;
            else if (key == "seed") cfg.seed = (unsigned long)parse_int(field, val);
            else throw ConfigError("unknown key '" + field + "'");
        } else {
            throw ConfigError("key '" + key + "' outside of any section");
        }
    }
    if (!saw_eps || cfg.eps_list.empty()) throw ConfigError("eps: missing");
    if (!saw_dirichlet || cfg.dirichlet.empty()) throw ConfigError("dirichlet: missing");
    if (!saw_hole) throw ConfigError("hole: missing (use 'none' for a full cell)");
    cfg.validate();
    return cfg;
}

}  // namespace perihom
