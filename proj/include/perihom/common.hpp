#pragma once

// Shared basics: small tensor types, rationals for grid-exact arithmetic,
// Gauss rules, and the error hierarchy used across the library.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace perihom {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Errors

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define PERIHOM_ERROR(Name)                                          \
    struct Name : Error {                                            \
        explicit Name(const std::string& msg) : Error(#Name ": " + msg) {} \
    }

PERIHOM_ERROR(HoleTouchesBoundary);
PERIHOM_ERROR(MisalignedHole);
PERIHOM_ERROR(NonIntegerInverseEps);
PERIHOM_ERROR(DisconnectedSolid);
PERIHOM_ERROR(UnknownTag);
PERIHOM_ERROR(PeriodicOnMacroDomain);
PERIHOM_ERROR(PointInVoid);
PERIHOM_ERROR(NonFiniteDensity);
PERIHOM_ERROR(PeriodicSpace);
PERIHOM_ERROR(NonPositiveDet);
PERIHOM_ERROR(LineSearchFailed);
PERIHOM_ERROR(MaxItersExceeded);
PERIHOM_ERROR(SingularSystem);
PERIHOM_ERROR(IndefiniteSystem);
PERIHOM_ERROR(MissingCorrector);
PERIHOM_ERROR(FieldNotGlobal);
PERIHOM_ERROR(ZeroDirichletSet);
PERIHOM_ERROR(EigenNoConvergence);
PERIHOM_ERROR(SingularFill);
PERIHOM_ERROR(ConfigError);

#undef PERIHOM_ERROR

// ---------------------------------------------------------------------------
// Rational numbers. Grid geometry (cell size, hole corners, time steps) is
// kept rational so alignment checks are exact.

struct Rational {
    long long num = 0;
    long long den = 1;

    Rational() = default;
    Rational(long long n, long long d = 1) : num(n), den(d) { normalize(); }

    void normalize() {
        if (den == 0) throw Error("rational with zero denominator");
        if (den < 0) { num = -num; den = -den; }
        long long g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
    }

    double value() const { return double(num) / double(den); }
    bool is_integer() const { return den == 1; }

    friend Rational operator+(Rational a, Rational b) { return {a.num * b.den + b.num * a.den, a.den * b.den}; }
    friend Rational operator-(Rational a, Rational b) { return {a.num * b.den - b.num * a.den, a.den * b.den}; }
    friend Rational operator*(Rational a, Rational b) { return {a.num * b.num, a.den * b.den}; }
    friend Rational operator/(Rational a, Rational b) { return {a.num * b.den, a.den * b.num}; }
    friend bool operator==(const Rational& a, const Rational& b) { return a.num == b.num && a.den == b.den; }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) { return a.num * b.den < b.num * a.den; }

    std::string str() const {
        if (den == 1) return std::to_string(num);
        return std::to_string(num) + "/" + std::to_string(den);
    }

    // Parses "p", "p/q". Throws ConfigError otherwise.
    static Rational parse(const std::string& s) {
        auto slash = s.find('/');
        try {
            if (slash == std::string::npos) {
                size_t pos = 0;
                long long n = std::stoll(s, &pos);
                if (pos != s.size()) throw std::invalid_argument(s);
                return Rational(n);
            }
            size_t p1 = 0, p2 = 0;
            long long n = std::stoll(s.substr(0, slash), &p1);
            long long d = std::stoll(s.substr(slash + 1), &p2);
            if (p1 != slash || p2 != s.size() - slash - 1) throw std::invalid_argument(s);
            return Rational(n, d);
        } catch (const std::exception&) {
            throw ConfigError("not a rational: '" + s + "'");
        }
    }
};

// ---------------------------------------------------------------------------
// Third-order tensors over R^2 (component i, derivative indices j,k).
// Hessian-like tensors are symmetric in (j,k).

struct Tens3 {
    std::array<double, 8> v{};

    double& operator()(int i, int j, int k) { return v[(i * 2 + j) * 2 + k]; }
    double operator()(int i, int j, int k) const { return v[(i * 2 + j) * 2 + k]; }

    double& operator[](int flat) { return v[flat]; }
    double operator[](int flat) const { return v[flat]; }

    static Tens3 zero() { return {}; }

    double dot(const Tens3& o) const {
        double s = 0;
        for (int a = 0; a < 8; ++a) s += v[a] * o.v[a];
        return s;
    }
    double squaredNorm() const { return dot(*this); }
    double norm() const { return std::sqrt(squaredNorm()); }

    Tens3& operator+=(const Tens3& o) {
        for (int a = 0; a < 8; ++a) v[a] += o.v[a];
        return *this;
    }
    Tens3& operator-=(const Tens3& o) {
        for (int a = 0; a < 8; ++a) v[a] -= o.v[a];
        return *this;
    }
    Tens3& operator*=(double s) {
        for (int a = 0; a < 8; ++a) v[a] *= s;
        return *this;
    }
    friend Tens3 operator+(Tens3 a, const Tens3& b) { return a += b; }
    friend Tens3 operator-(Tens3 a, const Tens3& b) { return a -= b; }
    friend Tens3 operator*(double s, Tens3 a) { return a *= s; }

    // Contraction over the derivative indices: (T : A)_i = sum_jk T_ijk A_jk.
    Vec2 contract(const Mat2& A) const {
        Vec2 r;
        for (int i = 0; i < 2; ++i)
            r[i] = (*this)(i, 0, 0) * A(0, 0) + (*this)(i, 0, 1) * A(0, 1) +
                   (*this)(i, 1, 0) * A(1, 0) + (*this)(i, 1, 1) * A(1, 1);
        return r;
    }
};

// ---------------------------------------------------------------------------
// Gauss-Legendre rules on [0,1].

struct QuadRule {
    std::vector<double> pts;
    std::vector<double> wts;

    static QuadRule gauss(int n) {
        // Nodes/weights on [-1,1], mapped to [0,1].
        static const std::array<std::vector<double>, 5> nodes = {{
            {-0.5773502691896257645091488, 0.5773502691896257645091488},
            {-0.7745966692414833770358531, 0.0, 0.7745966692414833770358531},
            {-0.8611363115940525752239465, -0.3399810435848562648026658,
             0.3399810435848562648026658, 0.8611363115940525752239465},
            {-0.9061798459386639927976269, -0.5384693101056830910363144, 0.0,
             0.5384693101056830910363144, 0.9061798459386639927976269},
            {-0.9324695142031520278123016, -0.6612093864662645136613996, -0.2386191860831969086305017,
             0.2386191860831969086305017, 0.6612093864662645136613996, 0.9324695142031520278123016},
        }};
        static const std::array<std::vector<double>, 5> weights = {{
            {1.0, 1.0},
            {0.5555555555555555555555556, 0.8888888888888888888888889, 0.5555555555555555555555556},
            {0.3478548451374538573730639, 0.6521451548625461426269361,
             0.6521451548625461426269361, 0.3478548451374538573730639},
            {0.2369268850561890875142640, 0.4786286704993664680412915, 0.5688888888888888888888889,
             0.4786286704993664680412915, 0.2369268850561890875142640},
            {0.1713244923791703450402961, 0.3607615730481386075698335, 0.4679139345726910473898703,
             0.4679139345726910473898703, 0.3607615730481386075698335, 0.1713244923791703450402961},
        }};
        if (n < 2 || n > 6) throw Error("Gauss rule supports 2..6 points per direction");
        QuadRule r;
        for (size_t i = 0; i < nodes[n - 2].size(); ++i) {
            r.pts.push_back(0.5 * (nodes[n - 2][i] + 1.0));
            r.wts.push_back(0.5 * weights[n - 2][i]);
        }
        return r;
    }
};

// Fractional part of x mapped into [0,1).
inline double fract01(double x) {
    double f = x - std::floor(x);
    if (f >= 1.0) f = 0.0;
    return f;
}

}  // namespace perihom
