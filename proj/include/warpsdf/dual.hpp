#pragma once

// Forward-mode dual numbers with a fixed number of tangent slots.
// The scalar type T may itself be a Dual, which nests derivative
// directions (e.g. Dual<Dual<double,2>,3> carries a spatial gradient
// whose components still track the two screen tangents).

#include <array>
#include <cmath>
#include <cstdint>
#include <type_traits>

namespace warpsdf {

namespace diag {
// Counts exact ties seen by branchy min/max (measure zero in general
// position; a tie means the tangent picked the first branch).
inline thread_local std::uint64_t branch_ties = 0;
}

template <class T, int K>
struct Dual {
    T v{};
    std::array<T, K> d{};

    Dual() = default;
    Dual(double s) : v(s) {}
    template <class U = T, class = std::enable_if_t<!std::is_same_v<U, double>>>
    Dual(const T& value) : v(value) {}

    static Dual lift(const T& value, int slot) {
        Dual r(value);
        r.d[slot] = T(1.0);
        return r;
    }

    Dual& operator+=(const Dual& o) {
        v += o.v;
        for (int k = 0; k < K; ++k) d[k] += o.d[k];
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        v -= o.v;
        for (int k = 0; k < K; ++k) d[k] -= o.d[k];
        return *this;
    }
    Dual& operator*=(const Dual& o) { return *this = *this * o; }

    friend Dual operator+(const Dual& a, const Dual& b) {
        Dual r;
        r.v = a.v + b.v;
        for (int k = 0; k < K; ++k) r.d[k] = a.d[k] + b.d[k];
        return r;
    }
    friend Dual operator-(const Dual& a, const Dual& b) {
        Dual r;
        r.v = a.v - b.v;
        for (int k = 0; k < K; ++k) r.d[k] = a.d[k] - b.d[k];
        return r;
    }
    friend Dual operator-(const Dual& a) {
        Dual r;
        r.v = -a.v;
        for (int k = 0; k < K; ++k) r.d[k] = -a.d[k];
        return r;
    }
    friend Dual operator*(const Dual& a, const Dual& b) {
        Dual r;
        r.v = a.v * b.v;
        for (int k = 0; k < K; ++k) r.d[k] = a.d[k] * b.v + a.v * b.d[k];
        return r;
    }
    friend Dual operator/(const Dual& a, const Dual& b) {
        Dual r;
        T inv = T(1.0) / b.v;
        r.v = a.v * inv;
        for (int k = 0; k < K; ++k) r.d[k] = (a.d[k] - r.v * b.d[k]) * inv;
        return r;
    }

    friend Dual operator+(const Dual& a, double b) { return a + Dual(b); }
    friend Dual operator+(double a, const Dual& b) { return Dual(a) + b; }
    friend Dual operator-(const Dual& a, double b) { return a - Dual(b); }
    friend Dual operator-(double a, const Dual& b) { return Dual(a) - b; }
    friend Dual operator*(const Dual& a, double b) {
        Dual r;
        r.v = a.v * b;
        for (int k = 0; k < K; ++k) r.d[k] = a.d[k] * b;
        return r;
    }
    friend Dual operator*(double a, const Dual& b) { return b * a; }
    friend Dual operator/(const Dual& a, double b) { return a * (1.0 / b); }
    friend Dual operator/(double a, const Dual& b) { return Dual(a) / b; }
};

inline double scalar_value(double x) { return x; }
template <class T, int K>
double scalar_value(const Dual<T, K>& x) { return scalar_value(x.v); }

inline bool is_finite(double x) { return std::isfinite(x); }
template <class T, int K>
bool is_finite(const Dual<T, K>& x) {
    if (!is_finite(x.v)) return false;
    for (int k = 0; k < K; ++k)
        if (!is_finite(x.d[k])) return false;
    return true;
}

// Comparisons branch on the underlying primal value at any nesting depth.
template <class T, int K> bool operator<(const Dual<T, K>& a, const Dual<T, K>& b) { return scalar_value(a) < scalar_value(b); }
template <class T, int K> bool operator<(const Dual<T, K>& a, double b) { return scalar_value(a) < b; }
template <class T, int K> bool operator<(double a, const Dual<T, K>& b) { return a < scalar_value(b); }
template <class T, int K> bool operator>(const Dual<T, K>& a, const Dual<T, K>& b) { return scalar_value(a) > scalar_value(b); }
template <class T, int K> bool operator>(const Dual<T, K>& a, double b) { return scalar_value(a) > b; }
template <class T, int K> bool operator>(double a, const Dual<T, K>& b) { return a > scalar_value(b); }
template <class T, int K> bool operator<=(const Dual<T, K>& a, const Dual<T, K>& b) { return scalar_value(a) <= scalar_value(b); }
template <class T, int K> bool operator<=(const Dual<T, K>& a, double b) { return scalar_value(a) <= b; }
template <class T, int K> bool operator>=(const Dual<T, K>& a, const Dual<T, K>& b) { return scalar_value(a) >= scalar_value(b); }
template <class T, int K> bool operator>=(const Dual<T, K>& a, double b) { return scalar_value(a) >= b; }

using std::abs;
using std::cos;
using std::exp;
using std::log;
using std::log1p;
using std::pow;
using std::sin;
using std::sqrt;

template <class T, int K>
Dual<T, K> sqrt(const Dual<T, K>& a) {
    Dual<T, K> r;
    r.v = sqrt(a.v);
    T inv = T(0.5) / r.v;
    for (int k = 0; k < K; ++k) r.d[k] = a.d[k] * inv;
    return r;
}

template <class T, int K>
Dual<T, K> exp(const Dual<T, K>& a) {
    Dual<T, K> r;
    r.v = exp(a.v);
    for (int k = 0; k < K; ++k) r.d[k] = a.d[k] * r.v;
    return r;
}

template <class T, int K>
Dual<T, K> log(const Dual<T, K>& a) {
    Dual<T, K> r;
    r.v = log(a.v);
    T inv = T(1.0) / a.v;
    for (int k = 0; k < K; ++k) r.d[k] = a.d[k] * inv;
    return r;
}

template <class T, int K>
Dual<T, K> log1p(const Dual<T, K>& a) {
    Dual<T, K> r;
    r.v = log1p(a.v);
    T inv = T(1.0) / (T(1.0) + a.v);
    for (int k = 0; k < K; ++k) r.d[k] = a.d[k] * inv;
    return r;
}

template <class T, int K>
Dual<T, K> sin(const Dual<T, K>& a) {
    Dual<T, K> r;
    r.v = sin(a.v);
    T c = cos(a.v);
    for (int k = 0; k < K; ++k) r.d[k] = a.d[k] * c;
    return r;
}

template <class T, int K>
Dual<T, K> cos(const Dual<T, K>& a) {
    Dual<T, K> r;
    r.v = cos(a.v);
    T s = -sin(a.v);
    for (int k = 0; k < K; ++k) r.d[k] = a.d[k] * s;
    return r;
}

template <class T, int K>
Dual<T, K> pow(const Dual<T, K>& a, double p) {
    Dual<T, K> r;
    r.v = pow(a.v, p);
    T c = T(p) * pow(a.v, p - 1.0);
    for (int k = 0; k < K; ++k) r.d[k] = a.d[k] * c;
    return r;
}

template <class T, int K>
Dual<T, K> abs(const Dual<T, K>& a) {
    return scalar_value(a) < 0.0 ? -a : a;
}

// Ties resolve to the first argument (deterministic; see diag::branch_ties).
inline double branch_min(double a, double b) {
    if (a == b) ++diag::branch_ties;
    return a <= b ? a : b;
}
inline double branch_max(double a, double b) {
    if (a == b) ++diag::branch_ties;
    return a >= b ? a : b;
}
template <class T, int K>
Dual<T, K> branch_min(const Dual<T, K>& a, const Dual<T, K>& b) {
    double av = scalar_value(a), bv = scalar_value(b);
    if (av == bv) ++diag::branch_ties;
    return av <= bv ? a : b;
}
template <class T, int K>
Dual<T, K> branch_max(const Dual<T, K>& a, const Dual<T, K>& b) {
    double av = scalar_value(a), bv = scalar_value(b);
    if (av == bv) ++diag::branch_ties;
    return av >= bv ? a : b;
}

// softplus with sharpness beta; linear for large arguments to stay stable.
template <class S>
S softplus(const S& x, double beta) {
    if (scalar_value(x) * beta > 30.0) return x;
    return log1p(exp(x * beta)) * (1.0 / beta);
}

using D1 = Dual<double, 1>;
using D2 = Dual<double, 2>;
using D3 = Dual<double, 3>;

} // namespace warpsdf
