#pragma once

#include <array>
#include <cmath>
#include <type_traits>

namespace v2hg {

/// Forward-mode dual number carrying N directional derivatives.
///
/// Nesting (Dual<Dual<double, N>, N>) yields exact second derivatives, which
/// is how the optimizer obtains per-hour Hessian blocks.
template <typename T, int N>
struct Dual {
    T v{};
    std::array<T, N> d{};

    constexpr Dual() = default;
    constexpr Dual(double x) : v(x) {}
    constexpr Dual(const T& value, const std::array<T, N>& grad) : v(value), d(grad) {}

    Dual& operator+=(const Dual& o) {
        v += o.v;
        for (int i = 0; i < N; ++i) d[i] += o.d[i];
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        v -= o.v;
        for (int i = 0; i < N; ++i) d[i] -= o.d[i];
        return *this;
    }
    Dual& operator*=(const Dual& o) { return *this = *this * o; }
    Dual& operator/=(const Dual& o) { return *this = *this / o; }
};

template <typename T>
struct is_dual : std::false_type {};
template <typename T, int N>
struct is_dual<Dual<T, N>> : std::true_type {};

inline double value_of(double x) { return x; }
template <typename T, int N>
double value_of(const Dual<T, N>& x) {
    return value_of(x.v);
}

// Applies a scalar function with known derivative: f(x) where f'(x) = df.
template <typename T, int N>
Dual<T, N> chain(const Dual<T, N>& x, const T& fx, const T& dfx) {
    Dual<T, N> r;
    r.v = fx;
    for (int i = 0; i < N; ++i) r.d[i] = dfx * x.d[i];
    return r;
}

template <typename T, int N>
Dual<T, N> operator+(Dual<T, N> a, const Dual<T, N>& b) { return a += b; }
template <typename T, int N>
Dual<T, N> operator-(Dual<T, N> a, const Dual<T, N>& b) { return a -= b; }
template <typename T, int N>
Dual<T, N> operator-(const Dual<T, N>& a) {
    Dual<T, N> r;
    r.v = -a.v;
    for (int i = 0; i < N; ++i) r.d[i] = -a.d[i];
    return r;
}
template <typename T, int N>
Dual<T, N> operator*(const Dual<T, N>& a, const Dual<T, N>& b) {
    Dual<T, N> r;
    r.v = a.v * b.v;
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
}
template <typename T, int N>
Dual<T, N> operator/(const Dual<T, N>& a, const Dual<T, N>& b) {
    Dual<T, N> r;
    const T inv = T(1.0) / b.v;
    r.v = a.v * inv;
    for (int i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
    return r;
}

// Mixed operations with plain doubles.
template <typename T, int N>
Dual<T, N> operator+(Dual<T, N> a, double b) { a.v += b; return a; }
template <typename T, int N>
Dual<T, N> operator+(double a, Dual<T, N> b) { b.v += a; return b; }
template <typename T, int N>
Dual<T, N> operator-(Dual<T, N> a, double b) { a.v -= b; return a; }
template <typename T, int N>
Dual<T, N> operator-(double a, const Dual<T, N>& b) { return -b + a; }
template <typename T, int N>
Dual<T, N> operator*(Dual<T, N> a, double b) {
    a.v *= b;
    for (int i = 0; i < N; ++i) a.d[i] *= b;
    return a;
}
template <typename T, int N>
Dual<T, N> operator*(double a, const Dual<T, N>& b) { return b * a; }
template <typename T, int N>
Dual<T, N> operator/(const Dual<T, N>& a, double b) { return a * (1.0 / b); }
template <typename T, int N>
Dual<T, N> operator/(double a, const Dual<T, N>& b) { return Dual<T, N>(a) / b; }

template <typename T, int N>
bool operator<(const Dual<T, N>& a, const Dual<T, N>& b) { return value_of(a) < value_of(b); }
template <typename T, int N>
bool operator<(const Dual<T, N>& a, double b) { return value_of(a) < b; }
template <typename T, int N>
bool operator>(const Dual<T, N>& a, double b) { return value_of(a) > b; }

template <typename T, int N>
Dual<T, N> exp(const Dual<T, N>& x) {
    using std::exp;
    const T e = exp(x.v);
    return chain(x, e, e);
}
template <typename T, int N>
Dual<T, N> log(const Dual<T, N>& x) {
    using std::log;
    return chain(x, log(x.v), T(1.0) / x.v);
}
template <typename T, int N>
Dual<T, N> sqrt(const Dual<T, N>& x) {
    using std::sqrt;
    const T s = sqrt(x.v);
    return chain(x, s, T(0.5) / s);
}
template <typename T, int N>
Dual<T, N> tanh(const Dual<T, N>& x) {
    using std::tanh;
    const T t = tanh(x.v);
    return chain(x, t, T(1.0) - t * t);
}

/// Seeds variable `index` of an N-dimensional first-order dual.
template <int N>
Dual<double, N> make_variable(double x, int index) {
    Dual<double, N> r(x);
    r.d[index] = 1.0;
    return r;
}

template <int N>
using Hyper = Dual<Dual<double, N>, N>;

/// Seeds variable `index` of a second-order (nested) dual.
template <int N>
Hyper<N> make_hyper_variable(double x, int index) {
    Hyper<N> r;
    r.v = make_variable<N>(x, index);
    r.d[index] = Dual<double, N>(1.0);
    return r;
}

} // namespace v2hg
