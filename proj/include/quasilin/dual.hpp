// Forward-mode dual numbers, nestable once for second derivatives.
#pragma once

#include <cmath>
#include <utility>

#include "quasilin/errors.hpp"

namespace quasilin {

template <class T>
struct Dual {
    T re{};
    T dx{};

    Dual() = default;
    Dual(double r) : re(r), dx() {}  // NOLINT: implicit on purpose, lifts constants
    Dual(T r, T d) : re(std::move(r)), dx(std::move(d)) {}
};

inline double primal(double x) { return x; }
template <class T>
double primal(const Dual<T>& x) {
    return primal(x.re);
}

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
    return {a.re + b.re, a.dx + b.dx};
}
template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
    return {a.re - b.re, a.dx - b.dx};
}
template <class T>
Dual<T> operator-(const Dual<T>& a) {
    return {-a.re, -a.dx};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
    return {a.re * b.re, a.re * b.dx + a.dx * b.re};
}
template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
    return {a.re / b.re, (a.dx * b.re - a.re * b.dx) / (b.re * b.re)};
}

template <class T>
Dual<T> sin(const Dual<T>& a) {
    using std::cos;
    using std::sin;
    return {sin(a.re), cos(a.re) * a.dx};
}
template <class T>
Dual<T> cos(const Dual<T>& a) {
    using std::cos;
    using std::sin;
    return {cos(a.re), -(sin(a.re) * a.dx)};
}
template <class T>
Dual<T> exp(const Dual<T>& a) {
    using std::exp;
    T e = exp(a.re);
    return {e, e * a.dx};
}
template <class T>
Dual<T> tanh(const Dual<T>& a) {
    using std::tanh;
    T th = tanh(a.re);
    return {th, (T(1.0) - th * th) * a.dx};
}
template <class T>
Dual<T> sqrt(const Dual<T>& a) {
    using std::sqrt;
    T s = sqrt(a.re);
    return {s, a.dx / (T(2.0) * s)};
}

// Integer power by repeated squaring; the caller guards zero bases for k < 0.
template <class T>
T pow_int(T base, int k) {
    if (k < 0) return T(1.0) / pow_int(base, -k);
    T acc(1.0);
    while (k > 0) {
        if (k & 1) acc = acc * base;
        base = base * base;
        k >>= 1;
    }
    return acc;
}

using D1 = Dual<double>;
using D2 = Dual<Dual<double>>;

}  // namespace quasilin
