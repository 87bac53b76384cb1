#pragma once

#include <cmath>
#include <type_traits>

#include "errors.hpp"

namespace extremal {

// Forward-mode dual number.  T = double gives first derivatives exactly (to
// rounding); T = Dual<double> nests to second derivatives.  Arithmetic is the
// chain rule, nothing clever.
template <class T>
struct Dual {
    T v{};  // value
    T d{};  // derivative

    Dual() = default;
    Dual(T value) : v(value), d(T{}) {}  // NOLINT: implicit lift of constants
    Dual(T value, T deriv) : v(value), d(deriv) {}

    static Dual variable(T value) { return Dual(value, T{1}); }
};

using DualScalar = Dual<double>;
using Dual2 = Dual<Dual<double>>;

// seed t as the variable for a second-derivative evaluation
inline Dual2 dual2_variable(double t) {
    return Dual2(Dual<double>::variable(t), Dual<double>{1.0});
}

template <class T> Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
    return {a.v + b.v, a.d + b.d};
}
template <class T> Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
    return {a.v - b.v, a.d - b.d};
}
template <class T> Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }
template <class T> Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
    return {a.v * b.v, a.d * b.v + a.v * b.d};
}
template <class T> Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
    return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}

// mixed scalar forms (keep template deduction painless)
template <class T> Dual<T> operator+(const Dual<T>& a, double c) { return a + Dual<T>(T(c)); }
template <class T> Dual<T> operator+(double c, const Dual<T>& a) { return Dual<T>(T(c)) + a; }
template <class T> Dual<T> operator-(const Dual<T>& a, double c) { return a - Dual<T>(T(c)); }
template <class T> Dual<T> operator-(double c, const Dual<T>& a) { return Dual<T>(T(c)) - a; }
template <class T> Dual<T> operator*(const Dual<T>& a, double c) { return a * Dual<T>(T(c)); }
template <class T> Dual<T> operator*(double c, const Dual<T>& a) { return Dual<T>(T(c)) * a; }
template <class T> Dual<T> operator/(const Dual<T>& a, double c) { return a / Dual<T>(T(c)); }
template <class T> Dual<T> operator/(double c, const Dual<T>& a) { return Dual<T>(T(c)) / a; }

using std::cos;
using std::cosh;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sinh;
using std::sqrt;

template <class T> Dual<T> exp(const Dual<T>& a) {
    T e = exp(a.v);
    return {e, a.d * e};
}
template <class T> Dual<T> log(const Dual<T>& a) {
    return {log(a.v), a.d / a.v};
}
template <class T> Dual<T> sin(const Dual<T>& a) { return {sin(a.v), a.d * cos(a.v)}; }
template <class T> Dual<T> cos(const Dual<T>& a) { return {cos(a.v), -a.d * sin(a.v)}; }
template <class T> Dual<T> sinh(const Dual<T>& a) { return {sinh(a.v), a.d * cosh(a.v)}; }
template <class T> Dual<T> cosh(const Dual<T>& a) { return {cosh(a.v), a.d * sinh(a.v)}; }
template <class T> Dual<T> sqrt(const Dual<T>& a) {
    T s = sqrt(a.v);
    return {s, a.d / (T{2} * s)};
}

// real exponent: d/dt a^p = p a^{p-1} a'
template <class T> Dual<T> pow(const Dual<T>& a, double p) {
    return {pow(a.v, p), a.d * (p * pow(a.v, p - 1.0))};
}
// general exponent via exp(b ln a); only valid for a > 0 (enforced by caller)
template <class T> Dual<T> pow(const Dual<T>& a, const Dual<T>& b) {
    return exp(b * log(a));
}

inline double value_of(double a) { return a; }
template <class T> double value_of(const Dual<T>& a) { return value_of(a.v); }

// Convenience: f'(t) and f''(t) for a callable templated on the scalar type.
template <class F>
double dual_derivative(F&& f, double t) {
    Dual<double> r = f(Dual<double>::variable(t));
    return r.d;
}

template <class F>
double dual_second_derivative(F&& f, double t) {
    Dual2 r = f(dual2_variable(t));
    return r.d.d;
}

}  // namespace extremal
