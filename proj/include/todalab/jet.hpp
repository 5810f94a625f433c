#pragma once

// Second-order forward-mode jet in two variables (slot 0 = profile argument x,
// slot 1 = speed c). Carries the value, the gradient and the Hessian.

#include <cmath>

namespace todalab {

struct Jet2 {
    double v = 0.0;
    double d[2] = {0.0, 0.0};
    double h[3] = {0.0, 0.0, 0.0};  // h00, h01, h11

    Jet2() = default;
    explicit Jet2(double value) : v(value) {}

    static Jet2 variable(double value, int slot) {
        Jet2 j(value);
        j.d[slot] = 1.0;
        return j;
    }

    /// f(this) given f, f', f'' at v.
    [[nodiscard]] Jet2 compose(double f0, double f1, double f2) const {
        Jet2 r(f0);
        r.d[0] = f1 * d[0];
        r.d[1] = f1 * d[1];
        r.h[0] = f2 * d[0] * d[0] + f1 * h[0];
        r.h[1] = f2 * d[0] * d[1] + f1 * h[1];
        r.h[2] = f2 * d[1] * d[1] + f1 * h[2];
        return r;
    }
};

inline Jet2 operator+(Jet2 a, const Jet2& b) {
    a.v += b.v;
    for (int i = 0; i < 2; ++i) a.d[i] += b.d[i];
    for (int i = 0; i < 3; ++i) a.h[i] += b.h[i];
    return a;
}

inline Jet2 operator-(Jet2 a, const Jet2& b) {
    a.v -= b.v;
    for (int i = 0; i < 2; ++i) a.d[i] -= b.d[i];
    for (int i = 0; i < 3; ++i) a.h[i] -= b.h[i];
    return a;
}

inline Jet2 operator-(Jet2 a) {
    a.v = -a.v;
    for (double& x : a.d) x = -x;
    for (double& x : a.h) x = -x;
    return a;
}

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
    Jet2 r(a.v * b.v);
    r.d[0] = a.d[0] * b.v + a.v * b.d[0];
    r.d[1] = a.d[1] * b.v + a.v * b.d[1];
    r.h[0] = a.h[0] * b.v + 2.0 * a.d[0] * b.d[0] + a.v * b.h[0];
    r.h[1] = a.h[1] * b.v + a.d[0] * b.d[1] + a.d[1] * b.d[0] + a.v * b.h[1];
    r.h[2] = a.h[2] * b.v + 2.0 * a.d[1] * b.d[1] + a.v * b.h[2];
    return r;
}

inline Jet2 operator*(double s, Jet2 a) {
    a.v *= s;
    for (double& x : a.d) x *= s;
    for (double& x : a.h) x *= s;
    return a;
}

inline Jet2 operator+(Jet2 a, double s) {
    a.v += s;
    return a;
}

// sech^2 z, written through e^{-2|z|} so tails keep relative precision.
inline double sech2(double z) {
    const double e = std::exp(-2.0 * std::abs(z));
    return 4.0 * e / ((1.0 + e) * (1.0 + e));
}

inline double sech(double z) {
    const double e = std::exp(-std::abs(z));
    return 2.0 * e / (1.0 + e * e);
}

inline Jet2 jet_sech2(const Jet2& z) {
    const double s = sech2(z.v), t = std::tanh(z.v);
    return z.compose(s, -2.0 * s * t, 4.0 * s * t * t - 2.0 * s * s);
}

inline Jet2 jet_sech(const Jet2& z) {
    const double s = sech(z.v), t = std::tanh(z.v);
    return z.compose(s, -s * t, s * (t * t - s * s));
}

inline Jet2 jet_log1p(const Jet2& a) {
    const double inv = 1.0 / (1.0 + a.v);
    return a.compose(std::log1p(a.v), inv, -inv * inv);
}

inline Jet2 jet_sinh(const Jet2& a) {
    return a.compose(std::sinh(a.v), std::cosh(a.v), std::sinh(a.v));
}

}  // namespace todalab
