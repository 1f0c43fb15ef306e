#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "ehpa/errors.hpp"
#include "ehpa/text.hpp"

namespace ehpa::quad {

struct Options {
    double rel_tol = 1e-8;
    double abs_tol = 1e-15;
    std::size_t max_panels = 4000;
};

namespace detail {

// 7-point Gauss-Legendre rule embedded in the 15-point Kronrod extension.
inline constexpr double kNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kKronrod[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGauss[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
double checked(F& f, double x) {
    const double y = f(x);
    if (!std::isfinite(y)) throw NumericError("non-finite integrand at h = " + text::format_double(x));
    return y;
}

template <class F>
double panel(F& f, double a, double b, double& err) {
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = checked(f, centre);
    double kronrod = kKronrod[7] * fc;
    double gauss = kGauss[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kNodes[j];
        const double pair = checked(f, centre - dx) + checked(f, centre + dx);
        kronrod += kKronrod[j] * pair;
        if (j % 2 == 1) gauss += kGauss[j / 2] * pair;
    }
    err = std::abs((kronrod - gauss) * half);
    return kronrod * half;
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (G7/K15) integration of f over [a, b] by
/// recursive bisection. A panel is accepted when its error estimate is
/// below max(abs_tol, rel_tol * |panel value|).
template <class F>
double integrate(F&& f, double a, double b, const Options& opt = {}) {
    if (!(b > a)) return 0.0;
    struct Interval {
        double a, b;
    };
    Interval stack[64];
    std::size_t top = 0, panels = 0;
    stack[top++] = {a, b};
    double sum = 0.0;
    while (top > 0) {
        const Interval iv = stack[--top];
        double err = 0.0;
        const double s = detail::panel(f, iv.a, iv.b, err);
        ++panels;
        const bool converged = err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(s));
        if (converged || top + 2 > 64 || panels >= opt.max_panels || iv.b - iv.a <= 1e-14 * (1.0 + std::abs(iv.a))) {
            sum += s;
            continue;
        }
        const double mid = 0.5 * (iv.a + iv.b);
        stack[top++] = {mid, iv.b};
        stack[top++] = {iv.a, mid};
    }
    return sum;
}

}  // namespace ehpa::quad
