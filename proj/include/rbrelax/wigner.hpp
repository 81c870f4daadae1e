#pragma once

// Wigner 3-j / 6-j symbols and Clebsch-Gordan coefficients from the Racah
// closed forms. Arguments are (half-)integers passed as doubles; the largest
// angular momentum in a D1-line problem is 3, so plain double factorials are
// exact to well below 1e-14.

#include <array>
#include <cmath>
#include <stdexcept>

namespace rbrelax {

namespace detail {

inline bool is_half_integral(double j) {
    return std::abs(2.0 * j - std::round(2.0 * j)) < 1e-9;
}

inline double factorial(int n) {
    static const auto table = [] {
        std::array<double, 41> t{};
        t[0] = 1.0;
        for (int i = 1; i <= 40; ++i) t[i] = t[i - 1] * i;
        return t;
    }();
    if (n < 0 || n > 40) throw std::invalid_argument("factorial argument out of range");
    return table[static_cast<std::size_t>(n)];
}

// (a+b-c)!(a-b+c)!(-a+b+c)! / (a+b+c+1)!  -- triangle coefficient
inline double triangle_coeff(double a, double b, double c) {
    if (std::abs(std::remainder(a + b + c, 1.0)) > 1e-9) return 0.0;
    const int ab_c = static_cast<int>(std::round(a + b - c));
    const int a_bc = static_cast<int>(std::round(a - b + c));
    const int _abc = static_cast<int>(std::round(-a + b + c));
    if (ab_c < 0 || a_bc < 0 || _abc < 0) return 0.0;
    const int per = static_cast<int>(std::round(a + b + c));
    return factorial(ab_c) * factorial(a_bc) * factorial(_abc) / factorial(per + 1);
}

inline void require_valid_j(std::initializer_list<double> js) {
    for (double j : js)
        if (!is_half_integral(j) || j < 0.0)
            throw std::invalid_argument("angular momentum must be a non-negative (half-)integer");
}

inline void require_projection(double j, double m) {
    if (!is_half_integral(m) || std::abs(std::remainder(j - m, 1.0)) > 1e-9)
        throw std::invalid_argument("projection must differ from its angular momentum by an integer");
}

} // namespace detail

/// Wigner 3-j symbol (j1 j2 j3; m1 m2 m3). Returns 0 when selection rules fail.
inline double wigner_3j(double j1, double j2, double j3, double m1, double m2, double m3) {
    detail::require_valid_j({j1, j2, j3});
    detail::require_projection(j1, m1);
    detail::require_projection(j2, m2);
    detail::require_projection(j3, m3);
    if (std::abs(m1 + m2 + m3) > 1e-9) return 0.0;
    if (std::abs(m1) > j1 + 1e-9 || std::abs(m2) > j2 + 1e-9 || std::abs(m3) > j3 + 1e-9) return 0.0;
    const double tri = detail::triangle_coeff(j1, j2, j3);
    if (tri == 0.0) return 0.0;

    const int i1 = static_cast<int>(std::round(j1 + m1)), i2 = static_cast<int>(std::round(j1 - m1));
    const int i3 = static_cast<int>(std::round(j2 + m2)), i4 = static_cast<int>(std::round(j2 - m2));
    const int i5 = static_cast<int>(std::round(j3 + m3)), i6 = static_cast<int>(std::round(j3 - m3));
    const double pref = std::sqrt(tri * detail::factorial(i1) * detail::factorial(i2) *
                                  detail::factorial(i3) * detail::factorial(i4) *
                                  detail::factorial(i5) * detail::factorial(i6));

    const int a1 = static_cast<int>(std::round(j1 + j2 - j3));
    const int a2 = static_cast<int>(std::round(j1 - m1));
    const int a3 = static_cast<int>(std::round(j2 + m2));
    const int a4 = static_cast<int>(std::round(j3 - j2 + m1));
    const int a5 = static_cast<int>(std::round(j3 - j1 - m2));
    int kmin = std::max(0, std::max(-a4, -a5));
    int kmax = std::min(a1, std::min(a2, a3));
    double sum = 0.0;
    for (int k = kmin; k <= kmax; ++k) {
        const double term = detail::factorial(k) * detail::factorial(a1 - k) * detail::factorial(a2 - k) *
                            detail::factorial(a3 - k) * detail::factorial(a4 + k) * detail::factorial(a5 + k);
        sum += ((k % 2) ? -1.0 : 1.0) / term;
    }
    const int ph = static_cast<int>(std::round(j1 - j2 - m3));
    return ((ph % 2) ? -1.0 : 1.0) * pref * sum;
}

/// Wigner 6-j symbol {j1 j2 j3; j4 j5 j6}. Returns 0 when triangle rules fail.
inline double wigner_6j(double j1, double j2, double j3, double j4, double j5, double j6) {
    detail::require_valid_j({j1, j2, j3, j4, j5, j6});
    const double t1 = detail::triangle_coeff(j1, j2, j3);
    const double t2 = detail::triangle_coeff(j1, j5, j6);
    const double t3 = detail::triangle_coeff(j4, j2, j6);
    const double t4 = detail::triangle_coeff(j4, j5, j3);
    if (t1 == 0.0 || t2 == 0.0 || t3 == 0.0 || t4 == 0.0) return 0.0;

    const int b1 = static_cast<int>(std::round(j1 + j2 + j3));
    const int b2 = static_cast<int>(std::round(j1 + j5 + j6));
    const int b3 = static_cast<int>(std::round(j4 + j2 + j6));
    const int b4 = static_cast<int>(std::round(j4 + j5 + j3));
    const int c1 = static_cast<int>(std::round(j1 + j2 + j4 + j5));
    const int c2 = static_cast<int>(std::round(j2 + j3 + j5 + j6));
    const int c3 = static_cast<int>(std::round(j3 + j1 + j6 + j4));
    const int kmin = std::max(std::max(b1, b2), std::max(b3, b4));
    const int kmax = std::min(c1, std::min(c2, c3));
    double sum = 0.0;
    for (int k = kmin; k <= kmax; ++k) {
        const double num = detail::factorial(k + 1);
        const double den = detail::factorial(k - b1) * detail::factorial(k - b2) * detail::factorial(k - b3) *
                           detail::factorial(k - b4) * detail::factorial(c1 - k) * detail::factorial(c2 - k) *
                           detail::factorial(c3 - k);
        sum += ((k % 2) ? -1.0 : 1.0) * num / den;
    }
    return std::sqrt(t1 * t2 * t3 * t4) * sum;
}

/// Clebsch-Gordan coefficient <j1 m1 j2 m2 | J M>.
inline double clebsch_gordan(double j1, double m1, double j2, double m2, double J, double M) {
    const double w = wigner_3j(j1, j2, J, m1, m2, -M); // enforces all selection rules
    if (w == 0.0) return 0.0;
    const int ph = static_cast<int>(std::round(j1 - j2 + M));
    return ((ph % 2) ? -1.0 : 1.0) * std::sqrt(2.0 * J + 1.0) * w;
}

} // namespace rbrelax
