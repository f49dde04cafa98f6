#pragma once

#include <array>
#include <string>
#include <string_view>

#include "obscost/xreal.hpp"

namespace obscost {

inline constexpr int kMaxOrder = 7;

// Embedding/interpolation constants E^n_m (0 < n < m <= 7) and the
// norm-equivalence constants G^m, built from the two recursions
//   E^1_2 = 42
//   E^m_{m+1} = 2^m 42^m (E^{m-1}_m)^m
//   E^{k-1}_m = E^{k-1}_k (E^k_m + 1)
//   G^m = 1 + sum_{0<a<m} C(m,a) E^a_m,  G^0 = G^1 = 1
template <class F>
struct SobolevTableT {
    std::array<std::array<XRealT<F>, kMaxOrder + 1>, kMaxOrder + 1> e{};
    std::array<XRealT<F>, kMaxOrder + 1> g{};

    static const SobolevTableT& instance() {
        static const SobolevTableT t = build();
        return t;
    }

  private:
    static SobolevTableT build() {
        using X = XRealT<F>;
        SobolevTableT t;
        const X x2 = X::from_value(F(2));
        const X x42 = X::from_value(F(42));
        t.e[1][2] = x42;
        for (int m = 2; m < kMaxOrder; ++m)
            t.e[m][m + 1] = xipow(x2, m) * xipow(x42, m) * xipow(t.e[m - 1][m], m);
        for (int m = 3; m <= kMaxOrder; ++m)
            for (int k = m - 1; k >= 2; --k)
                t.e[k - 1][m] = t.e[k - 1][k] * (t.e[k][m] + X::one());
        t.g[0] = X::one();
        t.g[1] = X::one();
        for (int m = 2; m <= kMaxOrder; ++m) {
            X s = X::one();
            long long binom = 1;
            for (int a = 1; a < m; ++a) {
                binom = binom * (m - a + 1) / a;  // C(m, a)
                s += X::from_value(F(binom)) * t.e[a][m];
            }
            t.g[m] = s;
        }
        return t;
    }
};

template <class F>
XRealT<F> e_constant_t(int n, int m) {
    if (!(0 < n && n < m && m <= kMaxOrder))
        throw xreal_domain("e_constant: need 0 < n < m <= 7");
    return SobolevTableT<F>::instance().e[n][m];
}

template <class F>
XRealT<F> g_constant_t(int m) {
    if (m < 0 || m > kMaxOrder) throw xreal_domain("g_constant: need 0 <= m <= 7");
    return SobolevTableT<F>::instance().g[m];
}

// Upper bound for the squared H^n norm by interpolation:
//   (2 E^n_m + 1) * |f|_{L2}^{2(m-n)/m} * |f|_{H^m}^{2n/m}
template <class F>
XRealT<F> interpolation_bound_t(int n, int m, const XRealT<F>& l2_norm,
                                const XRealT<F>& hm_norm) {
    using X = XRealT<F>;
    if (!(0 < n && n < m && m <= kMaxOrder))
        throw xreal_domain("interpolation_bound: need 0 < n < m <= 7");
    if (l2_norm.sign() < 0 || hm_norm.sign() < 0)
        throw xreal_domain("interpolation_bound: norms must be nonnegative");
    X c = X::from_value(F(2)) * e_constant_t<F>(n, m) + X::one();
    X a = xpow(l2_norm, F(2 * (m - n)) / F(m));
    X b = xpow(hm_norm, F(2 * n) / F(m));
    return c * a * b;
}

// Extension-operator norms. The chain only needs *some* extension with a
// known norm; the analysis cites one without numbers, so these are shipped
// configuration defaults, recorded in every report that uses them.
//
//   default: one-sided Hestenes reflection x -> -x/j, j = 1..m+1, with
//            coefficients matching derivatives up to order m at the
//            boundary; lambda_m = 1 + 2*sum_j |a_j| sqrt(j) bounds the
//            H^m operator norm on the half-line model.
//   unit:    all ones (the idealized-extension baseline).
inline constexpr std::array<double, kMaxOrder + 1> kLambdaDefault = {
    3.0,
    18.31370849898476,
    197.04041160059745,
    2900.509494090181,
    53019.26860638836,
    1156535.8864263343,
    29332449.59756136,
    848365682.7149986,
};

template <class F>
XRealT<F> stein_lambda_t(int m, std::string_view profile) {
    if (m < 0 || m > kMaxOrder) throw xreal_domain("stein_lambda: need 0 <= m <= 7");
    if (profile == "default")
        return XRealT<F>::from_value(F(kLambdaDefault[size_t(m)]));
    if (profile == "unit") return XRealT<F>::one();
    throw xreal_domain("stein_lambda: unknown profile '" + std::string(profile) + "'");
}

inline XReal e_constant(int n, int m) { return e_constant_t<double>(n, m); }
inline XReal g_constant(int m) { return g_constant_t<double>(m); }
inline XReal interpolation_bound(int n, int m, const XReal& l2, const XReal& hm) {
    return interpolation_bound_t<double>(n, m, l2, hm);
}
inline XReal stein_lambda(int m, std::string_view profile = "default") {
    return stein_lambda_t<double>(m, profile);
}

}  // namespace obscost
