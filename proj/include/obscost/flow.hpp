#pragma once

#include <array>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "obscost/sobolev.hpp"
#include "obscost/xreal.hpp"

namespace obscost {

// Flow regularity constants: F0[k] bounds sup_t |S(t)f|_{H^k}, F1[k] the
// L^2-in-time boundary trace analogue, Fs[k] the H^k -> H^{k+1} smoothing
// constant, all for 0 <= t <= T <= L.
template <class F>
struct FlowConstantSetT {
    F L;
    std::string lambda_profile;
    std::array<XRealT<F>, 7> f0{};
    std::array<XRealT<F>, 7> f1{};
    std::array<XRealT<F>, 7> fs{};  // valid for k = 1..6
    XRealT<F> k0;                   // 2 Fs^3
};

using FlowConstantSet = FlowConstantSetT<double>;

template <class F>
FlowConstantSetT<F> f_constants_t(F L, std::string_view lambda_profile = "default") {
    using X = XRealT<F>;
    if (!(L >= F(4))) throw xreal_domain("f_constants: standing assumption L >= 4");
    FlowConstantSetT<F> r;
    r.L = L;
    r.lambda_profile = std::string(lambda_profile);

    auto e = [](int n, int m) { return e_constant_t<F>(n, m); };
    auto g = [](int m) { return g_constant_t<F>(m); };
    auto lam = [&](int m) { return stein_lambda_t<F>(m, lambda_profile); };
    const X one = X::one();
    const X e13 = e(1, 3), e46 = e(4, 6), e26 = e(2, 6);
    const X sqrt_e13 = xsqrt(e13);
    const X sqL = xsqrt(X::from_value(L));
    const X w = xsqrt(X::from_value(2 * L / F(3)));  // sqrt(2L/3)
    auto xv = [](double v) { return X::from_value(F(v)); };

    r.f0[0] = one;
    r.f1[0] = xsqrt(X::from_value(5 * L / F(3)));
    r.f0[3] = xv(2) * (one + sqrt_e13) + xv(2) * xpow(xv(4) * e13, F(0.75)) + one;
    r.f1[3] = xv(2) * w * (one + sqrt_e13) + xv(2) * w * xpow(xv(4) * e13, F(0.75)) + sqL;
    r.f0[6] = xv(8) * xsqrt(e46) + xv(4) * xsqrt(e26) + xv(128) * xpow(e46, F(1.5)) +
              xv(8) * xpow(e26, F(0.75)) + one;
    r.f1[6] = xv(8) * w * xsqrt(e46) + xv(4) * w * xsqrt(e26) +
              xv(128) * w * xpow(e46, F(1.5)) + xv(8) * w * xpow(e26, F(0.75)) + sqL;

    // the remaining orders interpolate between the closed-form ones; the f1
    // family pairs with the extension norms one order up
    auto interp = [&](const X& glue, const X& lo, const X& hi, F lo_w) {
        return glue * xpow(lo, lo_w) * xpow(hi, F(1) - lo_w);
    };
    const F third = F(1) / F(3), two_thirds = F(2) / F(3);
    const X a0 = lam(0) * r.f0[0] * g(0), a3 = lam(3) * r.f0[3] * g(3),
            a6 = lam(6) * r.f0[6] * g(6);
    const X b1 = lam(1) * r.f1[0] * g(1), b4 = lam(4) * r.f1[3] * g(4),
            b7 = lam(7) * r.f1[6] * g(7);
    r.f0[1] = interp(g(1), a0, a3, two_thirds);
    r.f1[1] = interp(g(1), b1, b4, two_thirds);
    r.f0[2] = interp(g(2), a0, a3, third);
    r.f1[2] = interp(g(2), b1, b4, third);
    r.f0[4] = interp(g(4), a3, a6, two_thirds);
    r.f1[4] = interp(g(4), b4, b7, two_thirds);
    r.f0[5] = interp(g(5), a3, a6, third);
    r.f1[5] = interp(g(5), b4, b7, third);

    for (int k = 1; k <= 6; ++k) {
        X prod = one;
        for (int i = 0; i < k; ++i) prod = prod * r.f1[size_t(i)] * r.f0[size_t(i + 1)];
        X kfac = (k % 2 == 0) ? xipow(X::from_value(F(k)), k / 2)
                              : xpow(X::from_value(F(k)), F(k) / F(2));
        r.fs[size_t(k)] = xipow(X::from_value(F(2)), k) * kfac * prod;
    }
    r.k0 = X::from_value(F(2)) * r.fs[3];
    return r;
}

inline FlowConstantSet f_constants(double L, std::string_view lambda_profile = "default") {
    return f_constants_t<double>(L, lambda_profile);
}

// Cover of the H^3 ball of radius K by low-frequency boxes: M_c amplitude
// steps, N_c active modes, B = (2M_c+1)^(N_c-1) boxes.
struct CoveringParams {
    double L = 0;
    XReal K;
    double e13_used = 0;
    bool stubbed = false;
    bool ints_exact = false;  // mc/nc are the exact ceilings
    std::uint64_t mc = 0, nc = 0;
    XReal mc_x, nc_x;  // always set; upper bounds when !ints_exact
    bool b_exact = false;  // b holds (2mc+1)^(nc-1) exactly
    std::uint64_t b = 0;
    XReal log_b;  // natural log of B, always
    XReal k1;     // sqrt(B) * K
};

namespace detail {

// exact ceiling of sqrt(num/den): smallest integer M with den*M^2 >= num.
// Dyadic inputs are exact at 100 decimal digits, so the comparisons are
// exact and no directed-rounding slack is needed.
inline std::uint64_t exact_sqrt_ceil(const boost::multiprecision::cpp_bin_float_100& num,
                                     const boost::multiprecision::cpp_bin_float_100& den) {
    namespace mp = boost::multiprecision;
    mp::cpp_bin_float_100 arg = num / den;
    auto m = static_cast<std::uint64_t>(sqrt(arg));
    while (mp::cpp_bin_float_100(m) * m * den < num) ++m;
    while (m > 0 && mp::cpp_bin_float_100(m - 1) * (m - 1) * den >= num) --m;
    return m;
}

}  // namespace detail

inline CoveringParams covering(double L, const XReal& K,
                               std::optional<double> e13_stub = std::nullopt) {
    namespace mp = boost::multiprecision;
    using big = mp::cpp_bin_float_100;
    if (!(L >= 4)) throw xreal_domain("covering: standing assumption L >= 4");
    if (K < XReal::one()) throw xreal_domain("covering: need K >= 1");

    CoveringParams r;
    r.L = L;
    r.K = K;
    r.stubbed = e13_stub.has_value();
    double e13 = r.stubbed ? *e13_stub : e_constant(1, 3).value_as_double();
    if (!(e13 > 0)) throw xreal_domain("covering: E13 stub must be positive");
    r.e13_used = e13;

    // M_c = ceil(K L sqrt(E/6)), N_c = ceil(2 K L sqrt(E)); exact integer
    // path whenever N_c fits comfortably in 64 bits
    bool small_k = K.depth() == 0 && K.mantissa() <= 1e17;
    if (small_k) {
        big kl = big(K.mantissa()) * big(L);
        big num_n = 4 * kl * kl * big(e13);
        if (num_n < big("8.0e37")) {  // N_c^2 bound => N_c < 9e18
            big num_m = kl * kl * big(e13);
            r.mc = detail::exact_sqrt_ceil(num_m, big(6));
            r.nc = detail::exact_sqrt_ceil(num_n, big(1));
            r.ints_exact = true;
            r.mc_x = XReal::from_value(double(r.mc));
            r.nc_x = XReal::from_value(double(r.nc));
        }
    }
    if (!r.ints_exact) {
        // upper-bound path: bias the double evaluation up by a few ulps so
        // the cover can only grow
        const XReal bias = XReal::from_value(1.0 + 8e-16);
        XReal arg_m = K * XReal::from_value(L) *
                      xsqrt(XReal::from_value(e13) / XReal::from_value(6.0)) * bias;
        XReal arg_n =
            XReal::from_value(2.0) * K * XReal::from_value(L) *
            xsqrt(XReal::from_value(e13)) * bias;
        r.mc_x = arg_m + XReal::one();
        r.nc_x = arg_n + XReal::one();
    }

    XReal two_mc_p1 = XReal::from_value(2.0) * r.mc_x + XReal::one();
    r.log_b = (r.nc_x - XReal::one()) * xln(two_mc_p1);
    if (r.ints_exact) {
        std::uint64_t base = 2 * r.mc + 1, acc = 1;
        bool ok = r.nc >= 1;
        for (std::uint64_t i = 0; ok && i + 1 < r.nc; ++i)
            ok = !__builtin_mul_overflow(acc, base, &acc);
        if (ok) {
            r.b_exact = true;
            r.b = acc;
        }
    }
    r.k1 = xexp(r.log_b / XReal::from_value(2.0)) * K;
    return r;
}

// Derived scales for radius K >= K0: the unit time t1, the threshold K0,
// the evolution-operator bound Ktilde and the covered radius K1.
struct ScaleSet {
    XReal t1, k0, ktilde, k1;
};

template <class F>
XRealT<F> ktilde_formula_t(const FlowConstantSetT<F>& fc, const XRealT<F>& K) {
    using X = XRealT<F>;
    const X e46 = e_constant_t<F>(4, 6), e23 = e_constant_t<F>(2, 3);
    X lead = K * K * fc.fs[6] * (X::one() + X::from_value(F(2)) * xsqrt(e46)) /
             (X::from_value(F(4)) * fc.fs[3] * fc.fs[3]);
    X tail = K * xsqrt(e23) / X::from_value(F(2));
    return lead + tail;
}

inline ScaleSet scales(const FlowConstantSet& fc, const XReal& K) {
    if (K < fc.k0) throw xreal_domain("scales: need K >= K0 = 2 Fs^3");
    ScaleSet s;
    s.k0 = fc.k0;
    s.t1 = xpow(fc.k0 / K, 2.0 / 3.0);
    s.ktilde = ktilde_formula_t<double>(fc, K);
    s.k1 = covering(fc.L, K).k1;
    return s;
}

}  // namespace obscost
