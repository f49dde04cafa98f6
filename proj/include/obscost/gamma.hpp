#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "obscost/sobolev.hpp"
#include "obscost/xreal.hpp"

namespace obscost {

// One inequality of the certificate. Both sides are positive, so each is kept
// as a natural log (at tower-scale K1 the values themselves sit one depth
// beyond the representable range; the logs always fit). gamma_power is the
// power of gamma on the left side (2 for the quadratic bound, else 1), and
// ln_cap the log of the gamma value that would saturate the inequality.
// log_margin = ln rhs - ln lhs > 0.
template <class F>
struct GammaBoundT {
    std::string name;
    int gamma_power = 1;
    XRealT<F> ln_cap;
    XRealT<F> ln_lhs, ln_rhs;
    XRealT<F> log_margin;

    // Plain values where they fit (their logs must be depth <= 1).
    std::optional<XRealT<F>> lhs_value() const { return detail_value(ln_lhs); }
    std::optional<XRealT<F>> rhs_value() const { return detail_value(ln_rhs); }
    std::optional<XRealT<F>> slack_value() const {
        auto l = lhs_value(), r = rhs_value();
        if (!l || !r) return std::nullopt;
        return *r - *l;
    }

  private:
    static std::optional<XRealT<F>> detail_value(const XRealT<F>& lg) {
        if (lg.depth() >= 2) return std::nullopt;
        return XRealT<F>::exp_of(lg, 1);
    }
};

// Output of the concluding inequality system at (L, K1): the derived
// quantities K2, R, alpha*, the root-perturbation radius r and gamma itself,
// all as natural logs. lr holds the product L*R (depth <= 2 even when K1 is
// a tower, in which case e.g. ln gamma is itself a tower and gamma has no
// direct representation).
template <class F>
struct GammaCertificateT {
    F L = 0;
    XRealT<F> k1, dl;
    XRealT<F> ln_k2, ln_r_disc, ln_alpha_star, ln_r, ln_gamma;
    XRealT<F> lr;
    std::vector<GammaBoundT<F>> bounds;
    std::vector<GammaBoundT<F>> range_checks;
    std::string provenance = "builtin-sobolev-table";

    std::optional<XRealT<F>> k2() const { return val(ln_k2); }
    std::optional<XRealT<F>> r_disc() const { return val(ln_r_disc); }
    std::optional<XRealT<F>> alpha_star() const { return val(ln_alpha_star); }
    std::optional<XRealT<F>> r() const { return val(ln_r); }
    std::optional<XRealT<F>> gamma() const { return val(ln_gamma); }

  private:
    static std::optional<XRealT<F>> val(const XRealT<F>& lg) {
        if (lg.depth() >= 2) return std::nullopt;
        return XRealT<F>::exp_of(lg, 1);
    }
};

using GammaBound = GammaBoundT<double>;
using GammaCertificate = GammaCertificateT<double>;

namespace gamma_detail {

template <class F>
struct Derived {
    XRealT<F> ln_k2, ln_r, lr, ln_alpha_star, ln_s, ln_w, ln_a;
    // ln_s: ln(R + sqrt(L) e^{LR});   ln_w: ln(1 + sqrt(L^3/3) e^{LR});
    // ln_a: ln of the quadratic bound's coefficient 8R Q^2 + 171/196
    XRealT<F> ln_rad_cand1, ln_rad_cand2, ln_rad;  // ln r and its two caps
};

template <class F>
Derived<F> derive(F L, const XRealT<F>& k1, const XRealT<F>& dl,
                  std::optional<XRealT<F>> fixed_ln_rad = std::nullopt) {
    using X = XRealT<F>;
    auto xv = [](F v) { return X::from_value(v); };
    auto lnc = [&](F v) { return xv(std::log(v)); };
    const X ln1 = X::zero();

    Derived<F> d;
    const X e13 = e_constant_t<F>(1, 3);
    // K2 = 1 + (1 + sqrt(E13)) K1
    d.ln_k2 = xlogaddexp(ln1, xln(X::one() + xsqrt(e13)) + xln(k1));
    // R = (1 + 3 K2 / 2)^{1/3}
    d.ln_r = xlogaddexp(ln1, lnc(F(1.5)) + d.ln_k2) / xv(F(3));
    d.lr = xv(L) * xexp(d.ln_r);
    // alpha* = (81 e^{6LR} / (169 R^5) + 54/245)^{-1/2}
    X t = lnc(F(81)) - lnc(F(169)) - xv(F(5)) * d.ln_r + xv(F(6)) * d.lr;
    d.ln_alpha_star = xlogaddexp(t, lnc(F(54) / F(245))) / xv(F(-2));
    // S = R + sqrt(L) e^{LR}
    d.ln_s = xlogaddexp(d.ln_r, lnc(L) / xv(F(2)) + d.lr);
    // W = 1 + sqrt(L^3/3) e^{LR}
    d.ln_w = xlogaddexp(ln1, lnc(L * L * L / F(3)) / xv(F(2)) + d.lr);
    // A = 8 R Q^2 + 171/196 with Q = 27/(52 R^2) + 9 sqrt(L) e^{3LR} / (52 R^3)
    X ln_q = xlogaddexp(lnc(F(27) / F(52)) - xv(F(2)) * d.ln_r,
                        lnc(F(9) / F(52)) + lnc(L) / xv(F(2)) +
                            xv(F(3)) * d.lr - xv(F(3)) * d.ln_r);
    d.ln_a = xlogaddexp(lnc(F(8)) + d.ln_r + xv(F(2)) * ln_q,
                        lnc(F(171) / F(196)));
    // r = 0.99 min(pi/(8L), dL / (56 L^2 (R+1)))
    d.ln_rad_cand1 = lnc(F(std::numbers::pi) / (F(8) * L));
    d.ln_rad_cand2 = xln(dl) - lnc(F(56) * L * L) - xlogaddexp(d.ln_r, ln1);
    d.ln_rad = fixed_ln_rad ? *fixed_ln_rad
                            : lnc(F(0.99)) + xmin(d.ln_rad_cand1, d.ln_rad_cand2);
    return d;
}

template <class F>
struct BoundCap {
    const char* name;
    int gamma_power;
    XRealT<F> ln_cap;
    XRealT<F> ln_lhs_offset;  // ln lhs = gamma_power * ln gamma + offset
    XRealT<F> ln_rhs;
};

// The six inequalities, each solved for gamma. Order is fixed; it is part of
// the certificate format.
template <class F>
std::vector<BoundCap<F>> bound_caps(F L, const Derived<F>& d) {
    using X = XRealT<F>;
    auto xv = [](F v) { return X::from_value(v); };
    auto lnc = [&](F v) { return xv(std::log(v)); };
    const F pi = F(std::numbers::pi);
    std::vector<BoundCap<F>> c;
    // (8R Q^2 + 171/196) gamma^2 <= 2 pi - 1
    c.push_back({"a_quadratic_normalization", 2,
                 (lnc(F(2) * pi - F(1)) - d.ln_a) / xv(F(2)), d.ln_a,
                 lnc(F(2) * pi - F(1))});
    // gamma (R + sqrt(L) e^{LR}) <= alpha*/6
    c.push_back({"b_alpha_sixth", 1, d.ln_alpha_star - lnc(F(6)) - d.ln_s,
                 d.ln_s, d.ln_alpha_star - lnc(F(6))});
    // gamma (1 + sqrt(L^3/3) e^{LR}) < (alpha* L / 3) e^{-LR}
    c.push_back({"c_alpha_decay", 1,
                 d.ln_alpha_star + lnc(L / F(3)) - d.lr - d.ln_w, d.ln_w,
                 d.ln_alpha_star + lnc(L / F(3)) - d.lr});
    // gamma (R + sqrt(L) e^{LR}) <= alpha* L r / 288
    c.push_back({"d_alpha_radius", 1,
                 d.ln_alpha_star + lnc(L) + d.ln_rad - lnc(F(288)) - d.ln_s,
                 d.ln_s, d.ln_alpha_star + lnc(L) + d.ln_rad - lnc(F(288))});
    // 288 gamma (96 e^{LR} S / (alpha* L r) + W / (alpha* L)) < 1
    X ln_e = xlogaddexp(lnc(F(96)) + d.lr + d.ln_s - d.ln_alpha_star -
                            lnc(L) - d.ln_rad,
                        d.ln_w - d.ln_alpha_star - lnc(L));
    c.push_back({"e_combined_reciprocal", 1, -(lnc(F(288)) + ln_e),
                 lnc(F(288)) + ln_e, X::zero()});
    // 3 gamma L <= ln(4/3)
    c.push_back({"f_exponential_window", 1,
                 xv(std::log(std::log(F(4) / F(3)))) - lnc(F(3) * L),
                 lnc(F(3) * L), xv(std::log(std::log(F(4) / F(3))))});
    return c;
}

// True when a and b agree to within the resolution their representation can
// express: mantissas are compared at the deepest level where both are plain
// numbers. Needed because at tower scale a margin like ln(1/0.99) sits far
// below one ulp of the operands, so a direct subtraction yields rounding
// noise of arbitrary sign.
template <class F>
bool indistinguishable(const XRealT<F>& a, const XRealT<F>& b, F tol) {
    if (a.depth() == 0 && b.depth() == 0) {
        F scale = std::max(
            {F(1), F(std::fabs(a.mantissa())), F(std::fabs(b.mantissa()))});
        return std::fabs(a.mantissa() - b.mantissa()) <= tol * scale;
    }
    if (a.sign() != b.sign() || a.sign() == 0) return false;
    return indistinguishable(a.logabs(), b.logabs(), tol);
}

}  // namespace gamma_detail

// Solves the concluding inequality system for the largest admissible gamma.
// K2, R, alpha* and every exponential e^{LR}, e^{3LR}, e^{6LR} live in the
// log domain; gamma itself is reported as ln gamma (plus a plain value when
// it fits). Margins are evaluated through the solved-for-gamma form
//   ln rhs - ln lhs = gamma_power * ((ln_cap - ln_min) - ln 0.99),
// with (ln_cap - ln_min) taken first: the two logs cancel exactly at the
// minimum, so the 0.99 safety factor survives even when the caps are towers
// whose ulp dwarfs it.
template <class F>
GammaCertificateT<F> compute_gamma_t(F L, const XRealT<F>& k1,
                                     const XRealT<F>& dl) {
    using X = XRealT<F>;
    if (!(L >= F(4)))
        throw xreal_domain("compute_gamma: standing assumption L >= 4");
    if (!(dl > X::zero()))
        throw xreal_domain("compute_gamma: critical length (dL <= 0)");
    if (k1 < X::one()) throw xreal_domain("compute_gamma: need K1 >= 1");

    auto d = gamma_detail::derive<F>(L, k1, dl);
    auto caps = gamma_detail::bound_caps<F>(L, d);

    GammaCertificateT<F> cert;
    cert.L = L;
    cert.k1 = k1;
    cert.dl = dl;
    cert.ln_k2 = d.ln_k2;
    cert.ln_r_disc = d.ln_r;
    cert.ln_alpha_star = d.ln_alpha_star;
    cert.ln_r = d.ln_rad;
    cert.lr = d.lr;

    X ln_min = caps.front().ln_cap;
    for (const auto& c : caps) ln_min = xmin(ln_min, c.ln_cap);
    const X ln_safety = X::from_value(std::log(F(0.99)));
    cert.ln_gamma = ln_safety + ln_min;

    for (const auto& c : caps) {
        GammaBoundT<F> b;
        b.name = c.name;
        b.gamma_power = c.gamma_power;
        b.ln_cap = c.ln_cap;
        b.ln_lhs = X::from_value(F(c.gamma_power)) * cert.ln_gamma + c.ln_lhs_offset;
        b.ln_rhs = c.ln_rhs;
        b.log_margin =
            X::from_value(F(c.gamma_power)) * ((c.ln_cap - ln_min) - ln_safety);
        cert.bounds.push_back(std::move(b));
    }

    // r-range checks, same safety-factor-first evaluation
    const X r_min = xmin(d.ln_rad_cand1, d.ln_rad_cand2);
    {
        GammaBoundT<F> rb;
        rb.name = "r_below_pi_over_8L";
        rb.ln_cap = d.ln_rad_cand1;
        rb.ln_lhs = d.ln_rad;
        rb.ln_rhs = d.ln_rad_cand1;
        rb.log_margin = (d.ln_rad_cand1 - r_min) - ln_safety;
        cert.range_checks.push_back(std::move(rb));
    }
    {
        GammaBoundT<F> rb;
        rb.name = "r_below_spectral_gap";  // 56 L^2 (R+1) r < dL
        rb.ln_cap = d.ln_rad_cand2;
        // ln(56 L^2 (R+1) r) = (ln r - cand2) + ln dL; this grouping keeps the
        // huge ln(R+1) factor cancelled instead of subtracted back in
        rb.ln_lhs = (d.ln_rad - d.ln_rad_cand2) + xln(dl);
        rb.ln_rhs = xln(dl);
        rb.log_margin = (d.ln_rad_cand2 - r_min) - ln_safety;
        cert.range_checks.push_back(std::move(rb));
    }
    return cert;
}

inline GammaCertificate compute_gamma(double L, const XReal& k1, const XReal& dl) {
    return compute_gamma_t<double>(L, k1, dl);
}

struct VerifyCheck {
    std::string name;
    bool ok = false;
    bool at_resolution = false;  // passed only up to representational resolution
    double log_margin_estimate = 0;  // saturating double of the margin
};

struct VerifyReport {
    bool ok = true;
    std::vector<VerifyCheck> checks;
};

// Re-derives every inequality from scratch at extended working precision and
// checks the certificate's own gamma and r against them (so a tampered
// certificate fails). A margin that is negative only below the resolution of
// the operands counts as holding (flagged at_resolution); at tower scale the
// sign of such a margin is rounding noise, not information. Failures are
// reported, not thrown.
inline VerifyReport verify_certificate(const GammaCertificate& cert) {
    using XL = XRealL;
    constexpr long double kResolution = 1e-12L;  // certificate was built in double
    auto up = [](const XReal& x) {
        return XL::from_parts(x.sign(), x.depth(), (long double)x.mantissa());
    };
    VerifyReport rep;
    auto push = [&rep](const std::string& name, const XL& have, const XL& cap,
                       int power) {
        VerifyCheck c;
        c.name = name;
        XL margin = cap - have;
        c.ok = margin > XL::zero();
        if (!c.ok && gamma_detail::indistinguishable(have, cap, kResolution)) {
            c.ok = true;
            c.at_resolution = true;
        }
        c.log_margin_estimate = power * double(margin.value_as_double());
        rep.ok = rep.ok && c.ok;
        rep.checks.push_back(std::move(c));
    };

    const long double L = (long double)cert.L;
    const XL ln_rad = up(cert.ln_r);
    const XL ln_gamma = up(cert.ln_gamma);
    auto d = gamma_detail::derive<long double>(L, up(cert.k1), up(cert.dl),
                                               ln_rad);
    for (const auto& c : gamma_detail::bound_caps<long double>(L, d))
        push(c.name, ln_gamma, c.ln_cap, c.gamma_power);
    push("r_below_pi_over_8L", ln_rad, d.ln_rad_cand1, 1);
    push("r_below_spectral_gap", ln_rad, d.ln_rad_cand2, 1);
    return rep;
}

}  // namespace obscost
