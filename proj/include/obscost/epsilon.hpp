#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "obscost/critical.hpp"
#include "obscost/flow.hpp"
#include "obscost/gamma.hpp"
#include "obscost/xreal.hpp"

namespace obscost {

struct cancelled_error : xreal_error {
    using xreal_error::xreal_error;
};

// Next flux budget in the orthonormalization procedure. n = 0 and n = 1
// dispatch to the special-coefficient first and second steps; n >= 2 is the
// general recursion with prefactor (2/gamma)^2 (n+1). The admissible-range
// cap on delta (delta < min(1/2, t1)) is enforced when the caller supplies
// t1; bare calls only require positivity, so the closed form can be probed
// directly at any point.
inline XReal c_next(int n, const XReal& c_n, const XReal& delta,
                    const XReal& gamma, const XReal& ktilde,
                    const std::optional<XReal>& t1 = std::nullopt) {
    auto xv = [](double v) { return XReal::from_value(v); };
    if (n < 0) throw xreal_domain("c_next: step index must be >= 0");
    if (!(delta > XReal::zero())) throw xreal_domain("c_next: delta out of range");
    if (t1) {
        XReal cap = xmin(xv(0.5), *t1);
        if (!(delta < cap)) throw xreal_domain("c_next: delta out of range");
    }
    if (!(gamma > XReal::zero()) || !(ktilde > XReal::zero()))
        throw xreal_domain("c_next: gamma and ktilde must be positive");
    if (c_n < XReal::zero()) throw xreal_domain("c_next: budget must be nonnegative");

    XReal d2 = delta * delta;
    XReal k2 = ktilde * ktilde;
    XReal g2 = gamma * gamma;
    if (n == 0) return (d2 * k2 + c_n / d2) * xv(24) / g2;
    XReal pref = xv(4) / g2;
    if (n == 1)
        return pref * (xv(24) * d2 * k2 + xv(192) * c_n / d2 + xv(16) * k2 * c_n);
    return pref * xv(double(n + 1)) *
           (xv(6) * k2 * d2 + xv(12) * c_n / d2 + xv(4) * k2 * c_n);
}

// One recorded step of the backward budget recursion. Logs, not values: at
// tower-scale inputs the budgets themselves sit beyond depth 2.
struct TraceStep {
    std::uint64_t n = 0;
    XReal ln_delta_next;  // ln delta_{n+1} = (ln Dtilde_n - 2 ln Ktilde)/4
    XReal ln_dtilde;      // ln Dtilde_n
};

struct RecursionTrace {
    std::vector<TraceStep> steps;
    bool truncated = false;
};

namespace epsilon_detail {

constexpr std::uint64_t kTraceHalf = 48;

// ln Dtilde_{m-1} = 2 (ln Dtilde_m - ln coef(m)), iterated from m = b down to
// 1. ln_coef(m) is the log of the forward half-power coefficient
// (Dtilde_m = coef(m) sqrt(Dtilde_{m-1})). Records (n, ln delta_{n+1},
// ln Dtilde_n) into the trace, keeping the first and last kTraceHalf entries
// when b is large.
template <class CoefFn>
XReal backward_ln_recursion(const XReal& ln_dtilde_b, std::uint64_t b,
                            CoefFn&& ln_coef, const XReal& ln_ktilde,
                            RecursionTrace* trace,
                            const std::atomic<bool>* cancel = nullptr) {
    if (b < 1) throw xreal_domain("epsilon0: backward recursion needs B >= 1");
    const XReal two = XReal::from_value(2.0);
    const XReal quarter = XReal::from_value(0.25);
    auto record = [&](std::uint64_t n, const XReal& ln_d) {
        if (!trace) return;
        if (n > kTraceHalf - 1 && n < b && b - n > kTraceHalf - 1 &&
            b >= 2 * kTraceHalf) {
            trace->truncated = true;
            return;
        }
        trace->steps.push_back({n, (ln_d - two * ln_ktilde) * quarter, ln_d});
    };
    XReal l = ln_dtilde_b;
    record(b, l);
    for (std::uint64_t m = b; m >= 1; --m) {
        if (cancel && (m & 0xFFF) == 0 && cancel->load(std::memory_order_relaxed))
            throw cancelled_error("epsilon0: cancelled");
        l = two * (l - ln_coef(m));
        record(m - 1, l);
    }
    return l;
}

}  // namespace epsilon_detail

struct EpsilonOptions {
    std::uint64_t exact_threshold = 100000;
    std::optional<std::uint64_t> b_override;  // test-only: replaces B(L, K)
    const std::atomic<bool>* cancel = nullptr;
};

// Everything epsilon0 pins down. The headline is ln(-ln eps0), the only
// humanly readable scale: at the real parameter chain ln eps0 is itself a
// tower (depth 3), so the value and even its log are reported opportunistically
// while ln(-ln eps0) always fits at depth <= 2.
struct EpsilonReport {
    double L = 0;
    XReal k;         // H^3 radius K
    XReal ln_gamma;  // input, log domain
    XReal ktilde, t1;
    XReal b;  // B as XReal (exact integer when small, exp(ln B) otherwise)
    std::optional<std::uint64_t> b_int;
    XReal ln_b;
    XReal ln_dtilde_b;      // chosen ln Dtilde_B
    XReal dn_slack_log;     // log margin of the stopping inequality
    XReal log_neg_log_eps0; // ln(-ln eps0), depth <= 2 always
    XReal bracket_lo, bracket_hi;  // bracket on ln(-ln eps0); equal in exact mode
    XReal t0;                      // (3B - 1) t1
    std::string mode;              // "exact" | "asymptotic"

    std::optional<XReal> log_eps0() const { return neg_exp(log_neg_log_eps0); }
    // bracket mapped back to ln eps0 (lower/upper in the usual order); the
    // high end of the ln(-ln) bracket is the low end of ln eps0
    std::optional<XReal> ln_eps0_lower() const { return neg_exp(bracket_hi); }
    std::optional<XReal> ln_eps0_upper() const { return neg_exp(bracket_lo); }

  private:
    static std::optional<XReal> neg_exp(const XReal& lg) {
        if (lg.depth() >= 2) return std::nullopt;
        return -XReal::exp_of(lg, 1);
    }
};

struct EpsilonResult {
    EpsilonReport report;
    RecursionTrace trace;
};

// Backward construction of the budget schedule: picks the largest stopping
// value Dtilde_B compatible with the (DN) inequality (with a 0.99 safety
// factor), then either iterates the half-power recursion exactly in log
// domain (B small enough) or evaluates the closed-form product logarithm,
// bracketing the truncated series sum_{j} 2^{-j} ln(1 - j/B) rigorously.
// The reported point value uses the truncated series, i.e. the certified
// small side of eps0.
inline EpsilonResult epsilon0(double L, const XReal& K, const XReal& ln_gamma,
                              const FlowConstantSet& fc,
                              const CoveringParams& cov,
                              const EpsilonOptions& opt = {}) {
    auto xv = [](double v) { return XReal::from_value(v); };
    const XReal zero = XReal::zero();
    ScaleSet sc = scales(fc, K);  // throws when K < K0

    EpsilonResult res;
    EpsilonReport& rep = res.report;
    rep.L = L;
    rep.k = K;
    rep.ln_gamma = ln_gamma;
    rep.ktilde = sc.ktilde;
    rep.t1 = sc.t1;

    // B: override (test-only) > exact covering integer > log form
    if (opt.b_override) {
        if (*opt.b_override < 1) throw xreal_domain("epsilon0: B override must be >= 1");
        rep.b_int = *opt.b_override;
        rep.b = xv(double(*opt.b_override));
        rep.ln_b = xln(rep.b);
    } else if (cov.b_exact) {
        rep.b_int = cov.b;
        rep.b = xv(double(cov.b));
        rep.ln_b = cov.log_b;
    } else {
        rep.b = xexp(cov.log_b);
        rep.ln_b = cov.log_b;
    }

    const XReal ln_kt = xln(sc.ktilde);
    const XReal ln_t1 = xln(sc.t1);
    const XReal ln_bp1 = xlogaddexp(rep.ln_b, zero);

    // Dtilde_B = 0.99^2 (4/9) t1 gamma^2 / (B (B+1)); grouped so the gamma
    // part stays a separate exact term (the stopping margin cancels it)
    const double kSafety = 0.99;
    XReal c_db = xv(std::log(kSafety * kSafety * 4.0 / 9.0)) + ln_t1 - rep.ln_b - ln_bp1;
    rep.ln_dtilde_b = xv(2) * ln_gamma + c_db;

    // (3/2) sqrt((B+1) Dtilde_B / t1) = 0.99 gamma / sqrt(B) by construction,
    // so the (DN) margin is exactly the safety factor
    rep.dn_slack_log = xv(-(std::log(1.5) + 0.5 * std::log(kSafety * kSafety * 4.0 / 9.0)));

    // schedule feasibility: delta_{B+1} = (Dtilde_B / Ktilde^2)^{1/4} must sit
    // below min(1/2, t1); every earlier delta is smaller
    XReal ln_delta_top = (rep.ln_dtilde_b - xv(2) * ln_kt) / xv(4);
    if (!(ln_delta_top < xmin(xv(std::log(0.5)), ln_t1)))
        throw xreal_domain("epsilon0: delta schedule infeasible (K too close to K0 for this gamma)");

    rep.t0 = (xv(3) * rep.b - XReal::one()) * sc.t1;

    auto ln_coef = [&](std::uint64_t m) {
        double base = m >= 3 ? 96.0 * double(m) : (m == 2 ? 1536.0 : 48.0);
        return xv(std::log(base)) + ln_kt - xv(2) * ln_gamma;
    };

    const bool exact = rep.b_int &&
                       (*rep.b_int <= opt.exact_threshold || *rep.b_int < 3);
    if (exact) {
        rep.mode = "exact";
        XReal l0 = epsilon_detail::backward_ln_recursion(
            rep.ln_dtilde_b, *rep.b_int, ln_coef, ln_kt, &res.trace, opt.cancel);
        if (!(l0 < zero))
            throw xreal_domain("epsilon0: parameters leave ln eps0 nonnegative");
        rep.log_neg_log_eps0 = l0.logabs();
        rep.bracket_lo = rep.log_neg_log_eps0;
        rep.bracket_hi = rep.log_neg_log_eps0;
        return res;
    }

    rep.mode = "asymptotic";
    res.trace.truncated = true;
    if (rep.b_int && *rep.b_int < 3)
        throw xreal_domain("epsilon0: closed form needs B >= 3");

    // truncated series sigma = sum_{j>=1} 2^{-j} ln(1 - j/B); dropped tail is
    // bounded by 2^{-J} ln(B/3) (each omitted log factor is at most ln(B/3))
    constexpr int kSigmaTerms = 64;
    std::uint64_t jmax = kSigmaTerms;
    bool complete = false;
    if (rep.b_int && *rep.b_int - 3 <= kSigmaTerms) {
        jmax = *rep.b_int - 3;
        complete = true;
    }
    const double b_d = rep.b.value_as_double();  // +inf for tower B: terms vanish
    double sigma = 0;
    for (std::uint64_t j = 1; j <= jmax; ++j) {
        double x = std::isinf(b_d) ? 0.0 : double(j) / b_d;
        sigma += std::ldexp(std::log1p(-x), -int(j));
    }
    XReal tail = complete ? zero
                          : xv(std::ldexp(1.0, -kSigmaTerms)) *
                                (rep.ln_b - xv(std::log(3.0)));

    const XReal lnq = xv(std::log(96.0)) + ln_kt - xv(2) * ln_gamma;
    XReal u_hi = (xv(2) * lnq + xv(2) * rep.ln_b + xv(sigma)) - rep.ln_dtilde_b;
    XReal u_lo = u_hi - tail;
    if (!(u_lo > zero))
        throw xreal_domain("epsilon0: closed form outside the contraction regime");

    // V collects the fixed small-index corrections; the gamma/Ktilde powers
    // are combined symbolically first so no tower cancellation occurs:
    // V = ln(96^8/(1536^4 48^2)) + 2 ln Ktilde - 4 ln gamma + 8 ln B
    const double v0 = 8 * std::log(96.0) - 4 * std::log(1536.0) - 2 * std::log(48.0);
    XReal v = xv(v0) + xv(2) * ln_kt - xv(4) * ln_gamma + xv(8) * rep.ln_b;

    XReal a2b = rep.b * xv(std::numbers::ln2);  // ln 2^B
    auto combine = [&](const XReal& u) {
        XReal t = a2b + xln(u);  // ln(2^B U)
        if (v.is_zero()) return t;
        XReal lv = v.logabs();
        if (v > zero) {
            if (!(t > lv))
                throw xreal_domain("epsilon0: correction dominates the closed form");
            return xlogsubexp(t, lv);
        }
        return xlogaddexp(t, lv);
    };
    rep.bracket_lo = combine(u_lo);
    rep.bracket_hi = combine(u_hi);
    rep.log_neg_log_eps0 = rep.bracket_hi;  // truncated-series point value
    return res;
}

// Full effective chain for the headline constant c(L): critical-length gap,
// flow constants at K = K0, covering, gamma at K1-bar, then epsilon0.
struct TheoremReport {
    double L = 0;
    CriticalReport critical;
    FlowConstantSet flow;
    CoveringParams cov;
    GammaCertificate cert;
    EpsilonReport eps;
    RecursionTrace trace;
};

inline TheoremReport theorem_constant(double L, const EpsilonOptions& opt = {},
                                      double critical_tolerance = 1e-9) {
    if (!(L >= 4.0))
        throw xreal_domain("theorem_constant: standing assumption L >= 4");
    TheoremReport r;
    r.L = L;
    r.critical = classify(L, critical_tolerance);
    if (r.critical.is_critical)
        throw xreal_domain("theorem_constant: critical length");
    r.flow = f_constants(L);
    r.cov = covering(L, r.flow.k0);
    r.cert = compute_gamma(L, r.cov.k1, r.critical.d);
    auto er = epsilon0(L, r.flow.k0, r.cert.ln_gamma, r.flow, r.cov, opt);
    r.eps = std::move(er.report);
    r.trace = std::move(er.trace);
    return r;
}

// Small-length observability constant: c_A = (3T pi^2 - T L^2 - L^3)/(3T pi^2),
// which equals the margin of the validity condition L^3/(3T pi^2) +
// L^2/(3 pi^2) < 1. The reciprocal is the displayed cost factor.
struct SmallLengthReport {
    double L = 0, T = 0;
    double c_a = 0;
    double cost_factor = 0;
};

inline SmallLengthReport small_length_constant(double L, double T) {
    if (!(L > 0) || !(T > 0))
        throw xreal_domain("small_length_constant: need L > 0, T > 0");
    const double pi2_3 = 3.0 * std::numbers::pi * std::numbers::pi;
    double c_a = 1.0 - L * L * L / (T * pi2_3) - L * L / pi2_3;
    if (!(c_a > 0)) {
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "small_length_constant: validity margin %.6g <= 0", c_a);
        throw xreal_domain(buf);
    }
    return {L, T, c_a, 1.0 / c_a};
}

}  // namespace obscost
