#include <doctest.h>

#include <boost/math/constants/constants.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "obscost/critical.hpp"
#include "obscost/flow.hpp"
#include "obscost/gamma.hpp"
#include "oracles.hpp"

using obscost::GammaCertificate;
using obscost::XReal;
using oracles::mpf;

namespace {

const char* kBoundNames[6] = {"a_quadratic_normalization", "b_alpha_sixth",
                              "c_alpha_decay",             "d_alpha_radius",
                              "e_combined_reciprocal",     "f_exponential_window"};

struct GammaOracle {
    mpf k2, R, lr, alpha, r, gamma;
    mpf caps[6];
};

// Straight transcription of the inequality system, solved for gamma per
// bound, evaluated at 50 digits. Desk scale only: exp(6LR) must fit mpf.
GammaOracle gamma_oracle(double Ld, double k1d, const mpf& dl) {
    const mpf pi = boost::math::constants::pi<mpf>();
    const mpf L(Ld), k1(k1d);
    const mpf third = mpf(1) / 3;
    GammaOracle o;
    mpf e13 = oracles::e(1, 3);
    o.k2 = 1 + (1 + sqrt(e13)) * k1;
    mpf rbase = 1 + 3 * o.k2 / 2;
    o.R = pow(rbase, third);
    o.lr = L * o.R;
    mpf den = 81 * exp(6 * o.lr) / (169 * pow(o.R, 5)) + mpf(54) / 245;
    o.alpha = 1 / sqrt(den);
    mpf c1 = pi / (8 * L);
    mpf c2 = dl / (56 * L * L * (o.R + 1));
    o.r = mpf("0.99") * (c1 < c2 ? c1 : c2);
    mpf S = o.R + sqrt(L) * exp(o.lr);
    mpf W = 1 + sqrt(L * L * L / 3) * exp(o.lr);
    mpf Q = 27 / (52 * o.R * o.R) + 9 * sqrt(L) * exp(3 * o.lr) / (52 * pow(o.R, 3));
    mpf A = 8 * o.R * Q * Q + mpf(171) / 196;
    o.caps[0] = sqrt((2 * pi - 1) / A);
    o.caps[1] = o.alpha / (6 * S);
    o.caps[2] = o.alpha * L / (3 * exp(o.lr) * W);
    o.caps[3] = o.alpha * L * o.r / (288 * S);
    o.caps[4] = 1 / (288 * (96 * exp(o.lr) * S / (o.alpha * L * o.r) +
                            W / (o.alpha * L)));
    o.caps[5] = log(mpf(4) / 3) / (3 * L);
    mpf m = o.caps[0];
    for (int i = 1; i < 6; ++i)
        if (o.caps[i] < m) m = o.caps[i];
    o.gamma = mpf("0.99") * m;
    return o;
}

mpf dl_oracle(double L) {
    const mpf pi = boost::math::constants::pi<mpf>();
    auto rep = obscost::classify(L, 1e-9);
    REQUIRE(rep.has_witness);
    mpf form = 4 * pi * pi *
               (mpf(rep.witness_k) * rep.witness_k +
                mpf(rep.witness_k) * rep.witness_l +
                mpf(rep.witness_l) * rep.witness_l) /
               3;
    mpf d = abs(mpf(L) * L - form);
    REQUIRE(d > 0);
    return d;
}

// |a - ln(want)| with a a ln-domain XReal that fits a double
double log_abs_err(const XReal& a, const mpf& want) {
    mpf diff = abs(mpf(a.value_as_double()) - log(want));
    return double(diff);
}

GammaCertificate desk_cert(double L, double k1) {
    auto rep = obscost::classify(L, 1e-9);
    return obscost::compute_gamma(L, XReal::from_value(k1), rep.d);
}

bool same_bits(const XReal& a, const XReal& b) {
    return a.sign() == b.sign() && a.depth() == b.depth() &&
           a.mantissa() == b.mantissa();
}

}  // namespace

TEST_CASE("gamma certificate matches the high-precision oracle at desk scale") {
    const double L = 4.0;
    for (double k1 : {1.0, 10.0}) {
        CAPTURE(k1);
        auto cert = desk_cert(L, k1);
        auto o = gamma_oracle(L, k1, dl_oracle(L));
        CHECK(log_abs_err(cert.ln_k2, o.k2) < 1e-11);
        CHECK(log_abs_err(cert.ln_r_disc, o.R) < 1e-12);
        CHECK(log_abs_err(cert.ln_alpha_star, o.alpha) < 1e-9);
        CHECK(log_abs_err(cert.ln_r, o.r) < 1e-11);
        CHECK(log_abs_err(cert.ln_gamma, o.gamma) < 1e-9);
        double lr_rel = std::fabs(double(mpf(cert.lr.value_as_double()) / o.lr - 1));
        CHECK(lr_rel < 1e-12);
        REQUIRE(cert.bounds.size() == 6);
        for (int i = 0; i < 6; ++i) {
            CAPTURE(i);
            CHECK(cert.bounds[size_t(i)].name == kBoundNames[i]);
            CHECK(log_abs_err(cert.bounds[size_t(i)].ln_cap, o.caps[i]) < 1e-9);
        }
    }
}

TEST_CASE("pinned desk-scale values at L=4, K1=1") {
    auto cert = desk_cert(4.0, 1.0);

    // K2 = 2 + sqrt(E13) = 22866.054...
    auto k2 = cert.k2();
    REQUIRE(k2.has_value());
    double k2v = k2->value_as_double();
    CHECK(std::fabs(k2v - 22866.0541) < 1e-3);
    double k2_direct = 2.0 + std::sqrt(obscost::e_constant(1, 3).value_as_double());
    CHECK(std::fabs(k2v - k2_direct) < 1e-12 * k2_direct);

    // R is the cube root: R^3 - 3 K2/2 - 1 = 0 to 1e-10 relative
    auto R = cert.r_disc();
    REQUIRE(R.has_value());
    XReal resid = obscost::xipow(*R, 3) - XReal::from_value(1.5) * *k2 - XReal::one();
    CHECK(std::fabs(resid.value_as_double()) <
          1e-10 * obscost::xipow(*R, 3).value_as_double());

    // bound (f): cap is ln(4/3)/(3L) and its slack is positive
    const auto& f = cert.bounds.back();
    REQUIRE(f.name == std::string("f_exponential_window"));
    double cap_f = obscost::xexp(f.ln_cap).value_as_double();
    CHECK(std::fabs(cap_f - std::log(4.0 / 3.0) / 12.0) < 1e-15);
    CHECK(f.log_margin > XReal::zero());
    auto slack = f.slack_value();
    REQUIRE(slack.has_value());
    CHECK(*slack > XReal::zero());

    // at this scale gamma itself still fits one exponential down
    auto g = cert.gamma();
    REQUIRE(g.has_value());
    CHECK(g->sign() == 1);
    CHECK(cert.ln_gamma.depth() == 0);
}

TEST_CASE("certificate invariants hold across a parameter sweep") {
    for (double L : {4.0, 5.5, 8.0}) {
        for (double k1 : {1.0, 3.7, 10.0}) {
            CAPTURE(L);
            CAPTURE(k1);
            auto cert = desk_cert(L, k1);

            REQUIRE(cert.bounds.size() == 6);
            REQUIRE(cert.range_checks.size() == 2);
            for (const auto& b : cert.bounds) CHECK(b.log_margin > XReal::zero());
            for (const auto& b : cert.range_checks)
                CHECK(b.log_margin > XReal::zero());

            // gamma = 0.99 * min over the six caps
            XReal ln_min = cert.bounds.front().ln_cap;
            for (const auto& b : cert.bounds) ln_min = obscost::xmin(ln_min, b.ln_cap);
            XReal expect = XReal::from_value(std::log(0.99)) + ln_min;
            CHECK(same_bits(cert.ln_gamma, expect));

            // r-range conditions in plain values
            auto r = cert.r();
            auto R = cert.r_disc();
            REQUIRE(r.has_value());
            REQUIRE(R.has_value());
            CHECK(*r < XReal::from_value(std::numbers::pi / (8 * L)));
            XReal lhs = XReal::from_value(56 * L * L) * (*R + XReal::one()) * *r;
            CHECK(lhs < cert.dl);

            // determinism: the run is a pure function of its inputs
            auto again = desk_cert(L, k1);
            CHECK(same_bits(cert.ln_gamma, again.ln_gamma));
            CHECK(same_bits(cert.ln_r, again.ln_r));
            for (size_t i = 0; i < cert.bounds.size(); ++i)
                CHECK(same_bits(cert.bounds[i].log_margin,
                                again.bounds[i].log_margin));

            auto rep = obscost::verify_certificate(cert);
            CHECK(rep.ok);
            REQUIRE(rep.checks.size() == 8);
            for (const auto& c : rep.checks) {
                CAPTURE(c.name);
                CHECK(c.ok);
                CHECK(!c.at_resolution);  // desk-scale margins are honest reals
            }
        }
    }
}

TEST_CASE("gamma is non-increasing in K1") {
    auto g = [](double k1) { return desk_cert(4.0, k1).ln_gamma; };
    XReal g1 = g(1.0), g10 = g(10.0), g100 = g(100.0);
    CHECK(g1 > g10);
    CHECK(g10 > g100);
}

TEST_CASE("tower-scale K1 keeps the log-domain certificate representable") {
    auto fc = obscost::f_constants(4.0);
    auto cov = obscost::covering(4.0, fc.k0);
    const XReal k1bar = cov.k1;
    REQUIRE(obscost::xln(k1bar).depth() >= 1);  // genuinely beyond one exp level

    auto rep = obscost::classify(4.0, 1e-9);
    auto cert = obscost::compute_gamma(4.0, k1bar, rep.d);

    CHECK(cert.ln_gamma.sign() == -1);
    CHECK(cert.ln_gamma.depth() == 2);
    CHECK(!cert.gamma().has_value());  // the value itself is one depth too far
    for (const auto& b : cert.bounds) {
        CAPTURE(b.name);
        CHECK(b.log_margin > XReal::zero());
    }
    for (const auto& b : cert.range_checks) CHECK(b.log_margin > XReal::zero());

    // still below the desk-scale gammas
    CHECK(cert.ln_gamma < desk_cert(4.0, 10.0).ln_gamma);

    auto v = obscost::verify_certificate(cert);
    CHECK(v.ok);
    REQUIRE(v.checks.size() == 8);
}

TEST_CASE("log gamma is stable under extended working precision") {
    using XL = obscost::XRealL;
    auto up = [](const XReal& x) {
        return XL::from_parts(x.sign(), x.depth(), (long double)x.mantissa());
    };
    auto rel_between = [](const XReal& a, const XL& b) {
        if (a.depth() != b.depth()) return 1.0;
        long double am = (long double)a.mantissa();
        return double(std::fabs((am - b.mantissa()) / b.mantissa()));
    };

    for (double k1 : {1.0, 10.0}) {
        CAPTURE(k1);
        auto rep = obscost::classify(4.0, 1e-9);
        auto cd = obscost::compute_gamma(4.0, XReal::from_value(k1), rep.d);
        auto cl = obscost::compute_gamma_t<long double>(4.0L, XL::from_value(k1),
                                                        up(rep.d));
        CHECK(rel_between(cd.ln_gamma, cl.ln_gamma) < 1e-9);
    }

    // tower scale: compare the mantissa of the depth-2 log
    auto cov = obscost::covering(4.0, obscost::f_constants(4.0).k0);
    auto rep = obscost::classify(4.0, 1e-9);
    auto cd = obscost::compute_gamma(4.0, cov.k1, rep.d);
    auto cl = obscost::compute_gamma_t<long double>(4.0L, up(cov.k1), up(rep.d));
    CHECK(rel_between(cd.ln_gamma, cl.ln_gamma) < 1e-9);
}

TEST_CASE("verification rejects tampered certificates") {
    auto cert = desk_cert(4.0, 1.0);
    REQUIRE(obscost::verify_certificate(cert).ok);

    SUBCASE("gamma doubled") {
        auto t = cert;
        t.ln_gamma = t.ln_gamma + XReal::from_value(std::log(2.0));
        auto rep = obscost::verify_certificate(t);
        CHECK(!rep.ok);
        bool failed_named_bound = false;
        for (const auto& c : rep.checks) {
            if (c.ok) continue;
            for (const char* n : kBoundNames)
                if (c.name == n) failed_named_bound = true;
        }
        CHECK(failed_named_bound);
        // the binding constraint here is the reciprocal-sum bound
        for (const auto& c : rep.checks)
            if (c.name == "e_combined_reciprocal") CHECK(!c.ok);
    }

    SUBCASE("r pushed above pi/(8L)") {
        auto t = cert;
        t.ln_r = XReal::from_value(std::log(1.5 * std::numbers::pi / 32.0));
        auto rep = obscost::verify_certificate(t);
        CHECK(!rep.ok);
        for (const auto& c : rep.checks)
            if (c.name == "r_below_pi_over_8L") CHECK(!c.ok);
    }
}

TEST_CASE("gamma solver rejects out-of-domain inputs") {
    auto rep = obscost::classify(4.0, 1e-9);
    CHECK_THROWS_AS(obscost::compute_gamma(3.9, XReal::one(), rep.d),
                    obscost::xreal_domain);
    CHECK_THROWS_AS(obscost::compute_gamma(4.0, XReal::from_value(0.5), rep.d),
                    obscost::xreal_domain);
    try {
        obscost::compute_gamma(4.0, XReal::one(), XReal::zero());
        CHECK(false);
    } catch (const obscost::xreal_domain& e) {
        CHECK(std::string(e.what()).find("critical") != std::string::npos);
    }
}
