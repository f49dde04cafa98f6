#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <random>
#include <vector>

#include "obscost/xreal.hpp"
#include "obscost/xreal_json.hpp"

using obscost::XReal;
using obscost::XRealL;
namespace mp = boost::multiprecision;
using mpf = mp::cpp_bin_float_50;

namespace {

// Oracle value for representations whose magnitude fits cpp_bin_float_50.
mpf oracle(const XReal& x) {
    if (x.is_zero()) return 0;
    if (x.depth() == 0) return mpf(x.mantissa());
    REQUIRE(x.depth() == 1);
    REQUIRE(std::fabs(x.mantissa()) < 1e8);  // keep exponent in oracle range
    return mpf(x.sign()) * exp(mpf(x.mantissa()));
}

double rel_err(const mpf& got, const mpf& want) {
    if (want == 0) return got == 0 ? 0.0 : 1.0;
    return static_cast<double>(abs(got - want) / abs(want));
}

double rel_err_against(const XReal& got, const mpf& want) { return rel_err(oracle(got), want); }

// random value with log-magnitude up to |lnmax|; exercises depth 0 and 1
XReal random_value(std::mt19937_64& rng, double lnmax) {
    std::uniform_real_distribution<double> uln(-lnmax, lnmax);
    std::bernoulli_distribution flip(0.5);
    double l = uln(rng);
    int s = flip(rng) ? 1 : -1;
    return obscost::xexp(XReal::from_value(l)) * XReal::from_value(double(s));
}

}  // namespace

TEST_CASE("xreal normal form and sign invariant") {
    XReal z = XReal::zero();
    CHECK(z.sign() == 0);
    CHECK(z.depth() == 0);
    CHECK(z.mantissa() == 0.0);
    CHECK(z.is_zero());

    XReal a = XReal::from_value(-3.5);
    CHECK(a.sign() == -1);
    CHECK(a.depth() == 0);
    CHECK(a.mantissa() == -3.5);

    XReal b = XReal::from_value(2e20);
    CHECK(b.depth() == 1);
    CHECK(b.mantissa() == doctest::Approx(std::log(2e20)).epsilon(1e-15));

    // exactly at the cap stays depth 0
    XReal c = XReal::from_value(1e15);
    CHECK(c.depth() == 0);

    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> uln(-700.0, 700.0);
    for (int i = 0; i < 2000; ++i) {
        double l = uln(rng);
        XReal x = obscost::xexp(XReal::from_value(l));
        CHECK(x.sign() == 1);
        CHECK(std::fabs(x.mantissa()) <= XReal::kCap);
        if (x.depth() == 1) {
            // demotion must have been blocked for a reason: value outside
            // the depth-0 window
            bool above = x.mantissa() > std::log(1e15);
            bool below = x.mantissa() < std::log(std::numeric_limits<double>::min());
            CHECK((above || below));
        }
    }
}

TEST_CASE("xreal from_parts validates and round-trips") {
    std::mt19937_64 rng(777);
    for (int i = 0; i < 500; ++i) {
        XReal x = random_value(rng, 5e4);
        XReal y = XReal::from_parts(x.sign(), x.depth(), x.mantissa());
        CHECK(y.sign() == x.sign());
        CHECK(y.depth() == x.depth());
        CHECK(y.mantissa() == x.mantissa());
    }
    CHECK_THROWS_AS(XReal::from_parts(2, 0, 1.0), obscost::xreal_domain);
    CHECK_THROWS_AS(XReal::from_parts(1, 3, 1.0), obscost::xreal_domain);
    CHECK_THROWS_AS(XReal::from_parts(0, 1, 0.0), obscost::xreal_domain);
    CHECK_THROWS_AS(XReal::from_parts(1, 0, -2.0), obscost::xreal_domain);
    CHECK_THROWS_AS(XReal::from_parts(1, 0, std::numeric_limits<double>::infinity()),
                    obscost::xreal_domain);
    // an over-cap mantissa normalizes rather than erroring
    XReal p = XReal::from_parts(1, 0, 1e20);
    CHECK(p.depth() == 1);
}

TEST_CASE("xreal arithmetic matches a 50-digit oracle") {
    std::mt19937_64 rng(20240817);
    int add_checked = 0, mul_checked = 0;
    for (int i = 0; i < 4000; ++i) {
        XReal a = random_value(rng, 300.0);
        XReal b = random_value(rng, 300.0);
        mpf oa = oracle(a), ob = oracle(b);

        XReal s = a + b;
        mpf os = oa + ob;
        if (os != 0) {
            CHECK(rel_err_against(s, os) <= 1e-12);
            ++add_checked;
        } else {
            CHECK(s.is_zero());
        }

        XReal p = a * b;
        CHECK(rel_err_against(p, oa * ob) <= 1e-12);
        ++mul_checked;

        XReal q = a / b;
        CHECK(rel_err_against(q, oa / ob) <= 1e-12);

        XReal d = a - b;
        mpf od = oa - ob;
        if (od != 0)
            CHECK(rel_err_against(d, od) <= 1e-12);
        else
            CHECK(d.is_zero());
    }
    CHECK(add_checked > 3500);
    CHECK(mul_checked == 4000);
}

TEST_CASE("xreal near-cancellation stays accurate") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> uln(-200.0, 200.0);
    std::uniform_real_distribution<double> ueps(-1e-10, 1e-10);
    for (int i = 0; i < 1000; ++i) {
        double l = uln(rng);
        double eps = ueps(rng);
        XReal a = obscost::xexp(XReal::from_value(l));
        XReal b = -obscost::xexp(XReal::from_value(l + eps));
        // score against the stored representations: the interesting part is
        // the cancellation, not the rounding of exp() on construction
        mpf want = oracle(a) + oracle(b);
        XReal got = a + b;
        if (want == 0) {
            CHECK(got.is_zero());
        } else {
            CHECK(rel_err_against(got, want) <= 1e-10);
        }
    }
}

TEST_CASE("xreal integer arithmetic is exact on the fast path") {
    XReal f42 = XReal::from_value(42.0);
    XReal sq = f42 * f42;
    CHECK(sq.depth() == 0);
    CHECK(sq.mantissa() == 1764.0);
    XReal p4 = obscost::xipow(f42, 4);
    CHECK(p4.mantissa() == 3111696.0);
    XReal e23 = XReal::from_value(4.0) * p4;
    CHECK(e23.mantissa() == 12446784.0);

    XReal acc = XReal::zero();
    for (int i = 1; i <= 1000; ++i) acc += XReal::from_value(double(i));
    CHECK(acc.mantissa() == 500500.0);

    XReal big = obscost::xipow(XReal::from_value(2.0), 49);
    CHECK(big.depth() == 0);
    CHECK(big.mantissa() == 562949953421312.0);
}

TEST_CASE("xreal same-sign addition is monotone") {
    std::mt19937_64 rng(4242);
    for (int i = 0; i < 2000; ++i) {
        XReal a = random_value(rng, 1e4).abs();
        XReal b = random_value(rng, 1e4).abs();
        XReal s = a + b;
        CHECK(s >= a);
        CHECK(s >= b);
        XReal ns = (-a) + (-b);
        CHECK(ns <= -a);
        CHECK(ns <= -b);
    }
}

TEST_CASE("xreal exact cancellation of equal representations is zero") {
    std::mt19937_64 rng(31415);
    for (int i = 0; i < 500; ++i) {
        XReal a = random_value(rng, 1e6);
        CHECK((a + (-a)).is_zero());
        CHECK((a - a).is_zero());
    }
}

TEST_CASE("xreal deep towers obey log laws") {
    // values themselves are far beyond double or the oracle; verify the
    // arithmetic one level down.
    XReal a = XReal::from_parts(1, 2, 5000.0);   // exp(exp(5000))
    XReal b = XReal::from_parts(1, 2, 4999.0);   // exp(exp(4999))
    XReal p = a * b;
    CHECK(p.depth() == 2);
    // ln p = exp(5000) + exp(4999) = exp(5000)(1 + e^-1)
    double want = 5000.0 + std::log1p(std::exp(-1.0));
    CHECK(p.mantissa() == doctest::Approx(want).epsilon(1e-14));

    XReal q = a / b;
    // ln q = exp(5000) - exp(4999) = exp(5000)(1 - e^-1)
    double wantq = 5000.0 + std::log1p(-std::exp(-1.0));
    CHECK(q.depth() == 2);
    CHECK(q.mantissa() == doctest::Approx(wantq).epsilon(1e-14));

    // addition: a dominates b utterly, so a + b == a at mantissa resolution
    XReal s = a + b;
    CHECK(XReal::cmp(s, a) == 0);

    // subtraction: a - b = a(1 - exp(-(e^5000 - e^4999))) == a likewise
    XReal d = a - b;
    CHECK(XReal::cmp(d, a) == 0);

    // tiny towers: exp(-exp(5000)) behaves symmetrically
    XReal t = XReal::from_parts(1, 2, -5000.0);
    XReal r = t * t;
    CHECK(r.depth() == 2);
    CHECK(r.mantissa() == doctest::Approx(-(5000.0 + std::log(2.0))).epsilon(1e-14));
    CHECK(t > XReal::zero());
    CHECK(t < XReal::from_value(1e-300));
}

TEST_CASE("xreal logabs and exp_of are mutual inverses") {
    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> um(-1e14, 1e14);
    for (int i = 0; i < 1000; ++i) {
        double m = um(rng);
        XReal x = obscost::xexp(XReal::from_value(m));
        XReal l = x.logabs();
        if (l.depth() == 0) {
            CHECK(l.mantissa() == doctest::Approx(m).epsilon(1e-13));
        }
        XReal back = obscost::xexp(l);
        if (x.depth() == 1) {
            // stored log comes back bit-exact
            CHECK(XReal::cmp(back, x) == 0);
        } else {
            // depth 0 pays one exp(log(v)) rounding
            CHECK(back.mantissa() == doctest::Approx(x.mantissa()).epsilon(1e-14));
        }
    }
    // depth-2 round trip
    XReal deep = XReal::from_parts(-1, 2, 123.456);
    XReal l = deep.logabs();
    CHECK(l.depth() == 1);
    CHECK(l.sign() == 1);
    XReal back = XReal::exp_of(l, -1);
    CHECK(XReal::cmp(back, deep) == 0);
}

TEST_CASE("xreal overflow is an error, not a silent wrap") {
    XReal deep = XReal::from_parts(1, 2, 1e12);
    CHECK_THROWS_AS(obscost::xexp(deep), obscost::xreal_overflow);
    // multiplication only adds ln 2 at the second log level and so stays
    // closed at depth 2; a large real power is what actually escapes
    XReal nearcap = XReal::from_parts(1, 2, 999999999999999.5);
    CHECK_THROWS_AS(obscost::xpow(nearcap, 1e9), obscost::xreal_overflow);
    // a depth-2 mantissa past the cap has nowhere to promote to
    CHECK_THROWS_AS(XReal::from_parts(1, 2, 2e15), obscost::xreal_overflow);
    XReal sq = nearcap * nearcap;
    CHECK(sq.depth() == 2);
    // ln 2 at the second log level is sub-ulp here; allow roundtrip wobble
    CHECK(std::fabs(sq.mantissa() - nearcap.mantissa()) <= 1.0);
    CHECK_THROWS_AS(XReal::from_value(std::numeric_limits<double>::infinity()),
                    obscost::xreal_overflow);
    CHECK_THROWS_AS(XReal::from_value(std::nan("")), obscost::xreal_domain);
    CHECK_THROWS_AS(XReal::from_value(0.0).logabs(), obscost::xreal_domain);
    CHECK_THROWS_AS(XReal::one() / XReal::zero(), obscost::xreal_domain);
}

TEST_CASE("xreal comparison is a total order consistent with magnitude") {
    std::vector<XReal> vals = {
        XReal::from_parts(-1, 2, 800.0),  // -exp(exp(800))
        XReal::from_value(-5.0),
        -XReal::from_parts(1, 2, -800.0),  // -exp(-exp(800)), tiny negative
        XReal::zero(),
        XReal::from_parts(1, 2, -800.0),  // tiny positive
        XReal::from_value(1e-5),
        XReal::one(),
        obscost::xexp(XReal::from_value(500.0)),
        XReal::from_parts(1, 2, 800.0),
    };
    for (size_t i = 0; i < vals.size(); ++i) {
        CHECK(XReal::cmp(vals[i], vals[i]) == 0);
        for (size_t j = i + 1; j < vals.size(); ++j) {
            CHECK(vals[i] < vals[j]);
            CHECK(vals[j] > vals[i]);
        }
    }
}

TEST_CASE("xreal pow and sqrt") {
    std::mt19937_64 rng(616);
    std::uniform_real_distribution<double> uln(-100.0, 100.0);
    std::uniform_real_distribution<double> ue(-3.0, 3.0);
    for (int i = 0; i < 500; ++i) {
        double l = uln(rng), e = ue(rng);
        XReal x = obscost::xexp(XReal::from_value(l));
        XReal p = obscost::xpow(x, e);
        mpf want = pow(oracle(x), mpf(e));
        CHECK(rel_err_against(p, want) <= 1e-12);
        XReal r = obscost::xsqrt(x);
        CHECK(rel_err_against(r, sqrt(oracle(x))) <= 1e-12);
    }
    CHECK_THROWS_AS(obscost::xpow(XReal::from_value(-2.0), 0.5), obscost::xreal_domain);
    CHECK_THROWS_AS(obscost::xsqrt(XReal::from_value(-1.0)), obscost::xreal_domain);
    CHECK(obscost::xipow(XReal::from_value(-2.0), 3).mantissa() == -8.0);
    CHECK(obscost::xipow(XReal::zero(), 0) == XReal::one());
    // huge exponents route through the tower
    XReal h1 = obscost::xpow(XReal::from_value(10.0), 1e14);
    CHECK(h1.depth() == 1);
    CHECK(h1.mantissa() == doctest::Approx(1e14 * std::log(10.0)).epsilon(1e-15));
    XReal h2 = obscost::xpow(XReal::from_value(10.0), 1e15);
    CHECK(h2.depth() == 2);
}

TEST_CASE("xreal value_as_double saturates cleanly") {
    CHECK(XReal::from_value(2.5).value_as_double() == 2.5);
    XReal big = XReal::from_parts(1, 1, 1000.0);
    CHECK(std::isinf(big.value_as_double()));
    CHECK(!big.fits_double());
    XReal mid = XReal::from_parts(1, 1, 100.0);
    CHECK(mid.fits_double());
    CHECK(mid.value_as_double() == doctest::Approx(std::exp(100.0)).epsilon(1e-15));
    XReal tiny = XReal::from_parts(1, 2, -7000.0);
    CHECK(tiny.value_as_double() == 0.0);
    CHECK(!tiny.fits_double());
}

TEST_CASE("xreal json round trip is lossless") {
    std::mt19937_64 rng(2718);
    for (int i = 0; i < 500; ++i) {
        XReal x = random_value(rng, 1e6);
        auto j = obscost::to_json(x);
        std::string text = j.dump();
        auto parsed = nlohmann::json::parse(text);
        XReal y = obscost::xreal_from_json(parsed);
        CHECK(y.sign() == x.sign());
        CHECK(y.depth() == x.depth());
        CHECK(y.mantissa() == x.mantissa());
    }
    auto jz = obscost::to_json(XReal::zero());
    CHECK(obscost::xreal_from_json(nlohmann::json::parse(jz.dump())).is_zero());
    XReal deep = XReal::from_parts(-1, 2, 31337.25);
    auto jd = obscost::to_json_annotated(deep);
    CHECK(jd["repr"].get<std::string>() == deep.describe());
    XReal back = obscost::xreal_from_json(nlohmann::json::parse(jd.dump()));
    CHECK(XReal::cmp(back, deep) == 0);
}

TEST_CASE("xreal long double instantiation") {
    XRealL a = XRealL::from_value(3.0L);
    XRealL b = obscost::xexp(XRealL::from_value(10000.0L));
    XRealL p = a * b;
    CHECK(p.depth() == 1);
    CHECK(static_cast<double>(p.mantissa()) ==
          doctest::Approx(10000.0 + std::log(3.0)).epsilon(1e-15));
    XRealL q = obscost::xsqrt(b);
    CHECK(q.depth() == 1);
    CHECK(q.mantissa() == 5000.0L);
}
