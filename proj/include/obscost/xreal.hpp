#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace obscost {

struct xreal_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct xreal_overflow : xreal_error {
    xreal_overflow() : xreal_error("xreal: depth-3 overflow (value beyond tower range)") {}
};

struct xreal_domain : xreal_error {
    using xreal_error::xreal_error;
};

// Sign + nested-logarithm ("tower") scalar.
//   depth 0: value = mantissa
//   depth 1: value = sign * exp(mantissa)
//   depth 2: value = sign * exp(sgn(mantissa) * exp(|mantissa|))
// Normal form keeps the smallest depth whose mantissa magnitude is <= 1e15.
// One carve-out: a demotion that would land the mantissa in the underflow
// region is blocked (a nonzero value must stay nonzero and be preserved to
// relative error well below 1e-12), so depth-1 mantissas below
// ln(min normal) stay at depth 1.
template <class F>
class XRealT {
  public:
    static constexpr F kCap = F(1e15);

    constexpr XRealT() = default;

    static XRealT zero() { return XRealT(); }
    static XRealT one() { return XRealT(1, 0, F(1)); }

    static XRealT from_value(F v) {
        if (std::isnan(v)) throw xreal_domain("xreal: NaN input");
        if (v == F(0)) return zero();
        if (std::isinf(v)) throw xreal_overflow();
        XRealT r(v > F(0) ? 1 : -1, 0, v);
        r.normalize();
        return r;
    }

    // Build from explicit parts (e.g. parsed JSON); normalizes and validates.
    static XRealT from_parts(int sign, int depth, F mantissa) {
        if (sign < -1 || sign > 1) throw xreal_domain("xreal: sign must be -1, 0 or +1");
        if (depth < 0 || depth > 2) throw xreal_domain("xreal: depth must be 0, 1 or 2");
        if (std::isnan(mantissa) || std::isinf(mantissa))
            throw xreal_domain("xreal: mantissa must be finite");
        if (sign == 0) {
            if (depth != 0 || mantissa != F(0))
                throw xreal_domain("xreal: zero requires depth 0 and mantissa 0");
            return zero();
        }
        if (depth == 0) {
            if (mantissa == F(0)) throw xreal_domain("xreal: depth-0 nonzero needs nonzero mantissa");
            if ((mantissa > F(0)) != (sign > 0))
                throw xreal_domain("xreal: depth-0 mantissa sign must match sign field");
        }
        XRealT r(sign, depth, mantissa);
        r.normalize();
        return r;
    }

    // value = s * exp(value of lg); lg must have depth <= 1 or the result
    // would need depth 3.
    static XRealT exp_of(const XRealT& lg, int s) {
        if (s == 0) throw xreal_domain("xreal: exp_of needs nonzero sign");
        s = s > 0 ? 1 : -1;
        if (lg.is_zero()) return XRealT(s, 0, F(s));
        if (lg.depth_ == 0) {
            if (lg.m_ >= ln_min_normal() && lg.m_ <= ln_cap())
                return from_value(F(s) * std::exp(lg.m_));
            XRealT r(s, 1, lg.m_);
            r.normalize();
            return r;
        }
        if (lg.depth_ == 1) {
            if (lg.m_ < F(0)) {
                // |ln v| < exp(ln_cap-window lower edge): v is 1 to within
                // far beyond mantissa resolution
                return XRealT(s, 0, F(s));
            }
            XRealT r(s, 2, lg.sign_ > 0 ? lg.m_ : -lg.m_);
            r.normalize();
            return r;
        }
        throw xreal_overflow();
    }

    int sign() const { return sign_; }
    int depth() const { return depth_; }
    F mantissa() const { return m_; }
    bool is_zero() const { return sign_ == 0; }

    // ln|x|, one depth level down; domain error on zero.
    XRealT logabs() const {
        if (sign_ == 0) throw xreal_domain("xreal: log of zero");
        if (depth_ == 0) return from_value(std::log(std::fabs(m_)));
        if (depth_ == 1) return from_value(m_);
        XRealT lg = from_value(std::fabs(m_));
        return exp_of(lg, m_ >= F(0) ? 1 : -1);
    }

    XRealT operator-() const {
        XRealT r = *this;
        r.sign_ = -r.sign_;
        if (r.depth_ == 0) r.m_ = -r.m_;
        return r;
    }

    XRealT abs() const {
        XRealT r = *this;
        if (r.sign_ < 0) {
            r.sign_ = 1;
            if (r.depth_ == 0) r.m_ = -r.m_;
        }
        return r;
    }

    friend XRealT operator+(const XRealT& a, const XRealT& b) {
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        if (a.depth_ == 0 && b.depth_ == 0) {
            F s = a.m_ + b.m_;
            if (s == F(0)) return zero();
            return from_value(s);
        }
        int c = cmp_abs(a, b);
        if (c == 0) {
            if (a.sign_ != b.sign_) return zero();
            // |a| == |b| at mantissa resolution: a + b = 2a
            XRealT lr = a.logabs() + from_value(ln2());
            return exp_of(lr, a.sign_);
        }
        const XRealT& big = (c > 0) ? a : b;
        const XRealT& small = (c > 0) ? b : a;
        XRealT delta = small.logabs() - big.logabs();  // < 0
        F d = delta.value_as_double();
        F corr;
        if (a.sign_ == b.sign_) {
            corr = std::log1p(std::exp(d));
            if (corr == F(0)) return big;
        } else {
            F om = -std::expm1(d);  // 1 - e^d, accurate near d = 0
            if (om <= F(0)) {
                // delta rounded to -0 in double: |a+b| = |big| * |delta|
                // to relative error |delta| / 2
                XRealT lr = big.logabs() + delta.logabs();
                return exp_of(lr, big.sign_);
            }
            corr = std::log(om);
        }
        XRealT lr = big.logabs() + from_value(corr);
        return exp_of(lr, big.sign_);
    }

    friend XRealT operator-(const XRealT& a, const XRealT& b) { return a + (-b); }

    friend XRealT operator*(const XRealT& a, const XRealT& b) {
        if (a.is_zero() || b.is_zero()) return zero();
        if (a.depth_ == 0 && b.depth_ == 0) {
            F p = a.m_ * b.m_;
            if (p != F(0) && std::isfinite(p) && std::fabs(p) >= (std::numeric_limits<F>::min)())
                return from_value(p);
        }
        XRealT lr = a.logabs() + b.logabs();
        return exp_of(lr, a.sign_ * b.sign_);
    }

    friend XRealT operator/(const XRealT& a, const XRealT& b) {
        if (b.is_zero()) throw xreal_domain("xreal: division by zero");
        if (a.is_zero()) return zero();
        if (a.depth_ == 0 && b.depth_ == 0) {
            F q = a.m_ / b.m_;
            if (q != F(0) && std::isfinite(q) && std::fabs(q) >= (std::numeric_limits<F>::min)())
                return from_value(q);
        }
        XRealT lr = a.logabs() - b.logabs();
        return exp_of(lr, a.sign_ * b.sign_);
    }

    XRealT& operator+=(const XRealT& o) { return *this = *this + o; }
    XRealT& operator-=(const XRealT& o) { return *this = *this - o; }
    XRealT& operator*=(const XRealT& o) { return *this = *this * o; }
    XRealT& operator/=(const XRealT& o) { return *this = *this / o; }

    // three-way compare of represented values (mantissa-exact)
    static int cmp(const XRealT& a, const XRealT& b) {
        if (a.sign_ != b.sign_) return a.sign_ < b.sign_ ? -1 : 1;
        if (a.sign_ == 0) return 0;
        return a.sign_ * cmp_abs(a, b);
    }

    friend bool operator==(const XRealT& a, const XRealT& b) { return cmp(a, b) == 0; }
    friend bool operator!=(const XRealT& a, const XRealT& b) { return cmp(a, b) != 0; }
    friend bool operator<(const XRealT& a, const XRealT& b) { return cmp(a, b) < 0; }
    friend bool operator<=(const XRealT& a, const XRealT& b) { return cmp(a, b) <= 0; }
    friend bool operator>(const XRealT& a, const XRealT& b) { return cmp(a, b) > 0; }
    friend bool operator>=(const XRealT& a, const XRealT& b) { return cmp(a, b) >= 0; }

    // Saturating conversion: values beyond double range give +-inf or
    // signed zero. Exact at depth 0.
    F value_as_double() const {
        if (sign_ == 0) return F(0);
        if (depth_ == 0) return m_;
        if (depth_ == 1) return F(sign_) * std::exp(m_);
        F inf = std::numeric_limits<F>::infinity();
        return m_ > F(0) ? F(sign_) * inf : F(sign_) * F(0);
    }

    bool fits_double() const {
        if (sign_ == 0 || depth_ == 0) return true;
        if (depth_ == 1) return m_ <= ln_max_double() && m_ >= ln_min_normal();
        return false;
    }

    std::string describe() const;

  private:
    constexpr XRealT(int s, int d, F m) : sign_(s), depth_(d), m_(m) {}

    static F ln_cap() {
        static const F v = std::log(kCap);
        return v;
    }
    static F ln_min_normal() {
        static const F v = std::log((std::numeric_limits<F>::min)());
        return v;
    }
    static F ln_max_double() {
        static const F v = std::log((std::numeric_limits<F>::max)());
        return v;
    }
    static F ln2() {
        static const F v = std::log(F(2));
        return v;
    }

    static int cmp_abs(const XRealT& a, const XRealT& b) {
        if (a.depth_ == 0 && b.depth_ == 0) {
            F x = std::fabs(a.m_), y = std::fabs(b.m_);
            return x < y ? -1 : (x > y ? 1 : 0);
        }
        return cmp(a.logabs(), b.logabs());
    }

    void normalize() {
        if (sign_ == 0) {
            depth_ = 0;
            m_ = F(0);
            return;
        }
        // promote
        while (std::fabs(m_) > kCap) {
            if (depth_ == 0) {
                m_ = std::log(std::fabs(m_));
                depth_ = 1;
            } else if (depth_ == 1) {
                m_ = m_ > F(0) ? std::log(m_) : -std::log(-m_);
                depth_ = 2;
            } else {
                throw xreal_overflow();
            }
        }
        // demote where the value survives exactly enough
        while (depth_ > 0) {
            if (depth_ == 2) {
                if (std::fabs(m_) > ln_cap()) break;
                m_ = m_ >= F(0) ? std::exp(m_) : -std::exp(-m_);
                depth_ = 1;
            } else {
                if (m_ > ln_cap() || m_ < ln_min_normal()) break;
                m_ = F(sign_) * std::exp(m_);
                depth_ = 0;
            }
        }
    }

    int sign_ = 0;
    int depth_ = 0;
    F m_ = F(0);
};

template <class F>
inline XRealT<F> xabs(const XRealT<F>& x) { return x.abs(); }

template <class F>
inline XRealT<F> xln(const XRealT<F>& x) {
    if (x.sign() <= 0) throw xreal_domain("xreal: log of non-positive value");
    return x.logabs();
}

template <class F>
inline XRealT<F> xexp(const XRealT<F>& x) {
    if (x.is_zero()) return XRealT<F>::one();
    return XRealT<F>::exp_of(x, 1);
}

// x^k for integer k; exact on the depth-0 fast path of the multiply.
template <class F>
inline XRealT<F> xipow(const XRealT<F>& x, long long k) {
    if (k == 0) return XRealT<F>::one();
    if (x.is_zero()) {
        if (k < 0) throw xreal_domain("xreal: 0 to a negative power");
        return XRealT<F>::zero();
    }
    bool inv = k < 0;
    unsigned long long n = inv ? -(unsigned long long)k : (unsigned long long)k;
    XRealT<F> acc = XRealT<F>::one();
    XRealT<F> base = x;
    while (n > 0) {
        if (n & 1ull) acc = acc * base;
        n >>= 1;
        if (n > 0) base = base * base;
    }
    return inv ? XRealT<F>::one() / acc : acc;
}

// x^e for real e; requires x > 0 (use xipow for signed bases).
template <class F>
inline XRealT<F> xpow(const XRealT<F>& x, F e) {
    if (x.is_zero()) {
        if (e > F(0)) return XRealT<F>::zero();
        if (e == F(0)) return XRealT<F>::one();
        throw xreal_domain("xreal: 0 to a negative power");
    }
    if (x.sign() < 0) throw xreal_domain("xreal: negative base with real exponent");
    if (e == F(0)) return XRealT<F>::one();
    XRealT<F> lr = x.logabs() * XRealT<F>::from_value(e);
    return XRealT<F>::exp_of(lr, 1);
}

template <class F>
inline XRealT<F> xsqrt(const XRealT<F>& x) {
    if (x.sign() < 0) throw xreal_domain("xreal: sqrt of negative value");
    if (x.is_zero()) return XRealT<F>::zero();
    if (x.depth() == 0) {
        F r = std::sqrt(x.mantissa());
        if (r >= (std::numeric_limits<F>::min)()) return XRealT<F>::from_value(r);
    }
    return xpow(x, F(0.5));
}

template <class F>
inline XRealT<F> xmin(const XRealT<F>& a, const XRealT<F>& b) { return a <= b ? a : b; }

template <class F>
inline XRealT<F> xmax(const XRealT<F>& a, const XRealT<F>& b) { return a >= b ? a : b; }

// ln(e^a + e^b) for log-domain accumulation of positive quantities whose
// values may sit beyond depth 2
template <class F>
inline XRealT<F> xlogaddexp(const XRealT<F>& a, const XRealT<F>& b) {
    const XRealT<F>* hi = &a;
    const XRealT<F>* lo = &b;
    if (*hi < *lo) std::swap(hi, lo);
    XRealT<F> d = *lo - *hi;  // <= 0
    if (d < XRealT<F>::from_value(F(-745))) return *hi;
    F corr = std::log1p(std::exp(d.value_as_double()));
    if (corr == F(0)) return *hi;
    return *hi + XRealT<F>::from_value(corr);
}

// ln(e^a - e^b), requires a > b
template <class F>
inline XRealT<F> xlogsubexp(const XRealT<F>& a, const XRealT<F>& b) {
    if (!(a > b)) throw xreal_domain("xlogsubexp: need a > b");
    XRealT<F> d = b - a;  // < 0
    if (d < XRealT<F>::from_value(F(-745))) return a;
    F om = -std::expm1(d.value_as_double());
    if (om <= F(0)) return a + d.logabs();  // 1 - e^d underflowed; e^a * |d|
    return a + XRealT<F>::from_value(std::log(om));
}

// ln(x) / ln(10), for human-readable magnitude reporting
template <class F>
inline XRealT<F> xlog10(const XRealT<F>& x) {
    static const F inv_ln10 = F(1) / std::log(F(10));
    return xln(x) * XRealT<F>::from_value(inv_ln10);
}

template <class F>
std::string XRealT<F>::describe() const {
    if (sign_ == 0) return "0";
    char buf[64];
    double m = static_cast<double>(m_);
    if (depth_ == 0) {
        std::snprintf(buf, sizeof buf, "%.17g", m);
        return buf;
    }
    if (depth_ == 1) {
        std::snprintf(buf, sizeof buf, "%sexp(%.17g)", sign_ < 0 ? "-" : "", m);
        return buf;
    }
    std::snprintf(buf, sizeof buf, "%sexp(%sexp(%.17g))", sign_ < 0 ? "-" : "",
                  m_ < F(0) ? "-" : "", std::fabs(m));
    return buf;
}

using XReal = XRealT<double>;
using XRealL = XRealT<long double>;

}  // namespace obscost
