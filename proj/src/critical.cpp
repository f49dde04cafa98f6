#include "obscost/critical.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace obscost {

namespace {

double form_value(long k, long l) {
    constexpr double c = 4.0 * std::numbers::pi * std::numbers::pi / 3.0;
    return c * double(k * k + k * l + l * l);
}

}  // namespace

CriticalReport classify(double L, double tolerance) {
    if (!(L > 0)) throw xreal_domain("classify: need L > 0");
    if (!(tolerance >= 0)) throw xreal_domain("classify: need tolerance >= 0");

    CriticalReport r;
    r.L = L;
    r.tolerance = tolerance;
    const double l2 = L * L;
    double best = std::numeric_limits<double>::infinity();
    // the form grows in both arguments: scan k <= l, leave the l loop once
    // the form passes L^2 + best, and stop k when even l = k is past it;
    // ascending order makes the kept witness the lexicographically smallest
    for (long k = 1; !r.has_witness || form_value(k, k) <= l2 + best; ++k) {
        for (long l = k;; ++l) {
            double f = form_value(k, l);
            double dist = std::fabs(l2 - f);
            if (dist < best) {
                best = dist;
                r.witness_k = k;
                r.witness_l = l;
                r.has_witness = true;
            }
            if (f > l2 + best) break;
        }
    }
    r.d = XReal::from_value(best);
    r.is_critical = best <= tolerance;
    return r;
}

}  // namespace obscost
