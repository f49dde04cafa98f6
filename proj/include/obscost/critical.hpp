#pragma once

#include "obscost/xreal.hpp"

namespace obscost {

// Distance from L to the critical length set
//     { 2 pi sqrt((k^2 + k l + l^2) / 3) : k, l >= 1 }
// measured on squared lengths: d = min |L^2 - (2 pi)^2 (k^2 + k l + l^2)/3|.
struct CriticalReport {
    double L = 0;
    double tolerance = 0;
    bool is_critical = false;
    bool has_witness = false;
    long witness_k = 0, witness_l = 0;  // k <= l, lexicographically smallest
    XReal d;
};

CriticalReport classify(double L, double tolerance);

}  // namespace obscost
