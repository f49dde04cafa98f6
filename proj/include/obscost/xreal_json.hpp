#pragma once

#include <nlohmann/json.hpp>

#include "obscost/xreal.hpp"

namespace obscost {

// {"sign": -1|0|1, "depth": 0|1|2, "mantissa": <double>}
// Shortest-round-trip double formatting makes this lossless.
inline nlohmann::ordered_json to_json(const XReal& x) {
    return nlohmann::ordered_json{
        {"sign", x.sign()}, {"depth", x.depth()}, {"mantissa", x.mantissa()}};
}

inline XReal xreal_from_json(const nlohmann::json& j) {
    return XReal::from_parts(j.at("sign").get<int>(), j.at("depth").get<int>(),
                             j.at("mantissa").get<double>());
}

// Value plus a base-10 magnitude hint for humans; the parts stay authoritative.
inline nlohmann::ordered_json to_json_annotated(const XReal& x) {
    auto j = to_json(x);
    j["repr"] = x.describe();
    if (!x.is_zero()) {
        XReal l10 = xlog10(x.abs());
        if (l10.depth() == 0)
            j["log10_abs"] = l10.mantissa();
        else
            j["log10_abs"] = to_json(l10);
    }
    if (x.fits_double()) j["value"] = x.value_as_double();
    return j;
}

}  // namespace obscost
