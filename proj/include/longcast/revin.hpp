#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "longcast/errors.hpp"

namespace longcast {

// Masked reversible instance normalization. Statistics are computed per
// series over observed entries only (population variance); unobserved
// positions are filled with 0 after normalization, which is the distribution
// mean, and stay masked. denormalize() inverts the map exactly.

struct RevinState {
    double mean = 0.0;
    double var = 0.0;
    double eps = 1e-5;

    double scale() const { return std::sqrt(var + eps); }
};

struct RevinResult {
    std::vector<double> normalized;
    RevinState state;
};

inline RevinResult revin_normalize(const std::vector<double>& series, const std::vector<bool>& mask,
                                   double eps = 1e-5) {
    if (series.size() != mask.size()) throw DimensionError("revin: series/mask length mismatch");
    std::size_t count = 0;
    double mean = 0.0;
    for (std::size_t t = 0; t < series.size(); ++t) {
        if (!mask[t]) continue;
        mean += series[t];
        ++count;
    }
    if (count == 0) throw DegenerateInputError("revin: all entries masked");
    mean /= static_cast<double>(count);
    double var = 0.0;
    for (std::size_t t = 0; t < series.size(); ++t) {
        if (!mask[t]) continue;
        var += (series[t] - mean) * (series[t] - mean);
    }
    var /= static_cast<double>(count);

    RevinResult out;
    out.state = RevinState{mean, var, eps};
    const double inv = 1.0 / out.state.scale();
    out.normalized.assign(series.size(), 0.0);
    for (std::size_t t = 0; t < series.size(); ++t)
        if (mask[t]) out.normalized[t] = (series[t] - mean) * inv;
    return out;
}

inline double revin_denormalize(double y, const RevinState& state) { return y * state.scale() + state.mean; }

inline std::vector<double> revin_denormalize(const std::vector<double>& ys, const RevinState& state) {
    std::vector<double> out(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) out[i] = revin_denormalize(ys[i], state);
    return out;
}

// Normalize a target drawn from the same instance as a previously normalized
// input window.
inline double revin_apply(double x, const RevinState& state) { return (x - state.mean) / state.scale(); }

// Identity state for the no-RevIN ablation: denormalize(x) == x exactly.
inline RevinState revin_identity(double eps = 1e-5) { return RevinState{0.0, 1.0 - eps, eps}; }

}  // namespace longcast
