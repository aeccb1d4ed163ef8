#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "longcast/errors.hpp"
#include "longcast/tensor.hpp"

namespace longcast {

// Central-difference gradient check. loss_fn rebuilds the computation from
// the parameters' current values and returns a scalar tensor; the analytic
// gradients come from one backward() sweep and are compared scalar by scalar
// against (f(w+eps) - f(w-eps)) / (2 eps). Returns the worst relative error
// over all trainable scalars. The denominator is guarded by `floor`, which
// acts as an absolute tolerance for near-zero gradients where the central
// difference is dominated by roundoff.
template <class S, class F>
double finite_diff_check(std::vector<ParameterT<S>*> params, F loss_fn, double eps, double floor = 1e-8) {
    if (eps <= 0) throw ArgumentError("finite_diff_check: eps must be > 0");

    auto eval = [&]() -> double {
        TensorT<S> loss = loss_fn();
        const double v = static_cast<double>(loss.item());
        if (!std::isfinite(v)) throw NumericError("finite_diff_check: non-finite loss");
        return v;
    };

    for (auto* p : params)
        if (p->trainable) p->tensor.zero_grad();
    backward(loss_fn());

    double worst = 0.0;
    for (auto* p : params) {
        if (!p->trainable) continue;
        auto& vals = p->tensor.values();
        const auto& grad = p->tensor.grad();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const S keep = vals[i];
            vals[i] = keep + static_cast<S>(eps);
            const double fp = eval();
            vals[i] = keep - static_cast<S>(eps);
            const double fm = eval();
            vals[i] = keep;
            const double numeric = (fp - fm) / (2.0 * eps);
            const double analytic = static_cast<double>(grad[i]);
            const double denom = std::max({std::fabs(numeric), std::fabs(analytic), floor});
            worst = std::max(worst, std::fabs(numeric - analytic) / denom);
        }
    }
    return worst;
}

}  // namespace longcast
