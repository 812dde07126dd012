#pragma once

#include <functional>
#include <vector>

#include "smast/rng.hpp"
#include "smast/tensor.hpp"

namespace smast {

/// Central-finite-difference comparison against analytic gradients.
///
/// `f(with_grad)` must be a deterministic scalar function of the given
/// params; when `with_grad` is true it must also run backward so the
/// analytic gradients land in Param::grad. Samples up to 32 coordinates per
/// param (all when fewer) and returns
///   max |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
double check_gradients(const std::function<double(bool with_grad)>& f,
                       const std::vector<Param*>& params, double h,
                       uint64_t sample_seed = 0x5eedu);

}  // namespace smast
