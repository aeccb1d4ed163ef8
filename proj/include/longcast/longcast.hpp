#pragma once

// Longitudinal clinical forecasting with a frozen transformer backbone.

#include "longcast/backbone.hpp"
#include "longcast/container.hpp"
#include "longcast/data.hpp"
#include "longcast/digest.hpp"
#include "longcast/errors.hpp"
#include "longcast/eval.hpp"
#include "longcast/gradcheck.hpp"
#include "longcast/model.hpp"
#include "longcast/patch.hpp"
#include "longcast/prompt.hpp"
#include "longcast/reprogram.hpp"
#include "longcast/revin.hpp"
#include "longcast/rng.hpp"
#include "longcast/tensor.hpp"
#include "longcast/train.hpp"

namespace longcast {
inline constexpr const char* kVersion = "0.1.0";
}
