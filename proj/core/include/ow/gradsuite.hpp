#pragma once

#include <string>
#include <vector>

#include "ow/config.hpp"
#include "ow/gradcheck.hpp"
#include "ow/model.hpp"

namespace ow {

struct StageGradReport {
  std::string stage;  // "stage1", "stage2", "stage3"
  GradCheckReport report;
};

/// Registry of the miniature model: small grid, symbol sequence and point
/// set modalities with d_tok / d_red from `cfg`.
ModalityRegistry gradcheck_registry(const GradcheckConfig& cfg);
ModelDims gradcheck_dims(const GradcheckConfig& cfg);

/// Finite-difference checks in 64-bit of the stage-1 loss (summed over
/// modalities), the stage-2 loss (summed over two pairs) and the stage-3
/// loss (two pairs covering every head).
std::vector<StageGradReport> gradient_suite(const GradcheckConfig& cfg);

}  // namespace ow
