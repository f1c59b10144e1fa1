#pragma once

#include <string>

#include "ksdyn/eval.hpp"

namespace ksdyn {

/// ROC plot: x = FAR, y = 1 - FRR, with the chance diagonal for reference.
std::string roc_svg(const RocCurve& curve, const std::string& title);

/// Threshold plot: x = threshold, two traces y = FAR and y = FRR.
std::string threshold_svg(const RocCurve& curve, const std::string& title);

}  // namespace ksdyn
