#pragma once

// Static SVG figures: training curves and a confusion heat map.

#include <string>

#include "ervc/metrics.hpp"
#include "ervc/trainer.hpp"

namespace ervc {

/// Loss (left panel) and train/validation accuracy (right panel) per epoch.
std::string training_curves_svg(const TrainingHistory& history);

/// Row-normalized confusion matrix, canonical label order on both axes.
std::string confusion_svg(const ConfusionMatrix& cm);

}  // namespace ervc
