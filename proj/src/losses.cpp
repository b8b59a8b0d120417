#include "keyspoof/losses.hpp"

#include <algorithm>
#include <cmath>

namespace keyspoof {

LossValue bce_loss(double prediction, double target) {
  const double p = std::clamp(prediction, kProbabilityClamp, 1.0 - kProbabilityClamp);
  LossValue out;
  out.loss = -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
  out.gradient = (p - target) / (p * (1.0 - p));
  return out;
}

LossValue contrastive_loss(double distance, bool same_user, double margin) {
  if (same_user) return {0.5 * distance * distance, distance};
  const double gap = margin - distance;
  if (gap <= 0.0) return {0.0, 0.0};
  return {0.5 * gap * gap, -gap};
}

}  // namespace keyspoof
