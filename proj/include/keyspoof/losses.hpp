#pragma once

namespace keyspoof {

inline constexpr double kProbabilityClamp = 1e-7;

struct LossValue {
  double loss = 0.0;
  double gradient = 0.0;
};

/// Binary cross-entropy on a probability; prediction is clamped to
/// [1e-7, 1 - 1e-7]. `gradient` is d loss / d prediction.
LossValue bce_loss(double prediction, double target);

/// Contrastive loss on an embedding distance: d^2/2 for genuine pairs,
/// max(0, margin - d)^2/2 for impostor pairs.
LossValue contrastive_loss(double distance, bool same_user, double margin);

}  // namespace keyspoof
