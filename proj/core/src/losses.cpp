#include "jigsaw/losses.hpp"

#include <algorithm>
#include <cmath>

#include "jigsaw/error.hpp"

namespace jigsaw {

double clamp_probability(double p) { return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor); }

double bce(double p, double target) {
  const double q = clamp_probability(p);
  return -(target * std::log(q) + (1.0 - target) * std::log(1.0 - q));
}

double bce_grad(double p, double target) {
  if (p < kProbabilityFloor || p > 1.0 - kProbabilityFloor) return 0.0;
  return -target / p + (1.0 - target) / (1.0 - p);
}

double mean_l1(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("mean_l1: size mismatch");
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

double generator_loss(double d_pred, std::span<const double> original_band,
                      std::span<const double> generated_band, double lambda) {
  return bce(d_pred, 1.0) + lambda * mean_l1(original_band, generated_band);
}

double discriminator_loss_phase1(double p_real, double p_fake) {
  return 0.5 * (bce(p_real, 1.0) + bce(p_fake, 0.0));
}

double discriminator_loss_phase2(double p_positive, double p_negative) {
  return 0.5 * (bce(p_positive, 1.0) + bce(p_negative, 0.0));
}

}  // namespace jigsaw
