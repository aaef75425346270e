#pragma once

#include <span>

namespace jigsaw {

inline constexpr double kProbabilityFloor = 1e-7;

// Clamp to [1e-7, 1 - 1e-7].
double clamp_probability(double p);

// Binary cross entropy of a (clamped) probability against a 0/1 target.
double bce(double p, double target);
// d bce / d p; zero where the clamp is active.
double bce_grad(double p, double target);

// Mean absolute difference; 0 for empty spans.
double mean_l1(std::span<const double> a, std::span<const double> b);

// Adversarial term plus lambda-weighted L1 between the original and generated band.
double generator_loss(double d_pred, std::span<const double> original_band,
                      std::span<const double> generated_band, double lambda);

// Real/fake discriminator objective of the inpainting phase.
double discriminator_loss_phase1(double p_real, double p_fake);

// Positive/negative discriminator objective of the classification phase.
double discriminator_loss_phase2(double p_positive, double p_negative);

}  // namespace jigsaw
