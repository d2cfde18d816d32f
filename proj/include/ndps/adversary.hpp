#ifndef NDPS_ADVERSARY_HPP
#define NDPS_ADVERSARY_HPP

#include <vector>

#include "ndps/random.hpp"
#include "ndps/tensor.hpp"

namespace ndps {

// Waveform discriminator: ten non-causal dilated convolutions with leaky
// ReLU activations. Interior dilations rise linearly from 1 to 8; the first
// and last layers use dilation 1.
struct DiscriminatorConfig {
  int layers = 10;
  int kernel_size = 3;
  int width = 64;
  double leaky_slope = 0.2;

  std::vector<int> dilations() const;
  // Samples a score depends on; inputs shorter than this are rejected.
  int receptive_field() const;
};

// Throws ArgumentError when the pinned layer count or slope is altered or
// the free fields are out of range.
void validate_config(const DiscriminatorConfig& cfg);

DiscriminatorConfig paper_discriminator_config();
DiscriminatorConfig toy_discriminator_config();  // width 8

// Creates the discriminator parameters (prefix "d.") with uniform
// +-sqrt(1/fan_in) weights and zero biases.
void init_discriminator_params(ParamStore& store,
                               const DiscriminatorConfig& cfg,
                               RandomStream& rng);

// Waveform [1 x T] -> real-valued per-sample scores [1 x T]. No output
// nonlinearity (least-squares objective). Throws ArgumentError when the
// input is shorter than the receptive field.
Tensor discriminate(const Tensor& x, ParamStore& store,
                    const DiscriminatorConfig& cfg, bool with_grad = true);

// Generator-side adversarial term: mean((1 - D(x_hat))^2) over samples.
Tensor adversarial_loss_g(const Tensor& pred, ParamStore& store,
                          const DiscriminatorConfig& cfg,
                          bool with_grad = true);

// Discriminator objective: mean((1 - D(x))^2) + mean(D(x_hat)^2). The
// caller must pass a detached x_hat so no generator gradients flow.
Tensor discriminator_loss(const Tensor& real, const Tensor& pred,
                          ParamStore& store, const DiscriminatorConfig& cfg,
                          bool with_grad = true);

// l_stft + lambda * l_adv. Throws ArgumentError for lambda <= 0.
Tensor combined_loss(const Tensor& l_stft, const Tensor& l_adv,
                     double lambda);

inline constexpr double kDefaultLambda = 4.0;

}  // namespace ndps

#endif  // NDPS_ADVERSARY_HPP
