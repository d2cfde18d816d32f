#include "ndps/adversary.hpp"

#include <cmath>
#include <string>

#include "ndps/ops.hpp"

namespace ndps {

namespace {

std::string layer_name(int i) { return "d.l" + std::to_string(i); }

}  // namespace

std::vector<int> DiscriminatorConfig::dilations() const {
  std::vector<int> d(static_cast<std::size_t>(layers), 1);
  for (int i = 1; i + 1 < layers; ++i) d[static_cast<std::size_t>(i)] = i;
  return d;
}

int DiscriminatorConfig::receptive_field() const {
  int span = 1;
  for (int d : dilations()) span += d * (kernel_size - 1);
  return span;
}

void validate_config(const DiscriminatorConfig& cfg) {
  if (cfg.layers != 10)
    throw ArgumentError("discriminator: layer count is fixed at 10");
  if (cfg.leaky_slope != 0.2)
    throw ArgumentError("discriminator: leaky slope is fixed at 0.2");
  if (cfg.kernel_size < 3 || cfg.kernel_size % 2 == 0)
    throw ArgumentError("discriminator: kernel_size must be odd and >= 3");
  if (cfg.width < 1)
    throw ArgumentError("discriminator: width must be positive");
}

DiscriminatorConfig paper_discriminator_config() { return {}; }

DiscriminatorConfig toy_discriminator_config() {
  DiscriminatorConfig cfg;
  cfg.width = 8;
  return cfg;
}

void init_discriminator_params(ParamStore& store,
                               const DiscriminatorConfig& cfg,
                               RandomStream& rng) {
  validate_config(cfg);
  for (int i = 0; i < cfg.layers; ++i) {
    const int in_ch = i == 0 ? 1 : cfg.width;
    const int out_ch = i + 1 == cfg.layers ? 1 : cfg.width;
    const double bound = std::sqrt(1.0 / (in_ch * cfg.kernel_size));
    Parameter& w =
        store.create(layer_name(i) + ".w", {out_ch, in_ch, cfg.kernel_size});
    for (double& v : w.value) v = bound * (2.0 * rng.uniform() - 1.0);
    store.create(layer_name(i) + ".b", {out_ch});
  }
}

Tensor discriminate(const Tensor& x, ParamStore& store,
                    const DiscriminatorConfig& cfg, bool with_grad) {
  validate_config(cfg);
  if (!x.defined() || x.ndim() != 2 || x.channels() != 1)
    throw ArgumentError("discriminate: input must be [1 x T]");
  if (x.length() < cfg.receptive_field())
    throw ArgumentError("discriminate: input shorter than the receptive "
                        "field (" + std::to_string(cfg.receptive_field()) +
                        " samples)");
  const std::vector<int> dils = cfg.dilations();
  Tensor h = x;
  for (int i = 0; i < cfg.layers; ++i) {
    const int d = dils[static_cast<std::size_t>(i)];
    Tensor w = param_leaf(store, layer_name(i) + ".w", with_grad);
    Tensor b = param_leaf(store, layer_name(i) + ".b", with_grad);
    h = conv1d(h, w, b, d, d * (cfg.kernel_size - 1) / 2);
    if (i + 1 < cfg.layers) h = leaky_relu(h, cfg.leaky_slope);
  }
  return h;
}

Tensor adversarial_loss_g(const Tensor& pred, ParamStore& store,
                          const DiscriminatorConfig& cfg, bool with_grad) {
  Tensor scores = discriminate(pred, store, cfg, with_grad);
  return mean(square(add_scalar(scale(scores, -1.0), 1.0)));
}

Tensor discriminator_loss(const Tensor& real, const Tensor& pred,
                          ParamStore& store, const DiscriminatorConfig& cfg,
                          bool with_grad) {
  Tensor real_term = mean(square(add_scalar(
      scale(discriminate(real, store, cfg, with_grad), -1.0), 1.0)));
  Tensor fake_term =
      mean(square(discriminate(pred, store, cfg, with_grad)));
  return add(real_term, fake_term);
}

Tensor combined_loss(const Tensor& l_stft, const Tensor& l_adv,
                     double lambda) {
  if (!(lambda > 0.0))
    throw ArgumentError("combined_loss: lambda must be positive");
  return add(l_stft, scale(l_adv, lambda));
}

}  // namespace ndps
