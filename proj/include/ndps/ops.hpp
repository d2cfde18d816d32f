#ifndef NDPS_OPS_HPP
#define NDPS_OPS_HPP

#include <vector>

#include "ndps/tensor.hpp"

namespace ndps {

class ParamStore;

// Creates a graph leaf for a stored parameter. Gradients flowing into the
// leaf are accumulated into the parameter's grad slot by backward().
Tensor param_leaf(ParamStore& store, const std::string& name,
                  bool with_grad = true);

// --- convolutions -----------------------------------------------------------

// 1-D convolution. x: [in_ch x T], weight: [out_ch x in_ch x k], bias:
// [out_ch] (pass an undefined Tensor for no bias). Centered padding
// (padding = dilation*(k-1)/2) preserves the input length for odd k.
Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              int dilation, int padding);

// Fractionally-strided convolution. x: [in_ch x B], weight:
// [in_ch x out_ch x k]. Output length is exactly B*stride; the full
// transposed-convolution result is center-cropped (or center-placed) to that
// length.
Tensor transposed_conv1d(const Tensor& x, const Tensor& weight,
                         const Tensor& bias, int stride);

// Fixed-coefficient FIR bank applied to a 1-channel signal. taps holds one
// row of coefficients per output channel; each output is the linear
// convolution truncated to the input length after removing `delay` leading
// samples (group-delay compensation). Differentiable w.r.t. x only.
Tensor fir_bank(const Tensor& x, const std::vector<std::vector<double>>& taps,
                int delay);

// --- activations ------------------------------------------------------------

// tanh(x_f + c_f) * sigmoid(x_g + c_g) where f/g are the channel halves of x
// and cond (cond must already be projected to x's shape).
Tensor gated_activation(const Tensor& x, const Tensor& cond);

Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);

// --- elementwise ------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double c);
Tensor add_scalar(const Tensor& x, double c);
Tensor square(const Tensor& x);
Tensor abs(const Tensor& x);
// ln(max(x, floor)); gradient is zero where the floor is active.
Tensor log_floor(const Tensor& x, double floor);
Tensor sqrt(const Tensor& x);
// clip(x + offset, 0, 1); gradient passes only through the interior.
Tensor offset_clip01(const Tensor& x, double offset);

// --- reductions and shape ---------------------------------------------------

Tensor sum(const Tensor& x);   // -> scalar [1]
Tensor mean(const Tensor& x);  // -> scalar [1]

// Concatenate along the channel axis; all inputs must share the time length.
Tensor concat_channels(const std::vector<Tensor>& parts);

// Nearest-neighbor upsampling: each time step is repeated `factor` times.
Tensor repeat_upsample(const Tensor& x, int factor);

// Value copy with no graph connection.
Tensor detach(const Tensor& x);

}  // namespace ndps

#endif  // NDPS_OPS_HPP
