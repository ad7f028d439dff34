#pragma once

#include "sfwi/ad/tape.hpp"

// Differentiable primitives. Images are [C,H,W] (batch of one), vectors [N],
// convolution kernels [Cout,Cin,K,K] with K odd and "same" zero padding.

namespace sfwi::ad {

/// 2D convolution, stride 1 or 2. With stride 2 the output is
/// ceil(H/2) x ceil(W/2).
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride = 1);

/// Group normalization with per-channel affine (gamma, beta of length C).
Tensor group_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, int groups,
                  double eps = 1e-5);

Tensor silu(const Tensor& x);

/// Nearest-neighbour 2x upsampling of [C,H,W].
Tensor upsample2x(const Tensor& x);

/// y = W x + b with W [out,in].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
/// a * s + c elementwise.
Tensor affine(const Tensor& a, double s, double c);

/// x [C,H,W] plus v [C] broadcast over each channel.
Tensor add_channel(const Tensor& x, const Tensor& v);

/// Channel concatenation of two [.,H,W] images.
Tensor concat(const Tensor& a, const Tensor& b);

/// Zero padding of [C,H,W]: top/left by (pt,pl), bottom/right by (pb,pr).
Tensor pad(const Tensor& x, int pt, int pb, int pl, int pr);
/// Inverse window of pad().
Tensor crop(const Tensor& x, int top, int left, int h, int w);

}  // namespace sfwi::ad
