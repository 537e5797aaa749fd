#pragma once

#include "spikematch/network.hpp"
#include "spikematch/rng.hpp"

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace spikematch {

/// Channel-major raster with values in [0, 1].
struct Image {
  Shape3 shape{};
  std::vector<double> px;

  Image() = default;
  Image(Shape3 s, std::vector<double> p);
  static Image from(Shape3 s, std::span<const float> p);

  double &at(std::size_t c, std::size_t y, std::size_t x) { return px[(c * shape.h + y) * shape.w + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const { return px[(c * shape.h + y) * shape.w + x]; }
};

enum class AugmentOp : unsigned char {
  rotate, translate_x, translate_y, shear_x, shear_y, contrast, brightness, sharpness,
  posterize, solarize, invert, autocontrast, equalize
};

inline constexpr std::array<AugmentOp, 13> kRandAugmentPool = {
    AugmentOp::rotate,     AugmentOp::translate_x, AugmentOp::translate_y, AugmentOp::shear_x, AugmentOp::shear_y,
    AugmentOp::contrast,   AugmentOp::brightness,  AugmentOp::sharpness,   AugmentOp::posterize, AugmentOp::solarize,
    AugmentOp::invert,     AugmentOp::autocontrast, AugmentOp::equalize};

std::string_view op_name(AugmentOp op);

/// Applies one transform at strength v in [0, 1]; sign is +1 or -1 for the
/// symmetric ops. Strength 0 is the identity for every magnitude-driven op.
Image apply_op(const Image &img, AugmentOp op, double v, double sign = 1.0);

Image hflip(const Image &img);
/// Zero-pads by `pad` on every side and crops the original size at (oy, ox)
/// in padded coordinates; (pad, pad) is the identity.
Image pad_crop(const Image &img, std::size_t pad, std::size_t oy, std::size_t ox);
/// Fills a side x side square centred at (cy, cx) with 0.5.
Image cutout(const Image &img, std::size_t side, std::size_t cy, std::size_t cx);

/// Random crop after 4-pixel zero padding, then horizontal flip with p = 0.5.
Image weak_augment(const Image &img, CounterRng &rng);

/// RandAugment: n ops drawn uniformly with replacement from the pool, each at
/// a strength drawn from [0, magnitude], followed by cutout.
Image strong_augment(const Image &img, std::size_t n, double magnitude, CounterRng &rng,
                     std::span<const AugmentOp> pool = kRandAugmentPool);

} // namespace spikematch
