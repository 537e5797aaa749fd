#include "spikematch/augment.hpp"

#include "spikematch/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace spikematch {

Image::Image(Shape3 s, std::vector<double> p) : shape(s), px(std::move(p)) {
  if (px.size() != shape.size())
    throw DimensionError("image pixel count does not match its shape");
}

Image Image::from(Shape3 s, std::span<const float> p) { return Image(s, std::vector<double>(p.begin(), p.end())); }

std::string_view op_name(AugmentOp op) {
  switch (op) {
  case AugmentOp::rotate: return "rotate";
  case AugmentOp::translate_x: return "translate_x";
  case AugmentOp::translate_y: return "translate_y";
  case AugmentOp::shear_x: return "shear_x";
  case AugmentOp::shear_y: return "shear_y";
  case AugmentOp::contrast: return "contrast";
  case AugmentOp::brightness: return "brightness";
  case AugmentOp::sharpness: return "sharpness";
  case AugmentOp::posterize: return "posterize";
  case AugmentOp::solarize: return "solarize";
  case AugmentOp::invert: return "invert";
  case AugmentOp::autocontrast: return "autocontrast";
  case AugmentOp::equalize: return "equalize";
  }
  return "?";
}

namespace {

void clamp01(Image &img) {
  for (double &p : img.px)
    p = std::clamp(p, 0.0, 1.0);
}

// Inverse-mapped affine warp about the image centre, nearest neighbour, zero fill.
// (sy, sx) = A * (dy, dx) + (ty, tx) maps output offsets to source offsets.
Image warp(const Image &img, double a00, double a01, double a10, double a11, double ty, double tx) {
  Image out(img.shape, std::vector<double>(img.px.size(), 0.0));
  const double cy = 0.5 * (img.shape.h - 1), cx = 0.5 * (img.shape.w - 1);
  for (std::size_t y = 0; y < img.shape.h; ++y)
    for (std::size_t x = 0; x < img.shape.w; ++x) {
      const double dy = y - cy, dx = x - cx;
      const long sy = std::lround(a00 * dy + a01 * dx + ty + cy);
      const long sx = std::lround(a10 * dy + a11 * dx + tx + cx);
      if (sy < 0 || sx < 0 || sy >= long(img.shape.h) || sx >= long(img.shape.w))
        continue;
      for (std::size_t c = 0; c < img.shape.c; ++c)
        out.at(c, y, x) = img.at(c, sy, sx);
    }
  return out;
}

double channel_mean(const Image &img) {
  double s = 0.0;
  for (double p : img.px)
    s += p;
  return s / img.px.size();
}

Image blend(const Image &base, const Image &img, double factor) {
  Image out = img;
  for (std::size_t i = 0; i < out.px.size(); ++i)
    out.px[i] = base.px[i] + factor * (img.px[i] - base.px[i]);
  return out;
}

Image smooth3(const Image &img) {
  // 3x3 smoothing with centre weight 5; the border is left untouched.
  Image out = img;
  const auto H = img.shape.h, W = img.shape.w;
  for (std::size_t c = 0; c < img.shape.c; ++c)
    for (std::size_t y = 1; y + 1 < H; ++y)
      for (std::size_t x = 1; x + 1 < W; ++x) {
        double s = 4.0 * img.at(c, y, x);
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            s += img.at(c, y + dy, x + dx);
        out.at(c, y, x) = s / 13.0;
      }
  return out;
}

} // namespace

Image apply_op(const Image &img, AugmentOp op, double v, double sign) {
  v = std::clamp(v, 0.0, 1.0);
  const double s = sign < 0 ? -1.0 : 1.0;
  Image out = img;
  switch (op) {
  case AugmentOp::rotate: {
    if (v == 0.0)
      break;
    const double a = s * v * 30.0 * std::numbers::pi / 180.0;
    out = warp(img, std::cos(a), std::sin(a), -std::sin(a), std::cos(a), 0.0, 0.0);
    break;
  }
  case AugmentOp::translate_x:
    if (v != 0.0)
      out = warp(img, 1, 0, 0, 1, 0.0, -s * v * 0.3 * img.shape.w);
    break;
  case AugmentOp::translate_y:
    if (v != 0.0)
      out = warp(img, 1, 0, 0, 1, -s * v * 0.3 * img.shape.h, 0.0);
    break;
  case AugmentOp::shear_x:
    if (v != 0.0)
      out = warp(img, 1, 0, s * v * 0.3, 1, 0.0, 0.0);
    break;
  case AugmentOp::shear_y:
    if (v != 0.0)
      out = warp(img, 1, s * v * 0.3, 0, 1, 0.0, 0.0);
    break;
  case AugmentOp::contrast: {
    if (v == 0.0)
      break;
    Image grey = img;
    std::fill(grey.px.begin(), grey.px.end(), channel_mean(img));
    out = blend(grey, img, 1.0 + s * 0.9 * v);
    break;
  }
  case AugmentOp::brightness:
    for (double &p : out.px)
      p *= 1.0 + s * 0.9 * v;
    break;
  case AugmentOp::sharpness:
    if (v != 0.0)
      out = blend(smooth3(img), img, 1.0 + s * 0.9 * v);
    break;
  case AugmentOp::posterize: {
    const int bits = 8 - static_cast<int>(std::lround(4.0 * v));
    if (bits >= 8)
      break;
    const int mask = ~((1 << (8 - bits)) - 1);
    for (double &p : out.px)
      p = static_cast<double>(static_cast<int>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0)) & mask) / 255.0;
    break;
  }
  case AugmentOp::solarize: {
    const double threshold = 1.0 - v;
    for (double &p : out.px)
      if (p > threshold)
        p = 1.0 - p;
    break;
  }
  case AugmentOp::invert:
    for (double &p : out.px)
      p = 1.0 - p;
    break;
  case AugmentOp::autocontrast: {
    const std::size_t plane = std::size_t{img.shape.h} * img.shape.w;
    for (std::size_t c = 0; c < img.shape.c; ++c) {
      auto first = out.px.begin() + c * plane;
      const auto [lo, hi] = std::minmax_element(first, first + plane);
      const double l = *lo, h = *hi;
      if (h > l)
        for (auto it = first; it != first + plane; ++it)
          *it = (*it - l) / (h - l);
    }
    break;
  }
  case AugmentOp::equalize: {
    const std::size_t plane = std::size_t{img.shape.h} * img.shape.w;
    for (std::size_t c = 0; c < img.shape.c; ++c) {
      std::array<std::size_t, 256> hist{};
      auto level = [](double p) { return static_cast<std::size_t>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0)); };
      for (std::size_t i = 0; i < plane; ++i)
        ++hist[level(img.px[c * plane + i])];
      std::array<double, 256> cdf{};
      std::size_t run = 0;
      for (std::size_t b = 0; b < 256; ++b) {
        run += hist[b];
        cdf[b] = static_cast<double>(run) / plane;
      }
      for (std::size_t i = 0; i < plane; ++i)
        out.px[c * plane + i] = cdf[level(img.px[c * plane + i])];
    }
    break;
  }
  }
  clamp01(out);
  return out;
}

Image hflip(const Image &img) {
  Image out = img;
  for (std::size_t c = 0; c < img.shape.c; ++c)
    for (std::size_t y = 0; y < img.shape.h; ++y)
      for (std::size_t x = 0; x < img.shape.w; ++x)
        out.at(c, y, x) = img.at(c, y, img.shape.w - 1 - x);
  return out;
}

Image pad_crop(const Image &img, std::size_t pad, std::size_t oy, std::size_t ox) {
  if (oy > 2 * pad || ox > 2 * pad)
    throw ContractError("pad_crop: offset outside the padded image");
  Image out(img.shape, std::vector<double>(img.px.size(), 0.0));
  for (std::size_t c = 0; c < img.shape.c; ++c)
    for (std::size_t y = 0; y < img.shape.h; ++y) {
      const long sy = long(y + oy) - long(pad);
      if (sy < 0 || sy >= long(img.shape.h))
        continue;
      for (std::size_t x = 0; x < img.shape.w; ++x) {
        const long sx = long(x + ox) - long(pad);
        if (sx >= 0 && sx < long(img.shape.w))
          out.at(c, y, x) = img.at(c, sy, sx);
      }
    }
  return out;
}

Image cutout(const Image &img, std::size_t side, std::size_t cy, std::size_t cx) {
  Image out = img;
  if (side == 0)
    return out;
  const long half = long(side) / 2;
  const long y0 = std::max(0L, long(cy) - half), x0 = std::max(0L, long(cx) - half);
  const long y1 = std::min(long(img.shape.h), long(cy) - half + long(side));
  const long x1 = std::min(long(img.shape.w), long(cx) - half + long(side));
  for (std::size_t c = 0; c < img.shape.c; ++c)
    for (long y = y0; y < y1; ++y)
      for (long x = x0; x < x1; ++x)
        out.at(c, y, x) = 0.5;
  return out;
}

Image weak_augment(const Image &img, CounterRng &rng) {
  if (img.shape.h < 2 || img.shape.w < 2)
    throw ContractError("weak_augment: image smaller than 2x2");
  constexpr std::size_t pad = 4;
  const std::size_t oy = rng.below(2 * pad + 1), ox = rng.below(2 * pad + 1);
  Image out = pad_crop(img, pad, oy, ox);
  if (rng.bernoulli(0.5))
    out = hflip(out);
  return out;
}

Image strong_augment(const Image &img, std::size_t n, double magnitude, CounterRng &rng,
                     std::span<const AugmentOp> pool) {
  if (pool.empty())
    throw ContractError("strong_augment: empty transform pool");
  if (n == 0)
    throw ContractError("strong_augment: n must be >= 1");
  Image out = img;
  for (std::size_t i = 0; i < n; ++i) {
    const AugmentOp op = pool[rng.below(pool.size())];
    const double v = rng.uniform(0.0, magnitude);
    const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
    out = apply_op(out, op, v, sign);
  }
  const double frac = rng.uniform(0.0, magnitude);
  const auto side = static_cast<std::size_t>(std::lround(frac * 0.5 * std::min(img.shape.h, img.shape.w)));
  const std::size_t cy = rng.below(img.shape.h), cx = rng.below(img.shape.w);
  return cutout(out, side, cy, cx);
}

} // namespace spikematch
