#include <doctest.h>

#include "spikematch/augment.hpp"
#include "spikematch/error.hpp"

#include <algorithm>

using namespace spikematch;

namespace {

Image random_image(CounterRng &rng, Shape3 s) {
  std::vector<double> px(s.size());
  for (double &p : px)
    p = rng.uniform();
  return Image(s, px);
}

} // namespace

TEST_SUITE("augment") {

TEST_CASE("hflip is an involution and mirrors columns") {
  CounterRng rng(1);
  const Image img = random_image(rng, {2, 5, 7});
  CHECK(hflip(hflip(img)).px == img.px);
  const Image f = hflip(img);
  CHECK(f.at(1, 3, 0) == img.at(1, 3, 6));
}

TEST_CASE("pad_crop at the centre offset is the identity") {
  CounterRng rng(2);
  const Image img = random_image(rng, {1, 8, 8});
  CHECK(pad_crop(img, 4, 4, 4).px == img.px);
  const Image shifted = pad_crop(img, 4, 5, 4);  // content moves up one row
  CHECK(shifted.at(0, 0, 3) == img.at(0, 1, 3));
  CHECK(shifted.at(0, 7, 3) == 0.0);
  CHECK_THROWS_AS(pad_crop(img, 4, 9, 0), ContractError);
}

TEST_CASE("invert twice is the identity on [0,1] images") {
  CounterRng rng(3);
  const Image img = random_image(rng, {3, 4, 4});
  const Image back = apply_op(apply_op(img, AugmentOp::invert, 0.5), AugmentOp::invert, 0.5);
  for (std::size_t i = 0; i < img.px.size(); ++i)
    CHECK(back.px[i] == doctest::Approx(img.px[i]).epsilon(1e-15));
}

TEST_CASE("zero strength leaves the image unchanged") {
  CounterRng rng(4);
  const Image img = random_image(rng, {1, 9, 9});
  for (AugmentOp op : {AugmentOp::rotate, AugmentOp::translate_x, AugmentOp::translate_y, AugmentOp::shear_x,
                       AugmentOp::shear_y, AugmentOp::contrast, AugmentOp::brightness, AugmentOp::sharpness,
                       AugmentOp::posterize, AugmentOp::solarize}) {
    CAPTURE(op_name(op));
    CHECK(apply_op(img, op, 0.0, -1.0).px == img.px);
  }
}

TEST_CASE("same generator state gives the same augmentation") {
  CounterRng rng(5);
  const Image img = random_image(rng, {1, 12, 12});
  CounterRng a(77, 3), b(77, 3);
  CHECK(weak_augment(img, a).px == weak_augment(img, b).px);
  CHECK(strong_augment(img, 3, 1.0, a).px == strong_augment(img, 3, 1.0, b).px);
  CounterRng c(78, 3);
  CHECK(strong_augment(img, 3, 1.0, c).px != strong_augment(img, 3, 1.0, a).px);
}

TEST_CASE("property: every transform keeps pixels in [0,1]") {
  CounterRng rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const Image img = random_image(rng, {1 + std::uint32_t(rng.below(3)), 6, 6});
    const Image out = strong_augment(weak_augment(img, rng), 1 + rng.below(4), rng.uniform(), rng);
    CHECK(out.shape == img.shape);
    CHECK(std::all_of(out.px.begin(), out.px.end(), [](double p) { return p >= 0.0 && p <= 1.0; }));
  }
  for (AugmentOp op : kRandAugmentPool) {
    const Image img = random_image(rng, {1, 6, 6});
    const Image out = apply_op(img, op, 1.0, 1.0);
    CHECK(std::all_of(out.px.begin(), out.px.end(), [](double p) { return p >= 0.0 && p <= 1.0; }));
  }
}

TEST_CASE("cutout fills a grey square") {
  const Image img({1, 6, 6}, std::vector<double>(36, 1.0));
  const Image out = cutout(img, 2, 3, 3);
  CHECK(out.at(0, 2, 2) == 0.5);
  CHECK(out.at(0, 3, 3) == 0.5);
  CHECK(out.at(0, 4, 4) == 1.0);
  CHECK(std::count(out.px.begin(), out.px.end(), 0.5) == 4);
  CHECK(cutout(img, 0, 3, 3).px == img.px);
}

TEST_CASE("invalid arguments") {
  CounterRng rng(7);
  CHECK_THROWS_AS(Image({1, 2, 2}, {0.0}), DimensionError);
  const Image tiny({1, 1, 1}, {0.5});
  CHECK_THROWS_AS(weak_augment(tiny, rng), ContractError);
  const Image img({1, 4, 4}, std::vector<double>(16, 0.2));
  CHECK_THROWS_AS(strong_augment(img, 0, 1.0, rng), ContractError);
  CHECK_THROWS_AS(strong_augment(img, 2, 1.0, rng, {}), ContractError);
}

} // TEST_SUITE
