#include "spikematch/data.hpp"

#include "spikematch/binio.hpp"
#include "spikematch/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>

namespace spikematch {

std::vector<double> Dataset::image_f64(std::size_t i) const {
  const auto img = image(i);
  return {img.begin(), img.end()};
}

void Dataset::validate() const {
  if (labels.empty())
    throw ContractError("dataset is empty");
  if (classes == 0)
    throw ContractError("dataset has zero classes");
  if (pixels.size() != labels.size() * shape.size())
    throw DimensionError("dataset pixel count does not match N * C * H * W");
  for (auto l : labels)
    if (l >= classes)
      throw ContractError("label out of range");
}

namespace {
constexpr char kSdfMagic[4] = {'S', 'D', 'F', '1'};
}

std::vector<unsigned char> encode_sdf(const Dataset &ds) {
  ds.validate();
  binio::Writer w;
  w.bytes(kSdfMagic, 4);
  w.u32(static_cast<std::uint32_t>(ds.size()));
  w.u32(ds.shape.c);
  w.u32(ds.shape.h);
  w.u32(ds.shape.w);
  w.u32(ds.classes);
  for (float p : ds.pixels)
    w.f32(p);
  w.bytes(ds.labels.data(), ds.labels.size());
  return w.buffer();
}

Dataset decode_sdf(const std::vector<unsigned char> &bytes) {
  binio::Reader r(bytes);
  if (bytes.size() < 4)
    throw FormatError(FormatError::Kind::truncated, "SDF file shorter than its magic");
  char magic[4];
  r.bytes(magic, 4);
  if (std::string_view(magic, 4) != std::string_view(kSdfMagic, 4))
    throw FormatError(FormatError::Kind::bad_magic, "not an SDF file (bad magic)");
  Dataset ds;
  const auto n = r.u32();
  ds.shape.c = r.u32();
  ds.shape.h = r.u32();
  ds.shape.w = r.u32();
  ds.classes = r.u32();
  if (n == 0 || ds.shape.size() == 0 || ds.classes == 0 || ds.classes > 256)
    throw FormatError(FormatError::Kind::invalid_header, "SDF header has zero or out-of-range dimensions");
  const std::size_t count = std::size_t{n} * ds.shape.size();
  r.need(count * 4 + n);
  ds.pixels.resize(count);
  for (auto &p : ds.pixels)
    p = r.f32();
  ds.labels.resize(n);
  r.bytes(ds.labels.data(), n);
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    if (ds.labels[i] >= ds.classes)
      throw FormatError(FormatError::Kind::label_out_of_range,
                        "label " + std::to_string(ds.labels[i]) + " at index " + std::to_string(i) +
                            " is not below the class count " + std::to_string(ds.classes));
  return ds;
}

void save_sdf(const std::string &path, const Dataset &ds) { binio::write_file_atomic(path, encode_sdf(ds)); }

Dataset load_sdf(const std::string &path) { return decode_sdf(binio::read_file(path)); }

namespace {

std::uint32_t be32(const std::vector<unsigned char> &b, std::size_t at) {
  if (at + 4 > b.size())
    throw FormatError(FormatError::Kind::truncated, "IDX header truncated");
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) | b[at + 3];
}

} // namespace

Dataset load_idx(const std::string &images_path, const std::string &labels_path) {
  const auto img = binio::read_file(images_path);
  const auto lab = binio::read_file(labels_path);
  if (be32(img, 0) != 0x00000803)
    throw FormatError(FormatError::Kind::bad_magic, images_path + " is not an IDX3 ubyte image file");
  if (be32(lab, 0) != 0x00000801)
    throw FormatError(FormatError::Kind::bad_magic, labels_path + " is not an IDX1 ubyte label file");
  const auto n = be32(img, 4), h = be32(img, 8), w = be32(img, 12);
  if (be32(lab, 4) != n)
    throw FormatError(FormatError::Kind::invalid_header, "IDX image and label counts differ");
  const std::size_t count = std::size_t{n} * h * w;
  if (img.size() < 16 + count || lab.size() < 8 + std::size_t{n})
    throw FormatError(FormatError::Kind::truncated, "IDX payload truncated");
  Dataset ds;
  ds.shape = {1, h, w};
  ds.pixels.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    ds.pixels[i] = static_cast<float>(img[16 + i]) / 255.0f;
  ds.labels.assign(lab.begin() + 8, lab.begin() + 8 + n);
  ds.classes = n ? *std::max_element(ds.labels.begin(), ds.labels.end()) + 1u : 0u;
  ds.validate();
  return ds;
}

SslSplit make_split(const Dataset &ds, std::size_t n_per_class, std::uint64_t seed, bool include_labeled) {
  ds.validate();
  if (n_per_class == 0)
    throw ContractError("make_split: n_per_class must be >= 1");
  std::vector<std::vector<std::size_t>> by_class(ds.classes);
  for (std::size_t i = 0; i < ds.size(); ++i)
    by_class[ds.labels[i]].push_back(i);
  CounterRng rng = purpose_stream(seed, RngPurpose::split);
  SslSplit split;
  split.seed = seed;
  std::vector<bool> is_labeled(ds.size(), false);
  for (std::uint32_t c = 0; c < ds.classes; ++c) {
    auto &idx = by_class[c];
    if (idx.size() < n_per_class)
      throw ContractError("make_split: class " + std::to_string(c) + " has only " + std::to_string(idx.size()) +
                          " examples, " + std::to_string(n_per_class) + " requested");
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < n_per_class; ++k) {
      split.labeled.push_back(idx[k]);
      is_labeled[idx[k]] = true;
    }
  }
  std::sort(split.labeled.begin(), split.labeled.end());
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (include_labeled || !is_labeled[i])
      split.unlabeled.push_back(i);
  return split;
}

void save_split_manifest(const std::string &path, const SslSplit &split) {
  nlohmann::json j;
  j["seed"] = split.seed;
  j["labeled"] = split.labeled;
  j["unlabeled_count"] = split.unlabeled.size();
  std::ofstream out(path);
  if (!out)
    throw FormatError(FormatError::Kind::io, "cannot write " + path);
  out << j.dump(2) << "\n";
}

EpochSampler::EpochSampler(std::vector<std::size_t> pool, CounterRng rng) : pool_(std::move(pool)), rng_(rng) {
  order_ = pool_;
  cursor_ = order_.size();
}

void EpochSampler::reshuffle() {
  order_ = pool_;
  std::shuffle(order_.begin(), order_.end(), rng_);
  cursor_ = 0;
}

std::size_t EpochSampler::next() {
  if (pool_.empty())
    throw ContractError("sampling from an empty pool");
  if (cursor_ >= order_.size())
    reshuffle();
  return order_[cursor_++];
}

BatchSampler::BatchSampler(const SslSplit &split, std::size_t batch, std::size_t mu, std::uint64_t seed)
    : batch_(batch), mu_(mu), labeled_(split.labeled, purpose_stream(seed, RngPurpose::batching).substream(1)),
      unlabeled_(split.unlabeled, purpose_stream(seed, RngPurpose::batching).substream(2)) {
  if (batch == 0 || mu == 0)
    throw ContractError("batch sampler needs B >= 1 and mu >= 1");
  if (labeled_.empty())
    throw ContractError("batch sampler: labeled pool is empty");
}

BatchIndices BatchSampler::next() {
  BatchIndices b;
  b.labeled.reserve(batch_);
  for (std::size_t i = 0; i < batch_; ++i)
    b.labeled.push_back(labeled_.next());
  if (!unlabeled_.empty()) {
    b.unlabeled.reserve(batch_ * mu_);
    for (std::size_t i = 0; i < batch_ * mu_; ++i)
      b.unlabeled.push_back(unlabeled_.next());
  }
  return b;
}

namespace {

double gaussian_bump(double y, double x, double cy, double cx, double sigma) {
  const double dy = y - cy, dx = x - cx;
  return std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
}

} // namespace

Dataset make_synthetic(SyntheticKind kind, std::uint32_t classes, std::size_t per_class, std::uint32_t height,
                       std::uint32_t width, double noise, std::uint64_t seed) {
  if (classes == 0 || per_class == 0 || height < 2 || width < 2)
    throw ContractError("make_synthetic: counts and sizes must be positive");
  Dataset ds;
  ds.shape = {1, height, width};
  ds.classes = classes;
  ds.pixels.reserve(std::size_t{classes} * per_class * ds.shape.size());
  const CounterRng base = purpose_stream(seed, RngPurpose::synth);
  const double scale = std::min(height, width) / 28.0;
  const double sigma = 1.6 * scale;
  const double jitter = 6.0 * scale;

  for (std::size_t k = 0; k < per_class; ++k) {
    for (std::uint32_t c = 0; c < classes; ++c) {
      CounterRng rng = base.substream(c, k);
      std::normal_distribution<double> gauss(0.0, 1.0);
      std::vector<double> img(ds.shape.size(), 0.0);
      if (kind == SyntheticKind::gaussian_blobs) {
        // Pairs are horizontal for even classes, vertical for odd ones, with a
        // spacing that grows every two classes.
        const bool horizontal = c % 2 == 0;
        const double spacing = (5.0 + 4.0 * (c / 2)) * scale;
        const double cy = 0.5 * (height - 1) + rng.uniform(-jitter, jitter);
        const double cx = 0.5 * (width - 1) + rng.uniform(-jitter, jitter);
        const double oy = horizontal ? 0.0 : 0.5 * spacing, ox = horizontal ? 0.5 * spacing : 0.0;
        for (std::uint32_t y = 0; y < height; ++y)
          for (std::uint32_t x = 0; x < width; ++x)
            img[y * width + x] = gaussian_bump(y, x, cy - oy, cx - ox, sigma) + gaussian_bump(y, x, cy + oy, cx + ox, sigma);
      } else {
        const double angle = std::numbers::pi * c / classes;
        const double freq = 2.0 * std::numbers::pi / ((4.0 + 2.0 * (c % 3)) * scale);
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double ca = std::cos(angle), sa = std::sin(angle);
        for (std::uint32_t y = 0; y < height; ++y)
          for (std::uint32_t x = 0; x < width; ++x)
            img[y * width + x] = 0.5 + 0.5 * std::sin(freq * (ca * x + sa * y) + phase);
      }
      for (double &p : img) {
        if (noise > 0.0)
          p += noise * gauss(rng);
        ds.pixels.push_back(static_cast<float>(std::clamp(p, 0.0, 1.0)));
      }
      ds.labels.push_back(static_cast<std::uint8_t>(c));
    }
  }
  return ds;
}

} // namespace spikematch
