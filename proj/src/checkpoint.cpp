#include "spikematch/checkpoint.hpp"

#include "spikematch/binio.hpp"
#include "spikematch/error.hpp"

namespace spikematch {

namespace {
constexpr char kMagic[4] = {'S', 'P', 'K', 'M'};
}

std::vector<unsigned char> encode_checkpoint(const Checkpoint &ckpt) {
  binio::Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  const Shape3 in = ckpt.net.input_shape();
  w.u32(in.c);
  w.u32(in.h);
  w.u32(in.w);

  const NeuronConfig &n = ckpt.neuron;
  w.f64(n.tau);
  w.f64(n.v_th);
  w.u8(static_cast<std::uint8_t>(n.reset));
  w.u8(static_cast<std::uint8_t>(n.surrogate));
  w.f64(n.gamma);
  w.f64(n.width);
  w.f64(n.smooth_k);
  w.u8(n.detach_reset ? 1 : 0);
  w.u8(static_cast<std::uint8_t>(ckpt.net.readout_mode));

  const auto &layers = ckpt.net.layers();
  w.u32(static_cast<std::uint32_t>(layers.size()));
  for (const auto &s : layers) {
    w.u8(static_cast<std::uint8_t>(s.kind));
    w.u32(s.in_dim);
    w.u32(s.out_dim);
    w.u32(s.c_in);
    w.u32(s.c_out);
    w.u32(s.kernel);
    w.u32(s.stride);
    w.u32(s.padding);
    w.u8(s.pool ? 1 : 0);
  }
  for (const auto &W : ckpt.net.weights) {
    w.u64(W.size());
    for (double v : W)
      w.f32(static_cast<float>(v));
  }
  w.str(ckpt.run_config);
  return w.buffer();
}

Checkpoint decode_checkpoint(const std::vector<unsigned char> &bytes) {
  binio::Reader r(bytes);
  char magic[4];
  r.bytes(magic, 4);
  if (std::string_view(magic, 4) != std::string_view(kMagic, 4))
    throw FormatError(FormatError::Kind::bad_magic, "not a checkpoint (bad magic)");
  const auto version = r.u32();
  if (version != kCheckpointVersion)
    throw FormatError(FormatError::Kind::bad_version,
                      "checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  Shape3 in;
  in.c = r.u32();
  in.h = r.u32();
  in.w = r.u32();

  Checkpoint ck;
  NeuronConfig &n = ck.neuron;
  n.tau = r.f64();
  n.v_th = r.f64();
  const auto reset = r.u8();
  const auto surrogate = r.u8();
  if (reset > 1 || surrogate > 1)
    throw FormatError(FormatError::Kind::invalid_header, "invalid neuron configuration");
  n.reset = static_cast<ResetKind>(reset);
  n.surrogate = static_cast<SurrogateKind>(surrogate);
  n.gamma = r.f64();
  n.width = r.f64();
  n.smooth_k = r.f64();
  n.detach_reset = r.u8() != 0;
  const auto readout_mode = r.u8();
  if (readout_mode > 1)
    throw FormatError(FormatError::Kind::invalid_header, "invalid readout mode");

  const auto count = r.u32();
  if (count == 0 || count > 1024)
    throw FormatError(FormatError::Kind::invalid_header, "implausible layer count");
  std::vector<LayerSpec> layers(count);
  for (auto &s : layers) {
    const auto kind = r.u8();
    if (kind > 2)
      throw FormatError(FormatError::Kind::invalid_header, "unknown layer kind");
    s.kind = static_cast<LayerKind>(kind);
    s.in_dim = r.u32();
    s.out_dim = r.u32();
    s.c_in = r.u32();
    s.c_out = r.u32();
    s.kernel = r.u32();
    s.stride = r.u32();
    s.padding = r.u32();
    s.pool = r.u8() != 0;
  }
  try {
    ck.net = Network(in, std::move(layers));
    n.validate();
  } catch (const FormatError &) {
    throw;
  } catch (const Error &e) {
    throw FormatError(FormatError::Kind::invalid_header, std::string("invalid checkpoint: ") + e.what());
  }
  ck.net.readout_mode = static_cast<ReadoutMode>(readout_mode);
  for (auto &W : ck.net.weights) {
    const auto size = r.u64();
    if (size != W.size())
      throw FormatError(FormatError::Kind::invalid_header, "weight tensor size does not match its layer");
    r.need(size * 4);
    for (double &v : W)
      v = static_cast<double>(r.f32());
  }
  ck.run_config = r.str();
  return ck;
}

void save_checkpoint(const std::string &path, const Checkpoint &ckpt) {
  binio::write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string &path) { return decode_checkpoint(binio::read_file(path)); }

} // namespace spikematch
