#include "spikematch/config.hpp"

#include "spikematch/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

namespace spikematch {

std::string_view ablation_name(Ablation a) {
  switch (a) {
  case Ablation::spikematch: return "spikematch";
  case Ablation::averaged: return "averaged";
  case Ablation::intra: return "intra";
  case Ablation::no_da: return "no_da";
  case Ablation::threshold: return "threshold";
  }
  return "?";
}

namespace {

[[noreturn]] void bad(const std::string &key, const std::string &value, const std::string &why) {
  throw ConfigError(key, "config key '" + key + "': invalid value '" + value + "' (" + why + ")");
}

std::uint64_t to_u64(const std::string &key, const std::string &v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    bad(key, v, "expected a non-negative integer");
  return out;
}

double to_f64(const std::string &key, const std::string &v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size())
      bad(key, v, "expected a number");
    return d;
  } catch (const std::invalid_argument &) {
    bad(key, v, "expected a number");
  } catch (const std::out_of_range &) {
    bad(key, v, "number out of range");
  }
}

bool to_bool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1" || v == "yes")
    return true;
  if (v == "false" || v == "0" || v == "no")
    return false;
  bad(key, v, "expected true or false");
}

std::string fmt(double d) {
  std::ostringstream os;
  os << std::setprecision(17) << d;
  return os.str();
}

struct Field {
  std::function<void(RunConfig &, const std::string &)> set;
  std::function<std::string(const RunConfig &)> get;
};

#define SM_SIZE(name, member)                                                                                   \
  {name,                                                                                                        \
   {[](RunConfig &c, const std::string &v) { c.member = static_cast<decltype(c.member)>(to_u64(name, v)); }, \
    [](const RunConfig &c) { return std::to_string(c.member); }}}
#define SM_REAL(name, member)                                                        \
  {name,                                                                             \
   {[](RunConfig &c, const std::string &v) { c.member = to_f64(name, v); },          \
    [](const RunConfig &c) { return fmt(c.member); }}}
#define SM_BOOL(name, member)                                                        \
  {name,                                                                             \
   {[](RunConfig &c, const std::string &v) { c.member = to_bool(name, v); },         \
    [](const RunConfig &c) { return std::string(c.member ? "true" : "false"); }}}
#define SM_TEXT(name, member)                                              \
  {name,                                                                   \
   {[](RunConfig &c, const std::string &v) { c.member = v; },              \
    [](const RunConfig &c) { return "\"" + c.member + "\""; }}}

const std::vector<std::pair<std::string, Field>> &fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      SM_SIZE("T", T),
      SM_SIZE("M", M),
      SM_REAL("lambda", lambda),
      SM_SIZE("mu", mu),
      SM_SIZE("batch", batch),
      SM_REAL("lr", lr),
      SM_REAL("momentum", momentum),
      SM_REAL("weight_decay", weight_decay),
      SM_REAL("ema_decay", ema_decay),
      SM_SIZE("iterations", iterations),
      SM_REAL("tau", neuron.tau),
      SM_REAL("v_th", neuron.v_th),
      {"reset",
       {[](RunConfig &c, const std::string &v) {
          if (v == "hard")
            c.neuron.reset = ResetKind::hard;
          else if (v == "soft")
            c.neuron.reset = ResetKind::soft;
          else
            bad("reset", v, "expected hard or soft");
        },
        [](const RunConfig &c) { return std::string(c.neuron.reset == ResetKind::hard ? "hard" : "soft"); }}},
      {"surrogate",
       {[](RunConfig &c, const std::string &v) {
          if (v == "triangular")
            c.neuron.surrogate = SurrogateKind::triangular;
          else if (v == "rectangular")
            c.neuron.surrogate = SurrogateKind::rectangular;
          else
            bad("surrogate", v, "expected triangular or rectangular");
        },
        [](const RunConfig &c) {
          return std::string(c.neuron.surrogate == SurrogateKind::triangular ? "triangular" : "rectangular");
        }}},
      SM_REAL("gamma", neuron.gamma),
      SM_REAL("width", neuron.width),
      {"ablation",
       {[](RunConfig &c, const std::string &v) {
          for (auto a : {Ablation::spikematch, Ablation::averaged, Ablation::intra, Ablation::no_da,
                         Ablation::threshold})
            if (v == ablation_name(a)) {
              c.ablation = a;
              return;
            }
          bad("ablation", v, "expected spikematch, averaged, intra, no_da or threshold");
        },
        [](const RunConfig &c) { return std::string(ablation_name(c.ablation)); }}},
      SM_REAL("conf_threshold", conf_threshold),
      SM_SIZE("randaug_n", randaug_n),
      SM_REAL("randaug_magnitude", randaug_magnitude),
      SM_SIZE("seed", seed),
      SM_REAL("da_decay", da_decay),
      SM_BOOL("da_per_collection", da_per_collection),
      SM_BOOL("readout_accumulate", readout_accumulate),
      SM_TEXT("arch", arch),
      SM_TEXT("data", data),
      SM_TEXT("test_data", test_data),
      SM_SIZE("labels_per_class", labels_per_class),
      SM_BOOL("unlabeled_includes_labeled", unlabeled_includes_labeled),
      SM_SIZE("eval_every", eval_every),
  };
  return table;
}

#undef SM_SIZE
#undef SM_REAL
#undef SM_BOOL
#undef SM_TEXT

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
    return v.substr(1, v.size() - 2);
  return v;
}

} // namespace

void RunConfig::validate() const {
  auto need = [](bool ok, const char *key, const std::string &why) {
    if (!ok)
      throw ConfigError(key, std::string("config key '") + key + "': " + why);
  };
  need(T >= 1, "T", "must be >= 1");
  need(M >= 1, "M", "must be >= 1");
  need(M <= T, "M", "must not exceed T");
  need(ablation == Ablation::averaged || M >= 2, "M", "cross-collection selection needs M >= 2 (use ablation = averaged)");
  need(lambda >= 0.0, "lambda", "must be >= 0");
  need(mu >= 1, "mu", "must be >= 1");
  need(batch >= 1, "batch", "must be >= 1");
  need(lr >= 0.0, "lr", "must be >= 0");
  need(momentum >= 0.0 && momentum < 1.0, "momentum", "must lie in [0, 1)");
  need(weight_decay >= 0.0, "weight_decay", "must be >= 0");
  need(ema_decay >= 0.0 && ema_decay <= 1.0, "ema_decay", "must lie in [0, 1]");
  need(iterations >= 1, "iterations", "must be >= 1");
  need(neuron.tau >= 0.0 && neuron.tau < 1.0, "tau", "must lie in [0, 1)");
  need(neuron.v_th > 0.0, "v_th", "must be > 0");
  need(neuron.gamma > 0.0, "gamma", "must be > 0");
  need(neuron.width > 0.0, "width", "must be > 0");
  need(conf_threshold >= 0.0 && conf_threshold <= 1.0, "conf_threshold", "must lie in [0, 1]");
  need(randaug_n >= 1, "randaug_n", "must be >= 1");
  need(randaug_magnitude >= 0.0 && randaug_magnitude <= 1.0, "randaug_magnitude", "must lie in [0, 1]");
  need(da_decay >= 0.0 && da_decay <= 1.0, "da_decay", "must lie in [0, 1]");
  need(labels_per_class >= 1, "labels_per_class", "must be >= 1");
  need(eval_every >= 1, "eval_every", "must be >= 1");
}

void set_config_value(RunConfig &cfg, const std::string &key, const std::string &value) {
  for (const auto &[name, field] : fields())
    if (name == key) {
      field.set(cfg, unquote(trim(value)));
      return;
    }
  throw ConfigError(key, "unknown config key '" + key + "'");
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos && line.find('"') > hash)
      line.resize(hash);
    const std::string t = trim(line);
    if (t.empty() || t.front() == '[')
      continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(t, "line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(base, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return base;
}

RunConfig load_config(const std::string &path, RunConfig base) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("config", "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

void apply_overrides(RunConfig &cfg, const std::vector<std::string> &overrides) {
  for (const auto &o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos)
      throw ConfigError(o, "override '" + o + "' is not key=value");
    set_config_value(cfg, trim(o.substr(0, eq)), o.substr(eq + 1));
  }
}

std::string to_text(const RunConfig &cfg) {
  std::string out;
  for (const auto &[name, field] : fields())
    out += name + " = " + field.get(cfg) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto &f : fields())
    keys.push_back(f.first);
  return keys;
}

} // namespace spikematch
