#include "config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "fdptomo/errors.hpp"

namespace fdptomo::cli {

namespace {

std::string where(const YAML::Mark& m) {
  if (m.is_null()) return "config";
  return "line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1);
}

template <class T>
const char* type_name() {
  if constexpr (std::is_same_v<T, bool>) return "true/false";
  else if constexpr (std::is_integral_v<T>) return "an integer";
  else if constexpr (std::is_floating_point_v<T>) return "a number";
  else return "a string";
}

// A YAML mapping with every key accounted for: unknown keys are errors.
class Section {
public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      throw ConfigError(where(node_.Mark()) + ": '" + display() + "' must be a mapping");
    }
  }

  bool present() const { return node_ && node_.IsMap(); }
  YAML::Mark mark() const { return node_ ? node_.Mark() : YAML::Mark::null_mark(); }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!present()) return;
    const YAML::Node v = node_[key];
    if (!v) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(where(v.Mark()) + ": '" + qualified(key) + "' must be " + type_name<T>());
    }
  }

  template <class T>
  void get_list(const char* key, std::vector<T>& out) {
    seen_.insert(key);
    if (!present()) return;
    const YAML::Node v = node_[key];
    if (!v) return;
    if (!v.IsSequence()) throw ConfigError(where(v.Mark()) + ": '" + qualified(key) + "' must be a list");
    std::vector<T> items;
    for (const auto& item : v) {
      try {
        items.push_back(item.as<T>());
      } catch (const YAML::Exception&) {
        throw ConfigError(where(item.Mark()) + ": entries of '" + qualified(key) + "' must be " +
                          type_name<T>());
      }
    }
    out = std::move(items);
  }

  void get_map(const char* key, std::map<std::string, double>& out) {
    seen_.insert(key);
    if (!present()) return;
    const YAML::Node v = node_[key];
    if (!v) return;
    if (!v.IsMap()) throw ConfigError(where(v.Mark()) + ": '" + qualified(key) + "' must be a mapping");
    std::map<std::string, double> items;
    for (const auto& kv : v) {
      try {
        items[kv.first.as<std::string>()] = kv.second.as<double>();
      } catch (const YAML::Exception&) {
        throw ConfigError(where(kv.second.Mark()) + ": values of '" + qualified(key) +
                          "' must be numbers");
      }
    }
    out = std::move(items);
  }

  Section child(const char* key) {
    seen_.insert(key);
    return Section(present() ? node_[key] : YAML::Node(), qualified(key));
  }

  bool has(const char* key) const { return present() && node_[key]; }

  // Rejects keys nobody asked for (typos would otherwise be silently ignored).
  void finish() const {
    if (!present()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) {
        throw ConfigError(where(kv.first.Mark()) + ": unknown key '" + qualified(key.c_str()) + "'");
      }
    }
  }

  // Runs a validator, re-raising its message with this section's location.
  template <class F>
  void check(F&& f) const {
    try {
      f();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      const std::string msg = e.what();
      if (msg.rfind(display() + ":", 0) == 0) throw ConfigError(where(mark()) + ": " + msg);
      throw ConfigError(where(mark()) + ": " + display() + ": " + msg);
    }
  }

private:
  std::string qualified(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.detector.eta_bhd = 0.85;
  c.detector.electronic_noise_sd = DetectorModel::noise_sd_for_clearance(14.5, c.detector.gain);
  return c;
}

void ExperimentConfig::validate() const {
  if (dim < 2) throw DomainError("dim must be at least 2");
  if (probes.count < 2) throw DomainError("probes.count must be at least 2");
  if (probes.pulses < 2 || source.pulses < 2) throw DomainError("pulse counts must be at least 2");
  if (source.tmsv.dim != dim) throw DimensionError("source.tmsv cutoff must equal dim");
  binning.validate();
  detector.validate();
  source.tmsv.validate();
  source.smd.validate();
  mc.spec.validate();
  if (wigner.points < 2 || !(wigner.lo < wigner.hi)) throw DomainError("bad Wigner grid");
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(where(e.mark) + ": " + e.msg);
  }
  ExperimentConfig c = default_config();
  Section top(root, "");
  top.get("seed", c.seed);
  top.get("output_dir", c.output_dir);
  top.get("dim", c.dim);
  c.source.tmsv.dim = c.dim;

  {
    Section s = top.child("probes");
    s.get("alpha_min", c.probes.alpha_min);
    s.get("alpha_max", c.probes.alpha_max);
    s.get("count", c.probes.count);
    s.get("include_vacuum", c.probes.include_vacuum);
    s.get("pulses", c.probes.pulses);
    s.finish();
    s.check([&] {
      if (!(c.probes.alpha_min >= 0.0 && c.probes.alpha_min < c.probes.alpha_max)) {
        throw DomainError("need 0 <= alpha_min < alpha_max");
      }
      if (c.probes.count < 2) throw DomainError("count must be at least 2");
      if (c.probes.pulses < 2) throw DomainError("pulses must be at least 2");
    });
  }
  {
    Section s = top.child("binning");
    s.get("n_bins", c.binning.n_bins);
    s.get("lo", c.binning.lo);
    s.get("hi", c.binning.hi);
    s.finish();
    s.check([&] { c.binning.validate(); });
  }
  {
    Section s = top.child("detector");
    auto& d = c.detector;
    s.get("eta_bhd", d.eta_bhd);
    s.get("gain", d.gain);
    s.get("offset", d.offset);
    s.get("electronic_noise_sd", d.electronic_noise_sd);
    if (s.has("clearance_db")) {
      if (s.has("electronic_noise_sd")) {
        throw ConfigError(where(s.mark()) +
                          ": give either detector.electronic_noise_sd or detector.clearance_db");
      }
      double db = 0.0;
      s.get("clearance_db", db);
      d.electronic_noise_sd = DetectorModel::noise_sd_for_clearance(db, d.gain);
    } else {
      double unused = 0.0;
      s.get("clearance_db", unused);
    }
    s.get("frame_pulses", d.frame_pulses);
    s.get("blocked_per_frame", d.blocked_per_frame);
    s.get("static_blocked_samples", d.static_blocked_samples);
    Section drift = s.child("drift");
    drift.get("gain_amplitude", d.drift.gain_amplitude);
    drift.get("offset_amplitude", d.drift.offset_amplitude);
    drift.get("period_pulses", d.drift.period_pulses);
    drift.finish();
    s.finish();
    s.check([&] { d.validate(); });
  }
  {
    Section s = top.child("source");
    Section tmsv = s.child("tmsv");
    tmsv.get("gamma", c.source.tmsv.gamma);
    tmsv.finish();
    tmsv.check([&] { c.source.tmsv.validate(); });
    Section smd = s.child("smd");
    int n_apds = c.source.smd.n_apds;
    smd.get("n_apds", n_apds);
    if (n_apds != c.source.smd.n_apds) {
      smd.check([&] { c.source.smd = SmdSpec::symmetric(n_apds); });
    }
    smd.get_list("splitting", c.source.smd.splitting);
    smd.get("apd_efficiency", c.source.smd.apd_efficiency);
    smd.get("dark_count_prob", c.source.smd.dark_count_prob);
    smd.finish();
    smd.check([&] { c.source.smd.validate(); });
    s.get("pulses", c.source.pulses);
    s.get_list("states", c.source.states);
    s.finish();
  }
  {
    Section s = top.child("solver");
    auto& o = c.solver;
    s.get("max_iterations", o.max_iterations);
    s.get("objective_tol", o.objective_tol);
    s.get("gradient_tol", o.gradient_tol);
    s.get("sum_tol", o.sum_tol);
    s.get("psd_tol", o.psd_tol);
    s.get("cross_check", o.cross_check);
    s.get("force_general", o.force_general);
    s.get("penalty_start", o.penalty_start);
    s.get("penalty_growth", o.penalty_growth);
    s.get("penalty_max", o.penalty_max);
    s.get("projection_rounds", o.projection_rounds);
    s.finish();
    s.check([&] {
      if (o.max_iterations < 1) throw DomainError("max_iterations must be positive");
      if (!(o.penalty_growth > 1.0)) throw DomainError("penalty_growth must exceed 1");
      if (!(o.penalty_start > 0.0 && o.penalty_start <= o.penalty_max)) {
        throw DomainError("need 0 < penalty_start <= penalty_max");
      }
    });
  }
  {
    Section s = top.child("ml");
    auto& o = c.ml.options;
    s.get("enabled", c.ml.enabled);
    s.get("max_iterations", o.max_iterations);
    s.get("relative_tol", o.relative_tol);
    s.get("stationarity_tol", o.stationarity_tol);
    s.get("probability_floor", o.probability_floor);
    s.get("diagonal", o.diagonal);
    s.finish();
    s.check([&] {
      if (o.max_iterations < 1) throw DomainError("max_iterations must be positive");
      if (!(o.probability_floor > 0.0)) throw DomainError("probability_floor must be positive");
    });
  }
  {
    Section s = top.child("mc");
    auto& m = c.mc.spec;
    s.get("n_trials", m.n_trials);
    s.get("bin_noise", m.bin_noise);
    s.get("alpha_rel_error", m.alpha_rel_error);
    s.get("seed", m.seed);
    s.get("threads", m.threads);
    s.get("run_ml", c.mc.run_ml);
    s.finish();
    s.check([&] { m.validate(); });
  }
  {
    Section s = top.child("wigner");
    s.get("lo", c.wigner.lo);
    s.get("hi", c.wigner.hi);
    s.get("points", c.wigner.points);
    s.finish();
    s.check([&] {
      if (c.wigner.points < 2 || !(c.wigner.lo < c.wigner.hi)) {
        throw DomainError("need lo < hi and at least 2 points");
      }
    });
  }
  {
    Section s = top.child("thresholds");
    s.get_map("min_fidelity_truth", c.thresholds.min_fidelity_truth);
    s.get("min_fidelity_ml", c.thresholds.min_fidelity_ml);
    s.get("min_envelope_fraction", c.thresholds.min_envelope_fraction);
    s.finish();
  }
  top.finish();
  top.check([&] { c.validate(); });
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string emit_config(const ExperimentConfig& c) {
  YAML::Emitter out;
  auto kv = [&](const char* key, const auto& value) {
    using T = std::decay_t<decltype(value)>;
    out << YAML::Key << key << YAML::Value;
    if constexpr (std::is_floating_point_v<T>) {
      out << num(value);
    } else {
      out << value;
    }
  };
  auto open = [&](const char* key) { out << YAML::Key << key << YAML::Value << YAML::BeginMap; };
  auto close = [&] { out << YAML::EndMap; };

  out << YAML::BeginMap;
  kv("seed", c.seed);
  kv("output_dir", c.output_dir);
  kv("dim", c.dim);

  open("probes");
  kv("alpha_min", c.probes.alpha_min);
  kv("alpha_max", c.probes.alpha_max);
  kv("count", c.probes.count);
  kv("include_vacuum", c.probes.include_vacuum);
  kv("pulses", c.probes.pulses);
  close();

  open("binning");
  kv("n_bins", c.binning.n_bins);
  kv("lo", c.binning.lo);
  kv("hi", c.binning.hi);
  close();

  open("detector");
  const auto& d = c.detector;
  kv("eta_bhd", d.eta_bhd);
  kv("gain", d.gain);
  kv("offset", d.offset);
  kv("electronic_noise_sd", d.electronic_noise_sd);
  kv("frame_pulses", d.frame_pulses);
  kv("blocked_per_frame", d.blocked_per_frame);
  kv("static_blocked_samples", d.static_blocked_samples);
  open("drift");
  kv("gain_amplitude", d.drift.gain_amplitude);
  kv("offset_amplitude", d.drift.offset_amplitude);
  kv("period_pulses", d.drift.period_pulses);
  close();
  close();

  open("source");
  open("tmsv");
  kv("gamma", c.source.tmsv.gamma);
  close();
  open("smd");
  kv("n_apds", c.source.smd.n_apds);
  out << YAML::Key << "splitting" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double s : c.source.smd.splitting) out << num(s);
  out << YAML::EndSeq;
  kv("apd_efficiency", c.source.smd.apd_efficiency);
  kv("dark_count_prob", c.source.smd.dark_count_prob);
  close();
  kv("pulses", c.source.pulses);
  out << YAML::Key << "states" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (const auto& s : c.source.states) out << s;
  out << YAML::EndSeq;
  close();

  open("solver");
  const auto& o = c.solver;
  kv("max_iterations", o.max_iterations);
  kv("objective_tol", o.objective_tol);
  kv("gradient_tol", o.gradient_tol);
  kv("sum_tol", o.sum_tol);
  kv("psd_tol", o.psd_tol);
  kv("cross_check", o.cross_check);
  kv("force_general", o.force_general);
  kv("penalty_start", o.penalty_start);
  kv("penalty_growth", o.penalty_growth);
  kv("penalty_max", o.penalty_max);
  kv("projection_rounds", o.projection_rounds);
  close();

  open("ml");
  kv("enabled", c.ml.enabled);
  kv("max_iterations", c.ml.options.max_iterations);
  kv("relative_tol", c.ml.options.relative_tol);
  kv("stationarity_tol", c.ml.options.stationarity_tol);
  kv("probability_floor", c.ml.options.probability_floor);
  kv("diagonal", c.ml.options.diagonal);
  close();

  open("mc");
  kv("n_trials", c.mc.spec.n_trials);
  kv("bin_noise", c.mc.spec.bin_noise);
  kv("alpha_rel_error", c.mc.spec.alpha_rel_error);
  kv("seed", c.mc.spec.seed);
  kv("threads", c.mc.spec.threads);
  kv("run_ml", c.mc.run_ml);
  close();

  open("wigner");
  kv("lo", c.wigner.lo);
  kv("hi", c.wigner.hi);
  kv("points", c.wigner.points);
  close();

  open("thresholds");
  open("min_fidelity_truth");
  for (const auto& [state, v] : c.thresholds.min_fidelity_truth) kv(state.c_str(), v);
  close();
  kv("min_fidelity_ml", c.thresholds.min_fidelity_ml);
  kv("min_envelope_fraction", c.thresholds.min_envelope_fraction);
  close();

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace fdptomo::cli
