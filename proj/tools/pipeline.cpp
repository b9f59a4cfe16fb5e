#include "pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <functional>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "fdptomo/errors.hpp"
#include "fdptomo/fdp.hpp"
#include "fdptomo/herald.hpp"
#include "fdptomo/homodyne.hpp"
#include "fdptomo/ml.hpp"
#include "fdptomo/probe.hpp"
#include "fdptomo/rng.hpp"
#include "fdptomo/serialize.hpp"
#include "fdptomo/uncertainty.hpp"

namespace fdptomo::cli {

namespace {

constexpr const char* kProbeFile = "probes.json";
constexpr const char* kTimingDir = "timings";

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class StageTimer {
public:
  StageTimer(fs::path out, std::string stage)
      : out_(std::move(out)), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}

  void finish() const {
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    save_json(out_ / kTimingDir / (stage_ + ".json"), Json{{"stage", stage_}, {"seconds", s}});
  }

private:
  fs::path out_;
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
};

int parse_int(const std::string& s, const std::string& selector) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ConfigError("bad number in state selector '" + selector + "'");
  return v;
}

double parse_double(const std::string& s, const std::string& selector) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ConfigError("bad number in state selector '" + selector + "'");
  return v;
}

ProbeSet load_probes(const fs::path& out) {
  const fs::path p = out / kProbeFile;
  if (!fs::exists(p)) {
    throw FormatError("missing " + p.string() + ": run `fdptomo calibrate` first");
  }
  return probe_set_from_json(load_json(p));
}

std::string percent(double fraction) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << fraction * 100.0 << '%';
  return os.str();
}

std::vector<double> to_std(const RealVector& v) { return {v.data(), v.data() + v.size()}; }

// One unknown-state input to fit or mc.
struct StateInput {
  std::string name;
  std::string selector;
  DataPattern pattern;
  std::optional<DensityMatrix> truth;     // before detector loss
  std::optional<DensityMatrix> degraded;  // as registered by the detector
};

StateInput load_state_file(const fs::path& path) {
  const Json j = load_json(path);
  StateInput s;
  s.selector = j.value("selector", path.stem().string());
  s.name = parse_selector(s.selector).stem();
  s.pattern = pattern_from_json(j.at("pattern"));
  if (j.contains("true_state")) s.truth = density_from_json(j.at("true_state"));
  if (j.contains("degraded_state")) s.degraded = density_from_json(j.at("degraded_state"));
  return s;
}

std::vector<StateInput> resolve_inputs(const ExperimentConfig& config, const fs::path& out,
                                       const std::vector<std::string>& inputs) {
  std::vector<std::string> names = inputs;
  if (names.empty()) names = config.source.states;
  std::vector<StateInput> states;
  for (const auto& name : names) {
    const fs::path as_path(name);
    if (as_path.extension() == ".csv") {
      std::ifstream in(as_path);
      if (!in) throw FormatError("cannot open " + name);
      StateInput s;
      s.name = as_path.stem().string();
      s.selector = "file:" + name;
      s.pattern = read_pattern_csv(in);
      states.push_back(std::move(s));
    } else if (as_path.extension() == ".json") {
      states.push_back(load_state_file(as_path));
    } else {
      const StateSelector sel = parse_selector(name);
      const fs::path p = out / ("state_" + sel.stem() + ".json");
      if (!fs::exists(p)) {
        throw FormatError("missing " + p.string() + ": run `fdptomo acquire " + name + "` first");
      }
      states.push_back(load_state_file(p));
    }
  }
  return states;
}

FdpProblem make_problem(const ProbeSet& probes, const DataPattern& pattern) {
  const auto patterns = probes.patterns();
  return FdpProblem::from_patterns(patterns, pattern, probes.states());
}

void write_csv(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ostringstream os;
  os << std::setprecision(17);
  body(os);
  save_text(path, os.str());
}

}  // namespace

std::string StateSelector::stem() const {
  std::string s;
  if (kind == "file") {
    s = "file_" + fs::path(path).stem().string();
  } else {
    s = text;
  }
  for (char& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_')) c = '_';
  }
  return s;
}

StateSelector parse_selector(const std::string& text) {
  StateSelector s;
  s.text = text;
  const auto colon = text.find(':');
  s.kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (s.kind == "vacuum" && colon == std::string::npos) return s;
  if (colon == std::string::npos || arg.empty()) {
    throw ConfigError("unknown state selector '" + text +
                      "' (expected vacuum, herald:k, fock:n, phav:alpha or file:path)");
  }
  if (s.kind == "herald" || s.kind == "fock") {
    s.index = parse_int(arg, text);
    if (s.index < 0) throw ConfigError("state selector index must be >= 0: '" + text + "'");
  } else if (s.kind == "phav") {
    s.amplitude = parse_double(arg, text);
  } else if (s.kind == "file") {
    s.path = arg;
  } else {
    throw ConfigError("unknown state selector '" + text +
                      "' (expected vacuum, herald:k, fock:n, phav:alpha or file:path)");
  }
  return s;
}

DensityMatrix selector_state(const StateSelector& sel, const ExperimentConfig& config) {
  if (sel.kind == "vacuum") return fock_state(0, config.dim);
  if (sel.kind == "fock") return fock_state(sel.index, config.dim);
  if (sel.kind == "herald") return heralded_state(config.source.tmsv, config.source.smd, sel.index);
  if (sel.kind == "phav") return phav_density(sel.amplitude, config.dim);
  const DensityMatrix rho = density_from_json(load_json(sel.path));
  if (rho.dim() != config.dim) {
    throw DimensionError("state file " + sel.path + " has cutoff " + std::to_string(rho.dim()) +
                         ", config dim is " + std::to_string(config.dim));
  }
  return rho;
}

void cmd_calibrate(const ExperimentConfig& config, const fs::path& out) {
  config.validate();
  StageTimer timer(out, "calibrate");
  ProbeLadderOptions opts;
  opts.include_vacuum = config.probes.include_vacuum;
  const ProbeLadder ladder = build_probe_ladder(config.probes.alpha_min, config.probes.alpha_max,
                                                config.probes.count, config.dim, opts);
  const ProbeSet probes = calibrate_probes(ladder, config.detector, config.probes.pulses,
                                           config.binning, derive_seed(config.seed, Stream::probe));
  Json j = to_json(probes);
  j["pulses"] = config.probes.pulses;
  save_json(out / kProbeFile, j);
  write_csv(out / "probes.csv", [&](std::ostream& os) {
    os << "xi,amplitude,effective_amplitude,mean_photon_number\n";
    for (std::size_t i = 0; i < probes.probes.size(); ++i) {
      const auto& p = probes.probes[i];
      os << i << ',' << p.amplitude << ',' << p.effective_amplitude << ','
         << mean_photon_number(p.state) << '\n';
    }
  });
  timer.finish();
  std::cout << "calibrated " << probes.probes.size() << " probes -> " << (out / kProbeFile).string()
            << '\n';
}

void cmd_acquire(const ExperimentConfig& config, const fs::path& out,
                 const std::vector<std::string>& selectors) {
  config.validate();
  StageTimer timer(out, "acquire");
  const std::vector<std::string>& names = selectors.empty() ? config.source.states : selectors;
  const double eta = config.detector.effective_efficiency();
  for (const auto& name : names) {
    const StateSelector sel = parse_selector(name);
    const DensityMatrix truth = selector_state(sel, config);
    const DataPattern pattern =
        acquire_pattern(truth, config.detector, config.source.pulses, config.binning,
                        derive_seed(config.seed, Stream::state, fnv1a(sel.text)));
    Json j{{"selector", sel.text},
           {"simulation_only", true},
           {"detector_efficiency", eta},
           {"pattern", to_json(pattern)},
           {"true_state", to_json(truth)},
           {"degraded_state", to_json(loss_channel(truth, eta))}};
    save_json(out / ("state_" + sel.stem() + ".json"), j);
    std::ostringstream csv;
    write_pattern_csv(csv, pattern);
    save_text(out / ("pattern_" + sel.stem() + ".csv"), csv.str());
    std::cout << "acquired " << sel.text << " (" << pattern.total << " pulses)\n";
  }
  timer.finish();
}

void cmd_fit(const ExperimentConfig& config, const fs::path& out,
             const std::vector<std::string>& inputs) {
  config.validate();
  StageTimer timer(out, "fit");
  const ProbeSet probes = load_probes(out);
  const auto states = resolve_inputs(config, out, inputs);
  std::optional<BinnedPovm> povm;
  if (config.ml.enabled) povm = build_binned_povm(probes.binning, probes.dim, probes.efficiency);
  const auto grid = linspace(config.wigner.lo, config.wigner.hi, config.wigner.points);

  for (const auto& s : states) {
    const FdpProblem problem = make_problem(probes, s.pattern);
    const FdpSolution sol = fdp_fit(problem, config.solver);
    const RealVector res = residuals(problem, sol);
    const RealVector env = noise_envelope(s.pattern);
    int within = 0;
    for (Eigen::Index i = 0; i < res.size(); ++i) within += std::abs(res(i)) <= env(i) ? 1 : 0;
    const double fraction = static_cast<double>(within) / static_cast<double>(res.size());

    Json j{{"selector", s.selector}, {"fdp", to_json(sol)}};
    j["residuals"] = Json{{"bins_within_envelope", within},
                          {"fraction_within_envelope", fraction},
                          {"max_abs_residual", res.cwiseAbs().maxCoeff()}};
    Json cmp = Json::object();
    const RealVector p_fdp = photon_statistics(sol.state);
    RealVector p_ml, p_truth;
    if (s.degraded) {
      cmp["fidelity_truth"] = fidelity(sol.state, *s.degraded);
      p_truth = photon_statistics(*s.degraded);
    }
    if (povm) {
      const MlResult ml = ml_reconstruct(s.pattern, *povm, config.ml.options);
      const DensityMatrix ml_lossy = loss_channel(ml.state, probes.efficiency);
      j["ml"] = Json{{"log_likelihood", ml.log_likelihood},
                     {"iterations", ml.iterations},
                     {"converged", ml.converged},
                     {"stationarity", ml.stationarity},
                     {"state", to_json(ml.state)}};
      cmp["fidelity_ml"] = fidelity(sol.state, ml_lossy);
      if (s.truth) cmp["fidelity_ml_truth"] = fidelity(ml.state, *s.truth);
      p_ml = photon_statistics(ml_lossy);
    }
    const double w0 = wigner_point(sol.state, 0.0, 0.0);
    cmp["wigner_origin"] = w0;
    j["comparison"] = cmp;
    j["photon_statistics"] = to_std(p_fdp);
    save_json(out / ("fit_" + s.name + ".json"), j);

    write_csv(out / ("coefficients_" + s.name + ".csv"), [&](std::ostream& os) {
      os << "xi,amplitude,effective_amplitude,coefficient\n";
      for (std::size_t i = 0; i < probes.probes.size(); ++i) {
        os << i << ',' << probes.probes[i].amplitude << ',' << probes.probes[i].effective_amplitude
           << ',' << sol.coefficients(static_cast<Eigen::Index>(i)) << '\n';
      }
    });
    write_csv(out / ("photon_statistics_" + s.name + ".csv"), [&](std::ostream& os) {
      os << "n,fdp" << (p_ml.size() ? ",ml_with_loss" : "") << (p_truth.size() ? ",truth_with_loss" : "")
         << '\n';
      for (Eigen::Index n = 0; n < p_fdp.size(); ++n) {
        os << n << ',' << p_fdp(n);
        if (p_ml.size()) os << ',' << p_ml(n);
        if (p_truth.size()) os << ',' << p_truth(n);
        os << '\n';
      }
    });
    write_csv(out / ("residuals_" + s.name + ".csv"), [&](std::ostream& os) {
      os << "bin_center,residual,envelope,within\n";
      for (Eigen::Index i = 0; i < res.size(); ++i) {
        os << s.pattern.binning.center(static_cast<int>(i)) << ',' << res(i) << ',' << env(i) << ','
           << (std::abs(res(i)) <= env(i) ? 1 : 0) << '\n';
      }
    });
    {
      std::ostringstream os;
      write_wigner_csv(os, wigner(sol.state, grid, grid));
      save_text(out / ("wigner_" + s.name + ".csv"), os.str());
    }
    std::cout << "fit " << s.selector << ": objective " << sol.objective;
    if (cmp.contains("fidelity_truth")) std::cout << ", F(truth) " << cmp["fidelity_truth"].get<double>();
    if (cmp.contains("fidelity_ml")) std::cout << ", F(ml) " << cmp["fidelity_ml"].get<double>();
    std::cout << ", W(0,0) " << w0 << '\n';
  }
  timer.finish();
}

void cmd_mc(const ExperimentConfig& config, const fs::path& out,
            const std::vector<std::string>& inputs) {
  config.validate();
  StageTimer timer(out, "mc");
  const ProbeSet probes = load_probes(out);
  const auto states = resolve_inputs(config, out, inputs);
  for (const auto& s : states) {
    McInputs in;
    in.probe_patterns = probes.patterns();
    in.probe_amplitudes = probes.effective_amplitudes();
    in.target = s.pattern;
    in.dim = probes.dim;
    in.solver = config.solver;
    if (s.degraded) in.references.emplace_back("truth", *s.degraded);
    if (config.mc.run_ml) {
      in.ml_povm = build_binned_povm(probes.binning, probes.dim, probes.efficiency);
      in.ml = config.ml.options;
      in.ml_loss = probes.efficiency;
    }
    McSpec spec = config.mc.spec;
    spec.seed = derive_seed(config.seed ^ mix64(config.mc.spec.seed), Stream::monte_carlo,
                            fnv1a(s.selector));
    const IntervalReport report = mc_propagate(in, spec);
    Json j = to_json(report);
    j["selector"] = s.selector;
    save_json(out / ("mc_" + s.name + ".json"), j);
    std::ostringstream csv;
    write_interval_csv(csv, report);
    save_text(out / ("mc_" + s.name + ".csv"), csv.str());
    std::cout << "mc " << s.selector << ": " << report.n_trials - report.n_failed << "/"
              << report.n_trials << " trials";
    for (const auto& f : report.fidelities) {
      std::cout << ", " << f.name << " = " << f.mean << " +- " << f.sd;
    }
    std::cout << (report.flagged ? " [FLAGGED: too many failed trials]" : "") << '\n';
  }
  timer.finish();
}

int cmd_report(const ExperimentConfig& config, const fs::path& out) {
  std::vector<std::string> missing;
  if (!fs::exists(out / kProbeFile)) missing.push_back("fdptomo calibrate");
  std::vector<fs::path> fits;
  if (fs::exists(out)) {
    for (const auto& e : fs::directory_iterator(out)) {
      const auto name = e.path().filename().string();
      if (name.rfind("fit_", 0) == 0 && e.path().extension() == ".json") fits.push_back(e.path());
    }
  }
  std::sort(fits.begin(), fits.end());
  if (fits.empty()) {
    missing.push_back("fdptomo acquire");
    missing.push_back("fdptomo fit");
  }
  if (!missing.empty()) {
    std::string msg = "report needs outputs from earlier stages in " + out.string() + "; run:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw FormatError(msg);
  }

  Json report{{"output_dir", out.string()}, {"states", Json::array()}};
  std::vector<std::string> violations;
  std::ostringstream text;
  text << std::fixed << std::setprecision(4);
  text << "fdptomo run report (" << out.string() << ")\n\n";
  text << std::left << std::setw(14) << "state" << std::setw(11) << "F(truth)" << std::setw(11)
       << "F(ml)" << std::setw(11) << "W(0,0)" << std::setw(12) << "envelope" << std::setw(14)
       << "sum-1" << "min eig\n";
  for (const auto& path : fits) {
    const Json fit = load_json(path);
    const std::string selector = fit.value("selector", path.stem().string());
    const Json& cmp = fit.at("comparison");
    const Json& fdp = fit.at("fdp");
    Json entry{{"selector", selector},
               {"objective", fdp.at("objective")},
               {"sum_residual", fdp.at("sum_residual")},
               {"min_eigenvalue", fdp.at("min_eigenvalue")},
               {"fraction_within_envelope", fit.at("residuals").at("fraction_within_envelope")},
               {"wigner_origin", cmp.at("wigner_origin")}};
    auto show = [&](const char* key) -> std::string {
      if (!cmp.contains(key)) return "-";
      std::ostringstream v;
      v << std::fixed << std::setprecision(4) << cmp.at(key).get<double>();
      entry[key] = cmp.at(key);
      return v.str();
    };
    const std::string f_truth = show("fidelity_truth");
    const std::string f_ml = show("fidelity_ml");
    const double frac = entry["fraction_within_envelope"].get<double>();
    const double sum_res = entry["sum_residual"].get<double>();
    const double min_eig = entry["min_eigenvalue"].get<double>();

    if (std::abs(sum_res) > config.solver.sum_tol || min_eig < -config.solver.psd_tol) {
      violations.push_back(selector + ": solution not admissible");
    }
    if (const auto it = config.thresholds.min_fidelity_truth.find(selector);
        it != config.thresholds.min_fidelity_truth.end() && cmp.contains("fidelity_truth") &&
        cmp.at("fidelity_truth").get<double>() < it->second) {
      std::ostringstream v;
      v << selector << ": F(truth) " << cmp.at("fidelity_truth").get<double>() << " < " << it->second;
      violations.push_back(v.str());
    }
    if (cmp.contains("fidelity_ml") &&
        cmp.at("fidelity_ml").get<double>() < config.thresholds.min_fidelity_ml) {
      std::ostringstream v;
      v << selector << ": F(ml) " << cmp.at("fidelity_ml").get<double>() << " < "
        << config.thresholds.min_fidelity_ml;
      violations.push_back(v.str());
    }
    if (frac < config.thresholds.min_envelope_fraction) {
      std::ostringstream v;
      v << selector << ": " << percent(frac) << " of bins inside the noise envelope < "
        << percent(config.thresholds.min_envelope_fraction);
      violations.push_back(v.str());
    }

    const fs::path mc_path = out / ("mc_" + path.stem().string().substr(4) + ".json");
    if (fs::exists(mc_path)) {
      const Json mc = load_json(mc_path);
      entry["mc"] = Json{{"n_trials", mc.at("n_trials")},
                         {"n_failed", mc.at("n_failed")},
                         {"flagged", mc.at("flagged")},
                         {"fidelities", mc.at("fidelities")}};
    }
    text << std::setw(14) << selector << std::setw(11) << f_truth << std::setw(11) << f_ml
         << std::setw(11) << entry["wigner_origin"].get<double>() << std::setw(12)
         << percent(frac)
         << std::setw(14) << std::scientific << std::setprecision(2) << sum_res << min_eig
         << std::fixed << std::setprecision(4) << '\n';
    if (entry.contains("mc")) {
      for (const auto& f : entry["mc"]["fidelities"]) {
        text << "    MC " << f.at("name").get<std::string>() << " = " << f.at("mean").get<double>()
             << " +- " << f.at("sd").get<double>() << '\n';
      }
    }
    report["states"].push_back(entry);
  }

  Json timings = Json::object();
  double total = 0.0;
  if (fs::exists(out / kTimingDir)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(out / kTimingDir)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const Json t = load_json(f);
      timings[t.at("stage").get<std::string>()] = t.at("seconds");
      total += t.at("seconds").get<double>();
    }
  }
  report["runtime_seconds"] = timings;
  report["violations"] = violations;
  report["passed"] = violations.empty();

  text << "\nruntime: " << std::setprecision(1) << total << " s";
  for (const auto& [stage, secs] : timings.items()) text << "  " << stage << " " << secs.get<double>() << " s";
  text << "\n\n";
  if (violations.empty()) {
    text << "all acceptance thresholds met\n";
  } else {
    text << "acceptance thresholds violated:\n";
    for (const auto& v : violations) text << "  " << v << '\n';
  }
  save_json(out / "report.json", report);
  save_text(out / "report.txt", text.str());
  std::cout << text.str();
  return violations.empty() ? kExitOk : kExitAcceptance;
}

std::vector<fs::path> numeric_outputs(const fs::path& out) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), out);
    // Wall-clock times are the only non-reproducible outputs.
    if (*rel.begin() == kTimingDir || rel == "report.json" || rel == "report.txt") continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace fdptomo::cli
