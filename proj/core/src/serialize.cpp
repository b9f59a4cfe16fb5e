#include "fdptomo/serialize.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "fdptomo/errors.hpp"
#include "fdptomo/probe.hpp"

namespace fdptomo {

namespace {

template <class T>
T field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw FormatError(std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

Json to_json(const DensityMatrix& rho) {
  const int d = rho.dim();
  std::vector<double> re, im;
  re.reserve(static_cast<std::size_t>(d * d));
  im.reserve(static_cast<std::size_t>(d * d));
  for (int m = 0; m < d; ++m) {
    for (int n = 0; n < d; ++n) {
      re.push_back(rho(m, n).real());
      im.push_back(rho(m, n).imag());
    }
  }
  return Json{{"dim", d}, {"real", re}, {"imag", im}};
}

DensityMatrix density_from_json(const Json& j) {
  const int d = field<int>(j, "dim");
  const auto re = field<std::vector<double>>(j, "real");
  const auto im = field<std::vector<double>>(j, "imag");
  if (d < 1 || re.size() != static_cast<std::size_t>(d) * d || im.size() != re.size()) {
    throw FormatError("density matrix element count does not match dim");
  }
  ComplexMatrix m(d, d);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      const auto k = static_cast<std::size_t>(r * d + c);
      m(r, c) = Complex(re[k], im[k]);
    }
  }
  try {
    return DensityMatrix(std::move(m));
  } catch (const DomainError& e) {
    throw FormatError(std::string("invalid density matrix: ") + e.what());
  }
}

Json to_json(const BinningSpec& b) {
  return Json{{"n_bins", b.n_bins}, {"lo", b.lo}, {"hi", b.hi}};
}

BinningSpec binning_from_json(const Json& j) {
  BinningSpec b;
  b.n_bins = field<int>(j, "n_bins");
  b.lo = field<double>(j, "lo");
  b.hi = field<double>(j, "hi");
  try {
    b.validate();
  } catch (const Error& e) {
    throw FormatError(e.what());
  }
  return b;
}

Json to_json(const DataPattern& p) {
  return Json{{"binning", to_json(p.binning)}, {"total", p.total}, {"counts", p.counts}};
}

DataPattern pattern_from_json(const Json& j) {
  const BinningSpec b = binning_from_json(field<Json>(j, "binning"));
  DataPattern p;
  try {
    p = DataPattern::from_counts(b, field<std::vector<std::int64_t>>(j, "counts"));
  } catch (const Error& e) {
    throw FormatError(e.what());
  }
  if (j.contains("total") && field<std::int64_t>(j, "total") != p.total) {
    throw FormatError("pattern total does not match its counts");
  }
  return p;
}

Json to_json(const ProbeSet& set) {
  Json probes = Json::array();
  for (const auto& p : set.probes) {
    probes.push_back(Json{{"amplitude", p.amplitude},
                          {"effective_amplitude", p.effective_amplitude},
                          {"pattern", to_json(p.pattern)}});
  }
  return Json{{"dim", set.dim},
              {"efficiency", set.efficiency},
              {"binning", to_json(set.binning)},
              {"probes", probes}};
}

ProbeSet probe_set_from_json(const Json& j) {
  ProbeSet set;
  set.dim = field<int>(j, "dim");
  set.efficiency = field<double>(j, "efficiency");
  set.binning = binning_from_json(field<Json>(j, "binning"));
  for (const auto& pj : field<Json>(j, "probes")) {
    Probe p;
    p.amplitude = field<double>(pj, "amplitude");
    p.effective_amplitude = field<double>(pj, "effective_amplitude");
    p.pattern = pattern_from_json(field<Json>(pj, "pattern"));
    if (!(p.pattern.binning == set.binning)) throw FormatError("probe binning mismatch");
    try {
      p.state = phav_density(p.effective_amplitude, set.dim);
    } catch (const Error& e) {
      throw FormatError(std::string("probe state: ") + e.what());
    }
    set.probes.push_back(std::move(p));
  }
  return set;
}

Json to_json(const FdpSolution& s) {
  std::vector<double> a(s.coefficients.data(), s.coefficients.data() + s.coefficients.size());
  Json j{{"coefficients", a},
         {"objective", s.objective},
         {"sum_residual", s.sum_residual},
         {"min_eigenvalue", s.min_eigenvalue},
         {"iterations", s.iterations},
         {"converged", s.converged},
         {"path", to_string(s.path)}};
  if (!std::isnan(s.cross_check_objective)) j["cross_check_objective"] = s.cross_check_objective;
  j["state"] = to_json(s.state);
  return j;
}

Json to_json(const Interval& i) {
  return Json{{"name", i.name}, {"mean", i.mean}, {"sd", i.sd}, {"lo", i.lo}, {"hi", i.hi}};
}

Json to_json(const IntervalReport& r) {
  auto group = [](const std::vector<Interval>& v) {
    Json a = Json::array();
    for (const auto& i : v) a.push_back(to_json(i));
    return a;
  };
  return Json{{"n_trials", r.n_trials},   {"n_failed", r.n_failed},
              {"flagged", r.flagged},     {"coefficients", group(r.coefficients)},
              {"populations", group(r.populations)},
              {"fidelities", group(r.fidelities)},
              {"failures", r.failures}};
}

void write_pattern_csv(std::ostream& os, const DataPattern& p) {
  os << std::setprecision(17);
  os << "# n_bins=" << p.binning.n_bins << " lo=" << p.binning.lo << " hi=" << p.binning.hi
     << " total=" << p.total << '\n';
  os << "bin_center,count,frequency\n";
  const RealVector f = p.frequencies();
  for (int i = 0; i < p.binning.n_bins; ++i) {
    os << p.binning.center(i) << ',' << p.counts[static_cast<std::size_t>(i)] << ',' << f(i)
       << '\n';
  }
}

DataPattern read_pattern_csv(std::istream& is) {
  std::string line;
  BinningSpec b;
  std::int64_t total = -1;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) {
    throw FormatError("pattern CSV: missing '#' header line");
  }
  {
    std::istringstream hs(line.substr(2));
    std::string tok;
    int seen = 0;
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      try {
        if (key == "n_bins") b.n_bins = std::stoi(val), ++seen;
        else if (key == "lo") b.lo = std::stod(val), ++seen;
        else if (key == "hi") b.hi = std::stod(val), ++seen;
        else if (key == "total") total = std::stoll(val), ++seen;
      } catch (const std::exception&) {
        throw FormatError("pattern CSV: bad header value for " + key);
      }
    }
    if (seen != 4) throw FormatError("pattern CSV: header needs n_bins, lo, hi and total");
  }
  if (!std::getline(is, line) || line != "bin_center,count,frequency") {
    throw FormatError("pattern CSV: missing column header");
  }
  std::vector<std::int64_t> counts;
  int row = 2;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw FormatError("pattern CSV line " + std::to_string(row) + ": expected 3 columns");
    }
    try {
      counts.push_back(std::stoll(line.substr(c1 + 1, c2 - c1 - 1)));
    } catch (const std::exception&) {
      throw FormatError("pattern CSV line " + std::to_string(row) + ": bad count");
    }
  }
  DataPattern p;
  try {
    p = DataPattern::from_counts(b, std::move(counts));
  } catch (const Error& e) {
    throw FormatError(std::string("pattern CSV: ") + e.what());
  }
  if (p.total != total) throw FormatError("pattern CSV: counts do not sum to header total");
  return p;
}

void write_wigner_csv(std::ostream& os, const WignerGrid& grid) {
  os << std::setprecision(17) << "x,p,W\n";
  for (std::size_t i = 0; i < grid.x_values.size(); ++i) {
    for (std::size_t k = 0; k < grid.p_values.size(); ++k) {
      os << grid.x_values[i] << ',' << grid.p_values[k] << ','
         << grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) << '\n';
    }
  }
}

void write_interval_csv(std::ostream& os, const IntervalReport& r) {
  os << std::setprecision(17) << "quantity,mean,sd,lo,hi\n";
  for (const auto* group : {&r.coefficients, &r.populations, &r.fidelities}) {
    for (const auto& i : *group) {
      os << i.name << ',' << i.mean << ',' << i.sd << ',' << i.lo << ',' << i.hi << '\n';
    }
  }
}

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_json(const std::filesystem::path& path, const Json& j) {
  save_text(path, j.dump(1) + "\n");
}

void save_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace fdptomo
