#pragma once

#include <filesystem>
#include <iosfwd>
#include <nlohmann/json.hpp>

#include "fdptomo/fdp.hpp"
#include "fdptomo/fock.hpp"
#include "fdptomo/homodyne.hpp"
#include "fdptomo/uncertainty.hpp"

namespace fdptomo {

using Json = nlohmann::ordered_json;

/// {"dim": D, "real": [...], "imag": [...]} with row-major elements.
Json to_json(const DensityMatrix& rho);
/// Parses and validates; throws FormatError on malformed input.
DensityMatrix density_from_json(const Json& j);

Json to_json(const BinningSpec& b);
BinningSpec binning_from_json(const Json& j);

Json to_json(const DataPattern& p);
DataPattern pattern_from_json(const Json& j);

Json to_json(const ProbeSet& set);
ProbeSet probe_set_from_json(const Json& j);

Json to_json(const FdpSolution& s);
Json to_json(const Interval& i);
Json to_json(const IntervalReport& r);

/// CSV with '#' header lines carrying the binning and K, then
/// bin_center,count,frequency rows.
void write_pattern_csv(std::ostream& os, const DataPattern& p);
DataPattern read_pattern_csv(std::istream& is);

/// x,p,W rows.
void write_wigner_csv(std::ostream& os, const WignerGrid& grid);
/// quantity,mean,sd,lo,hi rows.
void write_interval_csv(std::ostream& os, const IntervalReport& r);

/// Whole-file helpers; throw FormatError on I/O or parse failure.
Json load_json(const std::filesystem::path& path);
void save_json(const std::filesystem::path& path, const Json& j);
void save_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fdptomo
