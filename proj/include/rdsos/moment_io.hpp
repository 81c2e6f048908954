#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "rdsos/moments.hpp"

namespace rdsos {

/// Decimal rendering with 17 significant digits (round-trips any double).
std::string format_double(double v);

/// CSV layout:
///   # caps max_degree=<d> max_harmonic=<h> cutoff=<K> time=<0|1>
///   a0,spatial,value
///   2,0:1;3:2,1.2345678901234567e-01
/// Rows follow the canonical index order.
void write_moments_csv(const MomentSequence& m, std::ostream& os);
MomentSequence read_moments_csv(std::istream& is);

nlohmann::json caps_to_json(const MomentCaps& caps);
MomentCaps caps_from_json(const nlohmann::json& j);

/// {"caps": {...}, "moments": [{"a0":..,"spatial":"..","value":..}, ...]}
nlohmann::json moments_to_json(const MomentSequence& m);
MomentSequence moments_from_json(const nlohmann::json& j);

/// Chooses CSV or JSON from the file extension.
void save_moments(const MomentSequence& m, const std::string& path);
MomentSequence load_moments(const std::string& path);

/// Writes `contents` to `path` through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace rdsos
