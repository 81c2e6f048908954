#include "rdsos/moment_io.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rdsos {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

double parse_double(const std::string& s) {
  // strtod rather than stod: subnormal values set ERANGE but are valid here.
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw std::invalid_argument("malformed number '" + s + "'");
  }
  return v;
}

int parse_int(const std::string& s) {
  int v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw std::invalid_argument("malformed integer '" + s + "'");
  }
  return v;
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

void write_moments_csv(const MomentSequence& m, std::ostream& os) {
  const auto& c = m.caps();
  os << "# caps max_degree=" << c.max_degree << " max_harmonic=" << c.max_harmonic
     << " cutoff=" << c.cutoff << " time=" << (c.time ? 1 : 0) << '\n';
  os << "a0,spatial,value\n";
  for (const auto& [a, v] : m.entries()) {
    os << a.time() << ',' << a.spatial_key() << ',' << format_double(v) << '\n';
  }
}

MomentSequence read_moments_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# caps", 0) != 0) {
    throw std::invalid_argument("moment CSV: missing '# caps' header");
  }
  MomentCaps caps;
  {
    std::istringstream hs(line.substr(6));
    std::string kv;
    int seen = 0;
    while (hs >> kv) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("moment CSV: bad caps field " + kv);
      const auto key = kv.substr(0, eq);
      const int val = parse_int(kv.substr(eq + 1));
      if (key == "max_degree") caps.max_degree = val;
      else if (key == "max_harmonic") caps.max_harmonic = val;
      else if (key == "cutoff") caps.cutoff = static_cast<std::size_t>(val);
      else if (key == "time") caps.time = val != 0;
      else throw std::invalid_argument("moment CSV: unknown caps field " + key);
      ++seen;
    }
    if (seen != 4) throw std::invalid_argument("moment CSV: incomplete caps header");
  }
  if (!std::getline(is, line) || line != "a0,spatial,value") {
    throw std::invalid_argument("moment CSV: missing column header");
  }
  MomentSequence m(caps);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw std::invalid_argument("moment CSV: malformed row '" + line + "'");
    }
    const int a0 = parse_int(line.substr(0, c1));
    const auto idx = MultiIndex::from_key(a0, line.substr(c1 + 1, c2 - c1 - 1));
    if (m.contains(idx)) throw std::invalid_argument("moment CSV: duplicate index " + idx.to_string());
    m.set(idx, parse_double(line.substr(c2 + 1)));
  }
  return m;
}

nlohmann::json caps_to_json(const MomentCaps& c) {
  return {{"max_degree", c.max_degree},
          {"max_harmonic", c.max_harmonic},
          {"cutoff", c.cutoff},
          {"time", c.time}};
}

MomentCaps caps_from_json(const nlohmann::json& j) {
  MomentCaps c;
  c.max_degree = j.at("max_degree").get<int>();
  c.max_harmonic = j.at("max_harmonic").get<int>();
  c.cutoff = j.at("cutoff").get<std::size_t>();
  c.time = j.at("time").get<bool>();
  return c;
}

nlohmann::json moments_to_json(const MomentSequence& m) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [a, v] : m.entries()) {
    arr.push_back({{"a0", a.time()}, {"spatial", a.spatial_key()}, {"value", v}});
  }
  return {{"caps", caps_to_json(m.caps())}, {"moments", std::move(arr)}};
}

MomentSequence moments_from_json(const nlohmann::json& j) {
  MomentSequence m(caps_from_json(j.at("caps")));
  for (const auto& e : j.at("moments")) {
    const auto idx = MultiIndex::from_key(e.at("a0").get<int>(), e.at("spatial").get<std::string>());
    if (m.contains(idx)) throw std::invalid_argument("moment JSON: duplicate index " + idx.to_string());
    m.set(idx, e.at("value").get<double>());
  }
  return m;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp + " for writing");
    os << contents;
    if (!os) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, target);
}

void save_moments(const MomentSequence& m, const std::string& path) {
  if (has_suffix(path, ".json")) {
    write_file_atomic(path, moments_to_json(m).dump(1) + "\n");
  } else {
    std::ostringstream os;
    write_moments_csv(m, os);
    write_file_atomic(path, os.str());
  }
}

MomentSequence load_moments(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  if (has_suffix(path, ".json")) return moments_from_json(nlohmann::json::parse(is));
  return read_moments_csv(is);
}

}  // namespace rdsos
