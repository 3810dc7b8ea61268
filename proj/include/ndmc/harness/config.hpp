#pragma once

#include <ndmc/core.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace ndmc {

/// A model or sampler id that is not registered.
class UnknownId : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Typed view of one config section. Every key must be read at least once;
/// `finish` rejects the leftovers so typos do not pass silently.
class ParamSet {
 public:
  ParamSet() = default;
  ParamSet(std::string section, std::map<std::string, std::string> values)
      : section_(std::move(section)), values_(std::move(values)) {}

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    used_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    return parse_double(key, get_string(key, ""));
  }

  long get_long(const std::string& key, long fallback) const {
    const double v = get_double(key, static_cast<double>(fallback));
    if (v != std::floor(v) || std::abs(v) > 9e15) fail(key, "expected an integer");
    return static_cast<long>(v);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const std::string s = get_string(key, fallback ? "true" : "false");
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    fail(key, "expected true or false, got '" + s + "'");
  }

  /// Whitespace- or comma-separated numbers.
  std::vector<double> get_list(const std::string& key) const {
    std::string s = get_string(key, "");
    for (char& c : s)
      if (c == ',') c = ' ';
    std::istringstream in(s);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) out.push_back(parse_double(key, tok));
    return out;
  }

  void finish() const {
    std::string unused;
    for (const auto& kv : values_)
      if (!used_.count(kv.first)) unused += (unused.empty() ? "" : ", ") + kv.first;
    if (!unused.empty()) throw InvalidArgument("[" + section_ + "]: unknown key(s): " + unused);
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw InvalidArgument("[" + section_ + "] " + key + ": " + what);
  }

  double parse_double(const std::string& key, const std::string& s) const {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      fail(key, "expected a number, got '" + s + "'");
    }
    if (pos != s.size()) fail(key, "expected a number, got '" + s + "'");
    return v;
  }

  std::string section_;
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 0;
  std::string output;         // relative paths resolve against the output root
  double time_budget = kInf;  // seconds
  std::string model;
  ParamSet model_params;
  std::string sampler;
  ParamSet sampler_params;
  std::string source;  // path the config was read from, if any
};

/// Parses the flat INI format:
///
///   [experiment]  name, seed (required), output, time_budget
///   [model]       id plus model parameters
///   [sampler]     id plus sampler parameters
inline ExperimentConfig parse_config(std::istream& in, const std::string& source = "<stream>") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidArgument(source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  auto section = [&](const std::string& name) {
    const auto child = tree.get_child_optional(name);
    if (!child) throw InvalidArgument(source + ": missing [" + name + "] section");
    std::map<std::string, std::string> kv;
    for (const auto& item : *child) {
      if (!item.second.empty()) throw InvalidArgument(source + ": nested keys are not supported");
      kv[item.first] = item.second.data();
    }
    return kv;
  };
  for (const auto& top : tree)
    if (top.first != "experiment" && top.first != "model" && top.first != "sampler")
      throw InvalidArgument(source + ": unknown section [" + top.first + "]");

  ExperimentConfig cfg;
  cfg.source = source;
  ParamSet exp("experiment", section("experiment"));
  if (!exp.has("seed")) throw InvalidArgument(source + ": [experiment] seed is required");
  const long seed = exp.get_long("seed", 0);
  if (seed < 0) throw InvalidArgument(source + ": [experiment] seed must be nonnegative");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.name = exp.get_string("name", "experiment");
  cfg.output = exp.get_string("output", cfg.name);
  cfg.time_budget = exp.get_double("time_budget", kInf);
  if (!(cfg.time_budget > 0.0)) throw InvalidArgument(source + ": [experiment] time_budget must be positive");
  exp.finish();

  auto with_id = [&](const std::string& name, std::string& id) {
    auto kv = section(name);
    const auto it = kv.find("id");
    if (it == kv.end() || it->second.empty()) throw InvalidArgument(source + ": [" + name + "] id is required");
    id = it->second;
    kv.erase(it);
    return ParamSet(name, std::move(kv));
  };
  cfg.model_params = with_id("model", cfg.model);
  cfg.sampler_params = with_id("sampler", cfg.sampler);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config '" + path + "'");
  return parse_config(in, path);
}

}  // namespace ndmc
