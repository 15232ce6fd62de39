#include "rank_sde/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rank_sde/errors.hpp"

namespace rank_sde {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& section,
                    std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConstraintError(section, "must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == key;
    if (!known) {
      throw ConstraintError(section.empty() ? key : section + "." + key, "unknown key");
    }
  }
}

std::string join(const std::string& section, std::string_view key) {
  return section + "." + std::string(key);
}

double number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConstraintError(key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConstraintError(key, "must be finite");
  return d;
}

double positive(const json& v, const std::string& key) {
  const double d = number(v, key);
  if (!(d > 0.0)) throw ConstraintError(key, "must be positive");
  return d;
}

std::uint64_t unsigned_int(const json& v, const std::string& key) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ConstraintError(key, "expected a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::string string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConstraintError(key, "expected a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& v, const std::string& key) {
  if (!v.is_array()) throw ConstraintError(key, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(number(v[i], key + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<CoefficientFamily> families(const json& v, const std::string& key, FamilyRole role) {
  if (!v.is_array()) throw ConstraintError(key, "expected an array of {kind, params}");
  std::vector<CoefficientFamily> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string item = key + "[" + std::to_string(i) + "]";
    reject_unknown(v[i], item, {"kind", "params"});
    if (!v[i].contains("kind")) throw ConstraintError(item + ".kind", "missing");
    if (!v[i].contains("params")) throw ConstraintError(item + ".params", "missing");
    try {
      out.emplace_back(parse_family_kind(string(v[i]["kind"], item + ".kind")), role,
                       numbers(v[i]["params"], item + ".params"));
    } catch (const ConstraintError&) {
      throw;
    } catch (const Error& e) {
      throw ConstraintError(item, e.what());
    }
  }
  return out;
}

SystemSpec parse_system(const json& s) {
  const std::string sec = "system";
  reject_unknown(s, sec,
                 {"n_particles", "variant", "positivity_wrap", "x0", "drifts", "diffusions"});
  for (auto key : {"n_particles", "x0", "drifts", "diffusions"}) {
    if (!s.contains(key)) throw ConstraintError(join(sec, key), "missing");
  }
  SystemSpec spec;
  spec.n_particles = unsigned_int(s["n_particles"], join(sec, "n_particles"));
  if (s.contains("variant")) {
    const auto v = string(s["variant"], join(sec, "variant"));
    if (v == "rank_diffusion") {
      spec.variant = ModelVariant::rank_diffusion;
    } else if (v == "own_diffusion") {
      spec.variant = ModelVariant::own_diffusion;
    } else {
      throw ConstraintError(join(sec, "variant"), "must be rank_diffusion or own_diffusion");
    }
  }
  if (s.contains("positivity_wrap")) {
    if (!s["positivity_wrap"].is_boolean()) {
      throw ConstraintError(join(sec, "positivity_wrap"), "expected true or false");
    }
    spec.positivity_wrap = s["positivity_wrap"].get<bool>();
  }
  spec.x0 = numbers(s["x0"], join(sec, "x0"));
  spec.drifts = families(s["drifts"], join(sec, "drifts"), FamilyRole::drift);
  spec.diffusions = families(s["diffusions"], join(sec, "diffusions"), FamilyRole::diffusion);
  spec.validate();
  return spec;
}

TransformSection parse_transform(const json& t) {
  const std::string sec = "transform";
  reject_unknown(t, sec, {"domain", "grid_points", "c_max", "safety", "check_box"});
  TransformSection out;
  if (t.contains("domain")) {
    const auto d = numbers(t["domain"], join(sec, "domain"));
    if (d.size() != 2 || !(d[0] < d[1])) {
      throw ConstraintError(join(sec, "domain"), "expected [lo, hi] with lo < hi");
    }
    out.domain = {d[0], d[1]};
  }
  if (t.contains("grid_points")) {
    const auto g = unsigned_int(t["grid_points"], join(sec, "grid_points"));
    if (g < 101 || g > 10'000'000) {
      throw ConstraintError(join(sec, "grid_points"), "must lie in [101, 1e7]");
    }
    out.grid_points = static_cast<int>(g);
  }
  if (t.contains("c_max")) out.c_max = positive(t["c_max"], join(sec, "c_max"));
  if (t.contains("safety")) {
    out.safety = number(t["safety"], join(sec, "safety"));
    if (!(out.safety > 0.0 && out.safety < 1.0)) {
      throw ConstraintError(join(sec, "safety"), "must lie in (0, 1)");
    }
  }
  if (t.contains("check_box")) out.check_box = positive(t["check_box"], join(sec, "check_box"));
  return out;
}

SimConfig parse_sim(const json& s) {
  const std::string sec = "sim";
  reject_unknown(s, sec, {"dt", "t_end", "seed", "scheme", "r_explode"});
  for (auto key : {"dt", "t_end"}) {
    if (!s.contains(key)) throw ConstraintError(join(sec, key), "missing");
  }
  SimConfig cfg;
  cfg.dt = positive(s["dt"], join(sec, "dt"));
  cfg.t_end = positive(s["t_end"], join(sec, "t_end"));
  if (s.contains("seed")) cfg.seed = unsigned_int(s["seed"], join(sec, "seed"));
  if (s.contains("scheme")) {
    const auto name = string(s["scheme"], join(sec, "scheme"));
    if (name != "naive" && name != "transformed") {
      throw ConstraintError(join(sec, "scheme"), "must be naive or transformed");
    }
    cfg.scheme = parse_scheme_kind(name);
  }
  if (s.contains("r_explode")) cfg.r_explode = positive(s["r_explode"], join(sec, "r_explode"));
  cfg.validate();
  return cfg;
}

AnalysisSection parse_analysis(const json& a) {
  const std::string sec = "analysis";
  reject_unknown(a, sec,
                 {"n_paths", "dts", "eps_collision", "burn_in_fraction", "hist_bins", "hist_max"});
  AnalysisSection out;
  if (a.contains("n_paths")) {
    out.n_paths = unsigned_int(a["n_paths"], join(sec, "n_paths"));
    if (out.n_paths == 0) throw ConstraintError(join(sec, "n_paths"), "must be positive");
  }
  if (a.contains("dts")) {
    out.dts = numbers(a["dts"], join(sec, "dts"));
    for (double d : out.dts) {
      if (!(d > 0.0)) throw ConstraintError(join(sec, "dts"), "entries must be positive");
    }
  }
  if (a.contains("eps_collision")) {
    out.eps_collision = positive(a["eps_collision"], join(sec, "eps_collision"));
  }
  if (a.contains("burn_in_fraction")) {
    out.burn_in_fraction = number(a["burn_in_fraction"], join(sec, "burn_in_fraction"));
    if (!(out.burn_in_fraction >= 0.0 && out.burn_in_fraction < 1.0)) {
      throw ConstraintError(join(sec, "burn_in_fraction"), "must lie in [0, 1)");
    }
  }
  if (a.contains("hist_bins")) {
    out.hist_bins = unsigned_int(a["hist_bins"], join(sec, "hist_bins"));
    if (out.hist_bins == 0) throw ConstraintError(join(sec, "hist_bins"), "must be positive");
  }
  if (a.contains("hist_max")) out.hist_max = positive(a["hist_max"], join(sec, "hist_max"));
  return out;
}

OutputSection parse_output(const json& o) {
  const std::string sec = "output";
  reject_unknown(o, sec, {"dir", "trajectories", "record_stride"});
  OutputSection out;
  if (o.contains("dir")) out.dir = string(o["dir"], join(sec, "dir"));
  if (o.contains("trajectories")) {
    out.trajectories = unsigned_int(o["trajectories"], join(sec, "trajectories"));
  }
  if (o.contains("record_stride")) {
    out.record_stride = unsigned_int(o["record_stride"], join(sec, "record_stride"));
    if (out.record_stride == 0) {
      throw ConstraintError(join(sec, "record_stride"), "must be positive");
    }
  }
  return out;
}

}  // namespace

RunConfig parse_config_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config_parse, e.what());
  }
  reject_unknown(doc, "", {"system", "transform", "sim", "analysis", "output"});
  if (!doc.contains("system")) throw ConstraintError("system", "missing");
  if (!doc.contains("sim")) throw ConstraintError("sim", "missing");
  RunConfig cfg;
  cfg.system = parse_system(doc["system"]);
  cfg.sim = parse_sim(doc["sim"]);
  if (doc.contains("transform")) cfg.transform = parse_transform(doc["transform"]);
  if (doc.contains("analysis")) cfg.analysis = parse_analysis(doc["analysis"]);
  if (doc.contains("output")) cfg.output = parse_output(doc["output"]);
  if (cfg.sim.scheme == SchemeKind::transformed && cfg.system.n_particles != 2) {
    throw ConstraintError("sim.scheme", "the transformed scheme requires N = 2");
  }
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::config_missing, "cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void apply_seed_override(RunConfig& cfg, const char* env_value) {
  if (env_value == nullptr) return;
  const std::string_view text(env_value);
  std::uint64_t seed = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConstraintError("RANK_SDE_SEED", "must be a nonnegative integer");
  }
  cfg.sim.seed = seed;
}

}  // namespace rank_sde
