#include "gfwi_cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gibbsfwi/error.hpp"
#include "gibbsfwi/io.hpp"
#include "json.hpp"

namespace gfwi::cli {

using nlohmann::json;

Grid2D GridConfig::grid() const {
  Grid2D g;
  g.nx = nx;
  g.nz = nz;
  g.dx = nx > 1 ? width / (nx - 1) : 0.0;
  g.dz = nz > 1 ? depth / (nz - 1) : 0.0;
  g.water_depth = water_depth;
  return g;
}

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError("config: field '" + field + "': " + what);
}

/// Reads members of one JSON object and rejects the ones never asked for.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) fail(field(key), "expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) fail(field(key), "expected an integer");
        if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
          fail(field(key), "must be non-negative");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) fail(field(key), "expected a number");
      } else {
        if (!v.is_string()) fail(field(key), "expected a string");
      }
      out = v.get<T>();
    } catch (const json::exception& e) {
      fail(field(key), e.what());
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(field(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_grid(Reader r, GridConfig& g) {
  r.get("nx", g.nx);
  r.get("nz", g.nz);
  r.get("width", g.width);
  r.get("depth", g.depth);
  r.get("water_depth", g.water_depth);
  r.finish();
}

void read_geometry(Reader r, GeometryConfig& g) {
  r.get("n_sources", g.n_sources);
  r.get("n_receivers", g.n_receivers);
  r.get("source_depth", g.source_depth);
  r.get("receiver_depth", g.receiver_depth);
  r.get("t_max", g.t_max);
  r.get("time_refinement", g.time_refinement);
  r.get("peak_frequency", g.peak_frequency);
  r.get("sponge_cells", g.sponge_cells);
  r.get("absorbing_top", g.absorbing_top);
  r.get("history_stride", g.history_stride);
  r.finish();
}

void read_model(Reader r, ModelConfig& m) {
  r.get("scene", m.scene);
  r.get("file", m.file);
  r.get("v_min", m.v_min);
  r.get("v_max", m.v_max);
  r.get("water_velocity", m.water_velocity);
  r.finish();
}

void read_prior(Reader r, PriorConfig& p) {
  r.get("kind", p.kind);
  r.get("sigma", p.sigma);
  r.get("nu", p.nu);
  r.get("ell", p.ell);
  r.get("mean_smoothing", p.mean_smoothing);
  r.get("level_sigma", p.level_sigma);
  r.get("level_nu", p.level_nu);
  r.get("level_ell", p.level_ell);
  r.get("level_offset", p.level_offset);
  r.get("smoothing_width", p.smoothing_width);
  r.get("salt_mean", p.salt_mean);
  r.get("salt_sd", p.salt_sd);
  r.finish();
}

void read_map(Reader r, MapOptions& o) {
  r.get("max_iterations", o.max_iterations);
  r.get("gradient_tolerance", o.gradient_tolerance);
  r.get("objective_tolerance", o.objective_tolerance);
  r.get("memory", o.memory);
  r.get("max_backtracks", o.max_backtracks);
  r.get("armijo", o.armijo);
  r.finish();
}

void read_laplace(Reader r, LaplaceOptions& o) {
  r.get("max_rank", o.max_rank);
  r.get("relative_cutoff", o.relative_cutoff);
  r.get("oversampling", o.oversampling);
  r.get("exact_dimension", o.exact_dimension);
  r.get("seed", o.seed);
  r.finish();
}

void read_pcn(Reader r, ChainOptions& o, std::string& start) {
  r.get("start", start);
  r.get("steps", o.steps);
  r.get("burn_in", o.burn_in);
  r.get("thin", o.thin);
  r.get("step", o.step);
  r.get("adapt", o.adapt);
  r.get("target_acceptance", o.target_acceptance);
  r.get("adapt_interval", o.adapt_interval);
  r.finish();
}

void read_noise(Reader r, NoiseConfig& n) {
  r.get("enabled", n.enabled);
  if (r.has("snr_db")) {
    double v = 0.0;
    r.get("snr_db", v);
    n.snr_db = v;
  }
  r.get("amplitude", n.amplitude);
  r.finish();
}

void read_compare(Reader r, CompareConfig& c) {
  r.get("space", c.space);
  r.finish();
}

/// 1-based line of a byte offset.
std::size_t line_of(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["output"] = c.output;
  j["threads"] = c.threads;
  j["grid"] = {{"nx", c.grid.nx},
               {"nz", c.grid.nz},
               {"width", c.grid.width},
               {"depth", c.grid.depth},
               {"water_depth", c.grid.water_depth}};
  const auto& g = c.geometry;
  j["geometry"] = {{"n_sources", g.n_sources},         {"n_receivers", g.n_receivers},
                   {"source_depth", g.source_depth},   {"receiver_depth", g.receiver_depth},
                   {"t_max", g.t_max},                 {"time_refinement", g.time_refinement},
                   {"peak_frequency", g.peak_frequency},
                   {"sponge_cells", g.sponge_cells},   {"absorbing_top", g.absorbing_top},
                   {"history_stride", g.history_stride}};
  const auto& m = c.model;
  j["model"] = {{"scene", m.scene},
                {"file", m.file},
                {"v_min", m.v_min},
                {"v_max", m.v_max},
                {"water_velocity", m.water_velocity}};
  const auto& p = c.prior;
  j["prior"] = {{"kind", p.kind},
                {"sigma", p.sigma},
                {"nu", p.nu},
                {"ell", p.ell},
                {"mean_smoothing", p.mean_smoothing},
                {"level_sigma", p.level_sigma},
                {"level_nu", p.level_nu},
                {"level_ell", p.level_ell},
                {"level_offset", p.level_offset},
                {"smoothing_width", p.smoothing_width},
                {"salt_mean", p.salt_mean},
                {"salt_sd", p.salt_sd}};
  j["potentials"] = json::array();
  for (const auto& pc : c.potentials) j["potentials"].push_back({{"kind", to_string(pc.kind)}, {"beta", pc.beta}});
  j["map"] = {{"max_iterations", c.map.max_iterations},
              {"gradient_tolerance", c.map.gradient_tolerance},
              {"objective_tolerance", c.map.objective_tolerance},
              {"memory", c.map.memory},
              {"max_backtracks", c.map.max_backtracks},
              {"armijo", c.map.armijo}};
  j["laplace"] = {{"max_rank", c.laplace.max_rank},
                  {"relative_cutoff", c.laplace.relative_cutoff},
                  {"oversampling", c.laplace.oversampling},
                  {"exact_dimension", c.laplace.exact_dimension},
                  {"seed", c.laplace.seed}};
  j["pcn"] = {{"start", c.pcn_start},
              {"steps", c.pcn.steps},
              {"burn_in", c.pcn.burn_in},
              {"thin", c.pcn.thin},
              {"step", c.pcn.step},
              {"adapt", c.pcn.adapt},
              {"target_acceptance", c.pcn.target_acceptance},
              {"adapt_interval", c.pcn.adapt_interval}};
  j["noise"] = {{"enabled", c.noise.enabled}, {"amplitude", c.noise.amplitude}};
  if (c.noise.snr_db) j["noise"]["snr_db"] = *c.noise.snr_db;
  j["compare"] = {{"space", c.compare.space}};
  return j;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: syntax error at line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
  ExperimentConfig c;
  Reader r(j, "");
  if (!r.has("seed")) fail("seed", "required for reproducibility");
  r.get("seed", c.seed);
  r.get("output", c.output);
  r.get("threads", c.threads);
  if (r.has("grid")) read_grid(Reader(r.raw("grid"), "grid"), c.grid);
  if (r.has("geometry")) read_geometry(Reader(r.raw("geometry"), "geometry"), c.geometry);
  if (r.has("model")) read_model(Reader(r.raw("model"), "model"), c.model);
  if (r.has("prior")) read_prior(Reader(r.raw("prior"), "prior"), c.prior);
  if (r.has("map")) read_map(Reader(r.raw("map"), "map"), c.map);
  if (r.has("laplace")) read_laplace(Reader(r.raw("laplace"), "laplace"), c.laplace);
  if (r.has("pcn")) read_pcn(Reader(r.raw("pcn"), "pcn"), c.pcn, c.pcn_start);
  if (r.has("noise")) read_noise(Reader(r.raw("noise"), "noise"), c.noise);
  if (r.has("compare")) read_compare(Reader(r.raw("compare"), "compare"), c.compare);
  if (!r.has("potentials")) fail("potentials", "required");
  const json& list = r.raw("potentials");
  if (!list.is_array()) fail("potentials", "expected an array");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string path = "potentials[" + std::to_string(i) + "]";
    Reader pr(list[i], path);
    PotentialConfig pc;
    std::string kind;
    if (!pr.has("kind")) fail(path + ".kind", "required");
    pr.get("kind", kind);
    try {
      pc.kind = parse_potential_kind(kind);
    } catch (const Error& e) {
      fail(path + ".kind", e.what());
    }
    pr.get("beta", pc.beta);
    pr.finish();
    c.potentials.push_back(pc);
  }
  r.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  return parse_config(io::read_file(path));
}

std::string serialize_config(const ExperimentConfig& config) { return to_json(config).dump(2) + "\n"; }

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) { return to_json(a) == to_json(b); }

void ExperimentConfig::validate() const {
  if (threads < 1) fail("threads", "must be at least 1");
  if (output.empty()) fail("output", "must not be empty");
  if (grid.nx < 8 || grid.nz < 8) fail("grid", "needs at least 8 cells per axis");
  if (!(grid.width > 0.0) || !(grid.depth > 0.0)) fail("grid", "extent must be positive");
  if (!(grid.water_depth >= 0.0) || grid.water_depth >= grid.depth) fail("grid.water_depth", "must lie in [0, depth)");
  if (geometry.n_sources < 1) fail("geometry.n_sources", "must be at least 1");
  if (geometry.n_receivers < 1) fail("geometry.n_receivers", "must be at least 1");
  for (auto [name, d] : {std::pair{"geometry.source_depth", geometry.source_depth},
                         std::pair{"geometry.receiver_depth", geometry.receiver_depth}})
    if (!(d >= 0.0) || d > grid.depth) fail(name, "must lie inside the grid");
  if (!(geometry.t_max > 0.0)) fail("geometry.t_max", "must be positive");
  if (geometry.time_refinement < 1) fail("geometry.time_refinement", "must be at least 1");
  if (!(geometry.peak_frequency > 0.0)) fail("geometry.peak_frequency", "must be positive");
  if (geometry.sponge_cells < 0) fail("geometry.sponge_cells", "must be non-negative");
  if (geometry.history_stride < 1) fail("geometry.history_stride", "must be at least 1");
  if (model.file.empty() && model.scene != "continuous" && model.scene != "salt")
    fail("model.scene", "must be 'continuous' or 'salt'");
  if (!(model.v_min > 0.0) || !(model.v_max > model.v_min)) fail("model", "need 0 < v_min < v_max");
  if (!(model.water_velocity > 0.0)) fail("model.water_velocity", "must be positive");
  if (prior.kind != "gaussian" && prior.kind != "levelset") fail("prior.kind", "must be 'gaussian' or 'levelset'");
  if (!(prior.sigma >= 0.0) || !(prior.nu > 0.0) || !(prior.ell > 0.0)) fail("prior", "need sigma >= 0, nu > 0, ell > 0");
  if (!(prior.mean_smoothing >= 0.0)) fail("prior.mean_smoothing", "must be non-negative");
  if (!(prior.level_sigma >= 0.0) || !(prior.level_nu > 0.0) || !(prior.level_ell > 0.0))
    fail("prior", "need level_sigma >= 0, level_nu > 0, level_ell > 0");
  if (!(prior.smoothing_width >= 0.0)) fail("prior.smoothing_width", "must be non-negative");
  if (!(prior.salt_sd > 0.0)) fail("prior.salt_sd", "must be positive");
  if (potentials.empty()) fail("potentials", "must not be empty");
  for (std::size_t i = 0; i < potentials.size(); ++i)
    if (!(potentials[i].beta > 0.0) || !std::isfinite(potentials[i].beta))
      fail("potentials[" + std::to_string(i) + "].beta", "must be positive");
  if (map.max_iterations < 0) fail("map.max_iterations", "must be non-negative");
  if (laplace.max_rank < 0) fail("laplace.max_rank", "must be non-negative");
  if (pcn.steps > 0 && pcn.burn_in >= pcn.steps) fail("pcn.burn_in", "must be shorter than the chain");
  if (pcn_start != "zero" && pcn_start != "map") fail("pcn.start", "must be 'zero' or 'map'");
  if (pcn.thin < 1) fail("pcn.thin", "must be at least 1");
  if (!(pcn.step >= 0.0) || pcn.step > 1.0) fail("pcn.step", "must lie in [0, 1]");
  if (noise.snr_db && !std::isfinite(*noise.snr_db)) fail("noise.snr_db", "must be finite");
  if (!(noise.amplitude >= 0.0)) fail("noise.amplitude", "must be non-negative");
  if (compare.space != "grid" && compare.space != "latent") fail("compare.space", "must be 'grid' or 'latent'");
}

}  // namespace gfwi::cli
