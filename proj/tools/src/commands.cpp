#include "gfwi_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "gfwi_cli/experiment.hpp"
#include "gfwi_cli/scenes.hpp"
#include "gibbsfwi/error.hpp"
#include "gibbsfwi/io.hpp"
#include "gibbsfwi/version.hpp"
#include "json.hpp"

namespace gfwi::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Canonical config without the run-location fields, so that identical
/// experiments written to different directories hash alike.
std::string experiment_text(const ExperimentConfig& c) {
  json j = json::parse(serialize_config(c));
  j.erase("output");
  j.erase("threads");
  return j.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& c) { return io::hex64(io::fnv1a(experiment_text(c))); }

json prior_json(const ExperimentConfig& c) {
  const auto& p = c.prior;
  json j{{"kind", p.kind}};
  if (p.kind == "levelset") {
    j["level_field"] = {{"sigma", p.level_sigma}, {"nu", p.level_nu}, {"ell", p.level_ell}, {"offset", p.level_offset}};
    j["smoothing_width"] = p.smoothing_width;
    j["salt_velocity_prior"] = {{"mean", p.salt_mean}, {"sd", p.salt_sd}};
  } else {
    j["sigma"] = p.sigma;
    j["nu"] = p.nu;
    j["ell"] = p.ell;
    j["mean_smoothing"] = p.mean_smoothing;
  }
  return j;
}

json spec_json(const PotentialSpec& s) {
  json j{{"kind", to_string(s.kind)}, {"beta", s.beta}, {"norm_constant", s.norm_constant}};
  if (s.normalizer) {
    static const char* names[] = {"square_plus_delta", "exponential", "softplus"};
    j["normalizer"] = {{"kind", names[static_cast<int>(s.normalizer->kind)]},
                       {"delta", s.normalizer->delta},
                       {"scale", s.normalizer->scale}};
  }
  return j;
}

Field2D velocity_of(const Parameterization& p, std::span<const double> xi) {
  const auto m = p.slowness2(xi);
  Field2D v(p.grid());
  for (std::size_t i = 0; i < m.size(); ++i) v.values[i] = 1.0 / std::sqrt(m[i]);
  return v;
}

/// Prior field underlying a parameterization (u, or the level-set field).
const MaternField& field_prior(const Parameterization& p) {
  if (const auto* g = dynamic_cast<const GaussianFieldParameterization*>(&p)) return g->prior();
  return dynamic_cast<const MixedLevelSetParameterization&>(p).level();
}

/// Mean and pointwise standard deviation of the prior field under the
/// Laplace approximation.
std::pair<Field2D, Field2D> field_moments(const GaussianApprox& a, const Parameterization& p) {
  const MaternField& f = field_prior(p);
  const std::size_t n = f.latent_size();
  const std::span<const double> head(a.mean.data(), n);
  Field2D mean(p.grid(), f.field(head));
  std::vector<double> var(p.grid().size(), f.pointwise_variance());
  const Eigen::VectorXd d = a.shrinkage();
  std::vector<double> col(n);
  for (int k = 0; k < a.rank(); ++k) {
    for (std::size_t i = 0; i < n; ++i) col[i] = a.eigenvectors(static_cast<Eigen::Index>(i), k);
    const auto w = f.window(col);
    for (std::size_t i = 0; i < var.size(); ++i) var[i] -= d[k] * w[i] * w[i];
  }
  Field2D sd(p.grid());
  for (std::size_t i = 0; i < var.size(); ++i) sd.values[i] = std::sqrt(std::max(var[i], 0.0));
  return {mean, sd};
}

void write_approx(const fs::path& dir, const GaussianApprox& a) {
  io::write_array(dir / "laplace_mean", a.mean, {a.mean.size()});
  io::write_array(dir / "laplace_eigenvalues", std::span<const double>(a.eigenvalues.data(), a.eigenvalues.size()),
                  {static_cast<std::size_t>(a.rank())});
  // Column-major: one eigenvector after another.
  io::write_array(dir / "laplace_eigenvectors",
                  std::span<const double>(a.eigenvectors.data(), static_cast<std::size_t>(a.eigenvectors.size())),
                  {static_cast<std::size_t>(a.rank()), a.dimension()});
}

GaussianApprox read_approx(const fs::path& dir) {
  GaussianApprox a;
  a.mean = io::read_array(dir / "laplace_mean");
  const auto ev = io::read_array(dir / "laplace_eigenvalues");
  a.eigenvalues = Eigen::Map<const Eigen::VectorXd>(ev.data(), static_cast<Eigen::Index>(ev.size()));
  std::vector<std::size_t> shape;
  const auto vec = io::read_array(dir / "laplace_eigenvectors", &shape);
  if (shape.size() != 2 || shape[0] != ev.size() || shape[1] != a.mean.size())
    throw IoError("inconsistent Laplace arrays in " + dir.string());
  a.eigenvectors = Eigen::Map<const Eigen::MatrixXd>(vec.data(), static_cast<Eigen::Index>(shape[1]),
                                                     static_cast<Eigen::Index>(shape[0]));
  return a;
}

std::string eigen_csv(const GaussianApprox& a) {
  std::ostringstream os;
  os.precision(17);
  os << "index,eigenvalue,shrinkage\n";
  const Eigen::VectorXd d = a.shrinkage();
  for (int k = 0; k < a.rank(); ++k) os << k << ',' << a.eigenvalues[k] << ',' << d[k] << '\n';
  return os.str();
}

void write_inversion(const fs::path& dir, const Inversion& inv, const Parameterization& p, const ExperimentConfig& c,
                     const std::string& dataset) {
  fs::create_directories(dir);
  write_approx(dir, inv.laplace);
  const auto [mean, sd] = field_moments(inv.laplace, p);
  io::write_field(dir / "mean_field", mean);
  io::write_field(dir / "std_field", sd);
  const Field2D v = velocity_of(p, inv.map.xi);
  io::write_field(dir / "mean_velocity", v);
  io::write_field_csv(dir / "mean_velocity.csv", v);
  io::write_field_csv(dir / "std_field.csv", sd);
  io::atomic_write(dir / "eigenvalues.csv", eigen_csv(inv.laplace));
  json s{{"dataset", dataset},
         {"potential", spec_json(inv.spec)},
         {"prior", prior_json(c)},
         {"map",
          {{"iterations", inv.map.iterations},
           {"converged", inv.map.converged},
           {"objective", inv.map.objective},
           {"potential", inv.map.potential},
           {"gradient_norm", inv.map.gradient_norm},
           {"initial_gradient_norm", inv.map.initial_gradient_norm}}},
         {"laplace_rank", inv.laplace.rank()}};
  if (const auto* ls = dynamic_cast<const MixedLevelSetParameterization*>(&p))
    s["salt_velocity_at_map"] = ls->salt_velocity(inv.map.xi);
  io::atomic_write(dir / "summary.json", s.dump(2) + "\n");
}

struct Context {
  Scene scene;
  std::shared_ptr<WaveSolver> solver;
  std::shared_ptr<const Parameterization> param;
};

Context context(const ExperimentConfig& c) {
  Context ctx;
  ctx.scene = build_scene(c);
  ctx.solver = make_solver(ctx.scene, c);
  ctx.param = make_parameterization(ctx.scene, c);
  return ctx;
}

Seismogram read_dataset(const fs::path& out, const std::string& name) {
  const fs::path base = out / "data" / name;
  if (!fs::exists(fs::path(base).concat(".f64")))
    throw IoError("missing dataset " + base.string() + ".f64; run 'gfwi forward' first");
  return io::read_seismogram(base);
}

void check_shape(const Seismogram& y, const WaveSolver& solver) {
  const auto& g = solver.geometry();
  if (y.n_sources != g.n_sources() || y.n_receivers != g.n_receivers() || y.nt != g.nt)
    throw ConfigError("config does not match the stored dataset (sources, receivers or time axis differ)");
}

}  // namespace

void write_manifest(const fs::path& dir, const std::string& command, const ExperimentConfig& config,
                    const std::map<std::string, std::uint64_t>& seeds) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  json f = json::object();
  for (const auto& p : files) f[fs::relative(p, dir).generic_string()] = io::file_checksum(p);
  json m{{"command", command},
         {"config_hash", config_hash(config)},
         {"versions", {{"gibbsfwi", kVersion}, {"gfwi", kVersion}}},
         {"seeds", seeds},
         {"files", f}};
  io::atomic_write(dir / "manifest.json", m.dump(2) + "\n");
}

void cmd_forward(const ExperimentConfig& c, const fs::path& out) {
  const Scene scene = build_scene(c);
  const auto solver = make_solver(scene, c);
  const Dataset d = simulate(*solver, scene, c.noise, c.seed);
  const fs::path dir = out / "data";
  fs::create_directories(dir);
  io::write_seismogram(dir / "clean", d.clean, &scene.geometry);
  io::write_traces_csv(dir / "clean_traces.csv", d.clean);
  io::write_field(dir / "true_velocity", scene.velocity);
  io::write_field_csv(dir / "true_velocity.csv", scene.velocity);
  json info{{"n_sources", scene.geometry.n_sources()},
            {"n_receivers", scene.geometry.n_receivers()},
            {"nt", scene.geometry.nt},
            {"dt", scene.geometry.dt},
            {"scene", c.model.file.empty() ? c.model.scene : std::string("file")}};
  if (d.noisy) {
    io::write_seismogram(dir / "noisy", d.noisy->data, &scene.geometry);
    io::write_traces_csv(dir / "noisy_traces.csv", d.noisy->data);
    io::write_array(dir / "eta0", d.noisy->eta0, {d.noisy->eta0.size()});
    info["noise"] = {{"amplitude", d.noisy->amplitude},
                     {"snr_db", std::isfinite(d.noisy->snr_db) ? json(d.noisy->snr_db) : json("inf")}};
  }
  io::atomic_write(dir / "dataset.json", info.dump(2) + "\n");
  io::atomic_write(dir / "config.json", experiment_text(c));
  write_manifest(dir, "forward", c, {{"noise", c.seed}});
}

void cmd_invert(const ExperimentConfig& c, const fs::path& out) {
  const Context ctx = context(c);
  const Seismogram clean = read_dataset(out, "clean");
  check_shape(clean, *ctx.solver);
  std::optional<Seismogram> noisy;
  if (fs::exists(out / "data" / "noisy.f64")) noisy = read_dataset(out, "noisy");
  const fs::path dir = out / "invert";
  for (const auto& pc : c.potentials) {
    const PotentialSpec spec = normalized_spec(pc, *ctx.solver, *ctx.param, clean);
    const std::string name = to_string(pc.kind);
    Inversion inv;
    try {
      inv = invert(FwiProblem(ctx.solver, ctx.param, spec, clean), c);
    } catch (const NumericError& e) {
      throw NumericError(name + " inversion on clean data: " + e.what());
    }
    write_inversion(dir / "clean" / name, inv, *ctx.param, c, "clean");
    if (noisy) {
      try {
        const Inversion ninv = invert(FwiProblem(ctx.solver, ctx.param, spec, *noisy), c, inv.map.xi);
        write_inversion(dir / "noisy" / name, ninv, *ctx.param, c, "noisy");
      } catch (const NumericError& e) {
        throw NumericError(name + " inversion on noisy data: " + e.what());
      }
    }
  }
  io::atomic_write(dir / "config.json", experiment_text(c));
  write_manifest(dir, "invert", c, {{"laplace", c.laplace.seed}});
}

void cmd_sample(const ExperimentConfig& c, const fs::path& out) {
  const Context ctx = context(c);
  const Seismogram clean = read_dataset(out, "clean");
  check_shape(clean, *ctx.solver);
  const PotentialSpec spec = normalized_spec(c.potentials.front(), *ctx.solver, *ctx.param, clean);
  const FwiProblem problem(ctx.solver, ctx.param, spec, clean);
  ChainOptions opt = c.pcn;
  opt.seed = c.seed;
  std::vector<double> init(problem.dimension(), 0.0);
  std::optional<MapResult> start;
  if (c.pcn_start == "map") {
    start = map_estimate(problem, init, c.map);
    init = start->xi;
  }
  const ChainSummary chain = run_chain(problem, init, opt);

  const fs::path dir = out / "sample";
  fs::create_directories(dir);
  const auto& g = ctx.param->grid();
  std::vector<double> vmean(g.size(), 0.0), vsq(g.size(), 0.0);
  for (const auto& xi : chain.samples) {
    const Field2D v = velocity_of(*ctx.param, xi);
    for (std::size_t i = 0; i < g.size(); ++i) {
      vmean[i] += v.values[i];
      vsq[i] += v.values[i] * v.values[i];
    }
  }
  const double ns = static_cast<double>(chain.samples.size());
  Field2D mean(g), sd(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    mean.values[i] = vmean[i] / ns;
    sd.values[i] = std::sqrt(std::max(vsq[i] / ns - mean.values[i] * mean.values[i], 0.0));
  }
  io::write_field(dir / "mean_velocity", mean);
  io::write_field(dir / "std_velocity", sd);
  io::write_field_csv(dir / "mean_velocity.csv", mean);
  io::write_field_csv(dir / "std_velocity.csv", sd);
  std::ostringstream pot;
  pot.precision(17);
  pot << "sample,potential\n";
  for (std::size_t k = 0; k < chain.potentials.size(); ++k) pot << k << ',' << chain.potentials[k] << '\n';
  io::atomic_write(dir / "potentials.csv", pot.str());

  json s{{"potential", spec_json(spec)},
         {"prior", prior_json(c)},
         {"acceptance_rate", chain.acceptance_rate},
         {"accepted", chain.accepted},
         {"total", chain.total},
         {"final_step", chain.final_step},
         {"nonfinite_rejections", chain.nonfinite_rejections},
         {"kept_samples", chain.samples.size()},
         {"initial_only", chain.initial_only},
         {"start", c.pcn_start}};
  if (start) s["start_map"] = {{"iterations", start->iterations}, {"potential", start->potential}};
  if (const auto* ls = dynamic_cast<const MixedLevelSetParameterization*>(ctx.param.get())) {
    std::vector<double> salt;
    for (const auto& xi : chain.samples) salt.push_back(ls->salt_velocity(xi));
    std::ostringstream trace;
    trace.precision(17);
    trace << "sample,salt_velocity\n";
    for (std::size_t k = 0; k < salt.size(); ++k) trace << k << ',' << salt[k] << '\n';
    io::atomic_write(dir / "salt_velocity.csv", trace.str());
    const int bins = 40;
    std::vector<int> counts(bins, 0);
    const double lo = c.model.v_min, hi = c.model.v_max;
    for (double v : salt) ++counts[std::clamp(static_cast<int>((v - lo) / (hi - lo) * bins), 0, bins - 1)];
    std::ostringstream hist;
    hist.precision(17);
    hist << "bin_left,bin_right,count\n";
    for (int b = 0; b < bins; ++b)
      hist << lo + (hi - lo) * b / bins << ',' << lo + (hi - lo) * (b + 1) / bins << ',' << counts[b] << '\n';
    io::atomic_write(dir / "salt_histogram.csv", hist.str());
    std::vector<double> sorted = salt;
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double q) {
      const double pos = q * static_cast<double>(sorted.size() - 1);
      const auto i = static_cast<std::size_t>(pos);
      const double f = pos - static_cast<double>(i);
      return i + 1 < sorted.size() ? (1 - f) * sorted[i] + f * sorted[i + 1] : sorted[i];
    };
    double m = 0.0;
    for (double v : salt) m += v / static_cast<double>(salt.size());
    s["salt_velocity"] = {{"mean", m},
                          {"interval_95", {quantile(0.025), quantile(0.975)}},
                          {"prior", {{"mean", c.prior.salt_mean}, {"sd", c.prior.salt_sd}}}};
    if (c.model.file.empty() && c.model.scene == "salt") s["salt_velocity"]["true_value"] = kSaltVelocity;
  }
  io::atomic_write(dir / "summary.json", s.dump(2) + "\n");
  io::atomic_write(dir / "config.json", experiment_text(c));
  write_manifest(dir, "sample", c, {{"chain", c.seed}});
}

void cmd_compare(const ExperimentConfig& c, const fs::path& out) {
  const Context ctx = context(c);
  const Seismogram clean = read_dataset(out, "clean");
  const Seismogram noisy = read_dataset(out, "noisy");
  double snr = snr_db(clean, noisy);
  StabilityReport report = stability_report({}, clean, noisy, ctx.scene.grid, snr, c.seed);
  std::vector<std::string> missing;
  std::ostringstream fields;
  fields.precision(17);
  fields << "potential,dataset,x,z,mean_velocity,std_field\n";
  for (const auto& pc : c.potentials) {
    const std::string name = to_string(pc.kind);
    StabilityEntry e;
    e.kind = pc.kind;
    e.reference = reference_distance(pc.kind);
    std::optional<GaussianApprox> approx[2];
    const char* sets[2] = {"clean", "noisy"};
    for (int k = 0; k < 2; ++k) {
      const fs::path dir = out / "invert" / sets[k] / name;
      if (!fs::exists(dir / "laplace_mean.f64")) {
        missing.push_back(std::string(sets[k]) + "/" + name);
        continue;
      }
      approx[k] = read_approx(dir);
      if (approx[k]->dimension() != ctx.param->dimension())
        throw ConfigError("config does not match the stored inversion " + dir.string());
      const Field2D v = io::read_field(dir / "mean_velocity");
      const auto [mean, sd] = field_moments(*approx[k], *ctx.param);
      const Grid2D& g = ctx.scene.grid;
      for (int iz = 0; iz < g.nz; ++iz)
        for (int ix = 0; ix < g.nx; ++ix)
          fields << name << ',' << sets[k] << ',' << g.x(ix) << ',' << g.z(iz) << ',' << v(ix, iz) << ','
                 << sd(ix, iz) << '\n';
    }
    if (approx[0] && approx[1])
      e.distance_w2 = laplace_distance(*approx[0], *approx[1], *ctx.param, c.compare.space);
    report.entries.push_back(e);
  }
  const fs::path dir = out / "compare";
  fs::create_directories(dir);
  json j = json::parse(report.to_json());
  j["missing"] = missing;
  j["space"] = c.compare.space;
  io::atomic_write(dir / "report.json", j.dump(2) + "\n");
  io::atomic_write(dir / "report.csv", report.to_csv());
  io::atomic_write(dir / "fields.csv", fields.str());
  io::atomic_write(dir / "config.json", experiment_text(c));
  write_manifest(dir, "compare", c, {{"noise", c.seed}});
  for (const auto& m : missing) std::cerr << "gfwi compare: missing inversion " << m << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"Bayesian full-waveform inversion experiments"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  const char* names[] = {"forward", "invert", "sample", "compare", "validate-config"};
  const char* help[] = {"simulate clean and noisy data", "MAP and Laplace approximation per potential",
                        "pCN chain for the first potential", "stability report from clean and noisy inversions",
                        "check a config and print it in canonical form"};
  for (int i = 0; i < 5; ++i) {
    auto* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--out", out_dir, "overrides the config output directory");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigFailure;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    ExperimentConfig c = load_config(config_path);
    if (seed) c.seed = *seed;
    if (!out_dir.empty()) c.output = out_dir;
    if (threads) c.threads = *threads;
    c.validate();
    if (command == "validate-config") {
      std::cout << serialize_config(c);
      return kOk;
    }
    const fs::path out(c.output);
    if (command == "forward") cmd_forward(c, out);
    if (command == "invert") cmd_invert(c, out);
    if (command == "sample") cmd_sample(c, out);
    if (command == "compare") cmd_compare(c, out);
    return kOk;
  } catch (const IoError& e) {
    std::cerr << "gfwi " << command << ": " << e.what() << '\n';
    return kIoFailure;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "gfwi " << command << ": " << e.what() << '\n';
    return kIoFailure;
  } catch (const NumericError& e) {
    std::cerr << "gfwi " << command << ": " << e.what() << '\n';
    return kNumericFailure;
  } catch (const DomainError& e) {
    std::cerr << "gfwi " << command << ": " << e.what() << '\n';
    return kNumericFailure;
  } catch (const Error& e) {
    std::cerr << "gfwi " << command << ": " << e.what() << '\n';
    return kConfigFailure;
  }
}

}  // namespace gfwi::cli
