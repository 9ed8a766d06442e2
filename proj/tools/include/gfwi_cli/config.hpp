#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gibbsfwi/grid_wave.hpp"
#include "gibbsfwi/inference.hpp"
#include "gibbsfwi/potentials.hpp"

namespace gfwi::cli {

struct GridConfig {
  int nx = 64;
  int nz = 32;
  /// Physical extent in km; spacing is width / (nx - 1).
  double width = 1.0;
  double depth = 0.5;
  double water_depth = 0.0;

  Grid2D grid() const;
};

struct GeometryConfig {
  int n_sources = 6;
  int n_receivers = 32;
  double source_depth = 0.03;
  double receiver_depth = 0.03;
  double t_max = 0.8;
  /// Time step = stable step / time_refinement.
  int time_refinement = 1;
  double peak_frequency = 10.0;
  int sponge_cells = 20;
  bool absorbing_top = false;
  int history_stride = 1;
};

struct ModelConfig {
  /// "continuous" or "salt"; ignored when file is set.
  std::string scene = "continuous";
  /// Velocity field written by io::write_field (base path, no extension).
  std::string file;
  double v_min = 1.5;
  double v_max = 4.5;
  double water_velocity = 1.5;
};

struct PriorConfig {
  /// "gaussian" or "levelset".
  std::string kind = "gaussian";
  double sigma = 0.7;
  double nu = 3.0;
  double ell = 0.05;
  /// Width (km) of the Gaussian filter applied to the true latent field to
  /// form the prior mean.
  double mean_smoothing = 0.1;
  /// Level-set field and hierarchical salt velocity.
  double level_sigma = 10.0;
  double level_nu = 2.0;
  double level_ell = 0.25;
  double level_offset = 0.0;
  double smoothing_width = 1.0;
  double salt_mean = 3.0;
  double salt_sd = 4.0;
};

struct PotentialConfig {
  PotentialKind kind = PotentialKind::L2;
  double beta = 1.0;
};

struct NoiseConfig {
  bool enabled = false;
  /// Target SNR; when absent `amplitude` is used directly.
  std::optional<double> snr_db;
  double amplitude = 0.0;
};

struct CompareConfig {
  /// "grid": W2 between grid pushforwards; "latent": whitened low-rank form.
  std::string space = "grid";
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output = "out";
  int threads = 1;
  GridConfig grid;
  GeometryConfig geometry;
  ModelConfig model;
  PriorConfig prior;
  std::vector<PotentialConfig> potentials;
  MapOptions map;
  LaplaceOptions laplace;
  /// The chain seed is taken from `seed`.
  ChainOptions pcn;
  /// Chain start: "zero" (prior mean) or "map" (MAP of the first potential).
  std::string pcn_start = "zero";
  NoiseConfig noise;
  CompareConfig compare;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Parses JSON text.  Unknown keys, a missing seed and type mismatches are
/// ConfigErrors that name the field (and the line for syntax errors).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Canonical JSON with every field present.
std::string serialize_config(const ExperimentConfig& config);
bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace gfwi::cli
