#pragma once

#include <filesystem>
#include <string>

#include "qvpo/critic.hpp"
#include "qvpo/diffusion.hpp"

namespace qvpo {

/// Everything a trained run needs to be re-evaluated later.
struct ModelBundle {
  std::string env;
  bool bandit_strict_exponent = false;
  int diffusion_steps = 20;
  double beta_min = 1e-4;
  double beta_max = 0.02;
  NoisePredictor predictor;
  TwinCritic critic;
};

/// JSON on disk; doubles survive the round trip exactly.
void save_model(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_model(const std::filesystem::path& path);

}  // namespace qvpo
