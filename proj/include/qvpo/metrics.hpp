#pragma once

#include <filesystem>
#include <fstream>
#include <vector>

namespace qvpo {

struct MetricsRow {
  long step = 0;
  long episodes = 0;
  double eval_return_mean = 0.0;
  double eval_return_std = 0.0;
  double policy_loss = 0.0;
  double critic_loss = 0.0;
  double mean_positive_weight = 0.0;
  double zero_weight_fraction = 0.0;
  std::vector<double> mode_coverage;  // three entries on the bandit, else empty
};

/// CSV sink; fixed column order, 9 significant digits, one flush per row so
/// an aborted run keeps everything written so far.
class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& path, bool with_coverage);
  void write(const MetricsRow& row);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  bool with_coverage_;
  std::ofstream out_;
};

/// Parses a metrics CSV back into rows; raises IoError citing the 1-based
/// line index on malformed content.
std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);

}  // namespace qvpo
