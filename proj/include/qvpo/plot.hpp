#pragma once

#include <filesystem>

namespace qvpo {

/// Renders a metrics CSV as a standalone SVG: evaluation-return mean versus
/// step with a shaded +-std band. Axis ranges are the data min/max padded by
/// 5% and are exposed as data-* attributes on the plot group.
void write_learning_curve_svg(const std::filesystem::path& metrics_csv,
                              const std::filesystem::path& out_svg);

}  // namespace qvpo
