#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "relground/common.hpp"
#include "relground/evalkit.hpp"

namespace relground::cli {

/// A report file holds nothing to draw.
class NoData : public DataError {
public:
    using DataError::DataError;
};

/// Edit distance (top) and mean plan length (bottom) against the number of
/// demonstrations. `reference_length` draws a dashed line in the lower plot.
std::string ed_curve_svg(const std::string& title, const std::vector<evalkit::CurvePoint>& curve,
                         std::optional<double> reference_length = std::nullopt);

/// One violin per (group, label) including the unlabelled cluster,
/// groups side by side.
std::string violin_svg(const std::string& title, const evalkit::LatentSamples& samples);

/// Per-axis bars of model MAE next to the constant-mean baseline.
std::string pose_mae_svg(const std::string& title, const std::array<double, 6>& mae,
                         const std::array<double, 6>& baseline);

struct TableCell {
    std::string row;
    std::string column;
    double value = 0;
};

/// Rows and columns in first-appearance order; missing cells stay blank.
std::string table_svg(const std::string& title, const std::vector<TableCell>& cells);

/// Gaussian kernel density on `grid` with Silverman's bandwidth.
std::vector<double> kernel_density(const std::vector<double>& samples, const std::vector<double>& grid);

}  // namespace relground::cli
