#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "relground/labelspace.hpp"
#include "relground/plan_types.hpp"
#include "relground/planner.hpp"
#include "relground/worldgen/demos.hpp"

namespace relground::posereg {

class DegenerateData : public DataError {
public:
    using DataError::DataError;
};

/// Draws c[p] from the fitted normal of y[p] (the unlabelled cluster where
/// y[p] is UNKNOWN). Throws DataError if that distribution is unfit.
std::vector<double> sample_relational_embedding(const labelspace::LabelVector& y,
                                                const planner::LabelDistributions& K, std::uint64_t seed);

struct Triple {
    std::vector<double> z_tar;
    std::vector<double> c;
    Pose pose;
};

/// Regression triple of a placement demo: encoder mean of the target in the
/// first frame, c sampled from K for the final-frame relation and the final
/// pose.
Triple placement_triple(const worldgen::Demonstration& demo, const relvae::Model& model,
                        const labelspace::LabelConfig& labels, const planner::LabelDistributions& K,
                        std::uint64_t seed);

/// Per-axis mean pose; angles use the circular mean.
Pose mean_pose(const std::vector<Pose>& poses);

struct RegressorConfig {
    std::vector<int> hidden{256, 64};
    int epochs = 300;
    int batch_size = 64;
    double learning_rate = 1e-3;
    double weight_decay = 1e-2;
    std::uint64_t seed = 0;
};

/// Two-hidden-layer perceptron on standardized (z_tar, c) inputs predicting a
/// standardized pose. Angles are regressed unwrapped around their circular
/// mean over the training set.
struct PoseRegressor {
    int z_dim = 0;
    int c_dim = 0;
    std::vector<int> hidden;
    std::vector<float> params;
    std::vector<float> in_mean, in_scale;
    std::vector<float> out_mean, out_scale;
    std::vector<float> angle_center;

    std::size_t parameter_count() const { return params.size(); }
};

struct FitResult {
    PoseRegressor regressor;
    /// Mean standardized squared error per epoch.
    std::vector<double> loss_history;
    std::vector<std::string> warnings;
};

/// Throws DegenerateData for an empty or inconsistent training set; warns
/// when there are fewer triples than parameters.
FitResult fit_pose_regressor(const std::vector<Triple>& triples, const RegressorConfig& config);

Pose predict_pose(const std::vector<double>& z_tar, const std::vector<double>& c, const PoseRegressor& regressor);

void save_regressor(const std::filesystem::path& path, const PoseRegressor& regressor, const std::string& task_meta = "{}");
PoseRegressor load_regressor(const std::filesystem::path& path);

}  // namespace relground::posereg
