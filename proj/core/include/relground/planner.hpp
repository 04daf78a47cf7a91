#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "relground/dataio.hpp"
#include "relground/labelspace.hpp"
#include "relground/plan_types.hpp"
#include "relground/relvae.hpp"
#include "relground/worldgen/demos.hpp"

namespace relground::planner {

class LengthMismatch : public DataError {
public:
    using DataError::DataError;
};

class EmptyEssence : public DataError {
public:
    using DataError::DataError;
};

/// Relational embedding means over time for one (target, referent) pair.
struct Trace {
    std::vector<std::string> groups;
    std::vector<std::vector<double>> embeddings;
    /// Frames where either mask was empty; their embedding repeats the last
    /// visible one.
    std::vector<bool> occluded;

    std::size_t length() const { return embeddings.size(); }
    std::size_t dim() const { return groups.size(); }
};

struct SegmentationConfig {
    double var_moving = 1.0;
    double var_static = 0.1;

    void validate() const;
};

Trace project_demo(const worldgen::Demonstration& demo, const relvae::Model& model,
                   const labelspace::LabelConfig& labels, int tar_id, int ref_id);

/// Log-density comparison between the moving and static step models.
bool step_is_moving(const std::vector<double>& from, const std::vector<double>& to, const SegmentationConfig& cfg);

/// Squared step length above which step_is_moving holds, for dimension L.
double moving_threshold(std::size_t L, const SegmentationConfig& cfg);

/// Per-target moving flags per transition (T - 1 entries).
std::vector<bool> moving_flags(const Trace& trace, const SegmentationConfig& cfg);

/// Scene-level mover per transition; several flagged targets resolve to the
/// one with the largest step.
MovementPrescriptionSequence movement_prescription(const std::map<int, Trace>& traces, const SegmentationConfig& cfg);

struct LabelFit {
    double mean = 0;
    double stddev = 0;
    int count = 0;
    bool fit = false;
};

/// Per group: a 1-D normal per label plus one for the unlabelled cluster.
struct LabelDistributions {
    std::vector<std::string> groups;
    std::vector<std::vector<LabelFit>> labels;
    std::vector<LabelFit> unknown;
    int min_samples = 20;

    const LabelFit& at(std::size_t group, const std::optional<int>& label) const {
        return label ? labels.at(group).at(*label) : unknown.at(group);
    }
};

/// Fits from precomputed embedding means and their labels. Fewer than
/// `min_samples` samples leaves a label unfit.
LabelDistributions fit_label_distributions(const std::vector<std::vector<double>>& embeddings,
                                           const std::vector<labelspace::LabelVector>& labels,
                                           const labelspace::LabelConfig& config, int min_samples = 20);

LabelDistributions fit_label_distributions(const relvae::Model& model,
                                           const std::vector<dataio::ObservationPair>& pairs,
                                           const std::vector<int>& indices, const labelspace::LabelConfig& config,
                                           int min_samples = 20);

/// Per-frame label assignment by the highest fitted density per group. The
/// unlabelled cluster competes like a label; ties go to the earlier label.
/// Occluded frames keep the previous assignment.
std::vector<labelspace::LabelVector> symbolic_trace(const Trace& trace, const LabelDistributions& K);

/// Ordered intersection of the demos' plans by iterated longest common
/// subsequence over symbols. Timesteps come from the first plan.
SymbolicPlan extract_essence(const std::vector<SymbolicPlan>& plans);

/// Steps of `plan` that align with `essence` (longest common subsequence).
SymbolicPlan filter_to_essence(const SymbolicPlan& plan, const SymbolicPlan& essence);

struct InferredPlan {
    SymbolicPlan raw;
    SymbolicPlan plan;
    /// Some frame of the pair was occluded, so the plan may hold spurious steps.
    bool occlusion_affected = false;
};

/// Plan of one target: symbolic trace, label-change events, then filtering to
/// the essence when one is given.
InferredPlan infer_plan(const Trace& trace, const LabelDistributions& K, const SymbolicPlan* essence = nullptr);

/// Header (L, T, group names, occlusion flags) followed by a T x L float32 matrix.
void write_trace(const std::filesystem::path& path, const Trace& trace);
Trace read_trace(const std::filesystem::path& path);

std::string distributions_to_json(const LabelDistributions& K);
LabelDistributions distributions_from_json(const std::string& text);

/// Plans as ordered (group, label, timestep) records, with names for reading.
std::string plan_to_json(const SymbolicPlan& plan, const labelspace::LabelConfig& labels);
SymbolicPlan plan_from_json(const std::string& text);

}  // namespace relground::planner
