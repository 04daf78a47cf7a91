#pragma once

#include <array>
#include <string>
#include <vector>

#include "relground/dataio.hpp"
#include "relground/labelspace.hpp"
#include "relground/plan_types.hpp"
#include "relground/relvae.hpp"

namespace relground::evalkit {

/// Fraction of (transition, target) cells where "target moves" agrees.
double seg_accuracy(const MovementPrescriptionSequence& S, const MovementPrescriptionSequence& S_hat,
                    const std::vector<int>& targets);

enum class EditMode {
    /// Positionwise mismatches for equal lengths, Levenshtein otherwise;
    /// both divided by |Y| and clamped to [0, 1].
    levenshtein_fallback,
    /// Equal lengths only; a length mismatch throws ShapeMismatch.
    strict,
};

std::size_t levenshtein(const SymbolicPlan& a, const SymbolicPlan& b);

/// Y is the reference plan. An empty Y gives 0 against an empty plan and 1
/// otherwise.
double edit_distance(const SymbolicPlan& Y, const SymbolicPlan& Y_hat, EditMode mode = EditMode::levenshtein_fallback);

/// Per-axis mean absolute error (x, y, z, roll, pitch, yaw); angles use the
/// shortest difference on the circle.
std::array<double, 6> pose_mae(const std::vector<Pose>& P, const std::vector<Pose>& P_hat);

/// c-coordinate samples per group, per label, plus the unlabelled list.
struct LatentSamples {
    std::vector<std::string> groups;
    std::vector<std::vector<std::string>> label_names;
    std::vector<std::vector<std::vector<double>>> by_label;
    std::vector<std::vector<double>> unknown;
};

LatentSamples export_latent_samples(const relvae::Model& model, const std::vector<dataio::ObservationPair>& pairs,
                                    const std::vector<int>& indices, const labelspace::LabelConfig& labels);

/// Tab-separated columns: group, label ("unknown" for the unlabelled list), value.
std::string latent_samples_to_tsv(const LatentSamples& samples);
LatentSamples latent_samples_from_tsv(const std::string& text);

struct CurvePoint {
    int n_demos = 0;
    double mean_ed = 0;
    double mean_length = 0;
};

/// For n = 1..N: essence of the first n inferred plans, every plan filtered
/// to it, then mean edit distance to `ground_truth` and mean filtered length
/// over all N demos. An empty essence leaves every filtered plan empty.
std::vector<CurvePoint> ed_vs_demos_curve(const std::vector<SymbolicPlan>& inferred,
                                          const std::vector<SymbolicPlan>& ground_truth,
                                          EditMode mode = EditMode::levenshtein_fallback);

std::string curve_to_tsv(const std::vector<CurvePoint>& curve);
std::vector<CurvePoint> curve_from_tsv(const std::string& text);

}  // namespace relground::evalkit
