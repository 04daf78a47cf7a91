#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "relground/common.hpp"
#include "relground/labelspace.hpp"
#include "relground/worldgen/demos.hpp"
#include "relground/worldgen/relations.hpp"
#include "relground/worldgen/render.hpp"
#include "relground/worldgen/scene.hpp"

namespace relground::dataio {

class EmptyMask : public DataError {
public:
    using DataError::DataError;
};

class InfeasibleStratification : public DataError {
public:
    using DataError::DataError;
};

/// One object's masked RGBD crop of the full frame (pixels outside the mask
/// are zero) together with the mask and the object's attribute labels.
struct ObjectView {
    Image masked;
    Mask mask;
    int object_id = 0;
    labelspace::LabelVector labels;
};

/// The tuple (x, y, o_tar, o_ref). Views are shared between the pairs of a
/// scene, so a 4-object scene stores 4 images for its 12 pairs.
struct ObservationPair {
    std::shared_ptr<const ObjectView> target;
    std::shared_ptr<const ObjectView> referent;
    labelspace::LabelVector y;
    int scene_id = 0;
    int pair_id = 0;

    const labelspace::LabelVector& o_tar() const { return target->labels; }
    const labelspace::LabelVector& o_ref() const { return referent->labels; }
};

struct SceneRecord {
    int scene_id = 0;
    worldgen::Scene scene;
    worldgen::Observation observation;
};

/// Object attribute labels by group name ("color", "shape", "size"); values
/// the configuration does not know stay UNKNOWN.
labelspace::LabelVector object_labels(const worldgen::SceneObject& object, const labelspace::LabelConfig& labels);

/// Masked view of one object from a rendered frame. Throws EmptyMask when the
/// object has no visible pixels.
std::shared_ptr<const ObjectView> make_view(const worldgen::Observation& obs, const worldgen::SceneObject& object,
                                            const labelspace::LabelConfig& labels);

/// One pair per ordered object pair per scene, with geometric relation labels.
/// Pairs touching a fully occluded object are skipped and reported through
/// `warnings`. pair_id numbers the kept pairs consecutively.
std::vector<ObservationPair> build_pair_dataset(const std::vector<SceneRecord>& scenes,
                                                const worldgen::ThresholdConfig& thresholds,
                                                const labelspace::LabelConfig& labels,
                                                std::vector<std::string>* warnings = nullptr);

/// Pairs from a rendered demo: for every frame and target, the pair
/// (target, reference). Placement demos use their window labels, others the
/// geometric labels. Frames with an empty mask are skipped.
std::vector<ObservationPair> demo_pairs(const worldgen::Demonstration& demo, const labelspace::LabelConfig& labels,
                                        int scene_id_offset = 0, int pair_id_offset = 0);

/// Training pairs from several demos. Frames with at least one known label
/// are kept, the others thinned to every `stride`-th frame. Every frame gets
/// its own scene id; pair ids are consecutive.
std::vector<ObservationPair> demo_training_pairs(const std::vector<worldgen::Demonstration>& demos,
                                                 const labelspace::LabelConfig& labels, int stride = 1);

struct DatasetSplit {
    std::vector<int> train;
    std::vector<int> validation;
    std::vector<int> test;
};

/// Per-group labelled fraction over the pairs selected by `indices`.
std::vector<double> labelled_fractions(const std::vector<ObservationPair>& pairs, const std::vector<int>& indices);

/// Splits by scene so no scene spans two parts. Scene order is reshuffled
/// (seeded) until every part keeps each group's labelled fraction within
/// `tolerance` of the global one and contains every label that occurs.
DatasetSplit stratified_split(const std::vector<ObservationPair>& pairs, std::array<double, 3> fractions,
                              std::uint64_t seed, double tolerance = 0.05, int max_attempts = 500);

struct DatasetHeader {
    labelspace::LabelConfig labels = labelspace::LabelConfig::blocksworld();
    worldgen::ThresholdConfig thresholds;
    worldgen::CameraConfig camera;
    worldgen::SceneConfig scene_config;
    int resolution = 64;
    std::uint64_t seed = 0;
    int n_scenes = 0;
};

struct Dataset {
    DatasetHeader header;
    std::vector<SceneRecord> scenes;
    std::vector<ObservationPair> pairs;
};

/// Generates and renders `n_scenes` scenes; scene i uses seed `seed + i`.
Dataset generate_dataset(const DatasetHeader& header, std::vector<std::string>* warnings = nullptr);

/// Directory layout: header.json, scenes/scene_NNNNN.bin (JSON blob with the
/// scene and its pair labels, rgbd array, mask stack, id list).
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset read_dataset(const std::filesystem::path& dir);

/// Split files: splits/{train,validation,test}.txt, one pair id per line.
void write_split(const std::filesystem::path& dir, const DatasetSplit& split);
DatasetSplit read_split(const std::filesystem::path& dir);

}  // namespace relground::dataio
