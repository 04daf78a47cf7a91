#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "relground/dataio.hpp"
#include "relground/relvae.hpp"

namespace relground::train {

class DivergenceDetected : public NumericalError {
public:
    using NumericalError::NumericalError;
};

struct TrainConfig {
    int epochs = 50;
    int batch_size = 32;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
    relvae::Coefficients coefficients;
    relvae::Ablation ablation;
    std::uint64_t seed = 0;
    /// Encoder and decoder start from this model instead of a fresh init.
    std::shared_ptr<const relvae::Model> warm_start;
};

/// Adam over a flat parameter vector.
class Adam {
public:
    Adam(std::size_t n, const TrainConfig& cfg);
    void step(std::vector<float>& params, const std::vector<float>& grad);
    long long steps() const { return t_; }

private:
    double lr_, b1_, b2_, eps_, wd_;
    long long t_ = 0;
    std::vector<double> m_, v_;
};

struct EpochRecord {
    int epoch = 0;
    /// Pair-weighted mean of the batch losses over the epoch.
    relvae::LossBreakdown loss;
    /// Per relational group; NaN where the validation split has no labels.
    std::vector<double> validation_accuracy;
};

struct TrainResult {
    relvae::Model model;
    std::vector<EpochRecord> log;
};

using EpochCallback = std::function<void(const EpochRecord&, const relvae::Model&)>;

/// Trains on split.train (labelled and unlabelled pairs shuffled together),
/// evaluating on split.validation after every epoch. On a non-finite loss
/// the last good model is handed to `on_divergence` and DivergenceDetected
/// is thrown.
TrainResult train(const std::vector<dataio::ObservationPair>& pairs, const dataio::DatasetSplit& split,
                  relvae::ModelConfig model_config, const TrainConfig& config, const EpochCallback& on_epoch = {},
                  const std::function<void(const relvae::Model&, int epoch)>& on_divergence = {});

/// Accuracy of argmax classification of the embedding means, counting only
/// labelled entries. A group with no labelled pair in `indices` reports NaN.
std::vector<double> eval_classifier_accuracy(const relvae::Model& model,
                                             const std::vector<dataio::ObservationPair>& pairs,
                                             const std::vector<int>& indices);

/// One JSON object per line.
std::string epoch_record_json(const EpochRecord& record);

}  // namespace relground::train
