#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "relground/common.hpp"
#include "relground/dataio.hpp"
#include "relground/labelspace.hpp"

namespace relground::relvae {

/// Diagonal Gaussian given by mean and log-variance.
struct LatentDistribution {
    std::vector<double> mean;
    std::vector<double> logvar;

    std::size_t dim() const { return mean.size(); }
};

/// mean + exp(logvar / 2) * eps with eps drawn from Rng(noise_seed).
std::vector<double> sample_latent(const LatentDistribution& dist, std::uint64_t noise_seed);

/// KL(N(mean, exp(logvar)) || N(0, I)).
double kl_to_unit_normal(const LatentDistribution& dist);

struct Coefficients {
    double alpha = 1.0;
    double beta = 10.0;
    double gamma = 50000.0;
};

struct Ablation {
    bool use_R = true;
    bool use_Q_obj = true;

    /// "full", "no_r", "no_qobj", "no_r_no_qobj".
    std::string name() const;
    static Ablation from_name(const std::string& name);
    static std::vector<Ablation> all();
    bool operator==(const Ablation&) const = default;
};

struct ModelConfig {
    int resolution = 64;
    int channels = 4;
    std::vector<int> encoder_channels{32, 64, 64, 64};
    int encoder_hidden = 256;
    int z_dim = 8;
    std::vector<int> decoder_channels{64, 64, 64};
    std::vector<int> operator_hidden{256, 64};
    /// Label counts per relational and per object group, in config order.
    std::vector<int> relational_labels;
    std::vector<int> object_labels;
    Coefficients coefficients;
    Ablation ablation;
    std::uint64_t init_seed = 0;

    /// Standard stack for a label configuration. 128 px input gets the extra
    /// leading stride-2 convolution.
    static ModelConfig for_labels(const labelspace::LabelConfig& labels, int resolution = 64);

    int relational_dim() const { return static_cast<int>(relational_labels.size()); }
    void validate() const;
};

struct LossBreakdown {
    double total = 0;
    double kl_z = 0;
    double kl_c = 0;
    double recon = 0;
    double q_obj = 0;
    double q_rel = 0;
    double alpha = 0;
    double beta = 0;
    double gamma = 0;
};

enum class Part { encoder, decoder, relate, relation_classifiers, object_classifiers };

struct ParamRange {
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct Layout;

/// Siamese relational VAE: encoder q_theta, spatial broadcast decoder p_phi,
/// relational operator q_psi and per-group scalar softmax classifiers.
/// Parameters live in one flat vector.
template <class T>
class BasicModel {
public:
    explicit BasicModel(ModelConfig config);

    const ModelConfig& config() const { return config_; }
    std::vector<T>& params() { return params_; }
    const std::vector<T>& params() const { return params_; }
    std::size_t parameter_count() const { return params_.size(); }
    ParamRange range(Part part) const;

    LatentDistribution encode(const Image& masked) const;
    /// Full-frame reconstruction, same layout as the input image.
    Image decode(std::span<const double> z) const;
    LatentDistribution relate(std::span<const double> z_tar, std::span<const double> z_ref) const;
    std::vector<double> classify_relation(std::span<const double> c, int group) const;
    std::vector<double> classify_object(std::span<const double> z, int group) const;

    /// Squared error of decode(z) against `target` summed over the pixels of
    /// `mask`, optionally with its gradient with respect to z.
    double recon_error(std::span<const double> z, const Image& target, const Mask& mask,
                       std::vector<double>* grad_z = nullptr) const;

    /// Composite objective over a batch. Noise for sample i comes from
    /// mix(noise_seed, i). Gradients are accumulated into `grad` if given.
    LossBreakdown loss(std::span<const dataio::ObservationPair* const> batch, std::uint64_t noise_seed,
                       std::vector<T>* grad = nullptr) const;

private:
    ModelConfig config_;
    std::shared_ptr<const Layout> layout_;
    std::vector<T> params_;
};

using Model = BasicModel<float>;

extern template class BasicModel<float>;
extern template class BasicModel<double>;

/// Relational embedding mean c for a pair from encoder and operator means.
template <class T>
std::vector<double> embed_pair(const BasicModel<T>& model, const Image& tar, const Image& ref);

/// Copies encoder and decoder weights. Throws ShapeMismatch unless both
/// stacks have the same shapes; operator and classifiers are left alone.
void copy_encoder_decoder(const Model& from, Model& to);

struct CheckpointInfo {
    labelspace::LabelConfig labels = labelspace::LabelConfig::blocksworld();
    std::uint64_t train_seed = 0;
    int epochs_completed = 0;
};

/// Versioned container holding the parameter array, model config, label
/// config, coefficients, ablation flags and seeds.
void save_checkpoint(const std::filesystem::path& path, const Model& model, const CheckpointInfo& info);
std::pair<Model, CheckpointInfo> load_checkpoint(const std::filesystem::path& path);

}  // namespace relground::relvae
