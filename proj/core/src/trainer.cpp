#include "relground/trainer.hpp"

#include <cmath>
#include <limits>

#include "json_util.hpp"
#include "relground/rng.hpp"

namespace relground::train {

using detail::Json;

Adam::Adam(std::size_t n, const TrainConfig& cfg)
    : lr_(cfg.learning_rate), b1_(cfg.beta1), b2_(cfg.beta2), eps_(cfg.epsilon), wd_(cfg.weight_decay), m_(n, 0.0),
      v_(n, 0.0) {
    if (lr_ <= 0 || b1_ < 0 || b1_ >= 1 || b2_ < 0 || b2_ >= 1 || eps_ <= 0 || wd_ < 0)
        throw ConfigError("invalid Adam hyperparameters");
}

void Adam::step(std::vector<float>& params, const std::vector<float>& grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) throw ShapeMismatch("optimizer size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = static_cast<double>(grad[i]) + wd_ * params[i];
        m_[i] = b1_ * m_[i] + (1 - b1_) * g;
        v_[i] = b2_ * v_[i] + (1 - b2_) * g * g;
        params[i] -= static_cast<float>(lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_));
    }
}

namespace {

bool finite(const relvae::LossBreakdown& l) {
    return std::isfinite(l.total) && std::isfinite(l.kl_z) && std::isfinite(l.kl_c) && std::isfinite(l.recon) &&
           std::isfinite(l.q_obj) && std::isfinite(l.q_rel);
}

void accumulate(relvae::LossBreakdown& acc, const relvae::LossBreakdown& l, double w) {
    acc.total += w * l.total;
    acc.kl_z += w * l.kl_z;
    acc.kl_c += w * l.kl_c;
    acc.recon += w * l.recon;
    acc.q_obj += w * l.q_obj;
    acc.q_rel += w * l.q_rel;
    acc.alpha = l.alpha;
    acc.beta = l.beta;
    acc.gamma = l.gamma;
}

}  // namespace

TrainResult train(const std::vector<dataio::ObservationPair>& pairs, const dataio::DatasetSplit& split,
                  relvae::ModelConfig model_config, const TrainConfig& config, const EpochCallback& on_epoch,
                  const std::function<void(const relvae::Model&, int)>& on_divergence) {
    if (config.epochs < 0 || config.batch_size < 1) throw ConfigError("epochs must be >= 0 and batch_size >= 1");
    if (split.train.empty()) throw DataError("training split is empty");
    for (int i : split.train)
        if (i < 0 || static_cast<std::size_t>(i) >= pairs.size()) throw DataError("split index out of range");
    for (int i : split.validation)
        if (i < 0 || static_cast<std::size_t>(i) >= pairs.size()) throw DataError("split index out of range");

    model_config.coefficients = config.coefficients;
    model_config.ablation = config.ablation;
    model_config.init_seed = config.seed;
    TrainResult result{relvae::Model(model_config), {}};
    relvae::Model& model = result.model;
    if (config.warm_start) relvae::copy_encoder_decoder(*config.warm_start, model);
    Adam adam(model.parameter_count(), config);
    Rng order_rng(Rng::mix(config.seed, 1));
    std::vector<int> order = split.train;
    std::vector<float> grad;
    std::vector<const dataio::ObservationPair*> batch;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const std::vector<float> last_good = model.params();
        order_rng.shuffle(order.begin(), order.end());
        EpochRecord rec;
        rec.epoch = epoch;
        std::size_t b = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++b) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            batch.clear();
            for (std::size_t k = start; k < end; ++k) batch.push_back(&pairs[order[k]]);
            grad.assign(model.parameter_count(), 0.0f);
            const auto noise = Rng::mix(config.seed, (static_cast<std::uint64_t>(epoch) << 32) | b);
            const auto l = model.loss(batch, noise, &grad);
            bool ok = finite(l);
            for (float g : grad) ok = ok && std::isfinite(g);
            if (!ok) {
                model.params() = last_good;
                if (on_divergence) on_divergence(model, epoch - 1);
                throw DivergenceDetected("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                                         std::to_string(b));
            }
            accumulate(rec.loss, l, static_cast<double>(batch.size()) / static_cast<double>(order.size()));
            adam.step(model.params(), grad);
        }
        rec.validation_accuracy = eval_classifier_accuracy(model, pairs, split.validation);
        result.log.push_back(rec);
        if (on_epoch) on_epoch(rec, model);
    }
    return result;
}

std::vector<double> eval_classifier_accuracy(const relvae::Model& model,
                                             const std::vector<dataio::ObservationPair>& pairs,
                                             const std::vector<int>& indices) {
    const int L = model.config().relational_dim();
    std::vector<double> hits(L, 0.0), counts(L, 0.0);
    for (int i : indices) {
        const auto& p = pairs.at(i);
        if (p.y.size() != static_cast<std::size_t>(L)) throw ShapeMismatch("pair labels do not match the model");
        bool any = false;
        for (int g = 0; g < L; ++g) any = any || p.y.known(g);
        if (!any) continue;
        const auto c = relvae::embed_pair(model, p.target->masked, p.referent->masked);
        for (int g = 0; g < L; ++g) {
            if (!p.y.known(g)) continue;
            const auto probs = model.classify_relation(c, g);
            const int pred = static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
            hits[g] += pred == p.y.label(g);
            counts[g] += 1;
        }
    }
    std::vector<double> acc(L);
    for (int g = 0; g < L; ++g) acc[g] = counts[g] > 0 ? hits[g] / counts[g] : std::numeric_limits<double>::quiet_NaN();
    return acc;
}

std::string epoch_record_json(const EpochRecord& r) {
    Json acc = Json::array();
    for (double a : r.validation_accuracy) acc.push_back(std::isfinite(a) ? Json(a) : Json(nullptr));
    Json j{{"epoch", r.epoch},
           {"total", r.loss.total},
           {"kl_z", r.loss.kl_z},
           {"kl_c", r.loss.kl_c},
           {"recon", r.loss.recon},
           {"q_obj", r.loss.q_obj},
           {"q_rel", r.loss.q_rel},
           {"alpha", r.loss.alpha},
           {"beta", r.loss.beta},
           {"gamma", r.loss.gamma},
           {"validation_accuracy", acc}};
    return j.dump();
}

}  // namespace relground::train
