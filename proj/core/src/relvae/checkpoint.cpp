#include "json_util.hpp"
#include "relground/container.hpp"
#include "relground/relvae.hpp"

namespace relground::relvae {

using detail::Json;

namespace {

constexpr const char* kKind = "relvae-model";
constexpr std::uint32_t kVersion = 1;

Json config_json(const ModelConfig& c) {
    return {{"resolution", c.resolution},
            {"channels", c.channels},
            {"encoder_channels", c.encoder_channels},
            {"encoder_hidden", c.encoder_hidden},
            {"z_dim", c.z_dim},
            {"decoder_channels", c.decoder_channels},
            {"operator_hidden", c.operator_hidden},
            {"relational_labels", c.relational_labels},
            {"object_labels", c.object_labels},
            {"coefficients", {{"alpha", c.coefficients.alpha}, {"beta", c.coefficients.beta}, {"gamma", c.coefficients.gamma}}},
            {"ablation", {{"use_R", c.ablation.use_R}, {"use_Q_obj", c.ablation.use_Q_obj}}},
            {"init_seed", c.init_seed}};
}

ModelConfig config_from(const Json& j) {
    ModelConfig c;
    c.resolution = j.at("resolution").get<int>();
    c.channels = j.at("channels").get<int>();
    c.encoder_channels = j.at("encoder_channels").get<std::vector<int>>();
    c.encoder_hidden = j.at("encoder_hidden").get<int>();
    c.z_dim = j.at("z_dim").get<int>();
    c.decoder_channels = j.at("decoder_channels").get<std::vector<int>>();
    c.operator_hidden = j.at("operator_hidden").get<std::vector<int>>();
    c.relational_labels = j.at("relational_labels").get<std::vector<int>>();
    c.object_labels = j.at("object_labels").get<std::vector<int>>();
    const auto& co = j.at("coefficients");
    c.coefficients = {co.at("alpha").get<double>(), co.at("beta").get<double>(), co.at("gamma").get<double>()};
    const auto& ab = j.at("ablation");
    c.ablation = {ab.at("use_R").get<bool>(), ab.at("use_Q_obj").get<bool>()};
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
    return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model, const CheckpointInfo& info) {
    Container c;
    c.kind = kKind;
    c.version = kVersion;
    Json meta{{"model", config_json(model.config())},
              {"labels", Json::parse(info.labels.to_json())},
              {"train_seed", info.train_seed},
              {"epochs_completed", info.epochs_completed}};
    c.meta = meta.dump();
    ArrayRecord rec;
    rec.rank = 1;
    rec.extents = {static_cast<std::uint32_t>(model.parameter_count()), 1, 1};
    rec.values = model.params();
    c.arrays["params"] = std::move(rec);
    write_container(path, c);
}

std::pair<Model, CheckpointInfo> load_checkpoint(const std::filesystem::path& path) {
    const Container c = read_container(path, kKind);
    if (c.version != kVersion) throw DataError(path.string() + ": unsupported model checkpoint version");
    const Json meta = detail::parse_json(c.meta, "checkpoint metadata");
    try {
        Model model(config_from(meta.at("model")));
        CheckpointInfo info;
        info.labels = labelspace::LabelConfig::from_json(meta.at("labels").dump());
        info.train_seed = meta.at("train_seed").get<std::uint64_t>();
        info.epochs_completed = meta.at("epochs_completed").get<int>();
        if (!c.arrays.contains("params")) throw DataError(path.string() + ": checkpoint has no parameters");
        const auto& values = c.arrays.at("params").values;
        if (values.size() != model.parameter_count())
            throw ShapeMismatch(path.string() + ": parameter count does not match the stored architecture");
        model.params() = values;
        return {std::move(model), info};
    } catch (const Json::exception& e) {
        throw DataError(path.string() + ": invalid checkpoint metadata: " + e.what());
    }
}

}  // namespace relground::relvae
