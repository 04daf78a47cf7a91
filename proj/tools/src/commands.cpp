#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "manifest.hpp"
#include "relground/dataio.hpp"
#include "relground/evalkit.hpp"
#include "relground/planner.hpp"
#include "relground/posereg.hpp"
#include "relground/relvae.hpp"
#include "relground/rng.hpp"
#include "relground/trainer.hpp"
#include "relground/worldgen/serialization.hpp"
#include "svg_plot.hpp"

namespace relground::cli {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- helpers

std::string str(const Json& c, const char* k) { return c.at(k).get<std::string>(); }

fs::path path_of(const Json& c, const char* k) { return workspace_path(str(c, k)); }

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw DataError("cannot write " + p.string());
}

Json parse_json_file(const fs::path& p) {
    try {
        return Json::parse(read_file(p));
    } catch (const Json::exception& e) {
        throw DataError(p.string() + ": " + e.what());
    }
}

bool is_demo_dir(const fs::path& dir) {
    const auto m = dir / "manifest.json";
    if (!fs::is_regular_file(m)) return false;
    try {
        const auto j = Json::parse(read_file(m));
        return j.value("format", "") == "relground-demo";
    } catch (const Json::exception&) {
        return false;
    }
}

/// Demo directories at or below `root`, sorted by path.
std::vector<fs::path> find_demos(const fs::path& root) {
    if (!fs::exists(root)) throw DataError("no such directory: " + root.string());
    if (is_demo_dir(root)) return {root};
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_directory() && is_demo_dir(e.path())) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    if (out.empty()) throw DataError("no demonstrations under " + root.string());
    return out;
}

labelspace::LabelConfig labels_for(const Json& c, const char* key, const labelspace::LabelConfig& fallback) {
    const auto p = str(c, key);
    return p.empty() ? fallback : labelspace::LabelConfig::load(workspace_path(p));
}

planner::SegmentationConfig segmentation(const Json& c) {
    planner::SegmentationConfig s;
    s.var_moving = c.at("var_moving").get<double>();
    s.var_static = c.at("var_static").get<double>();
    s.validate();
    return s;
}

evalkit::EditMode edit_mode(const Json& c) {
    const auto m = str(c, "edit_mode");
    if (m == "levenshtein") return evalkit::EditMode::levenshtein_fallback;
    if (m == "strict") return evalkit::EditMode::strict;
    throw ConfigError("edit_mode must be 'levenshtein' or 'strict', got '" + m + "'");
}

struct LoadedModel {
    relvae::Model model;
    relvae::CheckpointInfo info;
    planner::LabelDistributions K;
};

/// Checkpoint plus label distributions (distributions.json beside the
/// checkpoint unless given explicitly).
LoadedModel load_model(const Json& c, Manifest& manifest) {
    const auto ckpt = path_of(c, "model");
    auto [model, info] = relvae::load_checkpoint(ckpt);
    manifest.add_input(ckpt);
    fs::path kpath = str(c, "distributions").empty() ? ckpt.parent_path() / "distributions.json" : path_of(c, "distributions");
    if (!fs::exists(kpath)) throw DataError("label distributions not found: " + kpath.string());
    auto K = planner::distributions_from_json(read_file(kpath));
    manifest.add_input(kpath);
    if (K.groups.size() != info.labels.relational().size())
        throw DataError("label distributions do not match the checkpoint's label configuration");
    return {std::move(model), std::move(info), std::move(K)};
}

std::string demo_name(const fs::path& dir, const fs::path& root) {
    if (dir == root) return dir.filename().string();
    auto rel = fs::relative(dir, root).generic_string();
    std::replace(rel.begin(), rel.end(), '/', '_');
    return rel;
}

std::string plan_text(const SymbolicPlan& plan, const labelspace::LabelConfig& labels) {
    std::string s;
    for (const auto& st : plan.steps) {
        if (!s.empty()) s += ' ';
        s += labels.relational()[st.group].labels[st.label];
    }
    return s.empty() ? "(empty)" : s;
}

Json seg_json(const MovementPrescriptionSequence& S) {
    Json a = Json::array();
    for (const auto& m : S.movers) a.push_back(m ? Json(*m) : Json(nullptr));
    return a;
}

void finish(Manifest& manifest, const fs::path& out, std::ostream& log) {
    manifest.write(out);
    log << "wrote " << (out / "manifest.json").string() << '\n';
}

// --------------------------------------------------------------- gen-data

void run_gen_data(const Json& c, RunContext& ctx) {
    const auto out = path_of(c, "out");
    dataio::DatasetHeader h;
    h.labels = labels_for(c, "labels", labelspace::LabelConfig::blocksworld());
    if (!str(c, "thresholds").empty())
        h.thresholds = worldgen::thresholds_from_json(read_file(path_of(c, "thresholds")));
    h.n_scenes = c.at("scenes").get<int>();
    h.seed = c.at("seed").get<std::uint64_t>();
    h.resolution = c.at("resolution").get<int>();
    h.scene_config.n_objects = c.at("objects").get<int>();
    if (h.n_scenes < 1) throw ConfigError("--scenes must be >= 1");
    if (h.scene_config.n_objects < 2) throw ConfigError("--objects must be >= 2");

    Manifest manifest("gen-data", c);
    manifest.add_seed("seed", h.seed);
    manifest.add_seed("split_seed", c.at("split_seed").get<std::uint64_t>());
    if (!str(c, "labels").empty()) manifest.add_input(path_of(c, "labels"));
    if (!str(c, "thresholds").empty()) manifest.add_input(path_of(c, "thresholds"));

    std::vector<std::string> warnings;
    const auto ds = dataio::generate_dataset(h, &warnings);
    for (const auto& w : warnings) ctx.log << "warning: " << w << '\n';
    dataio::write_dataset(out, ds);

    const auto fr = c.at("split").get<std::vector<double>>();
    if (fr.size() != 3) throw ConfigError("--split needs three fractions");
    const auto split = dataio::stratified_split(ds.pairs, {fr[0], fr[1], fr[2]}, c.at("split_seed").get<std::uint64_t>(),
                                                c.at("split_tolerance").get<double>());
    dataio::write_split(out, split);

    std::vector<int> all(ds.pairs.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    const auto lab = dataio::labelled_fractions(ds.pairs, all);
    Json per_group = Json::object();
    double unknown = 0;
    for (std::size_t g = 0; g < lab.size(); ++g) {
        per_group[h.labels.relational()[g].name] = 1.0 - lab[g];
        unknown += (1.0 - lab[g]) / static_cast<double>(lab.size());
    }
    const Json summary{{"scenes", ds.scenes.size()},
                       {"pairs", ds.pairs.size()},
                       {"group_slots", ds.pairs.size() * lab.size()},
                       {"unknown_fraction", unknown},
                       {"unknown_fraction_per_group", per_group},
                       {"split_sizes", {split.train.size(), split.validation.size(), split.test.size()}},
                       {"warnings", warnings.size()}};
    write_file(out / "summary.json", summary.dump(2) + "\n");
    for (const char* f : {"header.json", "scenes", "splits", "summary.json"}) manifest.add_output(out / f);
    ctx.log << ds.pairs.size() << " pairs from " << ds.scenes.size() << " scenes, unknown fraction " << unknown << '\n';
    finish(manifest, out, ctx.log);
}

// -------------------------------------------------------------- gen-demos

void run_gen_demos(const Json& c, RunContext& ctx) {
    const auto out = path_of(c, "out");
    const auto kind = str(c, "kind");
    std::vector<std::string> tasks;
    if (kind == "repetitive") {
        const auto& g = worldgen::ThresholdConfig::group_names();
        tasks.assign(g.begin(), g.end());
    } else if (kind == "chained") {
        tasks = worldgen::chained_kinds();
    } else if (kind == "placement") {
        tasks = worldgen::placement_tasks();
    } else {
        throw ConfigError("--kind must be repetitive, chained or placement");
    }
    if (!str(c, "task").empty()) {
        if (std::find(tasks.begin(), tasks.end(), str(c, "task")) == tasks.end())
            throw ConfigError("unknown " + kind + " task '" + str(c, "task") + "'");
        tasks = {str(c, "task")};
    }
    const int count = c.at("count").get<int>();
    if (count < 1) throw ConfigError("--count must be >= 1");
    const auto seed = c.at("seed").get<std::uint64_t>();
    worldgen::DemoConfig dc;
    dc.resolution = c.at("resolution").get<int>();

    Manifest manifest("gen-demos", c);
    manifest.add_seed("seed", seed);
    Json index = Json::array();
    for (const auto& task : tasks) {
        for (int i = 0; i < count; ++i) {
            const auto s = seed + static_cast<std::uint64_t>(i);
            worldgen::Demonstration d;
            if (kind == "repetitive") {
                worldgen::RepetitiveTiming t;
                t.move = c.at("move_steps").get<int>();
                d = worldgen::generate_repetitive_demo(task, c.at("targets").get<int>(), s, dc, t);
            } else if (kind == "chained") {
                d = worldgen::generate_chained_demo(task, s, dc);
            } else {
                d = worldgen::generate_placement_demo(task, s, dc);
            }
            char name[32];
            std::snprintf(name, sizeof name, "demo_%04d", i);
            const auto dir = out / task / name;
            worldgen::save_demo(dir, d);
            index.push_back({{"task", task}, {"seed", s}, {"path", fs::relative(dir, out).generic_string()}});
        }
        manifest.add_output(out / task);
        ctx.log << task << ": " << count << " demos\n";
    }
    write_file(out / "index.json", index.dump(2) + "\n");
    manifest.add_output(out / "index.json");
    finish(manifest, out, ctx.log);
}

// ------------------------------------------------------------------ train

void run_train(const Json& c, RunContext& ctx) {
    const auto out = path_of(c, "out");
    const bool from_data = !str(c, "data").empty();
    const bool from_demos = !str(c, "demos").empty();
    if (from_data == from_demos) throw UsageError("train: give exactly one of --data or --demos");

    Manifest manifest("train", c);
    train::TrainConfig tc;
    tc.epochs = c.at("epochs").get<int>();
    tc.batch_size = c.at("batch_size").get<int>();
    tc.learning_rate = c.at("lr").get<double>();
    tc.seed = c.at("seed").get<std::uint64_t>();
    tc.ablation = relvae::Ablation::from_name(str(c, "ablation"));
    tc.coefficients.alpha = c.at("alpha").get<double>();
    tc.coefficients.beta = c.at("beta").get<double>();
    tc.coefficients.gamma = c.at("gamma").get<double>();
    manifest.add_seed("seed", tc.seed);

    labelspace::LabelConfig labels = labelspace::LabelConfig::blocksworld();
    std::vector<dataio::ObservationPair> pairs;
    dataio::DatasetSplit split;
    int resolution = 64;
    if (from_data) {
        const auto dir = path_of(c, "data");
        auto ds = dataio::read_dataset(dir);
        manifest.add_input(dir);
        labels = ds.header.labels;
        resolution = ds.header.resolution;
        pairs = std::move(ds.pairs);
        split = dataio::read_split(str(c, "split").empty() ? dir : path_of(c, "split"));
    } else {
        const auto root = path_of(c, "demos");
        std::vector<worldgen::Demonstration> demos;
        for (const auto& d : find_demos(root)) demos.push_back(worldgen::load_demo(d));
        manifest.add_input(root);
        const bool placement = demos.front().kind.rfind("placement/", 0) == 0;
        labels = labels_for(c, "labels", placement ? worldgen::placement_labels() : labelspace::LabelConfig::blocksworld());
        resolution = demos.front().frames.front().rgbd.height;
        pairs = dataio::demo_training_pairs(demos, labels, c.at("stride").get<int>());
        for (std::size_t i = 0; i < pairs.size(); ++i) split.train.push_back(static_cast<int>(i));
    }
    if (!str(c, "init_from").empty()) {
        tc.warm_start = std::make_shared<relvae::Model>(relvae::load_checkpoint(path_of(c, "init_from")).first);
        manifest.add_input(path_of(c, "init_from"));
    }
    ctx.log << pairs.size() << " pairs, " << split.train.size() << " for training\n";

    fs::create_directories(out);
    std::ofstream log_file(out / "train_log.jsonl");
    const auto res = train::train(
        pairs, split, relvae::ModelConfig::for_labels(labels, resolution), tc,
        [&](const train::EpochRecord& r, const relvae::Model&) {
            log_file << train::epoch_record_json(r) << '\n';
            log_file.flush();
            ctx.log << "epoch " << r.epoch << " loss " << r.loss.total << '\n';
        },
        [&](const relvae::Model& last_good, int epoch) {
            relvae::CheckpointInfo info{labels, tc.seed, epoch};
            relvae::save_checkpoint(out / "last_good.ckpt", last_good, info);
        });
    relvae::CheckpointInfo info{labels, tc.seed, tc.epochs};
    relvae::save_checkpoint(out / "model.ckpt", res.model, info);
    const auto K = planner::fit_label_distributions(res.model, pairs, split.train, labels, c.at("min_samples").get<int>());
    write_file(out / "distributions.json", planner::distributions_to_json(K) + "\n");
    for (const char* f : {"model.ckpt", "train_log.jsonl", "distributions.json"}) manifest.add_output(out / f);
    finish(manifest, out, ctx.log);
}

// ---------------------------------------------------------------- explain

void run_explain(const Json& c, RunContext& ctx) {
    const auto out = path_of(c, "out");
    Manifest manifest("explain", c);
    const auto m = load_model(c, manifest);
    const auto seg = segmentation(c);
    const auto mode = edit_mode(c);
    const auto root = path_of(c, "demo");
    manifest.add_input(root);

    Json report = Json::array();
    double acc_sum = 0, ed_sum = 0;
    int ed_n = 0;
    const auto dirs = find_demos(root);
    for (const auto& dir : dirs) {
        const auto d = worldgen::load_demo(dir);
        const auto name = demo_name(dir, root);
        const auto dout = out / name;
        std::map<int, planner::Trace> traces;
        for (int t : d.target_ids) traces[t] = planner::project_demo(d, m.model, m.info.labels, t, d.reference_id);
        const auto S = planner::movement_prescription(traces, seg);
        const double acc = evalkit::seg_accuracy(d.ground_truth_S, S, d.target_ids);
        acc_sum += acc;
        Json targets = Json::object();
        for (int t : d.target_ids) {
            const auto ip = planner::infer_plan(traces[t], m.K);
            const auto tname = std::to_string(t);
            write_file(dout / ("plan_" + tname + ".json"), planner::plan_to_json(ip.raw, m.info.labels) + "\n");
            planner::write_trace(dout / ("trace_" + tname + ".bin"), traces[t]);
            Json tj{{"plan", plan_text(ip.raw, m.info.labels)}, {"occlusion_affected", ip.occlusion_affected}};
            if (const auto it = d.ground_truth_Y.find(t); it != d.ground_truth_Y.end()) {
                const double ed = evalkit::edit_distance(it->second, ip.raw, mode);
                tj["ground_truth"] = plan_text(it->second, m.info.labels);
                tj["edit_distance"] = ed;
                ed_sum += ed;
                ++ed_n;
            }
            targets[tname] = tj;
        }
        write_file(dout / "segmentation.json",
                   Json{{"inferred", seg_json(S)}, {"ground_truth", seg_json(d.ground_truth_S)}}.dump(1) + "\n");
        report.push_back({{"demo", name}, {"kind", d.kind}, {"seg_accuracy", acc}, {"targets", targets}});
        manifest.add_output(dout);
        ctx.log << name << ": seg accuracy " << acc << '\n';
    }
    const Json summary{{"demos", report},
                       {"mean_seg_accuracy", acc_sum / static_cast<double>(dirs.size())},
                       {"mean_edit_distance", ed_n ? Json(ed_sum / ed_n) : Json(nullptr)}};
    write_file(out / "report.json", summary.dump(2) + "\n");
    manifest.add_output(out / "report.json");
    finish(manifest, out, ctx.log);
}

// ---------------------------------------------------------------- essence

void run_essence(const Json& c, RunContext& ctx) {
    const auto out = path_of(c, "out");
    Manifest manifest("essence", c);
    const auto m = load_model(c, manifest);
    const auto mode = edit_mode(c);
    const auto root = path_of(c, "demos");
    manifest.add_input(root);
    auto dirs = find_demos(root);
    const int max_demos = c.at("max_demos").get<int>();
    if (max_demos > 0 && static_cast<std::size_t>(max_demos) < dirs.size()) dirs.resize(max_demos);

    std::vector<SymbolicPlan> inferred, truth;
    Json plans = Json::array();
    for (const auto& dir : dirs) {
        const auto d = worldgen::load_demo(dir);
        const int t = d.target_ids.at(0);
        const auto trace = planner::project_demo(d, m.model, m.info.labels, t, d.reference_id);
        const auto ip = planner::infer_plan(trace, m.K);
        inferred.push_back(ip.raw);
        const auto it = d.ground_truth_Y.find(t);
        if (it == d.ground_truth_Y.end()) throw DataError("demo " + dir.string() + " has no ground-truth plan");
        truth.push_back(it->second);
        plans.push_back({{"demo", demo_name(dir, root)}, {"inferred", plan_text(ip.raw, m.info.labels)},
                         {"ground_truth", plan_text(it->second, m.info.labels)}});
    }
    SymbolicPlan essence;
    try {
        essence = planner::extract_essence(inferred);
    } catch (const planner::EmptyEssence&) {
        ctx.log << "warning: the demonstrations share no symbolic step\n";
    }
    write_file(out / "essence.json", planner::plan_to_json(essence, m.info.labels) + "\n");
    write_file(out / "plans.json", plans.dump(2) + "\n");
    const auto curve = evalkit::ed_vs_demos_curve(inferred, truth, mode);
    write_file(out / "ed_curve.tsv", evalkit::curve_to_tsv(curve));
    for (const char* f : {"essence.json", "plans.json", "ed_curve.tsv"}) manifest.add_output(out / f);
    ctx.log << "essence: " << plan_text(essence, m.info.labels) << '\n';
    finish(manifest, out, ctx.log);
}

// ----------------------------------------------------------- predict-pose

void run_predict_pose(const Json& c, RunContext& ctx) {
    const auto out = path_of(c, "out");
    Manifest manifest("predict-pose", c);
    const auto m = load_model(c, manifest);
    posereg::RegressorConfig rc;
    rc.hidden = c.at("hidden").get<std::vector<int>>();
    rc.epochs = c.at("epochs").get<int>();
    rc.batch_size = c.at("batch_size").get<int>();
    rc.learning_rate = c.at("lr").get<double>();
    rc.weight_decay = c.at("weight_decay").get<double>();
    rc.seed = c.at("seed").get<std::uint64_t>();
    manifest.add_seed("seed", rc.seed);
    const bool pooled = c.at("pooled").get<bool>();

    struct Task {
        std::vector<posereg::Triple> train, eval;
        std::vector<std::string> eval_names;
    };
    std::map<std::string, Task> tasks;
    auto collect = [&](const char* key, bool training) {
        const auto root = path_of(c, key);
        manifest.add_input(root);
        std::uint64_t k = 0;
        for (const auto& dir : find_demos(root)) {
            const auto d = worldgen::load_demo(dir);
            auto& task = tasks[d.kind];
            const auto seed = Rng::mix(rc.seed, (training ? 0x7A00000000ull : 0xE500000000ull) + k++);
            auto tr = posereg::placement_triple(d, m.model, m.info.labels, m.K, seed);
            (training ? task.train : task.eval).push_back(std::move(tr));
            if (!training) task.eval_names.push_back(demo_name(dir, root));
        }
    };
    collect("train_demos", true);
    collect("eval_demos", false);

    std::optional<posereg::PoseRegressor> shared;
    if (pooled) {
        std::vector<posereg::Triple> all;
        for (const auto& [_, t] : tasks) all.insert(all.end(), t.train.begin(), t.train.end());
        auto fit = posereg::fit_pose_regressor(all, rc);
        for (const auto& w : fit.warnings) ctx.log << "warning: " << w << '\n';
        shared = fit.regressor;
        posereg::save_regressor(out / "regressor_pooled.rgck", *shared, Json{{"tasks", "pooled"}}.dump());
        manifest.add_output(out / "regressor_pooled.rgck");
    }
    std::ostringstream pred, mae_tsv;
    pred << "task\tdemo\tx\ty\tz\troll\tpitch\tyaw\tx_hat\ty_hat\tz_hat\troll_hat\tpitch_hat\tyaw_hat\n";
    mae_tsv << "task\taxis\tmae\tbaseline\n";
    const char* axes[] = {"x", "y", "z", "roll", "pitch", "yaw"};
    for (const auto& [kind, t] : tasks) {
        if (t.train.empty() || t.eval.empty()) throw DataError("task " + kind + " needs training and evaluation demos");
        std::string task = kind.substr(kind.find('/') + 1);
        posereg::PoseRegressor reg;
        if (shared) {
            reg = *shared;
        } else {
            auto fit = posereg::fit_pose_regressor(t.train, rc);
            for (const auto& w : fit.warnings) ctx.log << "warning: " << task << ": " << w << '\n';
            reg = fit.regressor;
            const auto path = out / ("regressor_" + task + ".rgck");
            posereg::save_regressor(path, reg, Json{{"task", kind}}.dump());
            manifest.add_output(path);
        }
        std::vector<Pose> train_poses, truth, hat;
        for (const auto& tr : t.train) train_poses.push_back(tr.pose);
        const Pose mean = posereg::mean_pose(train_poses);
        for (std::size_t i = 0; i < t.eval.size(); ++i) {
            truth.push_back(t.eval[i].pose);
            hat.push_back(posereg::predict_pose(t.eval[i].z_tar, t.eval[i].c, reg));
            const auto& p = truth.back();
            const auto& q = hat.back();
            pred << task << '\t' << t.eval_names[i] << '\t' << p.x << '\t' << p.y << '\t' << p.z << '\t' << p.roll << '\t'
                 << p.pitch << '\t' << p.yaw << '\t' << q.x << '\t' << q.y << '\t' << q.z << '\t' << q.roll << '\t'
                 << q.pitch << '\t' << q.yaw << '\n';
        }
        const auto mae = evalkit::pose_mae(truth, hat);
        const auto base = evalkit::pose_mae(truth, std::vector<Pose>(truth.size(), mean));
        for (int a = 0; a < 6; ++a) mae_tsv << task << '\t' << axes[a] << '\t' << mae[a] << '\t' << base[a] << '\n';
        ctx.log << task << ": MAE x " << mae[0] << " y " << mae[1] << " z " << mae[2] << '\n';
    }
    write_file(out / "predictions.tsv", pred.str());
    write_file(out / "pose_mae.tsv", mae_tsv.str());
    manifest.add_output(out / "predictions.tsv");
    manifest.add_output(out / "pose_mae.tsv");
    finish(manifest, out, ctx.log);
}

// ------------------------------------------------------------------- eval

void run_eval(const Json& c, RunContext& ctx) {
    const auto out = path_of(c, "out");
    if (str(c, "data").empty() && str(c, "demos").empty()) throw UsageError("eval: give --data, --demos or both");
    Manifest manifest("eval", c);
    const auto m = load_model(c, manifest);
    const auto name = str(c, "name").empty() ? m.model.config().ablation.name() : str(c, "name");

    if (!str(c, "data").empty()) {
        const auto dir = path_of(c, "data");
        const auto ds = dataio::read_dataset(dir);
        manifest.add_input(dir);
        if (!(ds.header.labels == m.info.labels)) throw DataError("dataset and checkpoint use different label configurations");
        const auto split = dataio::read_split(dir);
        const auto part = str(c, "split");
        const std::vector<int>* idx = part == "train" ? &split.train
                                      : part == "validation" ? &split.validation
                                      : part == "test" ? &split.test
                                                       : nullptr;
        if (!idx) throw ConfigError("--split must be train, validation or test");
        const auto acc = train::eval_classifier_accuracy(m.model, ds.pairs, *idx);
        Json aj = Json::object();
        for (std::size_t g = 0; g < acc.size(); ++g)
            aj[m.info.labels.relational()[g].name] = std::isfinite(acc[g]) ? Json(acc[g]) : Json(nullptr);
        write_file(out / "accuracy.json", Json{{"model", name}, {"split", part}, {"accuracy", aj}}.dump(2) + "\n");
        const auto samples = evalkit::export_latent_samples(m.model, ds.pairs, *idx, m.info.labels);
        write_file(out / "latents.tsv", evalkit::latent_samples_to_tsv(samples));
        manifest.add_output(out / "accuracy.json");
        manifest.add_output(out / "latents.tsv");
        ctx.log << "accuracy " << aj.dump() << '\n';
    }
    if (!str(c, "demos").empty()) {
        const auto root = path_of(c, "demos");
        manifest.add_input(root);
        const auto seg = segmentation(c);
        std::map<std::string, std::pair<double, int>> by_task;
        for (const auto& dir : find_demos(root)) {
            const auto d = worldgen::load_demo(dir);
            std::map<int, planner::Trace> traces;
            for (int t : d.target_ids) traces[t] = planner::project_demo(d, m.model, m.info.labels, t, d.reference_id);
            const auto S = planner::movement_prescription(traces, seg);
            auto& e = by_task[d.kind.substr(d.kind.find('/') + 1)];
            e.first += evalkit::seg_accuracy(d.ground_truth_S, S, d.target_ids);
            ++e.second;
        }
        std::ostringstream tsv;
        tsv << "model\ttask\taccuracy\n";
        double total = 0;
        int n = 0;
        for (const auto& [task, e] : by_task) {
            tsv << name << '\t' << task << '\t' << e.first / e.second << '\n';
            total += e.first;
            n += e.second;
        }
        tsv << name << "\tmean\t" << total / n << '\n';
        write_file(out / "seg_table.tsv", tsv.str());
        manifest.add_output(out / "seg_table.tsv");
        ctx.log << "mean segmentation accuracy " << total / n << '\n';
    }
    finish(manifest, out, ctx.log);
}

// ------------------------------------------------------------------- plot

std::vector<std::vector<std::string>> read_tsv(const fs::path& p) {
    std::istringstream in(read_file(p));
    std::string line;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, '\t')) cols.push_back(col);
        rows.push_back(std::move(cols));
    }
    return rows;
}

double to_double(const std::string& s, const fs::path& p) {
    try {
        return std::stod(s);
    } catch (const std::logic_error&) {
        throw DataError(p.string() + ": '" + s + "' is not a number");
    }
}

void run_plot(const Json& c, RunContext& ctx) {
    const auto out = path_of(c, "out");
    const auto kind = str(c, "kind");
    const auto inputs = c.at("inputs").get<std::vector<std::string>>();
    if (inputs.empty()) throw UsageError("plot: --inputs is required");
    Manifest manifest("plot", c);
    auto emit = [&](const std::string& file, const std::string& svg) {
        write_file(out / file, svg);
        manifest.add_output(out / file);
        ctx.log << "wrote " << (out / file).string() << '\n';
    };
    std::vector<fs::path> paths;
    for (const auto& i : inputs) {
        paths.push_back(workspace_path(i));
        manifest.add_input(paths.back());
    }
    // Panels are named after the input file, or its directory for generic
    // file names such as ed_curve.tsv.
    auto title_of = [&](const fs::path& p, const char* generic) {
        return p.stem().string() == generic && p.has_parent_path() ? p.parent_path().filename().string() : p.stem().string();
    };

    if (kind == "ed_curves") {
        for (const auto& p : paths) {
            const auto curve = evalkit::curve_from_tsv(read_file(p));
            std::optional<double> ref;
            if (c.at("reference_length").get<double>() > 0) ref = c.at("reference_length").get<double>();
            const auto t = title_of(p, "ed_curve");
            emit("ed_curve_" + t + ".svg", ed_curve_svg(t, curve, ref));
        }
    } else if (kind == "violins") {
        for (const auto& p : paths) {
            const auto t = title_of(p, "latents");
            emit("violins_" + t + ".svg", violin_svg(t, evalkit::latent_samples_from_tsv(read_file(p))));
        }
    } else if (kind == "pose_mae") {
        std::map<std::string, std::pair<std::array<double, 6>, std::array<double, 6>>> tasks;
        std::vector<std::string> order;
        const std::vector<std::string> axes{"x", "y", "z", "roll", "pitch", "yaw"};
        for (const auto& p : paths) {
            const auto rows = read_tsv(p);
            for (std::size_t r = 1; r < rows.size(); ++r) {
                const auto& row = rows[r];
                if (row.size() != 4) throw DataError(p.string() + ": expected task, axis, mae, baseline");
                const auto a = std::find(axes.begin(), axes.end(), row[1]) - axes.begin();
                if (a == 6) throw DataError(p.string() + ": unknown axis '" + row[1] + "'");
                if (!tasks.count(row[0])) order.push_back(row[0]);
                tasks[row[0]].first[a] = to_double(row[2], p);
                tasks[row[0]].second[a] = to_double(row[3], p);
            }
        }
        if (order.empty()) throw NoData("pose MAE report is empty");
        for (const auto& t : order) emit("pose_mae_" + t + ".svg", pose_mae_svg(t, tasks[t].first, tasks[t].second));
    } else if (kind == "seg_table") {
        std::vector<TableCell> cells;
        for (const auto& p : paths) {
            const auto rows = read_tsv(p);
            for (std::size_t r = 1; r < rows.size(); ++r) {
                if (rows[r].size() != 3) throw DataError(p.string() + ": expected model, task, accuracy");
                cells.push_back({rows[r][0], rows[r][1], to_double(rows[r][2], p)});
            }
        }
        emit("seg_table.svg", table_svg("movement prescription accuracy", cells));
    } else {
        throw ConfigError("--kind must be ed_curves, violins, pose_mae or seg_table");
    }
    finish(manifest, out, ctx.log);
}

// ------------------------------------------------------------------ specs

OptionSpec req(std::string key, std::string help) { return {std::move(key), "", std::move(help), true}; }
OptionSpec opt(std::string key, Json fallback, std::string help) { return {std::move(key), std::move(fallback), std::move(help)}; }

std::vector<OptionSpec> model_options() {
    return {req("model", "model checkpoint (model.ckpt)"),
            opt("distributions", "", "label distributions JSON (default: distributions.json beside the checkpoint)")};
}

std::vector<OptionSpec> segmentation_options() {
    return {opt("var_moving", 1.0, "per-dimension variance of the moving step model"),
            opt("var_static", 0.1, "per-dimension variance of the static step model")};
}

std::vector<OptionSpec> join(std::vector<std::vector<OptionSpec>> parts) {
    std::vector<OptionSpec> out;
    for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

}  // namespace

const std::vector<CommandSpec>& commands() {
    static const std::vector<CommandSpec> all{
        {"gen-data", "Generate and render a scene dataset with relation labels and a stratified split.",
         {req("out", "output dataset directory"), opt("scenes", 1000, "number of scenes"),
          opt("objects", 4, "objects per scene (the tray counts)"), opt("seed", 0, "scene i uses seed + i"),
          opt("resolution", 64, "image side in pixels"), opt("labels", "", "label configuration JSON (default: built-in blocksworld)"),
          opt("thresholds", "", "threshold configuration JSON (default: built-in bands)"),
          opt("split", Json::array({0.8, 0.1, 0.1}), "train,validation,test fractions"),
          opt("split_seed", 0, "seed of the stratified split"),
          opt("split_tolerance", 0.05, "allowed deviation of per-group labelled fractions")},
         run_gen_data},
        {"gen-demos", "Generate rendered demonstrations with ground-truth movers, plans and poses.",
         {req("out", "output directory (one subdirectory per task)"),
          opt("kind", "chained", "repetitive, chained or placement"),
          opt("task", "", "single task (relation group, chained kind or placement task); default all"),
          opt("count", 8, "demonstrations per task"), opt("seed", 0, "demo i uses seed + i"),
          opt("targets", 3, "targets per repetitive demo"), opt("move_steps", 4, "moving steps per target (repetitive)"),
          opt("resolution", 64, "image side in pixels")},
         run_gen_demos},
        {"train", "Train the relational VAE on a dataset or on placement demonstrations.",
         {req("out", "output directory"), opt("data", "", "dataset directory from gen-data"),
          opt("split", "", "directory holding splits/ (default: the dataset)"),
          opt("demos", "", "demonstration directory (window or geometric labels)"),
          opt("stride", 5, "keep every n-th unlabelled demo frame"),
          opt("labels", "", "label configuration JSON for --demos"),
          opt("ablation", "full", "full, no_r, no_qobj or no_r_no_qobj"), opt("epochs", 50, "training epochs"),
          opt("batch_size", 32, "minibatch size"), opt("lr", 1e-3, "Adam learning rate"),
          opt("alpha", 1.0, "reconstruction weight"), opt("beta", 10.0, "KL weight"),
          opt("gamma", 50000.0, "classification weight"), opt("seed", 0, "initialisation and shuffling seed"),
          opt("init_from", "", "checkpoint whose encoder and decoder initialise the model"),
          opt("min_samples", 20, "minimum samples for a label distribution fit")},
         run_train},
        {"explain", "Segment demonstrations into movers and symbolic plans; report segmentation accuracy and edit distance.",
         join({model_options(), {req("demo", "demo directory or a directory of demos"), req("out", "output directory")},
               segmentation_options(), {opt("edit_mode", "levenshtein", "levenshtein or strict")}}),
         run_explain},
        {"essence", "Extract the task essence of a set of demonstrations and the edit-distance curve.",
         join({model_options(),
               {req("demos", "directory of demos of one task"), req("out", "output directory"),
                opt("max_demos", 0, "use only the first n demos (0 = all)"),
                opt("edit_mode", "levenshtein", "levenshtein or strict")}}),
         run_essence},
        {"predict-pose", "Fit pose regressors on placement demos and evaluate them on held-out demos.",
         join({model_options(),
               {req("train_demos", "placement demos for fitting"), req("eval_demos", "held-out placement demos"),
                req("out", "output directory"), opt("pooled", false, "one regressor over all tasks"),
                opt("hidden", Json::array({256, 64}), "hidden layer sizes"), opt("epochs", 300, "training epochs"),
                opt("batch_size", 64, "minibatch size"), opt("lr", 1e-3, "Adam learning rate"),
                opt("weight_decay", 1e-2, "L2 weight decay"), opt("seed", 0, "initialisation and sampling seed")}}),
         run_predict_pose},
        {"eval", "Held-out classifier accuracy and latent export on a dataset; segmentation table on demos.",
         join({model_options(),
               {req("out", "output directory"), opt("data", "", "dataset directory"),
                opt("split", "test", "train, validation or test"), opt("demos", "", "demonstration directory"),
                opt("name", "", "row label in seg_table.tsv (default: ablation name)")},
               segmentation_options()}),
         run_eval},
        {"plot", "Render report files as SVG figures, one file per panel.",
         {req("kind", "ed_curves, violins, pose_mae or seg_table"),
          opt("inputs", Json::array(), "report files (ed_curve.tsv, latents.tsv, pose_mae.tsv, seg_table.tsv)"),
          req("out", "output directory"),
          opt("reference_length", 0.0, "ground-truth plan length line for ed_curves (0 = none)")},
         run_plot},
    };
    return all;
}

}  // namespace relground::cli
