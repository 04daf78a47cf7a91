#include "relground/planner.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "json_util.hpp"
#include "relground/array_io.hpp"

namespace relground::planner {

using detail::Json;
using labelspace::LabelConfig;
using labelspace::LabelVector;

void SegmentationConfig::validate() const {
    if (!(var_moving > 0) || !(var_static > 0)) throw ConfigError("segmentation variances must be positive");
    if (!(var_static < var_moving)) throw ConfigError("static variance must be smaller than the moving variance");
}

namespace {

std::vector<std::string> group_names(const LabelConfig& labels) {
    std::vector<std::string> names;
    for (const auto& g : labels.relational()) names.push_back(g.name);
    return names;
}

double log_normal_iso(double sq_dist, std::size_t L, double var) {
    return -0.5 * (sq_dist / var + static_cast<double>(L) * std::log(2.0 * std::numbers::pi * var));
}

double sq_step(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw LengthMismatch("embedding dimensions differ");
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (b[i] - a[i]) * (b[i] - a[i]);
    return s;
}

double log_density(double x, const LabelFit& f) {
    const double s = std::max(f.stddev, 1e-12);
    const double u = (x - f.mean) / s;
    return -std::log(s) - 0.5 * u * u;
}

bool same(const PlanStep& a, const PlanStep& b) { return a.same_symbol(b); }

/// Indices into a and b of one longest common subsequence, preferring the
/// earliest matches in a.
std::vector<std::pair<std::size_t, std::size_t>> lcs(const std::vector<PlanStep>& a, const std::vector<PlanStep>& b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1, 0));
    for (std::size_t i = n; i-- > 0;)
        for (std::size_t j = m; j-- > 0;)
            dp[i][j] = same(a[i], b[j]) ? dp[i + 1][j + 1] + 1 : std::max(dp[i + 1][j], dp[i][j + 1]);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t i = 0, j = 0;
    while (i < n && j < m) {
        if (same(a[i], b[j]) && dp[i][j] == dp[i + 1][j + 1] + 1) {
            out.emplace_back(i++, j++);
        } else if (dp[i + 1][j] >= dp[i][j + 1]) {
            ++i;
        } else {
            ++j;
        }
    }
    return out;
}

LabelFit fit(const std::vector<double>& xs, int min_samples) {
    LabelFit f;
    f.count = static_cast<int>(xs.size());
    if (xs.empty()) return f;
    double s = 0;
    for (double x : xs) s += x;
    f.mean = s / xs.size();
    double v = 0;
    for (double x : xs) v += (x - f.mean) * (x - f.mean);
    f.stddev = xs.size() > 1 ? std::sqrt(v / (xs.size() - 1)) : 0.0;
    f.fit = f.count >= min_samples && f.count >= 1;
    return f;
}

Json fit_json(const LabelFit& f) {
    return {{"mean", f.mean}, {"stddev", f.stddev}, {"count", f.count}, {"fit", f.fit}};
}

LabelFit fit_from(const Json& j) {
    return {j.at("mean").get<double>(), j.at("stddev").get<double>(), j.at("count").get<int>(), j.at("fit").get<bool>()};
}

}  // namespace

Trace project_demo(const worldgen::Demonstration& demo, const relvae::Model& model, const LabelConfig& labels,
                   int tar_id, int ref_id) {
    if (demo.frames.size() != demo.scenes.size()) throw DataError("demo has no rendered frames");
    if (static_cast<int>(labels.relational().size()) != model.config().relational_dim())
        throw ShapeMismatch("label configuration does not match the model");
    Trace tr;
    tr.groups = group_names(labels);
    std::vector<double> last(tr.groups.size(), 0.0);
    for (std::size_t f = 0; f < demo.frames.size(); ++f) {
        const auto& scene = demo.scenes[f];
        const auto& obs = demo.frames[f];
        const bool hidden = obs.mask_of(tar_id).count() == 0 || obs.mask_of(ref_id).count() == 0;
        if (!hidden) {
            const auto a = dataio::make_view(obs, scene.object(tar_id), labels);
            const auto b = dataio::make_view(obs, scene.object(ref_id), labels);
            last = relvae::embed_pair(model, a->masked, b->masked);
        }
        tr.embeddings.push_back(last);
        tr.occluded.push_back(hidden);
    }
    return tr;
}

bool step_is_moving(const std::vector<double>& from, const std::vector<double>& to, const SegmentationConfig& cfg) {
    const double d = sq_step(from, to);
    return log_normal_iso(d, from.size(), cfg.var_moving) > log_normal_iso(d, from.size(), cfg.var_static);
}

double moving_threshold(std::size_t L, const SegmentationConfig& cfg) {
    cfg.validate();
    return static_cast<double>(L) * std::log(cfg.var_moving / cfg.var_static) /
           (1.0 / cfg.var_static - 1.0 / cfg.var_moving);
}

std::vector<bool> moving_flags(const Trace& trace, const SegmentationConfig& cfg) {
    cfg.validate();
    std::vector<bool> flags;
    for (std::size_t t = 0; t + 1 < trace.length(); ++t)
        flags.push_back(step_is_moving(trace.embeddings[t], trace.embeddings[t + 1], cfg));
    return flags;
}

MovementPrescriptionSequence movement_prescription(const std::map<int, Trace>& traces, const SegmentationConfig& cfg) {
    MovementPrescriptionSequence S;
    if (traces.empty()) return S;
    const std::size_t T = traces.begin()->second.length();
    for (const auto& [id, tr] : traces)
        if (tr.length() != T) throw LengthMismatch("traces of one demo must have equal length");
    std::map<int, std::vector<bool>> flags;
    for (const auto& [id, tr] : traces) flags[id] = moving_flags(tr, cfg);
    for (std::size_t t = 0; t + 1 < T; ++t) {
        std::optional<int> mover;
        double best = -1;
        for (const auto& [id, tr] : traces) {
            if (!flags[id][t]) continue;
            const double d = sq_step(tr.embeddings[t], tr.embeddings[t + 1]);
            if (d > best) {
                best = d;
                mover = id;
            }
        }
        S.movers.push_back(mover);
    }
    return S;
}

LabelDistributions fit_label_distributions(const std::vector<std::vector<double>>& embeddings,
                                           const std::vector<LabelVector>& labels, const LabelConfig& config,
                                           int min_samples) {
    if (embeddings.size() != labels.size()) throw LengthMismatch("one label vector per embedding is required");
    if (min_samples < 1) throw ConfigError("min_samples must be at least 1");
    const auto& groups = config.relational();
    LabelDistributions K;
    K.groups = group_names(config);
    K.min_samples = min_samples;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        std::vector<std::vector<double>> per_label(groups[g].size());
        std::vector<double> unknown;
        for (std::size_t i = 0; i < embeddings.size(); ++i) {
            if (embeddings[i].size() != groups.size() || labels[i].size() != groups.size())
                throw ShapeMismatch("embedding or label size does not match the configuration");
            const double x = embeddings[i][g];
            if (labels[i].known(g))
                per_label.at(labels[i].label(g)).push_back(x);
            else
                unknown.push_back(x);
        }
        std::vector<LabelFit> fits;
        for (const auto& xs : per_label) fits.push_back(fit(xs, min_samples));
        K.labels.push_back(std::move(fits));
        K.unknown.push_back(fit(unknown, min_samples));
    }
    return K;
}

LabelDistributions fit_label_distributions(const relvae::Model& model,
                                           const std::vector<dataio::ObservationPair>& pairs,
                                           const std::vector<int>& indices, const LabelConfig& config,
                                           int min_samples) {
    std::vector<std::vector<double>> emb;
    std::vector<LabelVector> ys;
    for (int i : indices) {
        const auto& p = pairs.at(i);
        emb.push_back(relvae::embed_pair(model, p.target->masked, p.referent->masked));
        ys.push_back(p.y);
    }
    return fit_label_distributions(emb, ys, config, min_samples);
}

std::vector<LabelVector> symbolic_trace(const Trace& trace, const LabelDistributions& K) {
    const std::size_t L = K.groups.size();
    if (trace.dim() != L) throw ShapeMismatch("trace and label distributions disagree on the groups");
    std::vector<LabelVector> out;
    for (std::size_t t = 0; t < trace.length(); ++t) {
        if (trace.occluded.at(t)) {
            out.push_back(out.empty() ? LabelVector(L) : out.back());
            continue;
        }
        LabelVector v(L);
        for (std::size_t g = 0; g < L; ++g) {
            const double x = trace.embeddings[t].at(g);
            double best = -std::numeric_limits<double>::infinity();
            std::optional<int> arg;
            bool any = false;
            for (std::size_t q = 0; q < K.labels[g].size(); ++q) {
                const auto& f = K.labels[g][q];
                if (!f.fit) continue;
                const double ld = log_density(x, f);
                if (!any || ld > best) {
                    best = ld;
                    arg = static_cast<int>(q);
                    any = true;
                }
            }
            if (K.unknown[g].fit && (!any || log_density(x, K.unknown[g]) > best)) arg.reset();
            v.assignments[g] = arg;
        }
        out.push_back(std::move(v));
    }
    return out;
}

SymbolicPlan extract_essence(const std::vector<SymbolicPlan>& plans) {
    if (plans.empty()) throw EmptyEssence("no plans to intersect");
    SymbolicPlan essence = plans.front();
    for (std::size_t k = 1; k < plans.size(); ++k) {
        SymbolicPlan next;
        for (const auto& [i, j] : lcs(essence.steps, plans[k].steps)) next.steps.push_back(essence.steps[i]);
        essence = std::move(next);
    }
    if (essence.empty()) throw EmptyEssence("the demonstrations share no plan step");
    return essence;
}

SymbolicPlan filter_to_essence(const SymbolicPlan& plan, const SymbolicPlan& essence) {
    SymbolicPlan out;
    for (const auto& [i, j] : lcs(plan.steps, essence.steps)) out.steps.push_back(plan.steps[i]);
    return out;
}

InferredPlan infer_plan(const Trace& trace, const LabelDistributions& K, const SymbolicPlan* essence) {
    InferredPlan r;
    r.raw = plan_from_labels(symbolic_trace(trace, K));
    r.plan = essence ? filter_to_essence(r.raw, *essence) : r.raw;
    for (bool o : trace.occluded) r.occlusion_affected = r.occlusion_affected || o;
    return r;
}

void write_trace(const std::filesystem::path& path, const Trace& trace) {
    if (trace.occluded.size() != trace.length()) throw ShapeMismatch("occlusion flags do not match the trace length");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    Json h{{"format", "relground-trace"}, {"L", trace.dim()}, {"T", trace.length()}, {"groups", trace.groups}};
    Json occ = Json::array();
    for (bool o : trace.occluded) occ.push_back(o);
    h["occluded"] = occ;
    write_blob(out, h.dump());
    std::vector<float> values;
    for (const auto& e : trace.embeddings) {
        if (e.size() != trace.dim()) throw ShapeMismatch("trace rows must have L entries");
        for (double x : e) values.push_back(static_cast<float>(x));
    }
    const std::uint32_t ext[2] = {static_cast<std::uint32_t>(trace.length()), static_cast<std::uint32_t>(trace.dim())};
    write_array(out, values, ext);
}

Trace read_trace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    const Json h = detail::parse_json(read_blob(in), "trace header");
    Trace tr;
    try {
        if (h.at("format").get<std::string>() != "relground-trace") throw DataError(path.string() + " is not a trace");
        tr.groups = h.at("groups").get<std::vector<std::string>>();
        tr.occluded = h.at("occluded").get<std::vector<bool>>();
        const auto L = h.at("L").get<std::size_t>();
        const auto T = h.at("T").get<std::size_t>();
        const auto rec = read_array(in);
        if (L != tr.groups.size() || T != tr.occluded.size() || rec.element_count() != L * T)
            throw ShapeMismatch(path.string() + ": trace header does not match its matrix");
        for (std::size_t t = 0; t < T; ++t)
            tr.embeddings.emplace_back(rec.values.begin() + t * L, rec.values.begin() + (t + 1) * L);
    } catch (const Json::exception& e) {
        throw DataError(path.string() + ": invalid trace header: " + e.what());
    }
    return tr;
}

std::string distributions_to_json(const LabelDistributions& K) {
    Json groups = Json::array();
    for (std::size_t g = 0; g < K.groups.size(); ++g) {
        Json labels = Json::array();
        for (const auto& f : K.labels[g]) labels.push_back(fit_json(f));
        groups.push_back({{"name", K.groups[g]}, {"labels", labels}, {"unknown", fit_json(K.unknown[g])}});
    }
    return Json{{"min_samples", K.min_samples}, {"groups", groups}}.dump(2);
}

LabelDistributions distributions_from_json(const std::string& text) {
    const Json j = detail::parse_json(text, "label distributions");
    LabelDistributions K;
    try {
        K.min_samples = j.at("min_samples").get<int>();
        for (const auto& g : j.at("groups")) {
            K.groups.push_back(g.at("name").get<std::string>());
            std::vector<LabelFit> fits;
            for (const auto& f : g.at("labels")) fits.push_back(fit_from(f));
            K.labels.push_back(std::move(fits));
            K.unknown.push_back(fit_from(g.at("unknown")));
        }
    } catch (const Json::exception& e) {
        throw DataError(std::string("invalid label distributions: ") + e.what());
    }
    return K;
}

std::string plan_to_json(const SymbolicPlan& plan, const LabelConfig& labels) {
    Json steps = Json::array();
    for (const auto& s : plan.steps) {
        const auto& g = labels.relational().at(s.group);
        steps.push_back({{"group", s.group},
                         {"label", s.label},
                         {"timestep", s.timestep},
                         {"group_name", g.name},
                         {"label_name", g.labels.at(s.label)}});
    }
    return steps.dump();
}

SymbolicPlan plan_from_json(const std::string& text) {
    const Json j = detail::parse_json(text, "plan");
    SymbolicPlan p;
    try {
        for (const auto& s : j)
            p.steps.push_back({s.at("group").get<int>(), s.at("label").get<int>(), s.at("timestep").get<int>()});
    } catch (const Json::exception& e) {
        throw DataError(std::string("invalid plan: ") + e.what());
    }
    return p;
}

}  // namespace relground::planner
