#include "relground/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "relground/planner.hpp"

namespace relground::evalkit {

double seg_accuracy(const MovementPrescriptionSequence& S, const MovementPrescriptionSequence& S_hat,
                    const std::vector<int>& targets) {
    if (S.steps() != S_hat.steps()) throw ShapeMismatch("movement sequences differ in length");
    if (targets.empty()) throw ShapeMismatch("at least one target is required");
    if (S.steps() == 0) throw ShapeMismatch("movement sequences are empty");
    std::size_t agree = 0;
    for (std::size_t t = 0; t < S.steps(); ++t)
        for (int o : targets) agree += (S.movers[t] == o) == (S_hat.movers[t] == o);
    return static_cast<double>(agree) / static_cast<double>(S.steps() * targets.size());
}

std::size_t levenshtein(const SymbolicPlan& a, const SymbolicPlan& b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t sub = prev[j - 1] + (a.steps[i - 1].same_symbol(b.steps[j - 1]) ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

double edit_distance(const SymbolicPlan& Y, const SymbolicPlan& Y_hat, EditMode mode) {
    if (Y.size() == Y_hat.size()) {
        if (Y.empty()) return 0.0;
        std::size_t mismatches = 0;
        for (std::size_t i = 0; i < Y.size(); ++i) mismatches += !Y.steps[i].same_symbol(Y_hat.steps[i]);
        return static_cast<double>(mismatches) / static_cast<double>(Y.size());
    }
    if (mode == EditMode::strict) throw ShapeMismatch("plans differ in length under strict edit distance");
    if (Y.empty()) return 1.0;
    return std::min(1.0, static_cast<double>(levenshtein(Y, Y_hat)) / static_cast<double>(Y.size()));
}

std::array<double, 6> pose_mae(const std::vector<Pose>& P, const std::vector<Pose>& P_hat) {
    if (P.size() != P_hat.size()) throw ShapeMismatch("pose lists differ in length");
    if (P.empty()) throw ShapeMismatch("pose lists are empty");
    std::array<double, 6> mae{};
    for (std::size_t i = 0; i < P.size(); ++i) {
        const auto& a = P[i];
        const auto& b = P_hat[i];
        mae[0] += std::abs(a.x - b.x);
        mae[1] += std::abs(a.y - b.y);
        mae[2] += std::abs(a.z - b.z);
        mae[3] += std::abs(wrap_angle(a.roll - b.roll));
        mae[4] += std::abs(wrap_angle(a.pitch - b.pitch));
        mae[5] += std::abs(wrap_angle(a.yaw - b.yaw));
    }
    for (auto& v : mae) v /= static_cast<double>(P.size());
    return mae;
}

LatentSamples export_latent_samples(const relvae::Model& model, const std::vector<dataio::ObservationPair>& pairs,
                                    const std::vector<int>& indices, const labelspace::LabelConfig& labels) {
    const auto& groups = labels.relational();
    if (static_cast<int>(groups.size()) != model.config().relational_dim())
        throw ShapeMismatch("label configuration does not match the model");
    LatentSamples s;
    for (const auto& g : groups) {
        s.groups.push_back(g.name);
        s.label_names.push_back(g.labels);
        s.by_label.emplace_back(g.labels.size());
        s.unknown.emplace_back();
    }
    for (int i : indices) {
        const auto& p = pairs.at(i);
        const auto c = relvae::embed_pair(model, p.target->masked, p.referent->masked);
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (p.y.known(g))
                s.by_label[g].at(p.y.label(g)).push_back(c[g]);
            else
                s.unknown[g].push_back(c[g]);
        }
    }
    return s;
}

std::string latent_samples_to_tsv(const LatentSamples& s) {
    std::ostringstream out;
    out.precision(9);
    out << "group\tlabel\tvalue\n";
    for (std::size_t g = 0; g < s.groups.size(); ++g) {
        for (std::size_t q = 0; q < s.by_label[g].size(); ++q)
            for (double v : s.by_label[g][q]) out << s.groups[g] << '\t' << s.label_names[g][q] << '\t' << v << '\n';
        for (double v : s.unknown[g]) out << s.groups[g] << "\tunknown\t" << v << '\n';
    }
    return out.str();
}

LatentSamples latent_samples_from_tsv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "group\tlabel\tvalue") throw DataError("latent sample file has no header");
    LatentSamples s;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string group, label, value;
        if (!std::getline(ls, group, '\t') || !std::getline(ls, label, '\t') || !std::getline(ls, value))
            throw DataError("malformed latent sample line: " + line);
        auto git = std::find(s.groups.begin(), s.groups.end(), group);
        std::size_t g = git - s.groups.begin();
        if (git == s.groups.end()) {
            s.groups.push_back(group);
            s.label_names.emplace_back();
            s.by_label.emplace_back();
            s.unknown.emplace_back();
        }
        double v = 0;
        try {
            v = std::stod(value);
        } catch (const std::exception&) {
            throw DataError("malformed latent sample value: " + value);
        }
        if (label == "unknown") {
            s.unknown[g].push_back(v);
            continue;
        }
        auto& names = s.label_names[g];
        auto lit = std::find(names.begin(), names.end(), label);
        std::size_t q = lit - names.begin();
        if (lit == names.end()) {
            names.push_back(label);
            s.by_label[g].emplace_back();
        }
        s.by_label[g][q].push_back(v);
    }
    return s;
}

std::vector<CurvePoint> ed_vs_demos_curve(const std::vector<SymbolicPlan>& inferred,
                                          const std::vector<SymbolicPlan>& ground_truth, EditMode mode) {
    if (inferred.size() != ground_truth.size()) throw ShapeMismatch("one ground-truth plan per demo is required");
    if (inferred.empty()) throw DataError("no demos for the edit-distance curve");
    std::vector<CurvePoint> curve;
    const std::size_t N = inferred.size();
    for (std::size_t n = 1; n <= N; ++n) {
        std::vector<SymbolicPlan> first(inferred.begin(), inferred.begin() + n);
        SymbolicPlan essence;
        try {
            essence = planner::extract_essence(first);
        } catch (const planner::EmptyEssence&) {
        }
        CurvePoint pt;
        pt.n_demos = static_cast<int>(n);
        for (std::size_t d = 0; d < N; ++d) {
            const auto filtered = planner::filter_to_essence(inferred[d], essence);
            pt.mean_ed += edit_distance(ground_truth[d], filtered, mode);
            pt.mean_length += static_cast<double>(filtered.size());
        }
        pt.mean_ed /= static_cast<double>(N);
        pt.mean_length /= static_cast<double>(N);
        curve.push_back(pt);
    }
    return curve;
}

std::string curve_to_tsv(const std::vector<CurvePoint>& curve) {
    std::ostringstream out;
    out.precision(9);
    out << "n_demos\tmean_ed\tmean_length\n";
    for (const auto& p : curve) out << p.n_demos << '\t' << p.mean_ed << '\t' << p.mean_length << '\n';
    return out.str();
}

std::vector<CurvePoint> curve_from_tsv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "n_demos\tmean_ed\tmean_length") throw DataError("curve file has no header");
    std::vector<CurvePoint> curve;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        CurvePoint p;
        if (!(ls >> p.n_demos >> p.mean_ed >> p.mean_length)) throw DataError("malformed curve line: " + line);
        curve.push_back(p);
    }
    return curve;
}

}  // namespace relground::evalkit
