#include "relground/posereg.hpp"

#include <Eigen/Core>
#include <cmath>

#include "json_util.hpp"
#include "relground/container.hpp"
#include "relground/rng.hpp"

namespace relground::posereg {

using detail::Json;
using Mat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic>;
using Vec = Eigen::VectorXf;

std::vector<double> sample_relational_embedding(const labelspace::LabelVector& y, const planner::LabelDistributions& K,
                                                std::uint64_t seed) {
    if (y.size() != K.groups.size()) throw ShapeMismatch("label vector does not match the label distributions");
    Rng rng(seed);
    std::vector<double> c(y.size());
    for (std::size_t p = 0; p < y.size(); ++p) {
        const auto& f = K.at(p, y.assignments[p]);
        if (!f.fit) throw DataError("no fitted distribution for group '" + K.groups[p] + "'");
        c[p] = f.mean + f.stddev * rng.normal();
    }
    return c;
}

Triple placement_triple(const worldgen::Demonstration& demo, const relvae::Model& model,
                        const labelspace::LabelConfig& labels, const planner::LabelDistributions& K,
                        std::uint64_t seed) {
    if (!demo.ground_truth_poses || demo.ground_truth_poses->empty()) throw DataError("demo '" + demo.kind + "' has no poses");
    if (demo.frames.empty() || demo.target_ids.empty()) throw DataError("demo '" + demo.kind + "' has no rendered frames");
    const int t = demo.target_ids.front();
    const auto view = dataio::make_view(demo.frames.front(), demo.scenes.front().object(t), labels);
    Triple out;
    out.z_tar = model.encode(view->masked).mean;
    const auto& y = demo.window_labels.empty() ? demo.geometric_labels.at(t).back() : demo.window_labels.back();
    out.c = sample_relational_embedding(y, K, seed);
    out.pose = demo.ground_truth_poses->back();
    return out;
}

Pose mean_pose(const std::vector<Pose>& poses) {
    if (poses.empty()) throw DataError("mean of an empty pose set");
    Pose m;
    double sr = 0, cr = 0, sp = 0, cp = 0, sy = 0, cy = 0;
    for (const auto& p : poses) {
        m.x += p.x;
        m.y += p.y;
        m.z += p.z;
        sr += std::sin(p.roll), cr += std::cos(p.roll);
        sp += std::sin(p.pitch), cp += std::cos(p.pitch);
        sy += std::sin(p.yaw), cy += std::cos(p.yaw);
    }
    const double n = static_cast<double>(poses.size());
    m.x /= n;
    m.y /= n;
    m.z /= n;
    m.roll = std::atan2(sr, cr);
    m.pitch = std::atan2(sp, cp);
    m.yaw = std::atan2(sy, cy);
    return m;
}

namespace {

constexpr int kPoseDim = 6;

std::array<double, 6> pose_vec(const Pose& p) { return {p.x, p.y, p.z, p.roll, p.pitch, p.yaw}; }

struct Net {
    std::vector<int> sizes;
    std::vector<std::size_t> w_off, b_off;
    std::size_t total = 0;

    explicit Net(std::vector<int> s) : sizes(std::move(s)) {
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            w_off.push_back(total);
            total += static_cast<std::size_t>(sizes[l]) * sizes[l + 1];
            b_off.push_back(total);
            total += sizes[l + 1];
        }
    }
    std::size_t layers() const { return w_off.size(); }
    Eigen::Map<const Mat> W(const std::vector<float>& p, std::size_t l) const {
        return {p.data() + w_off[l], sizes[l + 1], sizes[l]};
    }
    Eigen::Map<const Vec> b(const std::vector<float>& p, std::size_t l) const { return {p.data() + b_off[l], sizes[l + 1]}; }
};

std::vector<int> net_sizes(const PoseRegressor& r) {
    std::vector<int> s{r.z_dim + r.c_dim};
    s.insert(s.end(), r.hidden.begin(), r.hidden.end());
    s.push_back(kPoseDim);
    return s;
}

/// Forward over a column batch; keeps activations for backprop.
void forward(const Net& net, const std::vector<float>& p, const Mat& X, std::vector<Mat>& acts) {
    acts.resize(net.layers() + 1);
    acts[0] = X;
    for (std::size_t l = 0; l < net.layers(); ++l) {
        acts[l + 1] = (net.W(p, l) * acts[l]).colwise() + net.b(p, l);
        if (l + 1 < net.layers()) acts[l + 1] = acts[l + 1].cwiseMax(0.0f);
    }
}

Vec standardized_input(const PoseRegressor& r, const std::vector<double>& z, const std::vector<double>& c) {
    if (z.size() != static_cast<std::size_t>(r.z_dim) || c.size() != static_cast<std::size_t>(r.c_dim))
        throw ShapeMismatch("regressor input dimensions do not match");
    Vec x(r.z_dim + r.c_dim);
    for (int i = 0; i < r.z_dim; ++i) x[i] = static_cast<float>(z[i]);
    for (int i = 0; i < r.c_dim; ++i) x[r.z_dim + i] = static_cast<float>(c[i]);
    for (int i = 0; i < x.size(); ++i) x[i] = (x[i] - r.in_mean[i]) / r.in_scale[i];
    return x;
}

}  // namespace

FitResult fit_pose_regressor(const std::vector<Triple>& triples, const RegressorConfig& cfg) {
    if (triples.empty()) throw DegenerateData("no training triples");
    if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0)) throw ConfigError("invalid regressor training settings");
    for (int h : cfg.hidden)
        if (h < 1) throw ConfigError("hidden sizes must be positive");
    FitResult res;
    PoseRegressor& r = res.regressor;
    r.z_dim = static_cast<int>(triples[0].z_tar.size());
    r.c_dim = static_cast<int>(triples[0].c.size());
    r.hidden = cfg.hidden;
    for (const auto& t : triples)
        if (t.z_tar.size() != static_cast<std::size_t>(r.z_dim) || t.c.size() != static_cast<std::size_t>(r.c_dim))
            throw DegenerateData("triples have inconsistent input dimensions");
    const int nin = r.z_dim + r.c_dim;
    const auto n = static_cast<int>(triples.size());

    // Circular mean per angle axis, then targets unwrapped around it.
    r.angle_center.assign(3, 0.0f);
    for (int a = 0; a < 3; ++a) {
        double s = 0, co = 0;
        for (const auto& t : triples) {
            const double v = pose_vec(t.pose)[3 + a];
            s += std::sin(v);
            co += std::cos(v);
        }
        r.angle_center[a] = static_cast<float>(std::atan2(s, co));
    }
    Mat X(nin, n), Y(kPoseDim, n);
    for (int i = 0; i < n; ++i) {
        const auto& t = triples[i];
        for (int k = 0; k < r.z_dim; ++k) X(k, i) = static_cast<float>(t.z_tar[k]);
        for (int k = 0; k < r.c_dim; ++k) X(r.z_dim + k, i) = static_cast<float>(t.c[k]);
        const auto pv = pose_vec(t.pose);
        for (int k = 0; k < 3; ++k) Y(k, i) = static_cast<float>(pv[k]);
        for (int a = 0; a < 3; ++a) Y(3 + a, i) = r.angle_center[a] + static_cast<float>(wrap_angle(pv[3 + a] - r.angle_center[a]));
    }
    auto standardize = [](Mat& M, std::vector<float>& mean, std::vector<float>& scale) {
        mean.resize(M.rows());
        scale.resize(M.rows());
        for (int k = 0; k < M.rows(); ++k) {
            const float m = M.row(k).mean();
            const float v = (M.row(k).array() - m).square().mean();
            mean[k] = m;
            scale[k] = v > 1e-12f ? std::sqrt(v) : 1.0f;
            M.row(k) = (M.row(k).array() - m) / scale[k];
        }
    };
    standardize(X, r.in_mean, r.in_scale);
    standardize(Y, r.out_mean, r.out_scale);

    const Net net(net_sizes(r));
    r.params.assign(net.total, 0.0f);
    Rng rng(cfg.seed);
    for (std::size_t l = 0; l < net.layers(); ++l) {
        const double a = std::sqrt(3.0 / net.sizes[l]);
        for (std::size_t i = net.w_off[l]; i < net.b_off[l]; ++i) r.params[i] = static_cast<float>(rng.uniform(-a, a));
    }
    if (static_cast<std::size_t>(n) < r.params.size())
        res.warnings.push_back("only " + std::to_string(n) + " triples for " + std::to_string(r.params.size()) +
                               " regressor parameters");

    std::vector<double> m(net.total, 0.0), v(net.total, 0.0);
    std::vector<float> grad(net.total);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::vector<Mat> acts;
    long long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        double epoch_loss = 0;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int bs = std::min(cfg.batch_size, n - start);
            Mat Xb(nin, bs), Yb(kPoseDim, bs);
            for (int k = 0; k < bs; ++k) {
                Xb.col(k) = X.col(order[start + k]);
                Yb.col(k) = Y.col(order[start + k]);
            }
            forward(net, r.params, Xb, acts);
            Mat D = (acts.back() - Yb) * (2.0f / (bs * kPoseDim));
            epoch_loss += (acts.back() - Yb).squaredNorm() / kPoseDim;
            std::fill(grad.begin(), grad.end(), 0.0f);
            for (std::size_t l = net.layers(); l-- > 0;) {
                Eigen::Map<Mat>(grad.data() + net.w_off[l], net.sizes[l + 1], net.sizes[l]) = D * acts[l].transpose();
                Eigen::Map<Vec>(grad.data() + net.b_off[l], net.sizes[l + 1]) = D.rowwise().sum();
                if (l == 0) break;
                Mat prev = net.W(r.params, l).transpose() * D;
                D = prev.cwiseProduct((acts[l].array() > 0.0f).cast<float>().matrix());
            }
            ++step;
            const double c1 = 1 - std::pow(0.9, static_cast<double>(step));
            const double c2 = 1 - std::pow(0.999, static_cast<double>(step));
            for (std::size_t i = 0; i < net.total; ++i) {
                const double g = grad[i] + cfg.weight_decay * r.params[i];
                m[i] = 0.9 * m[i] + 0.1 * g;
                v[i] = 0.999 * v[i] + 0.001 * g * g;
                r.params[i] -= static_cast<float>(cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + 1e-8));
            }
        }
        res.loss_history.push_back(epoch_loss / n);
    }
    return res;
}

Pose predict_pose(const std::vector<double>& z_tar, const std::vector<double>& c, const PoseRegressor& r) {
    const Net net(net_sizes(r));
    if (r.params.size() != net.total) throw ShapeMismatch("regressor parameters do not match its layout");
    std::vector<Mat> acts;
    forward(net, r.params, standardized_input(r, z_tar, c), acts);
    std::array<double, 6> out;
    for (int k = 0; k < kPoseDim; ++k) out[k] = static_cast<double>(acts.back()(k, 0)) * r.out_scale[k] + r.out_mean[k];
    Pose p{out[0], out[1], out[2], wrap_angle(out[3]), wrap_angle(out[4]), wrap_angle(out[5])};
    if (!(std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z) && std::isfinite(p.roll) &&
          std::isfinite(p.pitch) && std::isfinite(p.yaw)))
        throw NumericalError("pose regressor produced a non-finite pose");
    return p;
}

namespace {

ArrayRecord vec_record(const std::vector<float>& v) {
    ArrayRecord rec;
    rec.extents = {static_cast<std::uint32_t>(v.size()), 1, 1};
    rec.values = v;
    return rec;
}

}  // namespace

void save_regressor(const std::filesystem::path& path, const PoseRegressor& r, const std::string& task_meta) {
    Container c;
    c.kind = "pose-regressor";
    c.meta = Json{{"z_dim", r.z_dim}, {"c_dim", r.c_dim}, {"hidden", r.hidden},
                  {"task", detail::parse_json(task_meta, "regressor metadata")}}
                 .dump();
    c.arrays["params"] = vec_record(r.params);
    c.arrays["in_mean"] = vec_record(r.in_mean);
    c.arrays["in_scale"] = vec_record(r.in_scale);
    c.arrays["out_mean"] = vec_record(r.out_mean);
    c.arrays["out_scale"] = vec_record(r.out_scale);
    c.arrays["angle_center"] = vec_record(r.angle_center);
    write_container(path, c);
}

PoseRegressor load_regressor(const std::filesystem::path& path) {
    const Container c = read_container(path, "pose-regressor");
    const Json meta = detail::parse_json(c.meta, "regressor metadata");
    PoseRegressor r;
    try {
        r.z_dim = meta.at("z_dim").get<int>();
        r.c_dim = meta.at("c_dim").get<int>();
        r.hidden = meta.at("hidden").get<std::vector<int>>();
        auto get = [&](const char* name) {
            if (!c.arrays.contains(name)) throw DataError(path.string() + ": missing array " + name);
            return c.arrays.at(name).values;
        };
        r.params = get("params");
        r.in_mean = get("in_mean");
        r.in_scale = get("in_scale");
        r.out_mean = get("out_mean");
        r.out_scale = get("out_scale");
        r.angle_center = get("angle_center");
    } catch (const Json::exception& e) {
        throw DataError(path.string() + ": invalid regressor metadata: " + e.what());
    }
    if (Net(net_sizes(r)).total != r.params.size()) throw ShapeMismatch(path.string() + ": parameter count mismatch");
    return r;
}

}  // namespace relground::posereg
