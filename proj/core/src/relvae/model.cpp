#include <algorithm>
#include <cmath>

#include "relground/relvae.hpp"
#include "relground/rng.hpp"
#include "relvae/nn.hpp"

namespace relground::relvae {

using labelspace::LabelConfig;

std::vector<double> sample_latent(const LatentDistribution& dist, std::uint64_t noise_seed) {
    if (dist.mean.size() != dist.logvar.size()) throw ShapeMismatch("mean and logvar sizes differ");
    Rng rng(noise_seed);
    std::vector<double> s(dist.dim());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = dist.mean[i] + std::exp(0.5 * dist.logvar[i]) * rng.normal();
    return s;
}

double kl_to_unit_normal(const LatentDistribution& dist) {
    if (dist.mean.size() != dist.logvar.size()) throw ShapeMismatch("mean and logvar sizes differ");
    double kl = 0;
    for (std::size_t i = 0; i < dist.dim(); ++i)
        kl += 0.5 * (std::exp(dist.logvar[i]) + dist.mean[i] * dist.mean[i] - 1.0 - dist.logvar[i]);
    return kl;
}

std::string Ablation::name() const {
    if (use_R && use_Q_obj) return "full";
    if (!use_R && use_Q_obj) return "no_r";
    if (use_R) return "no_qobj";
    return "no_r_no_qobj";
}

Ablation Ablation::from_name(const std::string& name) {
    for (const auto& a : all())
        if (a.name() == name) return a;
    throw ConfigError("unknown ablation '" + name + "' (expected full, no_r, no_qobj or no_r_no_qobj)");
}

std::vector<Ablation> Ablation::all() { return {{true, true}, {false, true}, {true, false}, {false, false}}; }

ModelConfig ModelConfig::for_labels(const LabelConfig& labels, int resolution) {
    ModelConfig cfg;
    if (resolution == 128) {
        cfg.encoder_channels = {32, 32, 64, 64, 64};
    } else if (resolution != 64) {
        throw ConfigError("standard model supports 64 or 128 px input, got " + std::to_string(resolution));
    }
    cfg.resolution = resolution;
    for (const auto& g : labels.relational()) cfg.relational_labels.push_back(g.size());
    for (const auto& g : labels.object()) cfg.object_labels.push_back(g.size());
    return cfg;
}

void ModelConfig::validate() const {
    if (resolution < 1 || channels < 1) throw ConfigError("resolution and channels must be positive");
    if (encoder_channels.empty()) throw ConfigError("encoder needs at least one convolution");
    if (resolution % (1 << encoder_channels.size()) != 0)
        throw ConfigError("resolution must be divisible by 2^(number of encoder convolutions)");
    if (z_dim < 1 || encoder_hidden < 1) throw ConfigError("latent and hidden sizes must be positive");
    if (relational_labels.empty()) throw ConfigError("at least one relational group is required");
    if (object_labels.size() > static_cast<std::size_t>(z_dim))
        throw ConfigError("more object groups than latent dimensions");
    for (int n : relational_labels)
        if (n < 1) throw ConfigError("relational groups need at least one label");
    for (int n : object_labels)
        if (n < 1) throw ConfigError("object groups need at least one label");
    for (int c : encoder_channels)
        if (c < 1) throw ConfigError("channel counts must be positive");
    for (int c : decoder_channels)
        if (c < 1) throw ConfigError("channel counts must be positive");
    for (int c : operator_hidden)
        if (c < 1) throw ConfigError("hidden sizes must be positive");
}

struct Layout {
    std::vector<nn::Conv> enc_convs;
    std::vector<int> enc_sizes;
    nn::Dense enc_fc;
    nn::Dense enc_head;
    std::vector<nn::Conv> dec_convs;
    std::vector<nn::Dense> op;
    std::vector<std::size_t> rel_off;
    std::vector<std::size_t> obj_off;
    ParamRange ranges[5];
    std::size_t total = 0;
};

namespace {

std::shared_ptr<const Layout> make_layout(const ModelConfig& cfg) {
    auto L = std::make_shared<Layout>();
    std::size_t off = 0;
    auto conv = [&](int cin, int cout, int stride) {
        nn::Conv c{cin, cout, 3, stride, 1, off, 0};
        off += c.weights();
        c.b_off = off;
        off += cout;
        return c;
    };
    auto dense = [&](int nin, int nout) {
        nn::Dense d{nin, nout, off, 0};
        off += d.weights();
        d.b_off = off;
        off += nout;
        return d;
    };

    L->ranges[0].begin = off;
    int cin = cfg.channels, size = cfg.resolution;
    for (int c : cfg.encoder_channels) {
        L->enc_convs.push_back(conv(cin, c, 2));
        size = L->enc_convs.back().out_size(size);
        L->enc_sizes.push_back(size);
        cin = c;
    }
    L->enc_fc = dense(size * size * cin, cfg.encoder_hidden);
    L->enc_head = dense(cfg.encoder_hidden, 2 * cfg.z_dim);
    L->ranges[0].end = off;

    L->ranges[1].begin = off;
    cin = cfg.z_dim + 2;
    for (int c : cfg.decoder_channels) {
        L->dec_convs.push_back(conv(cin, c, 1));
        cin = c;
    }
    L->dec_convs.push_back(conv(cin, cfg.channels, 1));
    L->ranges[1].end = off;

    L->ranges[2].begin = off;
    int nin = 2 * cfg.z_dim;
    for (int h : cfg.operator_hidden) {
        L->op.push_back(dense(nin, h));
        nin = h;
    }
    L->op.push_back(dense(nin, 2 * cfg.relational_dim()));
    L->ranges[2].end = off;

    L->ranges[3].begin = off;
    for (int n : cfg.relational_labels) {
        L->rel_off.push_back(off);
        off += 2 * static_cast<std::size_t>(n);
    }
    L->ranges[3].end = off;
    L->ranges[4].begin = off;
    for (int n : cfg.object_labels) {
        L->obj_off.push_back(off);
        off += 2 * static_cast<std::size_t>(n);
    }
    L->ranges[4].end = off;
    L->total = off;
    return L;
}

/// Fan-in scaled uniform weights, zero biases.
template <class T>
void init_params(const Layout& L, const ModelConfig& cfg, std::vector<T>& p) {
    Rng rng(cfg.init_seed);
    p.assign(L.total, T(0));
    auto fill = [&](std::size_t off, std::size_t n, int fan_in) {
        const double a = std::sqrt(3.0 / fan_in);
        for (std::size_t i = 0; i < n; ++i) p[off + i] = static_cast<T>(rng.uniform(-a, a));
    };
    for (const auto& c : L.enc_convs) fill(c.w_off, c.weights(), c.k * c.k * c.cin);
    fill(L.enc_fc.w_off, L.enc_fc.weights(), L.enc_fc.nin);
    fill(L.enc_head.w_off, L.enc_head.weights(), L.enc_head.nin);
    for (const auto& c : L.dec_convs) fill(c.w_off, c.weights(), c.k * c.k * c.cin);
    for (const auto& d : L.op) fill(d.w_off, d.weights(), d.nin);
    for (std::size_t g = 0; g < L.rel_off.size(); ++g) fill(L.rel_off[g], cfg.relational_labels[g], 1);
    for (std::size_t g = 0; g < L.obj_off.size(); ++g) fill(L.obj_off[g], cfg.object_labels[g], 1);
}

template <class T>
struct EncCache {
    std::vector<T> input;
    std::vector<std::vector<T>> cols;
    std::vector<std::vector<T>> act;
    std::vector<T> hidden;
    std::vector<T> head;
    std::vector<T> dbuf;
    std::vector<T> dbuf2;
    std::vector<T> dcols;
};

template <class T>
void encoder_forward(const Layout& L, const ModelConfig& cfg, const T* p, const Image& img, EncCache<T>& c) {
    if (img.height != cfg.resolution || img.width != cfg.resolution || img.channels != cfg.channels)
        throw ShapeMismatch("encoder expects " + std::to_string(cfg.resolution) + "x" + std::to_string(cfg.resolution) +
                            "x" + std::to_string(cfg.channels) + " input, got " + std::to_string(img.height) + "x" +
                            std::to_string(img.width) + "x" + std::to_string(img.channels));
    c.input.assign(img.data.begin(), img.data.end());
    const std::size_t n = L.enc_convs.size();
    c.cols.resize(n);
    c.act.resize(n);
    int size = cfg.resolution;
    for (std::size_t i = 0; i < n; ++i) {
        const T* in = i == 0 ? c.input.data() : c.act[i - 1].data();
        const int out = L.enc_sizes[i];
        nn::conv_forward(p, L.enc_convs[i], in, size, size, nn::Window::full(size, size), nn::Window::full(out, out),
                         c.cols[i], c.act[i]);
        nn::relu(c.act[i]);
        size = out;
    }
    c.hidden.resize(L.enc_fc.nout);
    nn::dense_forward(p, L.enc_fc, c.act.back().data(), c.hidden.data());
    nn::relu(c.hidden);
    c.head.resize(L.enc_head.nout);
    nn::dense_forward(p, L.enc_head, c.hidden.data(), c.head.data());
}

template <class T>
void encoder_backward(const Layout& L, const ModelConfig& cfg, const T* p, T* g, EncCache<T>& c, const T* dhead) {
    c.dbuf.assign(L.enc_fc.nout, T(0));
    nn::dense_backward(p, g, L.enc_head, c.hidden.data(), dhead, c.dbuf.data());
    nn::relu_backward(c.hidden, c.dbuf.data());
    c.dbuf2.assign(L.enc_fc.nin, T(0));
    nn::dense_backward(p, g, L.enc_fc, c.act.back().data(), c.dbuf.data(), c.dbuf2.data());
    nn::relu_backward(c.act.back(), c.dbuf2.data());
    // dbuf2 holds the gradient of the current conv output.
    for (std::size_t i = L.enc_convs.size(); i-- > 0;) {
        const int in_size = i == 0 ? cfg.resolution : L.enc_sizes[i - 1];
        const int out = L.enc_sizes[i];
        T* din = nullptr;
        if (i > 0) {
            c.dbuf.assign(c.act[i - 1].size(), T(0));
            din = c.dbuf.data();
        }
        nn::conv_backward(p, g, L.enc_convs[i], c.cols[i], c.dbuf2.data(), in_size, in_size,
                          nn::Window::full(in_size, in_size), nn::Window::full(out, out), din, c.dcols);
        if (i > 0) {
            nn::relu_backward(c.act[i - 1], c.dbuf.data());
            std::swap(c.dbuf, c.dbuf2);
        }
    }
}

template <class T>
struct DecCache {
    std::vector<nn::Window> win;
    std::vector<T> input;
    std::vector<std::vector<T>> cols;
    std::vector<std::vector<T>> act;
    std::vector<T> dbuf;
    std::vector<T> dbuf2;
    std::vector<T> dcols;
};

/// Runs the decoder on the crop `target` only. Each 3x3 layer widens the
/// needed support by one pixel, so the input window is the crop dilated by
/// the number of layers and the result equals the full-frame decode there.
template <class T>
void decoder_forward(const Layout& L, const ModelConfig& cfg, const T* p, const T* z, const nn::Window& target,
                     DecCache<T>& c) {
    const int R = cfg.resolution;
    const std::size_t n = L.dec_convs.size();
    c.win.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) c.win[i] = target.dilate(static_cast<int>(n - i), R, R);
    const int cin = cfg.z_dim + 2;
    const auto& w0 = c.win[0];
    c.input.resize(static_cast<std::size_t>(w0.area()) * cin);
    const double step = R > 1 ? 2.0 / (R - 1) : 0.0;
    for (int y = 0; y < w0.h; ++y)
        for (int x = 0; x < w0.w; ++x) {
            T* px = c.input.data() + static_cast<std::size_t>(y * w0.w + x) * cin;
            std::copy(z, z + cfg.z_dim, px);
            px[cfg.z_dim] = static_cast<T>(-1.0 + step * (w0.x0 + x));
            px[cfg.z_dim + 1] = static_cast<T>(-1.0 + step * (w0.y0 + y));
        }
    c.cols.resize(n);
    c.act.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const T* in = i == 0 ? c.input.data() : c.act[i - 1].data();
        nn::conv_forward(p, L.dec_convs[i], in, R, R, c.win[i], c.win[i + 1], c.cols[i], c.act[i]);
        if (i + 1 < n) nn::relu(c.act[i]);
    }
}

/// Backpropagates `dout` (gradient of the crop output) and adds dL/dz to dz.
template <class T>
void decoder_backward(const Layout& L, const ModelConfig& cfg, const T* p, T* g, DecCache<T>& c, const T* dout,
                      T* dz) {
    const int R = cfg.resolution;
    const std::size_t n = L.dec_convs.size();
    c.dbuf2.assign(dout, dout + c.act.back().size());
    for (std::size_t i = n; i-- > 0;) {
        const std::size_t in_size = i == 0 ? c.input.size() : c.act[i - 1].size();
        c.dbuf.assign(in_size, T(0));
        nn::conv_backward(p, g, L.dec_convs[i], c.cols[i], c.dbuf2.data(), R, R, c.win[i], c.win[i + 1],
                          c.dbuf.data(), c.dcols);
        if (i > 0) nn::relu_backward(c.act[i - 1], c.dbuf.data());
        std::swap(c.dbuf, c.dbuf2);
    }
    const int cin = cfg.z_dim + 2;
    for (int px = 0; px < c.win[0].area(); ++px)
        for (int k = 0; k < cfg.z_dim; ++k) dz[k] += c.dbuf2[static_cast<std::size_t>(px) * cin + k];
}

nn::Window mask_bbox(const Mask& m) {
    int y0 = m.height, x0 = m.width, y1 = -1, x1 = -1;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.at(y, x)) {
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
            }
    if (y1 < 0) return {0, 0, 0, 0};
    return {y0, x0, y1 - y0 + 1, x1 - x0 + 1};
}

/// Squared error over the mask inside the crop; fills dout with scale * dE/dout.
template <class T>
double crop_error(const DecCache<T>& c, const Image& target, const Mask& mask, int channels, T scale,
                  std::vector<T>* dout) {
    const auto& w = c.win.back();
    const auto& out = c.act.back();
    if (dout) dout->assign(out.size(), T(0));
    double e = 0;
    for (int y = 0; y < w.h; ++y)
        for (int x = 0; x < w.w; ++x) {
            if (!mask.at(w.y0 + y, w.x0 + x)) continue;
            const std::size_t base = static_cast<std::size_t>(y * w.w + x) * channels;
            for (int ch = 0; ch < channels; ++ch) {
                const double d = static_cast<double>(out[base + ch]) - target.at(w.y0 + y, w.x0 + x, ch);
                e += d * d;
                if (dout) (*dout)[base + ch] = static_cast<T>(2.0 * d) * scale;
            }
        }
    return e;
}

template <class T>
struct OpCache {
    std::vector<T> input;
    std::vector<std::vector<T>> act;
    std::vector<T> dbuf;
    std::vector<T> dbuf2;
};

template <class T>
void operator_forward(const Layout& L, const T* p, const T* z_tar, const T* z_ref, int z_dim, OpCache<T>& c) {
    c.input.assign(z_tar, z_tar + z_dim);
    c.input.insert(c.input.end(), z_ref, z_ref + z_dim);
    c.act.resize(L.op.size());
    for (std::size_t i = 0; i < L.op.size(); ++i) {
        c.act[i].resize(L.op[i].nout);
        nn::dense_forward(p, L.op[i], i == 0 ? c.input.data() : c.act[i - 1].data(), c.act[i].data());
        if (i + 1 < L.op.size()) nn::relu(c.act[i]);
    }
}

/// Adds the gradient with respect to the concatenated input to `dinput`.
template <class T>
void operator_backward(const Layout& L, const T* p, T* g, OpCache<T>& c, const T* dhead, T* dinput) {
    c.dbuf2.assign(dhead, dhead + L.op.back().nout);
    for (std::size_t i = L.op.size(); i-- > 0;) {
        c.dbuf.assign(L.op[i].nin, T(0));
        nn::dense_backward(p, g, L.op[i], i == 0 ? c.input.data() : c.act[i - 1].data(), c.dbuf2.data(),
                           c.dbuf.data());
        if (i > 0) nn::relu_backward(c.act[i - 1], c.dbuf.data());
        std::swap(c.dbuf, c.dbuf2);
    }
    for (std::size_t k = 0; k < c.dbuf2.size(); ++k) dinput[k] += c.dbuf2[k];
}

/// Scalar classifier logits = s * w + b.
template <class T>
std::vector<double> scalar_probs(const T* p, std::size_t off, int n, double s) {
    std::vector<double> logits(n), probs(n);
    for (int k = 0; k < n; ++k) logits[k] = s * static_cast<double>(p[off + k]) + static_cast<double>(p[off + n + k]);
    nn::softmax(logits.data(), n, probs.data());
    return probs;
}

/// Cross-entropy of one scalar classifier; accumulates scale-weighted
/// gradients and returns dCE/ds * scale.
template <class T>
double scalar_ce(const T* p, T* g, std::size_t off, int n, T s, int label, T scale, double& ce) {
    std::vector<T> logits(n), probs(n);
    for (int k = 0; k < n; ++k) logits[k] = s * p[off + k] + p[off + n + k];
    nn::softmax(logits.data(), n, probs.data());
    ce = -std::log(std::max(static_cast<double>(probs[label]), 1e-300));
    if (!g) return 0;
    double ds = 0;
    for (int k = 0; k < n; ++k) {
        const T d = (probs[k] - (k == label ? T(1) : T(0))) * scale;
        g[off + k] += d * s;
        g[off + n + k] += d;
        ds += static_cast<double>(d * p[off + k]);
    }
    return ds;
}

template <class T>
std::vector<T> to_t(std::span<const double> v) {
    return std::vector<T>(v.begin(), v.end());
}

template <class T>
LatentDistribution split_head(const std::vector<T>& head, int d) {
    LatentDistribution dist;
    dist.mean.assign(head.begin(), head.begin() + d);
    dist.logvar.assign(head.begin() + d, head.begin() + 2 * d);
    return dist;
}

}  // namespace

template <class T>
BasicModel<T>::BasicModel(ModelConfig config) : config_(std::move(config)) {
    config_.validate();
    layout_ = make_layout(config_);
    init_params(*layout_, config_, params_);
}

template <class T>
ParamRange BasicModel<T>::range(Part part) const {
    return layout_->ranges[static_cast<int>(part)];
}

template <class T>
LatentDistribution BasicModel<T>::encode(const Image& masked) const {
    EncCache<T> c;
    encoder_forward(*layout_, config_, params_.data(), masked, c);
    return split_head(c.head, config_.z_dim);
}

template <class T>
Image BasicModel<T>::decode(std::span<const double> z) const {
    if (z.size() != static_cast<std::size_t>(config_.z_dim))
        throw ShapeMismatch("decoder expects a " + std::to_string(config_.z_dim) + "-dim latent");
    const int R = config_.resolution;
    DecCache<T> c;
    const auto zt = to_t<T>(z);
    decoder_forward(*layout_, config_, params_.data(), zt.data(), nn::Window::full(R, R), c);
    Image out(R, R, config_.channels);
    std::copy(c.act.back().begin(), c.act.back().end(), out.data.begin());
    return out;
}

template <class T>
LatentDistribution BasicModel<T>::relate(std::span<const double> z_tar, std::span<const double> z_ref) const {
    const auto d = static_cast<std::size_t>(config_.z_dim);
    if (z_tar.size() != d || z_ref.size() != d)
        throw ShapeMismatch("operator expects two " + std::to_string(d) + "-dim latents");
    OpCache<T> c;
    const auto a = to_t<T>(z_tar), b = to_t<T>(z_ref);
    operator_forward(*layout_, params_.data(), a.data(), b.data(), config_.z_dim, c);
    return split_head(c.act.back(), config_.relational_dim());
}

template <class T>
std::vector<double> BasicModel<T>::classify_relation(std::span<const double> c, int group) const {
    if (c.size() != static_cast<std::size_t>(config_.relational_dim()))
        throw ShapeMismatch("relational embedding has the wrong dimension");
    if (group < 0 || group >= config_.relational_dim()) throw ShapeMismatch("relational group index out of range");
    return scalar_probs(params_.data(), layout_->rel_off[group], config_.relational_labels[group], c[group]);
}

template <class T>
std::vector<double> BasicModel<T>::classify_object(std::span<const double> z, int group) const {
    if (z.size() != static_cast<std::size_t>(config_.z_dim)) throw ShapeMismatch("object embedding has the wrong dimension");
    if (group < 0 || group >= static_cast<int>(config_.object_labels.size()))
        throw ShapeMismatch("object group index out of range");
    return scalar_probs(params_.data(), layout_->obj_off[group], config_.object_labels[group], z[group]);
}

template <class T>
double BasicModel<T>::recon_error(std::span<const double> z, const Image& target, const Mask& mask,
                                  std::vector<double>* grad_z) const {
    if (z.size() != static_cast<std::size_t>(config_.z_dim))
        throw ShapeMismatch("decoder expects a " + std::to_string(config_.z_dim) + "-dim latent");
    const int R = config_.resolution;
    if (target.height != R || target.width != R || target.channels != config_.channels || mask.height != R ||
        mask.width != R)
        throw ShapeMismatch("reconstruction target does not match the model resolution");
    const auto box = mask_bbox(mask);
    if (grad_z) grad_z->assign(z.size(), 0.0);
    if (box.area() == 0) return 0.0;
    DecCache<T> c;
    const auto zt = to_t<T>(z);
    decoder_forward(*layout_, config_, params_.data(), zt.data(), box, c);
    std::vector<T> dout;
    const double e = crop_error(c, target, mask, config_.channels, T(1), grad_z ? &dout : nullptr);
    if (grad_z) {
        std::vector<T> scratch(params_.size(), T(0));
        std::vector<T> dz(z.size(), T(0));
        decoder_backward(*layout_, config_, params_.data(), scratch.data(), c, dout.data(), dz.data());
        std::copy(dz.begin(), dz.end(), grad_z->begin());
    }
    return e;
}

template <class T>
LossBreakdown BasicModel<T>::loss(std::span<const dataio::ObservationPair* const> batch, std::uint64_t noise_seed,
                                  std::vector<T>* grad) const {
    if (batch.empty()) throw DataError("loss needs a non-empty batch");
    const auto& cfg = config_;
    const Layout& L = *layout_;
    const T* p = params_.data();
    T* g = nullptr;
    if (grad) {
        if (grad->size() != params_.size()) grad->assign(params_.size(), T(0));
        g = grad->data();
    }
    const int zd = cfg.z_dim;
    const int Ld = cfg.relational_dim();
    const std::size_t n_obj = cfg.object_labels.size();
    const double B = static_cast<double>(batch.size());
    const auto& co = cfg.coefficients;
    const bool use_r = cfg.ablation.use_R;
    const bool use_q = cfg.ablation.use_Q_obj;

    std::vector<int> rel_count(Ld, 0), obj_count(n_obj, 0);
    for (const auto* pr : batch) {
        if (pr->y.size() != static_cast<std::size_t>(Ld)) throw ShapeMismatch("relational labels do not match the model");
        for (int k = 0; k < Ld; ++k) rel_count[k] += pr->y.known(k);
        for (const auto* lv : {&pr->o_tar(), &pr->o_ref()}) {
            if (lv->size() != n_obj) throw ShapeMismatch("object labels do not match the model");
            for (std::size_t k = 0; k < n_obj; ++k) obj_count[k] += lv->known(k);
        }
    }

    LossBreakdown out;
    out.alpha = co.alpha;
    out.beta = co.beta;
    out.gamma = co.gamma;

    EncCache<T> enc[2];
    DecCache<T> dec;
    OpCache<T> op;
    std::vector<T> z[2], eps[2], c(Ld), eps_c(Ld), dz[2], dc(Ld), dhead, dout;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& pr = *batch[i];
        const dataio::ObjectView* views[2] = {pr.target.get(), pr.referent.get()};
        Rng rng(Rng::mix(noise_seed, i));
        for (int b = 0; b < 2; ++b) {
            encoder_forward(L, cfg, p, views[b]->masked, enc[b]);
            z[b].resize(zd);
            eps[b].resize(zd);
            const auto& h = enc[b].head;
            for (int k = 0; k < zd; ++k) {
                eps[b][k] = static_cast<T>(rng.normal());
                z[b][k] = h[k] + std::exp(h[zd + k] / T(2)) * eps[b][k];
            }
            double kl = 0;
            for (int k = 0; k < zd; ++k)
                kl += 0.5 * (std::exp(static_cast<double>(h[zd + k])) + static_cast<double>(h[k]) * h[k] - 1.0 -
                             static_cast<double>(h[zd + k]));
            out.kl_z += kl / B;
            dz[b].assign(zd, T(0));
        }
        operator_forward(L, p, z[0].data(), z[1].data(), zd, op);
        const auto& hc = op.act.back();
        for (int k = 0; k < Ld; ++k) {
            eps_c[k] = static_cast<T>(rng.normal());
            c[k] = hc[k] + std::exp(hc[Ld + k] / T(2)) * eps_c[k];
            out.kl_c += 0.5 *
                        (std::exp(static_cast<double>(hc[Ld + k])) + static_cast<double>(hc[k]) * hc[k] - 1.0 -
                         static_cast<double>(hc[Ld + k])) /
                        B;
        }

        // Relational classification on the sampled c, labelled groups only.
        std::fill(dc.begin(), dc.end(), T(0));
        for (int k = 0; k < Ld; ++k) {
            if (!pr.y.known(k)) continue;
            const T scale = static_cast<T>(co.gamma / rel_count[k]);
            double ce = 0;
            dc[k] += static_cast<T>(
                scalar_ce(p, g, L.rel_off[k], cfg.relational_labels[k], c[k], pr.y.label(k), scale, ce));
            out.q_rel += ce / rel_count[k];
        }

        if (use_q) {
            for (int b = 0; b < 2; ++b) {
                const auto& lv = b == 0 ? pr.o_tar() : pr.o_ref();
                for (std::size_t k = 0; k < n_obj; ++k) {
                    if (!lv.known(k)) continue;
                    const T scale = static_cast<T>(co.gamma / obj_count[k]);
                    double ce = 0;
                    dz[b][k] += static_cast<T>(
                        scalar_ce(p, g, L.obj_off[k], cfg.object_labels[k], z[b][k], lv.label(k), scale, ce));
                    out.q_obj += ce / obj_count[k];
                }
            }
        }

        if (use_r) {
            for (int b = 0; b < 2; ++b) {
                const auto box = mask_bbox(views[b]->mask);
                if (box.area() == 0) continue;
                decoder_forward(L, cfg, p, z[b].data(), box, dec);
                const double e = crop_error(dec, views[b]->masked, views[b]->mask, cfg.channels,
                                            static_cast<T>(co.alpha / B), g ? &dout : nullptr);
                out.recon += e / B;
                if (g) decoder_backward(L, cfg, p, g, dec, dout.data(), dz[b].data());
            }
        }

        if (!g) continue;
        const T kb = static_cast<T>(co.beta / B);
        dhead.assign(2 * Ld, T(0));
        for (int k = 0; k < Ld; ++k) {
            const T sd = std::exp(hc[Ld + k] / T(2));
            dhead[k] = dc[k] + kb * hc[k];
            dhead[Ld + k] = dc[k] * sd * eps_c[k] / T(2) + kb * (std::exp(hc[Ld + k]) - T(1)) / T(2);
        }
        std::vector<T> dzz(2 * zd, T(0));
        operator_backward(L, p, g, op, dhead.data(), dzz.data());
        for (int b = 0; b < 2; ++b) {
            const auto& h = enc[b].head;
            dhead.assign(2 * zd, T(0));
            for (int k = 0; k < zd; ++k) {
                const T dzk = dz[b][k] + dzz[b * zd + k];
                const T sd = std::exp(h[zd + k] / T(2));
                dhead[k] = dzk + kb * h[k];
                dhead[zd + k] = dzk * sd * eps[b][k] / T(2) + kb * (std::exp(h[zd + k]) - T(1)) / T(2);
            }
            encoder_backward(L, cfg, p, g, enc[b], dhead.data());
        }
    }
    if (!use_r) out.recon = 0;
    if (!use_q) out.q_obj = 0;
    out.total = co.beta * (out.kl_z + out.kl_c) + co.alpha * out.recon + co.gamma * (out.q_obj + out.q_rel);
    return out;
}

template <class T>
std::vector<double> embed_pair(const BasicModel<T>& model, const Image& tar, const Image& ref) {
    const auto a = model.encode(tar);
    const auto b = model.encode(ref);
    return model.relate(a.mean, b.mean).mean;
}

void copy_encoder_decoder(const Model& from, Model& to) {
    const auto& a = from.config();
    const auto& b = to.config();
    if (a.resolution != b.resolution || a.channels != b.channels || a.encoder_channels != b.encoder_channels ||
        a.encoder_hidden != b.encoder_hidden || a.z_dim != b.z_dim || a.decoder_channels != b.decoder_channels)
        throw ShapeMismatch("encoder/decoder stacks differ between the two models");
    for (Part part : {Part::encoder, Part::decoder}) {
        const auto src = from.range(part);
        const auto dst = to.range(part);
        std::copy(from.params().begin() + src.begin, from.params().begin() + src.end, to.params().begin() + dst.begin);
    }
}

template class BasicModel<float>;
template class BasicModel<double>;
template std::vector<double> embed_pair(const BasicModel<float>&, const Image&, const Image&);
template std::vector<double> embed_pair(const BasicModel<double>&, const Image&, const Image&);

}  // namespace relground::relvae
