#include "moodkit/denoiser/denoiser.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "moodkit/error.hpp"
#include "moodkit/parallel.hpp"

namespace moodkit::denoiser {

using diffusion::ScheduleTable;
using diffusion::SimplexNoiseConfig;

// ---------------------------------------------------------------------------------------
// Architecture and layout

void Architecture::validate() const {
    if (widths.size() < 2) throw InvalidArgument("architecture needs at least one layer");
    if (widths.front() != 1 || widths.back() != 1) throw InvalidArgument("architecture must map 1 channel to 1 channel");
    for (int w : widths)
        if (w < 1) throw InvalidArgument("layer widths must be >= 1");
    if (static_cast<int>(dilations.size()) != num_layers()) throw InvalidArgument("one dilation per layer required");
    for (int d : dilations)
        if (d < 1) throw InvalidArgument("dilations must be >= 1");
    if (kernel < 1 || kernel % 2 == 0) throw InvalidArgument("kernel size must be odd");
    if (time_dim < 2 || time_dim % 2 != 0) throw InvalidArgument("time embedding dim must be even and >= 2");
    for (int l : time_layers)
        if (l < 0 || l >= num_layers()) throw InvalidArgument("time layer index out of range");
}

std::string Architecture::to_json() const {
    nlohmann::json j;
    j["widths"] = widths;
    j["dilations"] = dilations;
    j["kernel"] = kernel;
    j["time_dim"] = time_dim;
    j["time_layers"] = time_layers;
    j["activation"] = activation == Activation::silu ? "silu" : "identity";
    return j.dump();
}

Architecture Architecture::from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        Architecture a;
        a.widths = j.at("widths").get<std::vector<int>>();
        a.dilations = j.at("dilations").get<std::vector<int>>();
        a.kernel = j.at("kernel").get<int>();
        a.time_dim = j.at("time_dim").get<int>();
        a.time_layers = j.at("time_layers").get<std::vector<int>>();
        const auto act = j.at("activation").get<std::string>();
        if (act == "silu") a.activation = Activation::silu;
        else if (act == "identity") a.activation = Activation::identity;
        else throw FormatError(FormatErrc::bad_header, "unknown activation '" + act + "'");
        a.validate();
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(FormatErrc::bad_header, std::string("bad architecture descriptor: ") + e.what());
    }
}

std::vector<ParamBlock> parameter_layout(const Architecture& arch) {
    arch.validate();
    std::vector<ParamBlock> out;
    std::size_t offset = 0;
    auto add = [&](std::string name, std::size_t size) {
        out.push_back({std::move(name), offset, size});
        offset += size;
    };
    const auto k2 = static_cast<std::size_t>(arch.kernel * arch.kernel);
    for (int l = 0; l < arch.num_layers(); ++l) {
        const auto cin = static_cast<std::size_t>(arch.widths[static_cast<std::size_t>(l)]);
        const auto cout = static_cast<std::size_t>(arch.widths[static_cast<std::size_t>(l) + 1]);
        const std::string id = std::to_string(l);
        add("conv" + id + ".weight", cout * cin * k2);
        add("conv" + id + ".bias", cout);
        if (std::find(arch.time_layers.begin(), arch.time_layers.end(), l) != arch.time_layers.end()) {
            add("time" + id + ".weight", cout * static_cast<std::size_t>(arch.time_dim));
            add("time" + id + ".bias", cout);
        }
    }
    return out;
}

std::size_t parameter_count(const Architecture& arch) {
    const auto layout = parameter_layout(arch);
    return layout.back().offset + layout.back().size;
}

std::vector<double> time_embedding(int t, int dim) {
    const int half = dim / 2;
    std::vector<double> e(static_cast<std::size_t>(dim));
    for (int i = 0; i < half; ++i) {
        const double f = std::exp(-std::log(10000.0) * i / half);
        e[static_cast<std::size_t>(i)] = std::sin(t * f);
        e[static_cast<std::size_t>(i + half)] = std::cos(t * f);
    }
    return e;
}

// ---------------------------------------------------------------------------------------
// Network evaluation, templated on the scalar so the gradient check can run in double.

namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const Mat<T>>;

struct LayerView {
    int cin, cout, dilation;
    std::size_t w_off, b_off;
    bool timed;
    std::size_t tw_off, tb_off;
};

std::vector<LayerView> layer_views(const Architecture& arch, const std::vector<ParamBlock>& layout) {
    std::vector<LayerView> out;
    std::size_t k = 0;
    for (int l = 0; l < arch.num_layers(); ++l) {
        LayerView v{};
        v.cin = arch.widths[static_cast<std::size_t>(l)];
        v.cout = arch.widths[static_cast<std::size_t>(l) + 1];
        v.dilation = arch.dilations[static_cast<std::size_t>(l)];
        v.w_off = layout[k++].offset;
        v.b_off = layout[k++].offset;
        v.timed = k < layout.size() && layout[k].name == "time" + std::to_string(l) + ".weight";
        if (v.timed) {
            v.tw_off = layout[k++].offset;
            v.tb_off = layout[k++].offset;
        }
        out.push_back(v);
    }
    return out;
}

/// (cin * k * k) x (h * w) patch matrix with zero padding.
template <typename T>
void im2col(const Mat<T>& in, int h, int w, int k, int dil, Mat<T>& cols) {
    const int cin = static_cast<int>(in.rows());
    const int r = k / 2;
    cols.setZero(static_cast<Eigen::Index>(cin) * k * k, static_cast<Eigen::Index>(h) * w);
    for (int c = 0; c < cin; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const Eigen::Index row = (static_cast<Eigen::Index>(c) * k + ky) * k + kx;
                const int oy = (ky - r) * dil;
                const int ox = (kx - r) * dil;
                const int x_lo = std::max(0, -ox);
                const int x_hi = std::min(w, w - ox);
                if (x_lo >= x_hi) continue;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + oy;
                    if (sy < 0 || sy >= h) continue;
                    const T* src = in.data() + static_cast<Eigen::Index>(c) * h * w + static_cast<Eigen::Index>(sy) * w + ox;
                    T* dst = cols.data() + row * h * w + static_cast<Eigen::Index>(y) * w;
                    std::copy(src + x_lo, src + x_hi, dst + x_lo);
                }
            }
}

/// Adjoint of im2col: scatters patch gradients back onto the input grid.
template <typename T>
void col2im(const Mat<T>& cols, int cin, int h, int w, int k, int dil, Mat<T>& out) {
    const int r = k / 2;
    out.setZero(cin, static_cast<Eigen::Index>(h) * w);
    for (int c = 0; c < cin; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const Eigen::Index row = (static_cast<Eigen::Index>(c) * k + ky) * k + kx;
                const int oy = (ky - r) * dil;
                const int ox = (kx - r) * dil;
                const int x_lo = std::max(0, -ox);
                const int x_hi = std::min(w, w - ox);
                if (x_lo >= x_hi) continue;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + oy;
                    if (sy < 0 || sy >= h) continue;
                    const T* src = cols.data() + row * h * w + static_cast<Eigen::Index>(y) * w;
                    T* dst = out.data() + static_cast<Eigen::Index>(c) * h * w + static_cast<Eigen::Index>(sy) * w + ox;
                    for (int x = x_lo; x < x_hi; ++x) dst[x] += src[x];
                }
            }
}

template <typename T>
T activate(T x, Activation a) {
    if (a == Activation::identity) return x;
    return x / (T(1) + std::exp(-x));
}

template <typename T>
T activate_grad(T x, Activation a) {
    if (a == Activation::identity) return T(1);
    const T s = T(1) / (T(1) + std::exp(-x));
    return s * (T(1) + x * (T(1) - s));
}

template <typename T>
struct Tape {
    std::vector<Mat<T>> cols;
    std::vector<Mat<T>> pre;
};

template <typename T>
class Net {
public:
    Net(const Architecture& arch, const std::vector<ParamBlock>& layout, const T* params)
        : arch_(arch), views_(layer_views(arch, layout)), p_(params) {}

    /// Forward pass for one slice; records what backward needs when tape is non-null.
    Mat<T> forward(const float* x, int h, int w, int t, Tape<T>* tape) const {
        Mat<T> act(1, static_cast<Eigen::Index>(h) * w);
        for (Eigen::Index i = 0; i < act.size(); ++i) act.data()[i] = static_cast<T>(x[i]);
        const auto emb = time_embedding(t, arch_.time_dim);
        const int k = arch_.kernel;
        const int n_layers = static_cast<int>(views_.size());
        if (tape) {
            tape->cols.resize(views_.size());
            tape->pre.resize(views_.size());
        }
        Mat<T> cols_local;
        for (int l = 0; l < n_layers; ++l) {
            const auto& v = views_[static_cast<std::size_t>(l)];
            Mat<T>& cols = tape ? tape->cols[static_cast<std::size_t>(l)] : cols_local;
            im2col(act, h, w, k, v.dilation, cols);
            ConstMap<T> W(p_ + v.w_off, v.cout, static_cast<Eigen::Index>(v.cin) * k * k);
            Mat<T> pre = W * cols;
            for (int c = 0; c < v.cout; ++c) {
                T b = p_[v.b_off + static_cast<std::size_t>(c)];
                if (v.timed) {
                    T tb = p_[v.tb_off + static_cast<std::size_t>(c)];
                    const T* tw = p_ + v.tw_off + static_cast<std::size_t>(c) * static_cast<std::size_t>(arch_.time_dim);
                    for (int j = 0; j < arch_.time_dim; ++j) tb += tw[j] * static_cast<T>(emb[static_cast<std::size_t>(j)]);
                    b += tb;
                }
                pre.row(c).array() += b;
            }
            if (l + 1 < n_layers) {
                act.resize(pre.rows(), pre.cols());
                for (Eigen::Index i = 0; i < pre.size(); ++i) act.data()[i] = activate(pre.data()[i], arch_.activation);
            } else {
                act = pre;
            }
            if (tape) tape->pre[static_cast<std::size_t>(l)] = std::move(pre);
        }
        return act;
    }

    /// Accumulates dLoss/dparams into grad given dLoss/dout for one slice.
    void backward(const Tape<T>& tape, Mat<T> g, int h, int w, int t, T* grad) const {
        const auto emb = time_embedding(t, arch_.time_dim);
        const int k = arch_.kernel;
        const int n_layers = static_cast<int>(views_.size());
        for (int l = n_layers - 1; l >= 0; --l) {
            const auto& v = views_[static_cast<std::size_t>(l)];
            const Mat<T>& pre = tape.pre[static_cast<std::size_t>(l)];
            if (l + 1 < n_layers)
                for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] *= activate_grad(pre.data()[i], arch_.activation);
            const Mat<T>& cols = tape.cols[static_cast<std::size_t>(l)];
            const Eigen::Index kk = static_cast<Eigen::Index>(v.cin) * k * k;
            Eigen::Map<Mat<T>> dW(grad + v.w_off, v.cout, kk);
            dW.noalias() += g * cols.transpose();
            for (int c = 0; c < v.cout; ++c) {
                const T s = g.row(c).sum();
                grad[v.b_off + static_cast<std::size_t>(c)] += s;
                if (v.timed) {
                    grad[v.tb_off + static_cast<std::size_t>(c)] += s;
                    T* tw = grad + v.tw_off + static_cast<std::size_t>(c) * static_cast<std::size_t>(arch_.time_dim);
                    for (int j = 0; j < arch_.time_dim; ++j) tw[j] += s * static_cast<T>(emb[static_cast<std::size_t>(j)]);
                }
            }
            if (l == 0) break;
            ConstMap<T> W(p_ + v.w_off, v.cout, kk);
            const Mat<T> dcols = W.transpose() * g;
            col2im(dcols, v.cin, h, w, k, v.dilation, g);
        }
    }

private:
    const Architecture& arch_;
    std::vector<LayerView> views_;
    const T* p_;
};

void check_batch(const SliceBatch& x, std::span<const int> t) {
    if (x.count < 1) throw InvalidArgument("empty slice batch");
    if (static_cast<int>(t.size()) != x.count) throw InvalidArgument("one timestep per slice required");
    if (x.data.size() != static_cast<std::size_t>(x.count) * x.slice_size()) throw InvalidArgument("slice batch data size mismatch");
}

/// Loss and optional gradient for any scalar type; per-item gradients are reduced in
/// index order so the result does not depend on the worker count.
template <typename T>
double loss_impl(const Architecture& arch, const std::vector<ParamBlock>& layout, const T* params,
                 const SliceBatch& x, std::span<const int> t, const SliceBatch& target, std::vector<double>* grad,
                 int threads) {
    check_batch(x, t);
    if (!x.same_shape(target)) throw InvalidArgument("target shape differs from input");
    const Net<T> net(arch, layout, params);
    const std::size_t n_params = layout.back().offset + layout.back().size;
    const double denom = static_cast<double>(x.count) * static_cast<double>(x.slice_size());
    std::vector<double> item_loss(static_cast<std::size_t>(x.count), 0.0);
    std::vector<std::vector<T>> item_grad(grad ? static_cast<std::size_t>(x.count) : 0);
    parallel_for(x.count, threads, [&](int b) {
        Tape<T> tape;
        const Mat<T> out = net.forward(x.slice(b).data(), x.height, x.width, t[static_cast<std::size_t>(b)], grad ? &tape : nullptr);
        const auto tgt = target.slice(b);
        Mat<T> g(1, out.cols());
        double sq = 0.0;
        for (Eigen::Index i = 0; i < out.size(); ++i) {
            const T d = out.data()[i] - static_cast<T>(tgt[static_cast<std::size_t>(i)]);
            sq += static_cast<double>(d) * static_cast<double>(d);
            g.data()[i] = static_cast<T>(2.0 / denom) * d;
        }
        item_loss[static_cast<std::size_t>(b)] = sq;
        if (grad) {
            auto& ig = item_grad[static_cast<std::size_t>(b)];
            ig.assign(n_params, T(0));
            net.backward(tape, std::move(g), x.height, x.width, t[static_cast<std::size_t>(b)], ig.data());
        }
    });
    double total = 0.0;
    for (double l : item_loss) total += l;
    if (grad) {
        grad->assign(n_params, 0.0);
        for (const auto& ig : item_grad)
            for (std::size_t i = 0; i < n_params; ++i) (*grad)[i] += static_cast<double>(ig[i]);
    }
    return total / denom;
}

} // namespace

// ---------------------------------------------------------------------------------------
// Model

Model::Model(Architecture arch) : arch_(std::move(arch)), layout_(parameter_layout(arch_)) {
    params_.assign(parameter_count(arch_), 0.0f);
}

const ParamBlock& Model::block(const std::string& name) const {
    for (const auto& b : layout_)
        if (b.name == name) return b;
    throw InvalidArgument("no parameter block named '" + name + "'");
}

void Model::init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int k2 = arch_.kernel * arch_.kernel;
    for (const auto& b : layout_) {
        double fan_in = 0.0;
        if (b.name.starts_with("conv") && b.name.ends_with(".weight")) {
            const int l = std::stoi(b.name.substr(4));
            fan_in = static_cast<double>(arch_.widths[static_cast<std::size_t>(l)]) * k2;
        } else if (b.name.starts_with("time") && b.name.ends_with(".weight")) {
            fan_in = arch_.time_dim;
        }
        for (std::size_t i = 0; i < b.size; ++i) {
            float value = 0.0f;
            if (fan_in > 0.0) {
                const double s = 1.0 / std::sqrt(fan_in);
                const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
                value = static_cast<float>(-s + 2.0 * s * u);
            }
            params_[b.offset + i] = value;
        }
    }
}

SliceBatch Model::predict_noise(const SliceBatch& x, std::span<const int> t) const { return predict_noise(x, t, 1); }

SliceBatch Model::predict_noise(const SliceBatch& x, std::span<const int> t, int threads) const {
    check_batch(x, t);
    const Net<float> net(arch_, layout_, params_.data());
    SliceBatch out(x.count, x.height, x.width);
    parallel_for(x.count, threads, [&](int b) {
        const Mat<float> y = net.forward(x.slice(b).data(), x.height, x.width, t[static_cast<std::size_t>(b)], nullptr);
        std::copy(y.data(), y.data() + y.size(), out.slice(b).begin());
    });
    return out;
}

double Model::loss_and_gradient(const SliceBatch& x, std::span<const int> t, const SliceBatch& target,
                                std::vector<double>& grad) const {
    return loss_impl<float>(arch_, layout_, params_.data(), x, t, target, &grad, 1);
}

double Model::loss_double(std::span<const double> params, const SliceBatch& x, std::span<const int> t,
                          const SliceBatch& target, std::vector<double>* grad) const {
    if (params.size() != params_.size()) throw InvalidArgument("parameter vector length mismatch");
    return loss_impl<double>(arch_, layout_, params.data(), x, t, target, grad, 1);
}

// ---------------------------------------------------------------------------------------
// Optimisation

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw InvalidArgument("learning rate must be >= 0");
    if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
    if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
    if (threads < 1) throw InvalidArgument("thread count must be >= 1");
    if (max_train_step < 0) throw InvalidArgument("max train step must be >= 0");
}

void adam_update(std::span<float> params, std::span<const double> grad, AdamState& state, double lr,
                 const AdamConfig& cfg) {
    if (grad.size() != params.size()) throw InvalidArgument("gradient length mismatch");
    if (state.m.size() != params.size()) state.m.assign(params.size(), 0.0f);
    if (state.v.size() != params.size()) state.v.assign(params.size(), 0.0f);
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double m = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
        const double v = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        state.m[i] = static_cast<float>(m);
        state.v[i] = static_cast<float>(v);
        if (lr == 0.0) continue; // keeps parameters bit-identical
        const double step = lr * (m / c1) / (std::sqrt(v / c2) + cfg.epsilon);
        params[i] = static_cast<float>(params[i] - step);
    }
}

double train_step(Model& model, AdamState& optimizer, const SliceBatch& x0, const ScheduleTable& table,
                  const SimplexNoiseConfig& noise, const TrainConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    if (x0.count < 1) throw InvalidArgument("empty training batch");
    const int t_max = cfg.max_train_step > 0 ? std::min(cfg.max_train_step, table.num_steps()) : table.num_steps();
    if (t_max < 2) throw InvalidArgument("schedule too short to train");
    std::vector<int> steps(static_cast<std::size_t>(x0.count));
    SliceBatch eps(x0.count, x0.height, x0.width);
    SliceBatch xt(x0.count, x0.height, x0.width);
    for (int b = 0; b < x0.count; ++b) {
        const int t = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(t_max - 1));
        steps[static_cast<std::size_t>(b)] = t;
        const auto field = diffusion::sample_simplex_noise(x0.width, x0.height, noise, rng());
        std::copy(field.begin(), field.end(), eps.slice(b).begin());
        diffusion::forward_noise(x0.slice(b), eps.slice(b), t - 1, table, xt.slice(b)); // 1-based step
    }
    std::vector<double> grad;
    const double loss = loss_impl<float>(model.architecture(), model.layout(), model.params().data(), xt, steps, eps,
                                         &grad, cfg.threads);
    adam_update(model.params(), grad, optimizer, cfg.learning_rate, cfg.adam);
    return loss;
}

void train(Checkpoint& ckpt, const std::vector<std::vector<float>>& slices, int height, int width,
           const TrainConfig& cfg, const std::function<void(const TrainProgress&)>& on_epoch) {
    cfg.validate();
    if (slices.empty()) throw InvalidArgument("no training slices");
    const std::size_t plane = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    for (const auto& s : slices)
        if (s.size() != plane) throw InvalidArgument("training slice size mismatch");
    const auto table = diffusion::build_schedule(ckpt.scheduler);
    std::vector<std::size_t> order(slices.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int e = 0; e < cfg.epochs; ++e) {
        const auto start = std::chrono::steady_clock::now();
        // one stream per epoch keeps resumed training identical to uninterrupted training
        std::mt19937_64 rng(diffusion::stream_key(cfg.seed, 0x7261696eULL, static_cast<std::uint64_t>(ckpt.epoch)));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
        double sum = 0.0;
        int batches = 0;
        for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t n = std::min(order.size() - first, static_cast<std::size_t>(cfg.batch_size));
            SliceBatch x0(static_cast<int>(n), height, width);
            for (std::size_t b = 0; b < n; ++b)
                std::copy(slices[order[first + b]].begin(), slices[order[first + b]].end(), x0.slice(static_cast<int>(b)).begin());
            sum += train_step(ckpt.model, ckpt.optimizer, x0, table, ckpt.noise, cfg, rng);
            ++batches;
        }
        ++ckpt.epoch;
        ckpt.loss_history.push_back(sum / batches);
        if (on_epoch) {
            const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
            on_epoch(TrainProgress{ckpt.epoch, ckpt.loss_history.back(), dt.count()});
        }
    }
}

GradCheckResult check_gradients(const Model& model, const SliceBatch& x, std::span<const int> t,
                                const SliceBatch& target, std::size_t samples, double h, std::uint64_t seed) {
    const auto p = model.params();
    std::vector<double> shadow(p.begin(), p.end());
    std::vector<double> grad;
    model.loss_double(shadow, x, t, target, &grad);

    std::vector<std::size_t> idx(shadow.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    const std::size_t n = std::min(samples, idx.size());
    for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng() % (idx.size() - i)]);

    GradCheckResult r;
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t i = idx[s];
        const double keep = shadow[i];
        shadow[i] = keep + h;
        const double up = model.loss_double(shadow, x, t, target);
        shadow[i] = keep - h;
        const double down = model.loss_double(shadow, x, t, target);
        shadow[i] = keep;
        const double numeric = (up - down) / (2.0 * h);
        const double scale = std::max({std::fabs(numeric), std::fabs(grad[i]), 1e-12});
        const double rel = std::fabs(numeric - grad[i]) / scale;
        if (rel > r.max_relative_error || r.checked == 0) {
            r.max_relative_error = std::max(r.max_relative_error, rel);
            for (const auto& b : model.layout())
                if (i >= b.offset && i < b.offset + b.size) r.worst_param = b.name + "[" + std::to_string(i - b.offset) + "]";
        }
        ++r.checked;
    }
    return r;
}

// ---------------------------------------------------------------------------------------
// Checkpoint file

namespace {

constexpr char kMagic[8] = {'D', 'E', 'N', 'O', '0', '0', '0', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename V>
void put(std::ofstream& out, const V& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename V>
V get(std::ifstream& in, const std::filesystem::path& path) {
    V v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw FormatError(FormatErrc::truncated, path.string() + ": truncated checkpoint");
    return v;
}

void put_floats(std::ofstream& out, const std::vector<float>& v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
}

std::vector<float> get_floats(std::ifstream& in, std::size_t n, const std::filesystem::path& path) {
    std::vector<float> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (!in) throw FormatError(FormatErrc::truncated, path.string() + ": truncated checkpoint payload");
    return v;
}

std::string_view noise_kind_name(diffusion::NoiseKind k) { return k == diffusion::NoiseKind::gaussian ? "gaussian" : "simplex"; }

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const std::size_t n = ckpt.model.params().size();
    if ((!ckpt.optimizer.m.empty() && ckpt.optimizer.m.size() != n) || ckpt.optimizer.m.size() != ckpt.optimizer.v.size())
        throw InvalidArgument("optimizer moments do not match the parameter count");
    nlohmann::json j;
    j["architecture"] = nlohmann::json::parse(ckpt.model.architecture().to_json());
    j["scheduler"] = {{"num_steps", ckpt.scheduler.num_steps},
                      {"beta_start", ckpt.scheduler.beta_start},
                      {"beta_end", ckpt.scheduler.beta_end},
                      {"kind", "scaled_linear"}};
    j["noise"] = {{"kind", noise_kind_name(ckpt.noise.kind)},
                  {"octaves", ckpt.noise.octaves},
                  {"base_frequency", ckpt.noise.base_frequency},
                  {"persistence", ckpt.noise.persistence},
                  {"normalize_to_unit", ckpt.noise.normalize_to_unit}};
    j["epoch"] = ckpt.epoch;
    const std::string blob = j.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kMagic, 8);
    put(out, kVersion);
    put(out, static_cast<std::uint32_t>(blob.size()));
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    put(out, static_cast<std::uint64_t>(n));
    put_floats(out, std::vector<float>(ckpt.model.params().begin(), ckpt.model.params().end()));
    const std::vector<float> zeros(n, 0.0f);
    put_floats(out, ckpt.optimizer.m.empty() ? zeros : ckpt.optimizer.m);
    put_floats(out, ckpt.optimizer.v.empty() ? zeros : ckpt.optimizer.v);
    put(out, ckpt.optimizer.step);
    put(out, static_cast<std::uint32_t>(ckpt.loss_history.size()));
    out.write(reinterpret_cast<const char*>(ckpt.loss_history.data()),
              static_cast<std::streamsize>(ckpt.loss_history.size() * sizeof(double)));
    if (!out) throw IoError("short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<diffusion::SchedulerConfig>& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8] = {};
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
        throw FormatError(FormatErrc::bad_magic, path.string() + ": not a denoiser checkpoint");
    const auto version = get<std::uint32_t>(in, path);
    if (version != kVersion)
        throw ConfigMismatch(path.string() + ": checkpoint version " + std::to_string(version) + " is not supported");
    const auto len = get<std::uint32_t>(in, path);
    if (len > (1u << 24)) throw FormatError(FormatErrc::bad_header, path.string() + ": oversized header");
    std::string blob(len, '\0');
    in.read(blob.data(), len);
    if (!in) throw FormatError(FormatErrc::truncated, path.string() + ": truncated header");

    Checkpoint ckpt;
    try {
        const auto j = nlohmann::json::parse(blob);
        ckpt.model = Model(Architecture::from_json(j.at("architecture").dump()));
        const auto& s = j.at("scheduler");
        ckpt.scheduler.num_steps = s.at("num_steps").get<int>();
        ckpt.scheduler.beta_start = s.at("beta_start").get<double>();
        ckpt.scheduler.beta_end = s.at("beta_end").get<double>();
        const auto& nz = j.at("noise");
        ckpt.noise.kind = nz.at("kind").get<std::string>() == "gaussian" ? diffusion::NoiseKind::gaussian : diffusion::NoiseKind::simplex;
        ckpt.noise.octaves = nz.at("octaves").get<int>();
        ckpt.noise.base_frequency = nz.at("base_frequency").get<double>();
        ckpt.noise.persistence = nz.at("persistence").get<double>();
        ckpt.noise.normalize_to_unit = nz.at("normalize_to_unit").get<bool>();
        ckpt.epoch = j.at("epoch").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(FormatErrc::bad_header, path.string() + ": bad checkpoint header: " + e.what());
    }
    if (expected && !(*expected == ckpt.scheduler))
        throw ConfigMismatch(path.string() + ": checkpoint was trained with a " + std::to_string(ckpt.scheduler.num_steps) +
                             "-step schedule (" + std::to_string(ckpt.scheduler.beta_start) + ", " +
                             std::to_string(ckpt.scheduler.beta_end) + "), expected " + std::to_string(expected->num_steps) +
                             " steps (" + std::to_string(expected->beta_start) + ", " + std::to_string(expected->beta_end) + ")");

    const auto n = get<std::uint64_t>(in, path);
    if (n != ckpt.model.params().size())
        throw ConfigMismatch(path.string() + ": payload has " + std::to_string(n) + " parameters, architecture needs " +
                             std::to_string(ckpt.model.params().size()));
    const auto params = get_floats(in, n, path);
    std::copy(params.begin(), params.end(), ckpt.model.params().begin());
    ckpt.optimizer.m = get_floats(in, n, path);
    ckpt.optimizer.v = get_floats(in, n, path);
    ckpt.optimizer.step = get<std::uint64_t>(in, path);
    const auto k = get<std::uint32_t>(in, path);
    if (k > (1u << 24)) throw FormatError(FormatErrc::bad_header, path.string() + ": oversized loss history");
    ckpt.loss_history.resize(k);
    in.read(reinterpret_cast<char*>(ckpt.loss_history.data()), static_cast<std::streamsize>(k * sizeof(double)));
    if (!in) throw FormatError(FormatErrc::truncated, path.string() + ": truncated loss history");
    return ckpt;
}

} // namespace moodkit::denoiser
