#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mufia/adam.hpp"
#include "mufia/image.hpp"
#include "mufia/imageio.hpp"
#include "mufia/losses.hpp"
#include "mufia/rng.hpp"

namespace mufia {

/// Fixed victim architecture:
///   conv 3x3,  3->16, stride 1, pad 1, ReLU
///   conv 3x3, 16->32, stride 2, pad 1, ReLU
///   conv 3x3, 32->32, stride 2, pad 1, ReLU
///   global average pool
///   fully connected 32->k
struct NetworkSpec {
    int input_side = 32;
    int num_classes = 10;

    static constexpr int kConv1Out = 16;
    static constexpr int kConv2Out = 32;
    static constexpr int kConv3Out = 32;

    void validate() const {
        require(num_classes >= 2, "NetworkSpec: num_classes must be >= 2");
        require(input_side >= 4 && input_side % 4 == 0,
                "NetworkSpec: input side must be a positive multiple of 4");
    }

    std::size_t parameter_count() const {
        return static_cast<std::size_t>(kConv1Out) * 3 * 9 + kConv1Out +
               static_cast<std::size_t>(kConv2Out) * kConv1Out * 9 + kConv2Out +
               static_cast<std::size_t>(kConv3Out) * kConv2Out * 9 + kConv3Out +
               static_cast<std::size_t>(num_classes) * kConv3Out + num_classes;
    }

    bool operator==(const NetworkSpec& o) const {
        return input_side == o.input_side && num_classes == o.num_classes;
    }
};

/// Offsets into the flat parameter vector. The order below is the declared
/// serialization order used by the weight file format.
struct WeightLayout {
    std::size_t conv1_w, conv1_b, conv2_w, conv2_b, conv3_w, conv3_b, fc_w, fc_b, total;

    explicit WeightLayout(const NetworkSpec& spec) {
        const std::size_t c1 = NetworkSpec::kConv1Out, c2 = NetworkSpec::kConv2Out,
                          c3 = NetworkSpec::kConv3Out, k = spec.num_classes;
        conv1_w = 0;
        conv1_b = conv1_w + c1 * 3 * 9;
        conv2_w = conv1_b + c1;
        conv2_b = conv2_w + c2 * c1 * 9;
        conv3_w = conv2_b + c2;
        conv3_b = conv3_w + c3 * c2 * 9;
        fc_w = conv3_b + c3;
        fc_b = fc_w + k * c3;
        total = fc_b + k;
    }
};

template <typename T>
struct ClassifierWeights {
    NetworkSpec spec;
    std::vector<T> values;
};

template <typename To, typename From>
ClassifierWeights<To> weights_cast(const ClassifierWeights<From>& w) {
    ClassifierWeights<To> out;
    out.spec = w.spec;
    out.values.resize(w.values.size());
    for (std::size_t i = 0; i < w.values.size(); ++i)
        out.values[i] = static_cast<To>(w.values[i]);
    return out;
}

/// Kaiming-uniform fan-in initialization for the kernels, zero biases.
/// Kernels are drawn in serialization order so results are reproducible.
template <typename T>
ClassifierWeights<T> init_weights(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    const WeightLayout lay(spec);
    ClassifierWeights<T> w;
    w.spec = spec;
    w.values.assign(lay.total, T(0));

    std::mt19937_64 rng(seed);
    auto fill = [&](std::size_t off, std::size_t count, std::size_t fan_in) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (std::size_t i = 0; i < count; ++i)
            w.values[off + i] = static_cast<T>(uniform_range(rng, -bound, bound));
    };
    fill(lay.conv1_w, lay.conv1_b - lay.conv1_w, 3 * 9);
    fill(lay.conv2_w, lay.conv2_b - lay.conv2_w, static_cast<std::size_t>(NetworkSpec::kConv1Out) * 9);
    fill(lay.conv3_w, lay.conv3_b - lay.conv3_w, static_cast<std::size_t>(NetworkSpec::kConv2Out) * 9);
    fill(lay.fc_w, lay.fc_b - lay.fc_w, NetworkSpec::kConv3Out);
    return w;
}

template <typename T>
struct ForwardCache {
    NetworkSpec spec;
    std::vector<T> input;    // 3 x S x S, CHW
    std::vector<T> z1, a1;   // 16 x S x S
    std::vector<T> z2, a2;   // 32 x S/2 x S/2
    std::vector<T> z3, a3;   // 32 x S/4 x S/4
    std::vector<T> pooled;   // 32
    std::vector<T> logits;   // k
};

namespace detail {

// 3x3 convolution with zero padding 1.
// in: [c_in][h][w], weight: [c_out][c_in][3][3], out: [c_out][h_out][w_out]
template <typename T>
void conv3x3_forward(const T* in, int c_in, int h, int w, const T* weight, const T* bias,
                     int c_out, int stride, T* out) {
    const int h_out = (h - 1) / stride + 1;
    const int w_out = (w - 1) / stride + 1;
    for (int co = 0; co < c_out; ++co) {
        for (int oy = 0; oy < h_out; ++oy) {
            for (int ox = 0; ox < w_out; ++ox) {
                T acc = bias[co];
                for (int ci = 0; ci < c_in; ++ci) {
                    const T* plane = in + static_cast<std::size_t>(ci) * h * w;
                    const T* kw = weight + (static_cast<std::size_t>(co) * c_in + ci) * 9;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int iy = oy * stride + ky - 1;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int ix = ox * stride + kx - 1;
                            if (ix < 0 || ix >= w) continue;
                            acc += kw[ky * 3 + kx] * plane[iy * w + ix];
                        }
                    }
                }
                out[(static_cast<std::size_t>(co) * h_out + oy) * w_out + ox] = acc;
            }
        }
    }
}

// Gradient w.r.t. the convolution input, gather form: every input cell sums
// its contributions in a fixed order, which keeps results deterministic.
template <typename T>
void conv3x3_backward_input(const T* grad_out, int c_out, int h_out, int w_out, const T* weight,
                            int c_in, int h, int w, int stride, T* grad_in) {
    for (int ci = 0; ci < c_in; ++ci) {
        for (int iy = 0; iy < h; ++iy) {
            for (int ix = 0; ix < w; ++ix) {
                T acc = T(0);
                for (int co = 0; co < c_out; ++co) {
                    const T* gplane = grad_out + static_cast<std::size_t>(co) * h_out * w_out;
                    const T* kw = weight + (static_cast<std::size_t>(co) * c_in + ci) * 9;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int num = iy + 1 - ky;
                        if (num < 0 || num % stride != 0) continue;
                        const int oy = num / stride;
                        if (oy >= h_out) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int numx = ix + 1 - kx;
                            if (numx < 0 || numx % stride != 0) continue;
                            const int ox = numx / stride;
                            if (ox >= w_out) continue;
                            acc += kw[ky * 3 + kx] * gplane[oy * w_out + ox];
                        }
                    }
                }
                grad_in[(static_cast<std::size_t>(ci) * h + iy) * w + ix] = acc;
            }
        }
    }
}

template <typename T>
void conv3x3_backward_params(const T* grad_out, int c_out, int h_out, int w_out, const T* in,
                             int c_in, int h, int w, int stride, T* grad_weight, T* grad_bias) {
    for (int co = 0; co < c_out; ++co) {
        const T* gplane = grad_out + static_cast<std::size_t>(co) * h_out * w_out;
        T gb = T(0);
        for (int i = 0; i < h_out * w_out; ++i) gb += gplane[i];
        grad_bias[co] = gb;
        for (int ci = 0; ci < c_in; ++ci) {
            const T* plane = in + static_cast<std::size_t>(ci) * h * w;
            T* gw = grad_weight + (static_cast<std::size_t>(co) * c_in + ci) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    T acc = T(0);
                    for (int oy = 0; oy < h_out; ++oy) {
                        const int iy = oy * stride + ky - 1;
                        if (iy < 0 || iy >= h) continue;
                        for (int ox = 0; ox < w_out; ++ox) {
                            const int ix = ox * stride + kx - 1;
                            if (ix < 0 || ix >= w) continue;
                            acc += gplane[oy * w_out + ox] * plane[iy * w + ix];
                        }
                    }
                    gw[ky * 3 + kx] = acc;
                }
            }
        }
    }
}

template <typename T>
void relu_forward(const std::vector<T>& z, std::vector<T>& a) {
    a.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) a[i] = z[i] > T(0) ? z[i] : T(0);
}

}  // namespace detail

template <typename T>
std::vector<T> forward(const ClassifierWeights<T>& w, const BasicImage<T>& image,
                       ForwardCache<T>* cache = nullptr) {
    const NetworkSpec& spec = w.spec;
    require(image.height == spec.input_side && image.width == spec.input_side,
            "forward: image side does not match the network spec");

    const WeightLayout lay(spec);
    const int s = spec.input_side;
    const int s2 = s / 2, s4 = s / 4;
    const int c1 = NetworkSpec::kConv1Out, c2 = NetworkSpec::kConv2Out, c3 = NetworkSpec::kConv3Out;
    const int k = spec.num_classes;

    ForwardCache<T> local;
    ForwardCache<T>& cc = cache ? *cache : local;
    cc.spec = spec;

    // HWC -> CHW
    cc.input.resize(static_cast<std::size_t>(3) * s * s);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x)
                cc.input[(static_cast<std::size_t>(c) * s + y) * s + x] = image.at(y, x, c);

    const T* vals = w.values.data();
    cc.z1.resize(static_cast<std::size_t>(c1) * s * s);
    detail::conv3x3_forward(cc.input.data(), 3, s, s, vals + lay.conv1_w, vals + lay.conv1_b, c1,
                            1, cc.z1.data());
    detail::relu_forward(cc.z1, cc.a1);

    cc.z2.resize(static_cast<std::size_t>(c2) * s2 * s2);
    detail::conv3x3_forward(cc.a1.data(), c1, s, s, vals + lay.conv2_w, vals + lay.conv2_b, c2, 2,
                            cc.z2.data());
    detail::relu_forward(cc.z2, cc.a2);

    cc.z3.resize(static_cast<std::size_t>(c3) * s4 * s4);
    detail::conv3x3_forward(cc.a2.data(), c2, s2, s2, vals + lay.conv3_w, vals + lay.conv3_b, c3,
                            2, cc.z3.data());
    detail::relu_forward(cc.z3, cc.a3);

    cc.pooled.assign(c3, T(0));
    const T inv_area = T(1) / static_cast<T>(s4 * s4);
    for (int c = 0; c < c3; ++c) {
        T acc = T(0);
        const T* plane = cc.a3.data() + static_cast<std::size_t>(c) * s4 * s4;
        for (int i = 0; i < s4 * s4; ++i) acc += plane[i];
        cc.pooled[c] = acc * inv_area;
    }

    cc.logits.assign(k, T(0));
    for (int o = 0; o < k; ++o) {
        T acc = vals[lay.fc_b + o];
        const T* row = vals + lay.fc_w + static_cast<std::size_t>(o) * c3;
        for (int i = 0; i < c3; ++i) acc += row[i] * cc.pooled[i];
        cc.logits[o] = acc;
    }
    return cc.logits;
}

namespace detail {

/// Shared reverse pass. Either output may be null.
template <typename T>
void backward(const ClassifierWeights<T>& w, const ForwardCache<T>& cache,
              const std::vector<T>& grad_logits, std::vector<T>* grad_params,
              std::vector<T>* grad_input_chw) {
    const NetworkSpec& spec = cache.spec;
    require(spec == w.spec, "backward: cache does not match weights");
    require(static_cast<int>(grad_logits.size()) == spec.num_classes,
            "backward: grad_logits length mismatch");

    const WeightLayout lay(spec);
    const int s = spec.input_side, s2 = s / 2, s4 = s / 4;
    const int c1 = NetworkSpec::kConv1Out, c2 = NetworkSpec::kConv2Out, c3 = NetworkSpec::kConv3Out;
    const int k = spec.num_classes;
    const T* vals = w.values.data();

    if (grad_params) grad_params->assign(lay.total, T(0));

    // FC layer
    std::vector<T> grad_pooled(c3, T(0));
    for (int o = 0; o < k; ++o) {
        const T g = grad_logits[o];
        const T* row = vals + lay.fc_w + static_cast<std::size_t>(o) * c3;
        if (grad_params) {
            T* gw = grad_params->data() + lay.fc_w + static_cast<std::size_t>(o) * c3;
            for (int i = 0; i < c3; ++i) gw[i] = g * cache.pooled[i];
            (*grad_params)[lay.fc_b + o] = g;
        }
        for (int i = 0; i < c3; ++i) grad_pooled[i] += g * row[i];
    }

    // Global average pool
    std::vector<T> grad_a3(cache.a3.size());
    const T inv_area = T(1) / static_cast<T>(s4 * s4);
    for (int c = 0; c < c3; ++c) {
        const T g = grad_pooled[c] * inv_area;
        T* plane = grad_a3.data() + static_cast<std::size_t>(c) * s4 * s4;
        for (int i = 0; i < s4 * s4; ++i) plane[i] = g;
    }

    auto relu_backward = [](const std::vector<T>& z, std::vector<T>& g) {
        for (std::size_t i = 0; i < z.size(); ++i)
            if (!(z[i] > T(0))) g[i] = T(0);
    };

    relu_backward(cache.z3, grad_a3);
    std::vector<T> grad_a2(cache.a2.size());
    detail::conv3x3_backward_input(grad_a3.data(), c3, s4, s4, vals + lay.conv3_w, c2, s2, s2, 2,
                                   grad_a2.data());
    if (grad_params)
        detail::conv3x3_backward_params(grad_a3.data(), c3, s4, s4, cache.a2.data(), c2, s2, s2, 2,
                                        grad_params->data() + lay.conv3_w,
                                        grad_params->data() + lay.conv3_b);

    relu_backward(cache.z2, grad_a2);
    std::vector<T> grad_a1(cache.a1.size());
    detail::conv3x3_backward_input(grad_a2.data(), c2, s2, s2, vals + lay.conv2_w, c1, s, s, 2,
                                   grad_a1.data());
    if (grad_params)
        detail::conv3x3_backward_params(grad_a2.data(), c2, s2, s2, cache.a1.data(), c1, s, s, 2,
                                        grad_params->data() + lay.conv2_w,
                                        grad_params->data() + lay.conv2_b);

    relu_backward(cache.z1, grad_a1);
    if (grad_input_chw) {
        grad_input_chw->resize(cache.input.size());
        detail::conv3x3_backward_input(grad_a1.data(), c1, s, s, vals + lay.conv1_w, 3, s, s, 1,
                                       grad_input_chw->data());
    }
    if (grad_params)
        detail::conv3x3_backward_params(grad_a1.data(), c1, s, s, cache.input.data(), 3, s, s, 1,
                                        grad_params->data() + lay.conv1_w,
                                        grad_params->data() + lay.conv1_b);
}

}  // namespace detail

/// Exact reverse-mode gradient of grad_logits . logits with respect to the
/// input image, returned in the image's H x W x 3 layout.
template <typename T>
BasicImage<T> input_gradient(const ClassifierWeights<T>& w, const ForwardCache<T>& cache,
                             const std::vector<T>& grad_logits) {
    std::vector<T> grad_chw;
    detail::backward(w, cache, grad_logits, static_cast<std::vector<T>*>(nullptr), &grad_chw);
    const int s = cache.spec.input_side;
    BasicImage<T> out(s, s);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x)
                out.at(y, x, c) = grad_chw[(static_cast<std::size_t>(c) * s + y) * s + x];
    return out;
}

template <typename T>
void parameter_gradient(const ClassifierWeights<T>& w, const ForwardCache<T>& cache,
                        const std::vector<T>& grad_logits, std::vector<T>& grad_out) {
    detail::backward(w, cache, grad_logits, &grad_out, static_cast<std::vector<T>*>(nullptr));
}

/// Argmax with ties broken toward the lowest class index.
template <typename T>
int predict_class(const std::vector<T>& logits) {
    int best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[best]) best = static_cast<int>(i);
    return best;
}

template <typename T>
int predict(const ClassifierWeights<T>& w, const BasicImage<T>& image) {
    return predict_class(forward(w, image));
}

/// Fraction of samples whose predicted class equals the label. Evaluation is
/// parallel over samples; the counts are integers, so the result does not
/// depend on thread count.
template <typename T>
double evaluate(const ClassifierWeights<T>& w, const LabeledDataset& ds) {
    require(!ds.images.empty(), "evaluate: empty dataset");
    const int n = static_cast<int>(ds.size());
    std::vector<std::uint8_t> correct(n, 0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const BasicImage<T> img = image_cast<T>(ds.images[i]);
        correct[i] = (predict(w, img) == ds.labels[i]) ? 1 : 0;
    }
    std::size_t hits = 0;
    for (auto c : correct) hits += c;
    return static_cast<double>(hits) / static_cast<double>(n);
}

struct TrainOptions {
    int epochs = 30;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    int batch_size = 32;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Minimizes softmax cross-entropy with Adam. Shuffling order is fixed by the
/// seed. Per-sample gradients within a batch are computed in parallel but
/// summed in sample order, so the result is bit-identical to a serial run.
template <typename T>
ClassifierWeights<T> train(
    const NetworkSpec& spec, const LabeledDataset& ds, const TrainOptions& opt,
    const std::function<void(int, double, const ClassifierWeights<T>&)>& per_epoch = {}) {
    require(!ds.images.empty(), "train: empty dataset");
    require(ds.num_classes == spec.num_classes, "train: dataset class count mismatch");
    for (const Image& img : ds.images)
        require(img.height == spec.input_side && img.width == spec.input_side,
                "train: image side does not match the network spec");

    ClassifierWeights<T> w = init_weights<T>(spec, opt.seed);
    if (opt.epochs <= 0) return w;

    const WeightLayout lay(spec);
    AdamState<T> adam = AdamState<T>::zeros(lay.total);
    std::mt19937_64 shuffle_rng(opt.seed ^ 0x9e3779b97f4a7c15ull);

    std::vector<int> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    const int batch = opt.batch_size;
    std::vector<std::vector<T>> sample_grads(batch);
    std::vector<T> batch_grad(lay.total);
    std::vector<double> sample_losses(batch);

    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        deterministic_shuffle(order, shuffle_rng);
        double loss_sum = 0.0;
        std::size_t seen = 0;

        for (std::size_t start = 0; start < order.size(); start += batch) {
            const int bsz = static_cast<int>(std::min<std::size_t>(batch, order.size() - start));
#pragma omp parallel for schedule(static)
            for (int bi = 0; bi < bsz; ++bi) {
                const int idx = order[start + bi];
                const BasicImage<T> img = image_cast<T>(ds.images[idx]);
                ForwardCache<T> cache;
                forward(w, img, &cache);
                const LossResult<T> ce = softmax_cross_entropy(cache.logits, ds.labels[idx]);
                parameter_gradient(w, cache, ce.grad, sample_grads[bi]);
                sample_losses[bi] = static_cast<double>(ce.value);
            }

            std::fill(batch_grad.begin(), batch_grad.end(), T(0));
            const T inv = T(1) / static_cast<T>(bsz);
            for (int bi = 0; bi < bsz; ++bi) {
                const std::vector<T>& g = sample_grads[bi];
                for (std::size_t p = 0; p < lay.total; ++p) batch_grad[p] += g[p];
                loss_sum += sample_losses[bi];
            }
            for (std::size_t p = 0; p < lay.total; ++p) batch_grad[p] *= inv;
            seen += bsz;

            adam_step(w.values, batch_grad, adam, static_cast<T>(opt.lr),
                      static_cast<T>(opt.beta1), static_cast<T>(opt.beta2),
                      static_cast<T>(opt.eps));
        }

        if (per_epoch) per_epoch(epoch, loss_sum / static_cast<double>(seen), w);
    }
    return w;
}

namespace reference {

/// Serial twin of evaluate, kept as the concurrency oracle.
template <typename T>
double evaluate(const ClassifierWeights<T>& w, const LabeledDataset& ds) {
    require(!ds.images.empty(), "evaluate: empty dataset");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const BasicImage<T> img = image_cast<T>(ds.images[i]);
        if (predict(w, img) == ds.labels[i]) hits++;
    }
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

}  // namespace reference

// Binary weight file: 8-byte magic "MUFIAW01", input side and class count as
// little-endian int32, then the parameters as little-endian float32 in
// serialization order.
void save_weights(const ClassifierWeights<float>& w, const std::string& path);
ClassifierWeights<float> load_weights(const std::string& path);

}  // namespace mufia
