#pragma once

#include <cstdint>
#include <exception>
#include <optional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mufia/adam.hpp"
#include "mufia/analytics.hpp"
#include "mufia/blockdct.hpp"
#include "mufia/classifier.hpp"
#include "mufia/colorspace.hpp"
#include "mufia/losses.hpp"

namespace mufia {

enum class AttackMode { kGroundTruth, kDecisionFlip };
enum class LossKind { kCosine, kCrossEntropy };

struct AttackConfig {
    double kappa = 0.99;
    double lambda = 20.0;
    int n_iters = 100;
    double lr = 0.1;
    int block_size = 32;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    AttackMode mode = AttackMode::kGroundTruth;
    LossKind loss_kind = LossKind::kCosine;
    std::uint64_t seed = 0;
    int batch = 32;  // images attacked concurrently; affects throughput only

    void validate() const {
        require(kappa >= 0.0 && kappa <= 1.0, "AttackConfig: kappa out of [0,1]");
        require(lambda >= 0.0, "AttackConfig: lambda must be >= 0");
        require(n_iters >= 0, "AttackConfig: n_iters must be >= 0");
        require(lr > 0.0, "AttackConfig: lr must be > 0");
        require(block_size >= 2, "AttackConfig: block size must be >= 2");
        require(batch >= 1, "AttackConfig: batch must be >= 1");
    }
};

/// Everything the backward pass needs from one pipeline evaluation: the
/// original planes, the original luma DCT (also the reference spectrum for
/// the similarity loss), the filtered DCT, and the clamp mask.
template <typename T>
struct PipelineCache {
    PlanarYCbCr<T> planes;
    BlockGrid<T> orig_dct;
    BlockGrid<T> filtered_dct;
    ClampMask clamp_mask;
};

namespace detail {

// Image-independent part of the pipeline, computed once per attacked image.
template <typename T>
struct PipelineContext {
    PlanarYCbCr<T> planes;
    BlockGrid<T> orig_dct;
};

template <typename T>
PipelineContext<T> make_pipeline_context(const BasicImage<T>& image, int block_size) {
    require(image.height % block_size == 0 && image.width % block_size == 0,
            "pipeline: image sides not divisible by the block size");
    PipelineContext<T> ctx;
    ctx.planes = rgb_to_ycbcr(image);
    ctx.orig_dct = dct2_grid(partition_blocks(ctx.planes.y, block_size));
    return ctx;
}

// Filter, invert, reassemble, recombine with the untouched chroma, clamp.
template <typename T>
BasicImage<T> run_pipeline(const PipelineContext<T>& ctx, const FilterBank<T>& fb,
                           BlockGrid<T>& filtered_out, ClampMask& mask_out) {
    filtered_out = apply_filter_bank(ctx.orig_dct, fb);
    PlanarYCbCr<T> adv_planes;
    adv_planes.y = assemble_blocks(idct2_grid(filtered_out));
    adv_planes.cb = ctx.planes.cb;
    adv_planes.cr = ctx.planes.cr;
    return ycbcr_to_rgb(adv_planes, &mask_out);
}

template <typename T>
std::vector<T> pipeline_gradient_impl(const BlockGrid<T>& orig_dct, const ClampMask& mask,
                                      const BasicImage<T>& grad_adv_image) {
    const Plane<T> grad_y = luma_gradient(grad_adv_image, mask);
    // adjoint of assemble is partition; adjoint of idct2 is dct2
    const BlockGrid<T> upstream = dct2_grid(partition_blocks(grad_y, orig_dct.block_size));
    return filter_bank_gradient(orig_dct, upstream);
}

}  // namespace detail

/// Full forward pass: RGB -> YCbCr -> blockwise luma DCT -> elementwise
/// filter bank -> inverse DCT -> reassemble -> RGB with clamping. Chroma
/// passes through untouched.
template <typename T>
BasicImage<T> forward_pipeline(const FilterBank<T>& fb, const BasicImage<T>& image,
                               PipelineCache<T>* cache = nullptr) {
    detail::PipelineContext<T> ctx = detail::make_pipeline_context(image, fb.size);
    PipelineCache<T> local;
    PipelineCache<T>& cc = cache ? *cache : local;
    BasicImage<T> adv = detail::run_pipeline(ctx, fb, cc.filtered_dct, cc.clamp_mask);
    cc.planes = std::move(ctx.planes);
    cc.orig_dct = std::move(ctx.orig_dct);
    return adv;
}

/// Reverse-mode gradient of a scalar functional of the pipeline output with
/// respect to the filter bank, given the upstream image-space gradient.
template <typename T>
std::vector<T> pipeline_gradient(const PipelineCache<T>& cache,
                                 const BasicImage<T>& grad_adv_image) {
    require(grad_adv_image.height == cache.clamp_mask.height &&
                grad_adv_image.width == cache.clamp_mask.width,
            "pipeline_gradient: stale cache");
    return detail::pipeline_gradient_impl(cache.orig_dct, cache.clamp_mask, grad_adv_image);
}

template <typename T>
struct AttackResult {
    FilterBank<T> q;
    BasicImage<T> adv_image;
    int label = -1;
    int orig_prediction = -1;
    int final_prediction = -1;
    bool success = false;
    std::optional<int> first_success_iter;
    std::vector<LossBreakdown<T>> trace;  // one entry per iteration, pre-update
    T final_sim_loss = T(0);
    T final_cos_spectra = T(1);
    double psnr_db = 0.0;
};

namespace detail {

template <typename T>
T guarded_cosine_to_label(const std::vector<T>& logits, int label) {
    double sa = 0.0;
    for (const T& l : logits) sa += static_cast<double>(l) * static_cast<double>(l);
    if (!(std::sqrt(sa) > 1e-12)) return T(0);
    return cosine_similarity(logits, one_hot<T>(label, static_cast<int>(logits.size()))).value;
}

}  // namespace detail

/// One image of the multiplicative filter attack: iteratively update the
/// shared filter bank with Adam so the filtered image misclassifies while its
/// luma spectrum stays aligned with the original. The returned filter bank
/// and image are the final iterates. The target class is fixed before the
/// loop: the ground-truth label, or the clean prediction in decision-flip
/// mode.
template <typename T>
AttackResult<T> attack_image(const ClassifierWeights<T>& weights, const Image& image, int label,
                             const AttackConfig& cfg) {
    cfg.validate();
    require(label >= 0 && label < weights.spec.num_classes, "attack_image: label out of range");

    const BasicImage<T> x = image_cast<T>(image);
    detail::PipelineContext<T> ctx = detail::make_pipeline_context(x, cfg.block_size);

    AttackResult<T> result;
    result.label = label;
    result.q = FilterBank<T>::ones(cfg.block_size);

    const std::vector<T> clean_logits = forward(weights, x);
    result.orig_prediction = predict_class(clean_logits);
    const int target =
        (cfg.mode == AttackMode::kGroundTruth) ? label : result.orig_prediction;

    const T kappa = static_cast<T>(cfg.kappa);
    const T lambda = static_cast<T>(cfg.lambda);
    AdamState<T> adam = AdamState<T>::zeros(result.q.q.size());
    result.trace.reserve(cfg.n_iters);

    BlockGrid<T> filtered;
    ClampMask mask;
    ForwardCache<T> fcache;

    for (int iter = 0; iter < cfg.n_iters; ++iter) {
        const BasicImage<T> adv = detail::run_pipeline(ctx, result.q, filtered, mask);
        const std::vector<T> logits = forward(weights, adv, &fcache);
        if (!result.first_success_iter && predict_class(logits) != target)
            result.first_success_iter = iter;

        T adv_value;
        T cos_to_label;
        std::vector<T> grad_logits;
        if (cfg.loss_kind == LossKind::kCosine) {
            AdversarialLossResult<T> a = adversarial_loss(logits, target, kappa);
            adv_value = a.value;
            cos_to_label = a.cos_to_label;
            grad_logits = std::move(a.grad);
        } else {
            LossResult<T> a = cross_entropy_adversarial_loss(logits, target);
            adv_value = a.value;
            grad_logits = std::move(a.grad);
            cos_to_label = detail::guarded_cosine_to_label(logits, target);
        }

        const LossResult<T> sim = similarity_loss(ctx.orig_dct.coeffs, filtered.coeffs);
        result.trace.push_back(total_loss(adv_value, sim.value, lambda, cos_to_label));

        const BasicImage<T> grad_adv = input_gradient(weights, fcache, grad_logits);
        std::vector<T> grad_q = detail::pipeline_gradient_impl(ctx.orig_dct, mask, grad_adv);
        if (lambda > T(0)) {
            BlockGrid<T> sim_upstream = filtered;
            sim_upstream.coeffs = sim.grad;
            const std::vector<T> gq_sim = filter_bank_gradient(ctx.orig_dct, sim_upstream);
            for (std::size_t k = 0; k < grad_q.size(); ++k) grad_q[k] += lambda * gq_sim[k];
        }

        adam_step(result.q.q, grad_q, adam, static_cast<T>(cfg.lr), static_cast<T>(cfg.beta1),
                  static_cast<T>(cfg.beta2), static_cast<T>(cfg.adam_eps));
    }

    if (cfg.n_iters == 0) {
        result.adv_image = x;
        result.final_prediction = result.orig_prediction;
        result.final_sim_loss = T(0);
        result.final_cos_spectra = T(1);
    } else {
        result.adv_image = detail::run_pipeline(ctx, result.q, filtered, mask);
        const std::vector<T> final_logits = forward(weights, result.adv_image);
        result.final_prediction = predict_class(final_logits);
        const LossResult<T> sim = similarity_loss(ctx.orig_dct.coeffs, filtered.coeffs);
        result.final_sim_loss = sim.value;
        result.final_cos_spectra = T(1) - sim.value;
    }
    if (!result.first_success_iter && result.final_prediction != target)
        result.first_success_iter = cfg.n_iters;

    result.success = (cfg.mode == AttackMode::kGroundTruth)
                         ? (result.final_prediction != label)
                         : (result.final_prediction != result.orig_prediction);
    result.psnr_db = psnr(x, result.adv_image);
    return result;
}

template <typename T>
struct AttackReport {
    std::vector<AttackResult<T>> results;
    double clean_accuracy = 0.0;
    double robust_accuracy = 0.0;
    double success_rate = 0.0;
    double mean_sim_loss = 0.0;
    double mean_cos_spectra = 0.0;
    double mean_psnr = 0.0;  // over finite entries only
    int psnr_infinite_count = 0;
};

namespace detail {

template <typename T>
void fill_report_aggregates(AttackReport<T>& report, const LabeledDataset& ds) {
    const std::size_t n = report.results.size();
    std::size_t clean_ok = 0, robust_ok = 0, succeeded = 0;
    double sim_sum = 0.0, cos_sum = 0.0, psnr_sum = 0.0;
    int psnr_finite = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const AttackResult<T>& r = report.results[i];
        if (r.orig_prediction == ds.labels[i]) clean_ok++;
        if (r.final_prediction == ds.labels[i]) robust_ok++;
        if (r.success) succeeded++;
        sim_sum += static_cast<double>(r.final_sim_loss);
        cos_sum += static_cast<double>(r.final_cos_spectra);
        if (std::isinf(r.psnr_db)) {
            report.psnr_infinite_count++;
        } else {
            psnr_sum += r.psnr_db;
            psnr_finite++;
        }
    }
    report.clean_accuracy = static_cast<double>(clean_ok) / static_cast<double>(n);
    report.robust_accuracy = static_cast<double>(robust_ok) / static_cast<double>(n);
    report.success_rate = static_cast<double>(succeeded) / static_cast<double>(n);
    report.mean_sim_loss = sim_sum / static_cast<double>(n);
    report.mean_cos_spectra = cos_sum / static_cast<double>(n);
    report.mean_psnr = psnr_finite > 0 ? psnr_sum / psnr_finite : 0.0;
}

}  // namespace detail

/// Attacks every image independently. Images are processed in parallel up to
/// cfg.batch at a time; results and aggregates are identical to a serial run
/// because each image owns its state and the reduction order is fixed.
template <typename T>
AttackReport<T> attack_dataset(const ClassifierWeights<T>& weights, const LabeledDataset& ds,
                               const AttackConfig& cfg) {
    cfg.validate();
    require(!ds.images.empty(), "attack_dataset: empty dataset");
    for (const Image& img : ds.images)
        require(img.height % cfg.block_size == 0 && img.width % cfg.block_size == 0,
                "attack_dataset: image sides not divisible by the block size");

    const int n = static_cast<int>(ds.size());
    AttackReport<T> report;
    report.results.resize(n);

#ifdef _OPENMP
    const int threads = std::min(cfg.batch, omp_get_max_threads());
#else
    const int threads = 1;
#endif
    (void)threads;
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int i = 0; i < n; ++i) {
        try {
            report.results[i] = attack_image(weights, ds.images[i], ds.labels[i], cfg);
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);

    detail::fill_report_aggregates(report, ds);
    return report;
}

namespace reference {

/// Serial twin of attack_dataset, kept as the concurrency oracle.
template <typename T>
AttackReport<T> attack_dataset(const ClassifierWeights<T>& weights, const LabeledDataset& ds,
                               const AttackConfig& cfg) {
    cfg.validate();
    require(!ds.images.empty(), "attack_dataset: empty dataset");
    AttackReport<T> report;
    report.results.resize(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i)
        report.results[i] = attack_image(weights, ds.images[i], ds.labels[i], cfg);
    detail::fill_report_aggregates(report, ds);
    return report;
}

}  // namespace reference

}  // namespace mufia
