#pragma once

#include <string>

#include "json.hpp"
#include "mufia/attack.hpp"

namespace mufia {

using OrderedJson = nlohmann::ordered_json;

inline const char* to_string(AttackMode mode) {
    return mode == AttackMode::kGroundTruth ? "ground-truth" : "decision-flip";
}
inline const char* to_string(LossKind kind) {
    return kind == LossKind::kCosine ? "cosine" : "ce";
}

inline AttackMode attack_mode_from_string(const std::string& s) {
    if (s == "ground-truth") return AttackMode::kGroundTruth;
    if (s == "decision-flip") return AttackMode::kDecisionFlip;
    throw std::invalid_argument("unknown mode: " + s + " (want ground-truth or decision-flip)");
}
inline LossKind loss_kind_from_string(const std::string& s) {
    if (s == "cosine") return LossKind::kCosine;
    if (s == "ce") return LossKind::kCrossEntropy;
    throw std::invalid_argument("unknown loss: " + s + " (want cosine or ce)");
}

inline OrderedJson config_to_json(const AttackConfig& cfg) {
    OrderedJson j;
    j["kappa"] = cfg.kappa;
    j["lambda"] = cfg.lambda;
    j["iters"] = cfg.n_iters;
    j["lr"] = cfg.lr;
    j["block_size"] = cfg.block_size;
    j["beta1"] = cfg.beta1;
    j["beta2"] = cfg.beta2;
    j["adam_eps"] = cfg.adam_eps;
    j["mode"] = to_string(cfg.mode);
    j["loss"] = to_string(cfg.loss_kind);
    j["seed"] = cfg.seed;
    j["batch"] = cfg.batch;
    return j;
}

/// Fixed-key-order summary of an attack run. The PSNR mean covers finite
/// entries only; identical-image cases are counted separately.
template <typename T>
OrderedJson summarize_report(const AttackReport<T>& report, double clean_accuracy,
                             const AttackConfig& cfg) {
    OrderedJson j;
    j["clean_accuracy"] = clean_accuracy;
    j["robust_accuracy"] = report.robust_accuracy;
    j["success_rate"] = report.success_rate;
    j["mean_sim_loss"] = report.mean_sim_loss;
    j["mean_cos_spectra"] = report.mean_cos_spectra;
    if (report.psnr_infinite_count == static_cast<int>(report.results.size()))
        j["mean_psnr"] = nullptr;
    else
        j["mean_psnr"] = report.mean_psnr;
    j["psnr_infinite_count"] = report.psnr_infinite_count;
    j["config"] = config_to_json(cfg);
    return j;
}

template <typename T>
OrderedJson per_image_json(const AttackReport<T>& report) {
    OrderedJson arr = OrderedJson::array();
    for (std::size_t i = 0; i < report.results.size(); ++i) {
        const AttackResult<T>& r = report.results[i];
        OrderedJson e;
        e["index"] = i;
        e["label"] = r.label;
        e["orig_prediction"] = r.orig_prediction;
        e["final_prediction"] = r.final_prediction;
        e["success"] = r.success;
        if (r.first_success_iter)
            e["first_success_iter"] = *r.first_success_iter;
        else
            e["first_success_iter"] = nullptr;
        e["sim_loss"] = static_cast<double>(r.final_sim_loss);
        e["cos_spectra"] = static_cast<double>(r.final_cos_spectra);
        if (std::isinf(r.psnr_db))
            e["psnr"] = nullptr;
        else
            e["psnr"] = r.psnr_db;
        arr.push_back(std::move(e));
    }
    return arr;
}

}  // namespace mufia
