#ifndef SOFTSEG_LOSSES_HPP
#define SOFTSEG_LOSSES_HPP

// The training loss family: KL divergence against soft labels, (weighted)
// cross-entropy and soft Dice against hard labels, and their weighted sum
//     L = L_CE + alpha * L_Dice + beta * L_KL
// with hand-derived gradients with respect to pre-softmax scores. CE and KL
// are means over pixels, so values are batch-size independent. All
// reductions run in a fixed serial order; repeated evaluations are
// bit-identical.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "softseg/grid.hpp"
#include "softseg/soften.hpp"

namespace softseg {

constexpr double kLogClip = 1e-7;     // lower clip for log arguments
constexpr double kDiceSmooth = 1e-5;  // Dice smoothing term

// Per-class score planes; `probabilities` records whether softmax was applied.
struct PredictionStack {
    std::vector<Grid<double>> planes;
    bool probabilities = false;

    std::int32_t num_classes() const { return static_cast<std::int32_t>(planes.size()); }
    const AxisSizes& dims() const { return planes.front().dims(); }
};

struct LossWeights {
    double alpha = 1.0;                 // Dice weight
    double beta = 1.0;                  // KL weight
    std::vector<double> class_weights;  // empty = uniform

    void validate(std::int32_t num_classes) const {
        if (alpha < 0.0 || beta < 0.0)
            throw std::invalid_argument("LossWeights: alpha and beta must be >= 0");
        if (!class_weights.empty()) {
            if (static_cast<std::int32_t>(class_weights.size()) != num_classes)
                throw std::invalid_argument("LossWeights: class_weights size mismatch");
            for (double w : class_weights)
                if (!(w > 0.0)) throw std::invalid_argument("LossWeights: weights must be > 0");
        }
    }
};

namespace detail {

template <typename StackA, typename StackB>
void require_same_layout(const StackA& a, const StackB& b, const char* where) {
    if (a.planes.size() != b.planes.size())
        throw std::invalid_argument(std::string(where) + ": class count mismatch");
    for (std::size_t c = 0; c < a.planes.size(); ++c)
        require_same_dims(a.planes[c], b.planes[c], where);
}

inline double clip_log_arg(double p) { return p < kLogClip ? kLogClip : p; }

}  // namespace detail

inline PredictionStack softmax(const PredictionStack& logits) {
    PredictionStack out;
    out.probabilities = true;
    const std::size_t nc = logits.planes.size();
    out.planes.reserve(nc);
    for (const auto& plane : logits.planes)
        out.planes.emplace_back(plane.dims(), 0.0, plane.spacing());
    const std::size_t n = logits.planes.front().size();
    for (std::size_t i = 0; i < n; ++i) {
        double mx = logits.planes[0][i];
        for (std::size_t c = 1; c < nc; ++c) mx = std::max(mx, logits.planes[c][i]);
        double sum = 0.0;
        for (std::size_t c = 0; c < nc; ++c) {
            const double e = std::exp(logits.planes[c][i] - mx);
            out.planes[c][i] = e;
            sum += e;
        }
        for (std::size_t c = 0; c < nc; ++c) out.planes[c][i] /= sum;
    }
    return out;
}

// (1/N) sum_i sum_c q log(q / p); q = 0 terms contribute nothing
inline double kl_loss(const SoftLabelStack& soft, const PredictionStack& pred) {
    detail::require_same_layout(soft, pred, "kl_loss");
    const std::size_t nc = soft.planes.size();
    const std::size_t n = soft.planes.front().size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < nc; ++c) {
            const double q = soft.planes[c][i];
            if (q > 0.0)
                acc += q * (std::log(q) - std::log(detail::clip_log_arg(pred.planes[c][i])));
        }
    return acc / static_cast<double>(n);
}

// -(1/N) sum_i sum_c w_c y log(p); empty weights = standard CE
inline double ce_loss(const OneHotStack& hard, const PredictionStack& pred,
                      std::span<const double> class_weights = {}) {
    detail::require_same_layout(hard, pred, "ce_loss");
    if (!class_weights.empty() && class_weights.size() != hard.planes.size())
        throw std::invalid_argument("ce_loss: class_weights size mismatch");
    const std::size_t nc = hard.planes.size();
    const std::size_t n = hard.planes.front().size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < nc; ++c) {
            if (!hard.planes[c][i]) continue;
            const double w = class_weights.empty() ? 1.0 : class_weights[c];
            acc -= w * std::log(detail::clip_log_arg(pred.planes[c][i]));
        }
    return acc / static_cast<double>(n);
}

// w_c = 1 / ln(1.02 + freq_c)
inline std::vector<double> class_weights_enet(std::span<const double> freqs) {
    std::vector<double> w;
    w.reserve(freqs.size());
    for (double f : freqs) w.push_back(1.0 / std::log(1.02 + f));
    return w;
}

// 1 - mean over classes of (2 sum p*y + eps) / (sum p + sum y + eps)
inline double dice_loss(const OneHotStack& hard, const PredictionStack& pred) {
    detail::require_same_layout(hard, pred, "dice_loss");
    const std::size_t nc = hard.planes.size();
    const std::size_t n = hard.planes.front().size();
    double mean_dice = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
        double inter = 0.0, psum = 0.0, ysum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = pred.planes[c][i];
            psum += p;
            if (hard.planes[c][i]) {
                inter += p;
                ysum += 1.0;
            }
        }
        mean_dice += (2.0 * inter + kDiceSmooth) / (psum + ysum + kDiceSmooth);
    }
    return 1.0 - mean_dice / static_cast<double>(nc);
}

using GradStack = std::vector<Grid<double>>;

namespace detail {

inline GradStack zero_like(const PredictionStack& p) {
    GradStack g;
    g.reserve(p.planes.size());
    for (const auto& plane : p.planes) g.emplace_back(plane.dims(), 0.0, plane.spacing());
    return g;
}

}  // namespace detail

// d L_CE / d z = (1/N) w_t (p_c - y_c), with t the pixel's true class
inline GradStack ce_grad(const OneHotStack& hard, const PredictionStack& probs,
                         std::span<const double> class_weights = {}) {
    detail::require_same_layout(hard, probs, "ce_grad");
    GradStack g = detail::zero_like(probs);
    const std::size_t nc = hard.planes.size();
    const std::size_t n = hard.planes.front().size();
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double wt = 1.0;
        if (!class_weights.empty())
            for (std::size_t c = 0; c < nc; ++c)
                if (hard.planes[c][i]) {
                    wt = class_weights[c];
                    break;
                }
        for (std::size_t c = 0; c < nc; ++c) {
            const double y = hard.planes[c][i] ? 1.0 : 0.0;
            g[c][i] = inv_n * wt * (probs.planes[c][i] - y);
        }
    }
    return g;
}

// d L_KL / d z = (1/N) (p_c * sum_k q_k - q_c)
inline GradStack kl_grad(const SoftLabelStack& soft, const PredictionStack& probs) {
    detail::require_same_layout(soft, probs, "kl_grad");
    GradStack g = detail::zero_like(probs);
    const std::size_t nc = soft.planes.size();
    const std::size_t n = soft.planes.front().size();
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double qsum = 0.0;
        for (std::size_t c = 0; c < nc; ++c) qsum += soft.planes[c][i];
        for (std::size_t c = 0; c < nc; ++c)
            g[c][i] = inv_n * (probs.planes[c][i] * qsum - soft.planes[c][i]);
    }
    return g;
}

// chain d L_Dice / d p through the softmax Jacobian
inline GradStack dice_grad(const OneHotStack& hard, const PredictionStack& probs) {
    detail::require_same_layout(hard, probs, "dice_grad");
    GradStack g = detail::zero_like(probs);
    const std::size_t nc = hard.planes.size();
    const std::size_t n = hard.planes.front().size();
    std::vector<double> numer(nc), denom(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        double inter = 0.0, psum = 0.0, ysum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = probs.planes[c][i];
            psum += p;
            if (hard.planes[c][i]) {
                inter += p;
                ysum += 1.0;
            }
        }
        numer[c] = 2.0 * inter + kDiceSmooth;
        denom[c] = psum + ysum + kDiceSmooth;
    }
    const double inv_c = 1.0 / static_cast<double>(nc);
    std::vector<double> gp(nc);
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t c = 0; c < nc; ++c) {
            const double y = hard.planes[c][i] ? 1.0 : 0.0;
            gp[c] = -inv_c * (2.0 * y * denom[c] - numer[c]) / (denom[c] * denom[c]);
            dot += gp[c] * probs.planes[c][i];
        }
        for (std::size_t c = 0; c < nc; ++c)
            g[c][i] = probs.planes[c][i] * (gp[c] - dot);
    }
    return g;
}

struct LossResult {
    double value = 0.0;
    GradStack logit_grad;
};

// L = L_CE + alpha L_Dice + beta L_KL over raw logits; gradient is with
// respect to the logits. Zero-weight terms are skipped, so beta = 0
// reproduces the hard-label loss surface bit-for-bit.
inline LossResult combined_loss(const OneHotStack& hard, const SoftLabelStack& soft,
                                const PredictionStack& logits, const LossWeights& weights) {
    weights.validate(static_cast<std::int32_t>(logits.planes.size()));
    const PredictionStack probs = softmax(logits);

    LossResult res;
    res.value = ce_loss(hard, probs, weights.class_weights);
    res.logit_grad = ce_grad(hard, probs, weights.class_weights);

    if (weights.alpha != 0.0) {
        res.value += weights.alpha * dice_loss(hard, probs);
        const GradStack gd = dice_grad(hard, probs);
        for (std::size_t c = 0; c < gd.size(); ++c)
            for (std::size_t i = 0; i < gd[c].size(); ++i)
                res.logit_grad[c][i] += weights.alpha * gd[c][i];
    }
    if (weights.beta != 0.0) {
        res.value += weights.beta * kl_loss(soft, probs);
        const GradStack gk = kl_grad(soft, probs);
        for (std::size_t c = 0; c < gk.size(); ++c)
            for (std::size_t i = 0; i < gk[c].size(); ++i)
                res.logit_grad[c][i] += weights.beta * gk[c][i];
    }
    return res;
}

}  // namespace softseg

#endif  // SOFTSEG_LOSSES_HPP
