#ifndef VSAL_LOSSES_HPP
#define VSAL_LOSSES_HPP

#include <vector>

#include "vsal/tensor.hpp"

namespace vsal {

// KL divergence between attention distributions: sum of G * log(G/S), both
// maps floored at eps inside the logs so the expression stays finite.
// Differentiable with respect to S; summed over every element, so batched
// inputs yield the sum of per-sample divergences.
template <typename T>
Tensor<T> kl_divergence(const Tensor<T>& ground, const Tensor<T>& predicted, T eps = T(1e-8)) {
    if (ground.shape() != predicted.shape())
        throw DimensionError("kl_divergence: shape mismatch " + shape_str(ground.shape()) + " vs " +
                             shape_str(predicted.shape()));
    Tensor<T> log_ratio = sub(log_op(clamp_min(ground, eps)), log_op(clamp_min(predicted, eps)));
    return sum(mul(ground, log_ratio));
}

// Combined intra-frame loss: a convex mix of the fine-map KL and the
// coarse-map KL, weights 1/(1+lambda) and lambda/(1+lambda). The coarse map
// is renormalized to a distribution for its term. Batched inputs are
// averaged over the batch.
template <typename T>
Tensor<T> om_cnn_loss(const Tensor<T>& ground, const Tensor<T>& fine_map, const Tensor<T>& coarse_map,
                      double lambda) {
    if (lambda < 0.0) throw ConfigError("om_cnn_loss: lambda must be >= 0, got " + std::to_string(lambda));
    int batch = ground.shape().empty() ? 1 : ground.shape()[0];
    T wf = static_cast<T>(1.0 / (1.0 + lambda));
    T wc = T(1) - wf;  // so the two weights sum to 1 exactly
    Tensor<T> loss = affine(kl_divergence(ground, fine_map), wf, T(0));
    if (lambda > 0.0) {
        Tensor<T> coarse_dist = normalize_per_sample(coarse_map);
        Tensor<T> resized_ground = ground;
        if (coarse_dist.shape() != ground.shape())
            throw DimensionError("om_cnn_loss: coarse map " + shape_str(coarse_map.shape()) +
                                 " does not match ground truth " + shape_str(ground.shape()));
        loss = add(loss, affine(kl_divergence(resized_ground, coarse_dist), wc, T(0)));
    }
    return affine(loss, T(1) / static_cast<T>(batch), T(0));
}

// Clip loss: per-frame KL averaged over the frames of the clip.
template <typename T>
Tensor<T> clstm_loss(const std::vector<Tensor<T>>& predicted, const std::vector<Tensor<T>>& ground) {
    if (predicted.size() != ground.size())
        throw UsageError("clstm_loss: " + std::to_string(predicted.size()) + " predictions vs " +
                         std::to_string(ground.size()) + " ground-truth frames");
    if (predicted.empty()) throw UsageError("clstm_loss: empty clip");
    Tensor<T> acc;
    for (std::size_t t = 0; t < predicted.size(); ++t) {
        int batch = ground[t].shape().empty() ? 1 : ground[t].shape()[0];
        Tensor<T> term = affine(kl_divergence(ground[t], predicted[t]), T(1) / static_cast<T>(batch), T(0));
        acc = acc.defined() ? add(acc, term) : term;
    }
    return affine(acc, T(1) / static_cast<T>(predicted.size()), T(0));
}

}  // namespace vsal

#endif
