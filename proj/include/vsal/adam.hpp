#ifndef VSAL_ADAM_HPP
#define VSAL_ADAM_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "vsal/tensor.hpp"

namespace vsal {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;  // decoupled, applied directly to the weights
};

// Adam with bias correction and decoupled weight decay over a fixed set of
// leaf parameters. Moment buffers shape-match their parameter.
template <typename T>
class Adam {
  public:
    Adam(std::vector<Tensor<T>> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
        for (const auto& p : params_) {
            first_moment_.emplace_back(p.size(), T(0));
            second_moment_.emplace_back(p.size(), T(0));
        }
    }

    void step() {
        ++step_count_;
        double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
        double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
        for (std::size_t k = 0; k < params_.size(); ++k) {
            auto& p = params_[k];
            if (!p.has_grad())
                throw UsageError("adam_step: parameter " + std::to_string(k) +
                                 " has no gradient; run backward() first");
            auto& data = p.mutable_data();
            auto& grad = p.mutable_grad();
            auto& m = first_moment_[k];
            auto& v = second_moment_[k];
            for (std::size_t i = 0; i < data.size(); ++i) {
                double g = static_cast<double>(grad[i]);
                double mi = cfg_.beta1 * static_cast<double>(m[i]) + (1.0 - cfg_.beta1) * g;
                double vi = cfg_.beta2 * static_cast<double>(v[i]) + (1.0 - cfg_.beta2) * g * g;
                m[i] = static_cast<T>(mi);
                v[i] = static_cast<T>(vi);
                double update = cfg_.learning_rate * (mi / bc1) / (std::sqrt(vi / bc2) + cfg_.epsilon);
                double decay = cfg_.learning_rate * cfg_.weight_decay * static_cast<double>(data[i]);
                data[i] = static_cast<T>(static_cast<double>(data[i]) - update - decay);
            }
        }
        zero_grad();
    }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

    std::int64_t step_count() const { return step_count_; }
    void set_step_count(std::int64_t n) { step_count_ = n; }
    const AdamConfig& config() const { return cfg_; }

    std::size_t param_count() const { return params_.size(); }
    std::vector<T>& first_moment(std::size_t k) { return first_moment_[k]; }
    std::vector<T>& second_moment(std::size_t k) { return second_moment_[k]; }

  private:
    std::vector<Tensor<T>> params_;
    std::vector<std::vector<T>> first_moment_;
    std::vector<std::vector<T>> second_moment_;
    std::int64_t step_count_ = 0;
    AdamConfig cfg_;
};

}  // namespace vsal

#endif
