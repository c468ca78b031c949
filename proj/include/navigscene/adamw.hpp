#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "navigscene/errors.hpp"

namespace navigscene {

// Decoupled weight decay variant of Adam. Moments are kept per instance, so
// one optimizer must stay paired with one parameter vector across steps.
class AdamW {
public:
    explicit AdamW(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
                   double weight_decay = 0.0)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {
        if (!(lr > 0.0)) throw ValidationError("learning rate must be positive");
        if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
            throw ValidationError("adam betas must lie in [0, 1)");
        if (!(eps > 0.0)) throw ValidationError("adam epsilon must be positive");
        if (weight_decay < 0.0) throw ValidationError("weight decay must be non-negative");
    }

    void step(std::vector<double>& params, const std::vector<double>& grad) {
        if (params.size() != grad.size())
            throw DimMismatchError("gradient size does not match parameter size");
        if (m_.empty()) {
            m_.assign(params.size(), 0.0);
            v_.assign(params.size(), 0.0);
        } else if (m_.size() != params.size()) {
            throw DimMismatchError("optimizer state does not match parameter size");
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
            const double m_hat = m_[i] / bc1;
            const double v_hat = v_[i] / bc2;
            params[i] -= lr_ * (m_hat / (std::sqrt(v_hat) + eps_) + weight_decay_ * params[i]);
        }
    }

    long steps_taken() const { return t_; }

private:
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    double weight_decay_;
    std::vector<double> m_;
    std::vector<double> v_;
    long t_ = 0;
};

}  // namespace navigscene
