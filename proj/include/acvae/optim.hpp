#pragma once

#include <cstdint>
#include <vector>

#include "acvae/nn.hpp"

namespace acvae {

// Adam with bias correction. Moments are allocated lazily on the first step
// so the state can be declared before the parameter shapes are known.
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t t = 0;
    std::vector<Matrix> m;
    std::vector<Matrix> v;
};

void adam_step(const ParamStore& params, AdamState& state, double lr);

// Exp-range cyclical learning rate: a triangular wave between min_lr and
// max_lr whose amplitude decays by gamma every iteration.
struct CyclicLrSchedule {
    double min_lr = 1e-4;
    double max_lr = 5e-3;
    double gamma = 0.98;
    std::int64_t step_size = 1;  // iterations per half cycle

    void validate() const;
};

double cyclic_lr(const CyclicLrSchedule& schedule, std::int64_t iteration);

}  // namespace acvae
