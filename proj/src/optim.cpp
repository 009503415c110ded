#include "acvae/optim.hpp"

#include <algorithm>
#include <cmath>

#include "acvae/errors.hpp"

namespace acvae {

void adam_step(const ParamStore& params, AdamState& state, double lr) {
    if (lr <= 0.0) throw ConfigError("adam_step: learning rate must be positive");
    if (state.m.empty()) {
        state.m.reserve(params.size());
        state.v.reserve(params.size());
        for (const ParamRef& p : params) {
            state.m.emplace_back(p.value->rows, p.value->cols, 0.0);
            state.v.emplace_back(p.value->rows, p.value->cols, 0.0);
        }
    }
    if (state.m.size() != params.size()) {
        throw DimensionError("adam_step: state does not match parameter store");
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix& theta = *params[i].value;
        const Matrix& g = *params[i].grad;
        Matrix& m = state.m[i];
        Matrix& v = state.v[i];
        for (std::size_t j = 0; j < theta.size(); ++j) {
            const double gj = g.data[j];
            m.data[j] = state.beta1 * m.data[j] + (1.0 - state.beta1) * gj;
            v.data[j] = state.beta2 * v.data[j] + (1.0 - state.beta2) * gj * gj;
            const double mhat = m.data[j] / bc1;
            const double vhat = v.data[j] / bc2;
            theta.data[j] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

void CyclicLrSchedule::validate() const {
    if (!(min_lr > 0.0) || !(min_lr <= max_lr)) {
        throw ConfigError("CyclicLrSchedule: requires 0 < min_lr <= max_lr");
    }
    if (!(gamma > 0.0) || gamma > 1.0) {
        throw ConfigError("CyclicLrSchedule: requires 0 < gamma <= 1");
    }
    if (step_size <= 0) {
        throw ConfigError("CyclicLrSchedule: step_size must be positive");
    }
}

double cyclic_lr(const CyclicLrSchedule& schedule, std::int64_t iteration) {
    const double it = static_cast<double>(iteration);
    const double step = static_cast<double>(schedule.step_size);
    const auto cycle = static_cast<double>(iteration / (2 * schedule.step_size));
    const double x = std::fabs(it / step - 2.0 * cycle - 1.0);
    const double amplitude =
        std::max(0.0, 1.0 - x) * std::pow(schedule.gamma, it);
    return schedule.min_lr + (schedule.max_lr - schedule.min_lr) * amplitude;
}

}  // namespace acvae
