#include "acvae/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "acvae/errors.hpp"

namespace acvae {

void TrainConfig::validate(const ModelConfig& model_config) const {
    if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
    if (cvae_weight <= 0.0) throw ConfigError("TrainConfig: cvae_weight must be positive");
    if (adv_weight < 0.0) throw ConfigError("TrainConfig: adv_weight must be non-negative");
    if (adv_weight > 0.0 && !is_adversarial(model_config.variant)) {
        throw ConfigError("TrainConfig: adv_weight > 0 but variant " +
                          to_string(model_config.variant) + " has no discriminator");
    }
    if (lr.step_size != 0) lr.validate();
    CyclicLrSchedule bounds = lr;
    bounds.step_size = 1;
    bounds.validate();
}

void write_trainlog_csv(const TrainLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write train log '" + path + "'");
    out << "epoch,recon,kl,d_loss,g_loss,lr\n";
    char buf[32];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (std::size_t e = 0; e < log.epochs.size(); ++e) {
        const EpochStats& s = log.epochs[e];
        out << e + 1 << ',' << fmt(s.recon) << ',' << fmt(s.kl) << ',';
        if (s.d_loss) out << fmt(*s.d_loss);
        out << ',';
        if (s.g_loss) out << fmt(*s.g_loss);
        out << ',' << fmt(s.lr) << '\n';
    }
    if (!out) throw DataError("failed writing train log '" + path + "'");
}

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), m.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double* src = m.row_ptr(rows[i]);
        double* dst = out.row_ptr(i);
        for (std::size_t j = 0; j < m.cols; ++j) dst[j] = src[j];
    }
    return out;
}

Trainer::Trainer(Model& model, const TrainConfig& config) : model_(model), config_(config) {
    config_.validate(model.config());
}

bool Trainer::adversarial_active() const {
    return is_adversarial(model_.config().variant) && config_.adv_weight > 0.0;
}

double Trainer::discriminator_step(const Matrix& bx, const Matrix& bc, const TrainNoise& noise,
                                   double lr) {
    model_.zero_discriminator_grads();
    const double d_loss = discriminator_backward(model_, bx, bc, noise);
    const ParamStore params = model_.discriminator_params();
    check_gradients_finite(params);
    adam_step(params, disc_state_, lr);
    return d_loss;
}

GeneratorLosses Trainer::generator_step(const Matrix& bx, const Matrix& bc,
                                        const TrainNoise& noise, double lr) {
    model_.zero_generator_grads();
    const LossWeights weights{config_.cvae_weight, adversarial_active() ? config_.adv_weight : 0.0};
    const GeneratorLosses losses = generator_backward(model_, bx, bc, noise, weights);
    const ParamStore params = model_.generator_params();
    check_gradients_finite(params);
    adam_step(params, gen_state_, lr);
    return losses;
}

void Trainer::run(const Matrix& train_x, const Matrix& train_c, TrainLog& log,
                  const IterationHook& hook) {
    const std::size_t n = train_x.rows;
    if (n == 0) throw DataError("train: empty training set");
    if (model_.config().cond_dim > 0 && train_c.rows != n) {
        throw DimensionError("train: covariate rows do not match training rows");
    }

    const auto batches_per_epoch =
        static_cast<std::int64_t>((n + config_.batch_size - 1) / config_.batch_size);
    CyclicLrSchedule schedule = config_.lr;
    if (schedule.step_size == 0) schedule.step_size = 2 * batches_per_epoch;
    schedule.validate();

    Rng noise_rng(config_.seed, 1);
    std::int64_t iteration = 0;
    for (int epoch = 0; epoch < config_.epochs; ++epoch) {
        // Shuffle order is reseeded per epoch from the config seed.
        Rng shuffle_rng(derive_seed(config_.seed, 2, static_cast<std::uint64_t>(epoch)));
        const std::vector<std::size_t> perm = shuffle_rng.permutation(n);

        EpochStats stats;
        double d_sum = 0.0, g_sum = 0.0;
        for (std::int64_t b = 0; b < batches_per_epoch; ++b, ++iteration) {
            const std::size_t lo = static_cast<std::size_t>(b) * config_.batch_size;
            const std::size_t hi = std::min(n, lo + config_.batch_size);
            const std::vector<std::size_t> rows(perm.begin() + lo, perm.begin() + hi);
            const Matrix bx = gather_rows(train_x, rows);
            const Matrix bc = model_.config().cond_dim > 0 ? gather_rows(train_c, rows)
                                                           : Matrix(rows.size(), 0);
            const double lr = cyclic_lr(schedule, iteration);
            if (hook) hook(iteration, lr);
            const TrainNoise noise = draw_noise(model_, rows.size(), noise_rng);

            const double weight = static_cast<double>(rows.size());
            try {
                if (adversarial_active()) {
                    const double d_loss = discriminator_step(bx, bc, noise, lr);
                    if (!std::isfinite(d_loss)) {
                        throw NumericError("non-finite discriminator loss");
                    }
                    d_sum += weight * d_loss;
                }
                const GeneratorLosses losses = generator_step(bx, bc, noise, lr);
                if (!std::isfinite(losses.total)) {
                    throw NumericError("non-finite generator loss");
                }
                stats.recon += weight * losses.recon;
                stats.kl += weight * losses.kl;
                g_sum += weight * losses.adv;
            } catch (const NumericError& e) {
                throw TrainError("aborted at epoch " + std::to_string(epoch + 1) + ", batch " +
                                     std::to_string(b + 1) + ": " + e.what(),
                                 epoch + 1, static_cast<int>(b + 1));
            }
            stats.lr = lr;
        }
        const double dn = static_cast<double>(n);
        stats.recon /= dn;
        stats.kl /= dn;
        if (adversarial_active()) {
            stats.d_loss = d_sum / dn;
            stats.g_loss = g_sum / dn;
        }
        log.epochs.push_back(stats);
    }
}

void train(Model& model, const Matrix& train_x, const Matrix& train_c, const TrainConfig& config,
           TrainLog& log, const IterationHook& hook) {
    Trainer trainer(model, config);
    trainer.run(train_x, train_c, log, hook);
}

bool screen_better(const ScreenEntry& a, const ScreenEntry& b) {
    if (a.val_loss != b.val_loss) return a.val_loss < b.val_loss;
    if (a.latent_dim != b.latent_dim) return a.latent_dim < b.latent_dim;
    return a.hidden_size < b.hidden_size;
}

ScreenOutcome screen(const ModelConfig& base, const TrainConfig& config, const Matrix& hc_x,
                     const Matrix& hc_c, const std::vector<std::size_t>& latent_dims,
                     const std::vector<std::size_t>& hidden_sizes, double val_fraction) {
    if (latent_dims.empty() || hidden_sizes.empty()) {
        throw ConfigError("screen: the architecture grid is empty");
    }
    if (val_fraction <= 0.0 || val_fraction >= 1.0) {
        throw ConfigError("screen: val_fraction must be in (0, 1)");
    }
    const std::size_t n = hc_x.rows;
    auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
    n_val = std::max<std::size_t>(n_val, 1);
    if (n_val >= n) throw DataError("screen: not enough rows for a validation split");

    Rng split_rng(derive_seed(config.seed, 3));
    const std::vector<std::size_t> perm = split_rng.permutation(n);
    const std::vector<std::size_t> fit_rows(perm.begin(), perm.end() - n_val);
    const std::vector<std::size_t> val_rows(perm.end() - n_val, perm.end());

    const Matrix fit_x = gather_rows(hc_x, fit_rows);
    const Matrix val_x = gather_rows(hc_x, val_rows);
    const bool conditional = base.cond_dim > 0;
    const Matrix fit_c = conditional ? gather_rows(hc_c, fit_rows) : Matrix(fit_rows.size(), 0);
    const Matrix val_c = conditional ? gather_rows(hc_c, val_rows) : Matrix(val_rows.size(), 0);

    ScreenOutcome outcome;
    bool have_best = false;
    ScreenEntry best_entry;
    for (std::size_t latent : latent_dims) {
        for (std::size_t hidden : hidden_sizes) {
            ModelConfig candidate = base;
            candidate.latent_dim = latent;
            candidate.hidden = {hidden, hidden};
            Rng init_rng(derive_seed(config.seed, 4));
            Model model(candidate, init_rng);
            TrainLog log;
            train(model, fit_x, fit_c, config, log);
            const Matrix rec = model.reconstruct_mean(val_x, val_c);
            ScreenEntry entry{latent, hidden, reconstruction_loss(val_x, rec)};
            outcome.entries.push_back(entry);
            if (!have_best || screen_better(entry, best_entry)) {
                best_entry = entry;
                outcome.best = candidate;
                have_best = true;
            }
        }
    }
    return outcome;
}

}  // namespace acvae
