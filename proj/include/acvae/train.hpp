#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "acvae/model.hpp"
#include "acvae/optim.hpp"

namespace acvae {

struct TrainConfig {
    int epochs = 200;
    int batch_size = 256;
    CyclicLrSchedule lr{1e-4, 5e-3, 0.98, 0};  // step_size 0 = two epochs of batches
    double cvae_weight = 1.0;
    double adv_weight = 4.0;
    std::uint64_t seed = 0;

    void validate(const ModelConfig& model_config) const;
};

struct EpochStats {
    double recon = 0.0;
    double kl = 0.0;
    std::optional<double> d_loss;
    std::optional<double> g_loss;
    double lr = 0.0;  // learning rate at the last iteration of the epoch
};

struct TrainLog {
    std::vector<EpochStats> epochs;
};

// CSV columns: epoch,recon,kl,d_loss,g_loss,lr (loss cells empty when the
// variant has no adversarial phase).
void write_trainlog_csv(const TrainLog& log, const std::string& path);

using IterationHook = std::function<void(std::int64_t iteration, double lr)>;

// Mini-batch training driver. Each batch runs the discriminator update
// first (when the variant has one and adv_weight is nonzero), then the
// encoder/decoder update; the two phases own disjoint parameter stores.
class Trainer {
public:
    Trainer(Model& model, const TrainConfig& config);

    // Appends one entry per completed epoch into `log`, so a non-finite
    // abort (TrainError) leaves the finished epochs behind.
    void run(const Matrix& train_x, const Matrix& train_c, TrainLog& log,
             const IterationHook& hook = nullptr);

    // Single-phase steps, exposed so tests can assert update isolation.
    double discriminator_step(const Matrix& bx, const Matrix& bc, const TrainNoise& noise,
                              double lr);
    GeneratorLosses generator_step(const Matrix& bx, const Matrix& bc, const TrainNoise& noise,
                                   double lr);

    bool adversarial_active() const;
    const AdamState& generator_state() const { return gen_state_; }
    const AdamState& discriminator_state() const { return disc_state_; }

private:
    Model& model_;
    TrainConfig config_;
    AdamState gen_state_;
    AdamState disc_state_;
};

// Convenience wrapper.
void train(Model& model, const Matrix& train_x, const Matrix& train_c, const TrainConfig& config,
           TrainLog& log, const IterationHook& hook = nullptr);

// --- architecture screening -------------------------------------------------

struct ScreenEntry {
    std::size_t latent_dim = 0;
    std::size_t hidden_size = 0;
    double val_loss = 0.0;
};

// Lower validation loss wins; ties break toward the smaller latent
// dimension, then the smaller hidden size.
bool screen_better(const ScreenEntry& a, const ScreenEntry& b);

struct ScreenOutcome {
    ModelConfig best;
    std::vector<ScreenEntry> entries;
};

// Trains every (latent, hidden) combination on 90% of the HC rows and ranks
// by deterministic reconstruction loss on the held-out 10%.
ScreenOutcome screen(const ModelConfig& base, const TrainConfig& config, const Matrix& hc_x,
                     const Matrix& hc_c, const std::vector<std::size_t>& latent_dims,
                     const std::vector<std::size_t>& hidden_sizes, double val_fraction = 0.1);

// Rows of m selected by index, in order.
Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& rows);

}  // namespace acvae
