#pragma once

#include <array>
#include <string>

#include "acvae/data.hpp"
#include "acvae/nn.hpp"
#include "acvae/rng.hpp"

namespace acvae {

enum class Variant { AE, VAE, CVAE, AAE, ACVAE };

// Variational variants encode a distribution; adversarial ones carry a
// discriminator shaping the latent space.
bool is_variational(Variant v);
bool is_adversarial(Variant v);
bool is_conditional(Variant v);

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

// Where the discriminator looks. The latent target (prior draws vs posterior
// draws) is the default; the reconstruction target (real rows vs decoder
// output) is kept behind this switch.
enum class AdvTarget { Latent, Reconstruction };

std::string to_string(AdvTarget t);
AdvTarget adv_target_from_string(const std::string& name);

struct ModelConfig {
    Variant variant = Variant::ACVAE;
    std::size_t input_dim = kNumRegions;
    std::size_t cond_dim = kCovariateDim;  // 0 for non-conditional variants
    std::size_t latent_dim = 10;
    std::array<std::size_t, 2> hidden = {100, 100};  // two hidden layers per module
    double leaky_slope = 0.01;
    double logvar_clamp = 10.0;
    AdvTarget adv_target = AdvTarget::Latent;

    void validate() const;
};

// Output of the encoder. Variational variants fill mu / logvar; the
// deterministic ones fill z directly.
struct EncoderOutput {
    Matrix mu;
    Matrix logvar;
    Matrix z;
};

// Encoder, decoder and (for adversarial variants) latent discriminator,
// sharing a two-hidden-layer MLP scaffold. Forward passes are const and safe
// to call concurrently on a frozen model.
class Model {
public:
    Model(const ModelConfig& config, Rng& init_rng);

    const ModelConfig& config() const { return config_; }

    EncoderOutput encode(const Matrix& x, const Matrix& c) const;
    Matrix decode(const Matrix& z, const Matrix& c) const;

    // Probability that the input comes from the positive class, in (0,1).
    Matrix discriminate(const Matrix& input) const;

    // Deterministic reconstruction through the posterior mean (or the
    // deterministic code), used for deviation scoring and validation.
    Matrix reconstruct_mean(const Matrix& x, const Matrix& c) const;

    ParamStore generator_params();
    ParamStore discriminator_params();
    ParamStore all_params();
    void zero_generator_grads();
    void zero_discriminator_grads();

    // internals are exposed for the loss/backprop drivers below
    Mlp enc_trunk;
    DenseLayer enc_mu;      // variational head
    DenseLayer enc_logvar;  // variational head
    DenseLayer enc_z;       // deterministic head
    Mlp decoder;
    Mlp discriminator;  // empty for non-adversarial variants

private:
    ModelConfig config_;
    void check_inputs(const Matrix& x, const Matrix& c) const;
};

// --- losses ---------------------------------------------------------------

inline constexpr double kProbClamp = 1e-7;

// Mean over the batch of 0.5 * sum_d(mu^2 + sigma^2 - 1 - logvar); >= 0.
double kl_divergence(const Matrix& mu, const Matrix& logvar);

// Mean over batch and features of the squared error.
double reconstruction_loss(const Matrix& x, const Matrix& xhat);

Matrix reparameterize_with(const Matrix& mu, const Matrix& logvar, const Matrix& eps);
Matrix reparameterize(const Matrix& mu, const Matrix& logvar, Rng& rng);

struct AdvLosses {
    double d_loss = 0.0;
    double g_loss = 0.0;
};

// d_loss = -[mean log D(pos) + mean log(1 - D(neg))]
// g_loss = -mean log D(neg)            (non-saturating generator form)
// Probabilities are clamped to [1e-7, 1 - 1e-7] inside the logs.
AdvLosses adversarial_losses(const Model& model, const Matrix& positives, const Matrix& negatives);

struct CvaeLossParts {
    double total = 0.0;
    double recon = 0.0;
    double kl = 0.0;
};

// total = recon + kl; the trainer applies the module-level weight.
CvaeLossParts cvae_loss(const Matrix& x, const Matrix& c, const Model& model, Rng& rng);

// --- training-phase drivers -------------------------------------------------

struct LossWeights {
    double cvae_weight = 1.0;
    double adv_weight = 0.0;
};

// Noise consumed by one batch; fixing it makes the losses deterministic
// functions of the parameters (which the gradient checks rely on).
struct TrainNoise {
    Matrix eps;      // batch x latent, variational variants only
    Matrix z_prior;  // batch x latent, latent-target adversarial variants only
};

TrainNoise draw_noise(const Model& model, std::size_t batch, Rng& rng);

struct GeneratorLosses {
    double total = 0.0;
    double recon = 0.0;
    double kl = 0.0;
    double adv = 0.0;  // generator-side adversarial loss, unweighted
};

// Generator objective: cvae_weight * (recon + kl) + adv_weight * g_loss,
// with terms dropped for the simpler variants.
GeneratorLosses generator_losses(const Model& model, const Matrix& x, const Matrix& c,
                                 const TrainNoise& noise, const LossWeights& weights);

// Same forward, then accumulates gradients into encoder and decoder. The
// discriminator only relays gradients; its parameter slots are untouched.
GeneratorLosses generator_backward(Model& model, const Matrix& x, const Matrix& c,
                                   const TrainNoise& noise, const LossWeights& weights);

// Discriminator objective on a detached posterior (or reconstruction).
double discriminator_loss(const Model& model, const Matrix& x, const Matrix& c,
                          const TrainNoise& noise);
double discriminator_backward(Model& model, const Matrix& x, const Matrix& c,
                              const TrainNoise& noise);

}  // namespace acvae
