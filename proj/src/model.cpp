#include "acvae/model.hpp"

#include <cmath>

#include "acvae/errors.hpp"

namespace acvae {

bool is_variational(Variant v) {
    return v == Variant::VAE || v == Variant::CVAE || v == Variant::ACVAE;
}

bool is_adversarial(Variant v) { return v == Variant::AAE || v == Variant::ACVAE; }

bool is_conditional(Variant v) {
    return v == Variant::CVAE || v == Variant::AAE || v == Variant::ACVAE;
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::AE: return "AE";
        case Variant::VAE: return "VAE";
        case Variant::CVAE: return "CVAE";
        case Variant::AAE: return "AAE";
        case Variant::ACVAE: return "ACVAE";
    }
    return "?";
}

Variant variant_from_string(const std::string& name) {
    if (name == "AE") return Variant::AE;
    if (name == "VAE") return Variant::VAE;
    if (name == "CVAE") return Variant::CVAE;
    if (name == "AAE") return Variant::AAE;
    if (name == "ACVAE") return Variant::ACVAE;
    throw ConfigError("unknown model variant '" + name + "'");
}

std::string to_string(AdvTarget t) {
    return t == AdvTarget::Latent ? "latent" : "reconstruction";
}

AdvTarget adv_target_from_string(const std::string& name) {
    if (name == "latent") return AdvTarget::Latent;
    if (name == "reconstruction") return AdvTarget::Reconstruction;
    throw ConfigError("unknown adv_target '" + name + "' (latent|reconstruction)");
}

void ModelConfig::validate() const {
    if (input_dim == 0) throw ConfigError("ModelConfig: input_dim must be positive");
    if (latent_dim == 0 || latent_dim >= input_dim) {
        throw ConfigError("ModelConfig: requires 0 < latent_dim < input_dim");
    }
    if (hidden[0] == 0 || hidden[1] == 0) {
        throw ConfigError("ModelConfig: hidden sizes must be positive");
    }
    if (!is_conditional(variant) && cond_dim != 0) {
        throw ConfigError("ModelConfig: " + to_string(variant) +
                          " is non-conditional; cond_dim must be 0");
    }
    if (leaky_slope <= 0.0) throw ConfigError("ModelConfig: leaky_slope must be positive");
    if (logvar_clamp <= 0.0) throw ConfigError("ModelConfig: logvar_clamp must be positive");
}

Model::Model(const ModelConfig& config, Rng& init_rng) : config_(config) {
    config_.validate();
    const double slope = config_.leaky_slope;
    const std::size_t enc_in = config_.input_dim + config_.cond_dim;

    enc_trunk.layers.emplace_back(enc_in, config_.hidden[0], Activation::LeakyRelu, slope);
    enc_trunk.layers.emplace_back(config_.hidden[0], config_.hidden[1], Activation::LeakyRelu,
                                  slope);
    if (is_variational(config_.variant)) {
        enc_mu = DenseLayer(config_.hidden[1], config_.latent_dim, Activation::Identity);
        enc_logvar = DenseLayer(config_.hidden[1], config_.latent_dim, Activation::Identity);
    } else {
        enc_z = DenseLayer(config_.hidden[1], config_.latent_dim, Activation::Identity);
    }

    const std::size_t dec_in = config_.latent_dim + config_.cond_dim;
    decoder.layers.emplace_back(dec_in, config_.hidden[0], Activation::LeakyRelu, slope);
    decoder.layers.emplace_back(config_.hidden[0], config_.hidden[1], Activation::LeakyRelu, slope);
    // Identity output: the features are robust-scaled and unbounded.
    decoder.layers.emplace_back(config_.hidden[1], config_.input_dim, Activation::Identity);

    // Initialization order (encoder, decoder, discriminator) keeps the
    // encoder/decoder draws of e.g. CVAE and ACVAE aligned at equal seeds.
    enc_trunk.init_glorot(init_rng);
    if (is_variational(config_.variant)) {
        enc_mu.init_glorot(init_rng);
        enc_logvar.init_glorot(init_rng);
    } else {
        enc_z.init_glorot(init_rng);
    }
    decoder.init_glorot(init_rng);

    if (is_adversarial(config_.variant)) {
        const std::size_t disc_in =
            config_.adv_target == AdvTarget::Latent ? config_.latent_dim : config_.input_dim;
        discriminator.layers.emplace_back(disc_in, config_.hidden[0], Activation::LeakyRelu, slope);
        discriminator.layers.emplace_back(config_.hidden[0], config_.hidden[1],
                                          Activation::LeakyRelu, slope);
        discriminator.layers.emplace_back(config_.hidden[1], 1, Activation::Sigmoid);
        discriminator.init_glorot(init_rng);
    }
}

void Model::check_inputs(const Matrix& x, const Matrix& c) const {
    if (x.cols != config_.input_dim) {
        throw DimensionError("Model: input has " + std::to_string(x.cols) + " features, expected " +
                             std::to_string(config_.input_dim));
    }
    if (config_.cond_dim == 0) {
        if (c.cols != 0) {
            throw ConfigError("Model: conditioning passed to non-conditional variant " +
                              to_string(config_.variant));
        }
        return;
    }
    if (c.cols != config_.cond_dim) {
        throw DimensionError("Model: covariates have " + std::to_string(c.cols) +
                             " columns, expected " + std::to_string(config_.cond_dim));
    }
    if (c.rows != x.rows) {
        throw DimensionError("Model: covariate batch does not match input batch");
    }
}

namespace {

Matrix clamp_matrix(const Matrix& m, double bound) {
    Matrix out = m;
    for (double& v : out.data) {
        if (v > bound) v = bound;
        if (v < -bound) v = -bound;
    }
    return out;
}

}  // namespace

EncoderOutput Model::encode(const Matrix& x, const Matrix& c) const {
    check_inputs(x, c);
    const Matrix h = enc_trunk.forward(concat_cols(x, c));
    EncoderOutput out;
    if (is_variational(config_.variant)) {
        out.mu = dense_forward(enc_mu, h);
        out.logvar = clamp_matrix(dense_forward(enc_logvar, h), config_.logvar_clamp);
    } else {
        out.z = dense_forward(enc_z, h);
    }
    return out;
}

Matrix Model::decode(const Matrix& z, const Matrix& c) const {
    if (z.cols != config_.latent_dim) {
        throw DimensionError("Model::decode: latent has " + std::to_string(z.cols) +
                             " columns, expected " + std::to_string(config_.latent_dim));
    }
    if (config_.cond_dim > 0 && c.cols != config_.cond_dim) {
        throw DimensionError("Model::decode: covariates have " + std::to_string(c.cols) +
                             " columns, expected " + std::to_string(config_.cond_dim));
    }
    return decoder.forward(concat_cols(z, c));
}

Matrix Model::discriminate(const Matrix& input) const {
    if (discriminator.layers.empty()) {
        throw ConfigError("Model::discriminate: variant " + to_string(config_.variant) +
                          " has no discriminator");
    }
    return discriminator.forward(input);
}

Matrix Model::reconstruct_mean(const Matrix& x, const Matrix& c) const {
    const EncoderOutput enc = encode(x, c);
    return decode(is_variational(config_.variant) ? enc.mu : enc.z, c);
}

ParamStore Model::generator_params() {
    ParamStore store;
    append_mlp_params(store, enc_trunk, "enc.trunk");
    if (is_variational(config_.variant)) {
        store.push_back({"enc.mu.w", &enc_mu.w, &enc_mu.gw});
        store.push_back({"enc.mu.b", &enc_mu.b, &enc_mu.gb});
        store.push_back({"enc.logvar.w", &enc_logvar.w, &enc_logvar.gw});
        store.push_back({"enc.logvar.b", &enc_logvar.b, &enc_logvar.gb});
    } else {
        store.push_back({"enc.z.w", &enc_z.w, &enc_z.gw});
        store.push_back({"enc.z.b", &enc_z.b, &enc_z.gb});
    }
    append_mlp_params(store, decoder, "dec");
    return store;
}

ParamStore Model::discriminator_params() {
    ParamStore store;
    append_mlp_params(store, discriminator, "disc");
    return store;
}

ParamStore Model::all_params() {
    ParamStore store = generator_params();
    ParamStore disc = discriminator_params();
    store.insert(store.end(), disc.begin(), disc.end());
    return store;
}

void Model::zero_generator_grads() {
    enc_trunk.zero_grad();
    enc_mu.zero_grad();
    enc_logvar.zero_grad();
    enc_z.zero_grad();
    decoder.zero_grad();
}

void Model::zero_discriminator_grads() { discriminator.zero_grad(); }

// --- losses ---------------------------------------------------------------

double kl_divergence(const Matrix& mu, const Matrix& logvar) {
    if (!mu.same_shape(logvar)) throw DimensionError("kl_divergence: shape mismatch");
    if (mu.rows == 0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double m = mu.data[i];
        const double lv = logvar.data[i];
        acc += m * m + std::exp(lv) - 1.0 - lv;
    }
    return 0.5 * acc / static_cast<double>(mu.rows);
}

double reconstruction_loss(const Matrix& x, const Matrix& xhat) {
    if (!x.same_shape(xhat)) throw DimensionError("reconstruction_loss: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x.data[i] - xhat.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(x.size());
}

Matrix reparameterize_with(const Matrix& mu, const Matrix& logvar, const Matrix& eps) {
    if (!mu.same_shape(logvar) || !mu.same_shape(eps)) {
        throw DimensionError("reparameterize: shape mismatch");
    }
    Matrix z = mu;
    for (std::size_t i = 0; i < z.size(); ++i) {
        z.data[i] += std::exp(0.5 * logvar.data[i]) * eps.data[i];
    }
    return z;
}

Matrix reparameterize(const Matrix& mu, const Matrix& logvar, Rng& rng) {
    return reparameterize_with(mu, logvar, rng.normal_matrix(mu.rows, mu.cols));
}

namespace {

double clamp_prob(double p) {
    if (p < kProbClamp) return kProbClamp;
    if (p > 1.0 - kProbClamp) return 1.0 - kProbClamp;
    return p;
}

// Gradient of the clamp: zero outside the open interval.
bool prob_in_range(double p) { return p > kProbClamp && p < 1.0 - kProbClamp; }

double mean_log_prob(const Matrix& p) {
    double acc = 0.0;
    for (double v : p.data) acc += std::log(clamp_prob(v));
    return acc / static_cast<double>(p.size());
}

double mean_log_one_minus(const Matrix& p) {
    double acc = 0.0;
    for (double v : p.data) acc += std::log(1.0 - clamp_prob(v));
    return acc / static_cast<double>(p.size());
}

}  // namespace

AdvLosses adversarial_losses(const Model& model, const Matrix& positives, const Matrix& negatives) {
    const Matrix p_pos = model.discriminate(positives);
    const Matrix p_neg = model.discriminate(negatives);
    AdvLosses out;
    out.d_loss = -(mean_log_prob(p_pos) + mean_log_one_minus(p_neg));
    out.g_loss = -mean_log_prob(p_neg);
    return out;
}

CvaeLossParts cvae_loss(const Matrix& x, const Matrix& c, const Model& model, Rng& rng) {
    if (!is_variational(model.config().variant)) {
        throw ConfigError("cvae_loss: variant " + to_string(model.config().variant) +
                          " is not variational");
    }
    const EncoderOutput enc = model.encode(x, c);
    const Matrix z = reparameterize(enc.mu, enc.logvar, rng);
    const Matrix xhat = model.decode(z, c);
    CvaeLossParts parts;
    parts.recon = reconstruction_loss(x, xhat);
    parts.kl = kl_divergence(enc.mu, enc.logvar);
    parts.total = parts.recon + parts.kl;
    return parts;
}

TrainNoise draw_noise(const Model& model, std::size_t batch, Rng& rng) {
    TrainNoise noise;
    const ModelConfig& cfg = model.config();
    if (is_variational(cfg.variant)) {
        noise.eps = rng.normal_matrix(batch, cfg.latent_dim);
    }
    if (is_adversarial(cfg.variant) && cfg.adv_target == AdvTarget::Latent) {
        noise.z_prior = rng.normal_matrix(batch, cfg.latent_dim);
    }
    return noise;
}

// --- generator phase --------------------------------------------------------

namespace {

struct GeneratorForward {
    MlpCache trunk_cache;
    LayerCache mu_cache;
    LayerCache lv_cache;
    LayerCache z_cache;
    MlpCache dec_cache;
    MlpCache disc_cache;
    EncoderOutput enc;
    Matrix lv_raw;  // before clamping, for the gradient gate
    Matrix z;
    Matrix xhat;
    Matrix disc_p;
    GeneratorLosses losses;
};

GeneratorForward run_generator_forward(const Model& model, const Matrix& x, const Matrix& c,
                                       const TrainNoise& noise, const LossWeights& weights,
                                       bool with_caches) {
    const ModelConfig& cfg = model.config();
    GeneratorForward f;
    const Matrix enc_in = concat_cols(x, c);
    const Matrix h = model.enc_trunk.forward(enc_in, with_caches ? &f.trunk_cache : nullptr);
    if (is_variational(cfg.variant)) {
        f.enc.mu = dense_forward(model.enc_mu, h, with_caches ? &f.mu_cache : nullptr);
        f.lv_raw = dense_forward(model.enc_logvar, h, with_caches ? &f.lv_cache : nullptr);
        f.enc.logvar = clamp_matrix(f.lv_raw, cfg.logvar_clamp);
        f.z = reparameterize_with(f.enc.mu, f.enc.logvar, noise.eps);
    } else {
        f.z = dense_forward(model.enc_z, h, with_caches ? &f.z_cache : nullptr);
    }
    f.xhat = model.decoder.forward(concat_cols(f.z, c), with_caches ? &f.dec_cache : nullptr);

    f.losses.recon = reconstruction_loss(x, f.xhat);
    if (is_variational(cfg.variant)) {
        f.losses.kl = kl_divergence(f.enc.mu, f.enc.logvar);
    }
    f.losses.total = weights.cvae_weight * (f.losses.recon + f.losses.kl);

    if (is_adversarial(cfg.variant) && weights.adv_weight != 0.0) {
        const Matrix& disc_in = cfg.adv_target == AdvTarget::Latent ? f.z : f.xhat;
        f.disc_p = model.discriminator.forward(disc_in, with_caches ? &f.disc_cache : nullptr);
        f.losses.adv = -mean_log_prob(f.disc_p);
        f.losses.total += weights.adv_weight * f.losses.adv;
    }
    return f;
}

}  // namespace

GeneratorLosses generator_losses(const Model& model, const Matrix& x, const Matrix& c,
                                 const TrainNoise& noise, const LossWeights& weights) {
    return run_generator_forward(model, x, c, noise, weights, false).losses;
}

GeneratorLosses generator_backward(Model& model, const Matrix& x, const Matrix& c,
                                   const TrainNoise& noise, const LossWeights& weights) {
    const ModelConfig& cfg = model.config();
    GeneratorForward f = run_generator_forward(model, x, c, noise, weights, true);

    const double batch = static_cast<double>(x.rows);
    const double n_elems = static_cast<double>(x.size());

    // d total / d xhat from the reconstruction term
    Matrix dxhat(f.xhat.rows, f.xhat.cols);
    for (std::size_t i = 0; i < dxhat.size(); ++i) {
        dxhat.data[i] = weights.cvae_weight * 2.0 * (f.xhat.data[i] - x.data[i]) / n_elems;
    }

    // adversarial gradient, relayed through a frozen discriminator
    Matrix dz_adv;
    const bool adv_active = is_adversarial(cfg.variant) && weights.adv_weight != 0.0;
    if (adv_active) {
        Matrix dp(f.disc_p.rows, f.disc_p.cols, 0.0);
        for (std::size_t i = 0; i < dp.size(); ++i) {
            const double p = f.disc_p.data[i];
            if (prob_in_range(p)) {
                dp.data[i] = -weights.adv_weight / (static_cast<double>(f.disc_p.size()) * p);
            }
        }
        Matrix relay = model.discriminator.backward(f.disc_cache, dp, /*accumulate_grads=*/false);
        if (cfg.adv_target == AdvTarget::Latent) {
            dz_adv = std::move(relay);
        } else {
            for (std::size_t i = 0; i < dxhat.size(); ++i) dxhat.data[i] += relay.data[i];
        }
    }

    // decoder backward; split the input gradient into latent and covariates
    const Matrix ddec_in = model.decoder.backward(f.dec_cache, dxhat);
    Matrix dz, dc_unused;
    split_cols(ddec_in, cfg.latent_dim, dz, dc_unused);
    if (adv_active && cfg.adv_target == AdvTarget::Latent) {
        for (std::size_t i = 0; i < dz.size(); ++i) dz.data[i] += dz_adv.data[i];
    }

    Matrix dh;
    if (is_variational(cfg.variant)) {
        // z = mu + exp(logvar/2) * eps
        Matrix dmu = dz;
        Matrix dlv(dz.rows, dz.cols);
        for (std::size_t i = 0; i < dz.size(); ++i) {
            const double sigma = std::exp(0.5 * f.enc.logvar.data[i]);
            dlv.data[i] = dz.data[i] * 0.5 * sigma * noise.eps.data[i];
        }
        // KL term: d/dmu = mu / B, d/dlogvar = (exp(logvar) - 1) / (2B)
        for (std::size_t i = 0; i < dmu.size(); ++i) {
            dmu.data[i] += weights.cvae_weight * f.enc.mu.data[i] / batch;
            dlv.data[i] += weights.cvae_weight * 0.5 *
                           (std::exp(f.enc.logvar.data[i]) - 1.0) / batch;
        }
        // clamp gate on logvar
        for (std::size_t i = 0; i < dlv.size(); ++i) {
            if (std::fabs(f.lv_raw.data[i]) >= cfg.logvar_clamp) dlv.data[i] = 0.0;
        }
        dh = dense_backward(model.enc_mu, f.mu_cache, dmu);
        const Matrix dh2 = dense_backward(model.enc_logvar, f.lv_cache, dlv);
        for (std::size_t i = 0; i < dh.size(); ++i) dh.data[i] += dh2.data[i];
    } else {
        dh = dense_backward(model.enc_z, f.z_cache, dz);
    }
    model.enc_trunk.backward(f.trunk_cache, dh);
    return f.losses;
}

// --- discriminator phase ------------------------------------------------------

namespace {

// Builds the discriminator inputs for one batch: positives are prior draws
// (latent target) or the real rows (reconstruction target); negatives are the
// detached posterior draws or the detached reconstruction.
void build_disc_inputs(const Model& model, const Matrix& x, const Matrix& c,
                       const TrainNoise& noise, Matrix& positives, Matrix& negatives) {
    const ModelConfig& cfg = model.config();
    if (!is_adversarial(cfg.variant)) {
        throw ConfigError("discriminator phase: variant " + to_string(cfg.variant) +
                          " has no discriminator");
    }
    const EncoderOutput enc = model.encode(x, c);
    const Matrix z = is_variational(cfg.variant)
                         ? reparameterize_with(enc.mu, enc.logvar, noise.eps)
                         : enc.z;
    if (cfg.adv_target == AdvTarget::Latent) {
        positives = noise.z_prior;
        negatives = z;
    } else {
        positives = x;
        negatives = model.decode(z, c);
    }
}

}  // namespace

double discriminator_loss(const Model& model, const Matrix& x, const Matrix& c,
                          const TrainNoise& noise) {
    Matrix positives, negatives;
    build_disc_inputs(model, x, c, noise, positives, negatives);
    return adversarial_losses(model, positives, negatives).d_loss;
}

double discriminator_backward(Model& model, const Matrix& x, const Matrix& c,
                              const TrainNoise& noise) {
    Matrix positives, negatives;
    build_disc_inputs(model, x, c, noise, positives, negatives);

    MlpCache pos_cache, neg_cache;
    const Matrix p_pos = model.discriminator.forward(positives, &pos_cache);
    const Matrix p_neg = model.discriminator.forward(negatives, &neg_cache);
    const double d_loss = -(mean_log_prob(p_pos) + mean_log_one_minus(p_neg));

    Matrix dpos(p_pos.rows, p_pos.cols, 0.0);
    for (std::size_t i = 0; i < dpos.size(); ++i) {
        const double p = p_pos.data[i];
        if (prob_in_range(p)) dpos.data[i] = -1.0 / (static_cast<double>(p_pos.size()) * p);
    }
    Matrix dneg(p_neg.rows, p_neg.cols, 0.0);
    for (std::size_t i = 0; i < dneg.size(); ++i) {
        const double p = p_neg.data[i];
        if (prob_in_range(p)) dneg.data[i] = 1.0 / (static_cast<double>(p_neg.size()) * (1.0 - p));
    }
    model.discriminator.backward(pos_cache, dpos);
    model.discriminator.backward(neg_cache, dneg);
    return d_loss;
}

}  // namespace acvae
