#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>

#include "acvae/checkpoint.hpp"
#include "acvae/errors.hpp"
#include "acvae/model.hpp"
#include "test_util.hpp"

using namespace acvae;

namespace {

ModelConfig small_config(Variant v, std::size_t cond = 3) {
    ModelConfig cfg;
    cfg.variant = v;
    cfg.input_dim = 8;
    cfg.cond_dim = is_conditional(v) ? cond : 0;
    cfg.latent_dim = 3;
    cfg.hidden = {6, 6};
    return cfg;
}

Matrix cond_matrix(const Model& model, std::size_t rows, Rng& rng) {
    return rng.uniform_matrix(rows, model.config().cond_dim, 0.0, 1.0);
}

void zero_all(Model& model) {
    for (const ParamRef& p : model.all_params()) p.value->fill(0.0);
}

}  // namespace

TEST_CASE("variant predicates") {
    CHECK(is_variational(Variant::VAE));
    CHECK(is_variational(Variant::CVAE));
    CHECK(is_variational(Variant::ACVAE));
    CHECK(!is_variational(Variant::AE));
    CHECK(!is_variational(Variant::AAE));
    CHECK(is_adversarial(Variant::AAE));
    CHECK(is_adversarial(Variant::ACVAE));
    CHECK(!is_adversarial(Variant::CVAE));
    CHECK(variant_from_string("ACVAE") == Variant::ACVAE);
    CHECK_THROWS_AS(variant_from_string("GAN"), ConfigError);
}

TEST_CASE("non-conditional variants reject cond_dim") {
    ModelConfig cfg = small_config(Variant::AE);
    cfg.cond_dim = 3;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    ModelConfig vae = small_config(Variant::VAE);
    vae.cond_dim = 22;
    CHECK_THROWS_AS(vae.validate(), ConfigError);
}

TEST_CASE("latent dimension must stay below the input dimension") {
    ModelConfig cfg = small_config(Variant::CVAE);
    cfg.latent_dim = cfg.input_dim;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("CVAE encode returns mu and logvar of the right shape") {
    Rng rng(1);
    Model model(small_config(Variant::CVAE), rng);
    Matrix x = rng.normal_matrix(5, 8);
    Matrix c = cond_matrix(model, 5, rng);
    EncoderOutput out = model.encode(x, c);
    CHECK(out.mu.rows == 5);
    CHECK(out.mu.cols == 3);
    CHECK(out.logvar.rows == 5);
    CHECK(out.logvar.cols == 3);
    CHECK(out.z.empty());
}

TEST_CASE("zero network encodes to zero mean and logvar") {
    Rng rng(2);
    Model model(small_config(Variant::CVAE), rng);
    zero_all(model);
    Matrix x = rng.normal_matrix(4, 8);
    Matrix c = cond_matrix(model, 4, rng);
    EncoderOutput out = model.encode(x, c);
    for (double v : out.mu.data) CHECK(v == 0.0);
    for (double v : out.logvar.data) CHECK(v == 0.0);
}

TEST_CASE("perturbing a covariate entry changes the encoder output") {
    Rng rng(3);
    Model model(small_config(Variant::CVAE), rng);
    Matrix x = rng.normal_matrix(1, 8);
    Matrix c = cond_matrix(model, 1, rng);
    EncoderOutput base = model.encode(x, c);
    Matrix c2 = c;
    c2(0, 1) += 1.0;
    EncoderOutput moved = model.encode(x, c2);
    CHECK(base.mu.data != moved.mu.data);
}

TEST_CASE("conditioning a non-conditional variant is a config error") {
    Rng rng(4);
    Model model(small_config(Variant::AE), rng);
    Matrix x = rng.normal_matrix(2, 8);
    Matrix c(2, 3, 0.5);
    CHECK_THROWS_AS(model.encode(x, c), ConfigError);
}

TEST_CASE("deterministic variants return z directly") {
    Rng rng(5);
    Model model(small_config(Variant::AAE), rng);
    Matrix x = rng.normal_matrix(2, 8);
    Matrix c = cond_matrix(model, 2, rng);
    EncoderOutput out = model.encode(x, c);
    CHECK(out.mu.empty());
    CHECK(out.z.rows == 2);
    CHECK(out.z.cols == 3);
}

TEST_CASE("reparameterize passes the mean through at zero noise") {
    Rng rng(6);
    Matrix mu = rng.normal_matrix(3, 4);
    Matrix logvar = rng.normal_matrix(3, 4);
    Matrix eps(3, 4, 0.0);
    Matrix z = reparameterize_with(mu, logvar, eps);
    CHECK(z.data == mu.data);
}

TEST_CASE("unit logvar and unit noise shift the mean by one") {
    Matrix mu(1, 2, 0.25);
    Matrix logvar(1, 2, 0.0);
    Matrix eps(1, 2, 1.0);
    Matrix z = reparameterize_with(mu, logvar, eps);
    CHECK(z(0, 0) == doctest::Approx(1.25));
    CHECK(z(0, 1) == doctest::Approx(1.25));
}

TEST_CASE("reparameterize sample moments match mu and exp(logvar)") {
    Rng rng(7);
    const double mu_v = 0.7;
    const double lv_v = 0.4;
    const std::size_t n = 100000;
    Matrix mu(n, 1, mu_v);
    Matrix logvar(n, 1, lv_v);
    Matrix z = reparameterize(mu, logvar, rng);
    double s = 0.0, sq = 0.0;
    for (double v : z.data) {
        s += v;
        sq += v * v;
    }
    const double mean = s / n;
    const double var = sq / n - mean * mean;
    const double sd = std::exp(0.5 * lv_v);
    const double se_mean = sd / std::sqrt(static_cast<double>(n));
    const double se_var = std::exp(lv_v) * std::sqrt(2.0 / static_cast<double>(n));
    CHECK(std::fabs(mean - mu_v) < 3.0 * se_mean);
    CHECK(std::fabs(var - std::exp(lv_v)) < 3.0 * se_var);
}

TEST_CASE("decode shape contract") {
    Rng rng(8);
    ModelConfig cfg;
    cfg.variant = Variant::CVAE;
    cfg.latent_dim = 10;
    Model model(cfg, rng);
    Matrix z = rng.normal_matrix(5, 10);
    Matrix c = rng.uniform_matrix(5, cfg.cond_dim, 0.0, 1.0);
    Matrix xhat = model.decode(z, c);
    CHECK(xhat.rows == 5);
    CHECK(xhat.cols == 100);
    Matrix bad = rng.normal_matrix(5, 7);
    CHECK_THROWS_AS(model.decode(bad, c), DimensionError);
}

TEST_CASE("zero decoder repeats its output bias") {
    Rng rng(9);
    Model model(small_config(Variant::CVAE), rng);
    zero_all(model);
    for (std::size_t j = 0; j < 8; ++j) model.decoder.layers.back().b(0, j) = 0.1 * (j + 1);
    Matrix z = rng.normal_matrix(3, 3);
    Matrix c = cond_matrix(model, 3, rng);
    Matrix xhat = model.decode(z, c);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 8; ++j) CHECK(xhat(i, j) == doctest::Approx(0.1 * (j + 1)));
}

TEST_CASE("the conditioning vector steers the decoder") {
    Rng rng(10);
    Model model(small_config(Variant::ACVAE), rng);
    Matrix z = rng.normal_matrix(1, 3);
    Matrix c = cond_matrix(model, 1, rng);
    Matrix c2 = c;
    c2(0, 0) += 1.0;
    CHECK(model.decode(z, c).data != model.decode(z, c2).data);
}

TEST_CASE("kl divergence closed forms") {
    Matrix mu0(1, 1, 0.0), lv0(1, 1, 0.0);
    CHECK(kl_divergence(mu0, lv0) == doctest::Approx(0.0).epsilon(1e-15));

    Matrix mu1(1, 1, 1.0);
    CHECK(kl_divergence(mu1, lv0) == doctest::Approx(0.5).epsilon(1e-15));

    Matrix lv1(1, 1, 1.0);
    const double want = 0.5 * (std::exp(1.0) - 2.0);
    CHECK(kl_divergence(mu0, lv1) == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("kl divergence is non-negative for arbitrary inputs") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        Matrix mu = rng.uniform_matrix(3, 5, -4.0, 4.0);
        Matrix lv = rng.uniform_matrix(3, 5, -10.0, 10.0);
        CHECK(kl_divergence(mu, lv) >= 0.0);
    }
}

TEST_CASE("reconstruction loss basics and oracle") {
    Rng rng(12);
    Matrix x = rng.normal_matrix(4, 6);
    CHECK(reconstruction_loss(x, x) == 0.0);

    Matrix shifted = x;
    for (double& v : shifted.data) v += 0.1;
    CHECK(reconstruction_loss(x, shifted) == doctest::Approx(0.01).epsilon(1e-12));

    Matrix y = rng.normal_matrix(4, 6);
    double acc = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 6; ++j) acc += (x(i, j) - y(i, j)) * (x(i, j) - y(i, j));
    CHECK(reconstruction_loss(x, y) == doctest::Approx(acc / 24.0).epsilon(1e-12));
}

TEST_CASE("cvae_loss vanishes when reconstruction is exact and the posterior is the prior") {
    Rng rng(13);
    Model model(small_config(Variant::CVAE), rng);
    zero_all(model);
    // Zero encoder gives mu = logvar = 0; zero decoder with bias b gives
    // xhat = b regardless of z, so feeding x = b reconstructs exactly.
    for (std::size_t j = 0; j < 8; ++j) model.decoder.layers.back().b(0, j) = 0.3 * (j + 1);
    Matrix x(5, 8);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 8; ++j) x(i, j) = 0.3 * (j + 1);
    Matrix c = cond_matrix(model, 5, rng);
    CvaeLossParts parts = cvae_loss(x, c, model, rng);
    CHECK(parts.total == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(parts.recon == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(parts.kl == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("cvae_loss total equals recon plus kl and kl stays non-negative") {
    Rng rng(14);
    Model model(small_config(Variant::ACVAE), rng);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix x = rng.normal_matrix(6, 8);
        Matrix c = cond_matrix(model, 6, rng);
        CvaeLossParts parts = cvae_loss(x, c, model, rng);
        CHECK(parts.kl >= 0.0);
        CHECK(parts.total == doctest::Approx(parts.recon + parts.kl).epsilon(1e-12));
    }
}

TEST_CASE("cvae_loss rejects non-variational variants") {
    Rng rng(15);
    Model model(small_config(Variant::AAE), rng);
    Matrix x = rng.normal_matrix(2, 8);
    Matrix c = cond_matrix(model, 2, rng);
    CHECK_THROWS_AS(cvae_loss(x, c, model, rng), ConfigError);
}

TEST_CASE("constant discriminator at one half gives the log-4 split") {
    Rng rng(16);
    Model model(small_config(Variant::ACVAE), rng);
    zero_all(model);  // sigmoid(0) = 0.5 everywhere
    Matrix pos = rng.normal_matrix(7, 3);
    Matrix neg = rng.normal_matrix(7, 3);
    AdvLosses losses = adversarial_losses(model, pos, neg);
    CHECK(losses.d_loss == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-15));
    CHECK(losses.g_loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("a saturated discriminator is clamped to finite losses") {
    Rng rng(17);
    Model model(small_config(Variant::ACVAE), rng);
    zero_all(model);
    // Huge output bias saturates the sigmoid on positives; flip sign for
    // negatives by feeding the same input and biasing the logit strongly.
    model.discriminator.layers.back().b(0, 0) = 1000.0;
    Matrix pos = rng.normal_matrix(4, 3);
    Matrix probs = model.discriminate(pos);
    for (double p : probs.data) {
        CHECK(p > 0.0);
        CHECK(p <= 1.0);
    }
    AdvLosses near_perfect = adversarial_losses(model, pos, pos);
    // D(pos) ~ 1: first term ~ 0; D(neg) ~ 1: -log(1 - p) clamps at -log(1e-7).
    CHECK(std::isfinite(near_perfect.d_loss));
    CHECK(near_perfect.d_loss == doctest::Approx(-std::log(kProbClamp)).epsilon(1e-6));
    CHECK(near_perfect.g_loss == doctest::Approx(0.0).epsilon(1e-6));

    model.discriminator.layers.back().b(0, 0) = -1000.0;
    AdvLosses fooled = adversarial_losses(model, pos, pos);
    CHECK(fooled.g_loss == doctest::Approx(-std::log(kProbClamp)).epsilon(1e-6));
}

TEST_CASE("shape closure across the screening grid for every variant") {
    Rng rng(18);
    for (Variant v : {Variant::AE, Variant::VAE, Variant::CVAE, Variant::AAE, Variant::ACVAE}) {
        for (std::size_t latent : {10u, 20u}) {
            for (std::size_t hidden : {90u, 100u, 110u}) {
                ModelConfig cfg;
                cfg.variant = v;
                cfg.cond_dim = is_conditional(v) ? kCovariateDim : 0;
                cfg.latent_dim = latent;
                cfg.hidden = {hidden, hidden};
                Model model(cfg, rng);
                Matrix x = rng.normal_matrix(3, cfg.input_dim);
                Matrix c = rng.uniform_matrix(3, cfg.cond_dim, 0.0, 1.0);
                EncoderOutput enc = model.encode(x, c);
                Matrix z = is_variational(v)
                               ? reparameterize(enc.mu, enc.logvar, rng)
                               : enc.z;
                Matrix xhat = model.decode(z, c);
                CHECK(xhat.rows == x.rows);
                CHECK(xhat.cols == x.cols);
            }
        }
    }
}

TEST_CASE("discriminator outputs stay strictly inside (0,1) after clamping") {
    Rng rng(19);
    Model model(small_config(Variant::AAE), rng);
    Matrix z = rng.uniform_matrix(50, 3, -100.0, 100.0);
    Matrix p = model.discriminate(z);
    for (double v : p.data) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("every parameter receives gradient after one combined backward") {
    Rng rng(20);
    Model model(small_config(Variant::ACVAE), rng);
    Matrix x = rng.normal_matrix(6, 8);
    Matrix c = cond_matrix(model, 6, rng);
    TrainNoise noise = draw_noise(model, 6, rng);
    model.zero_generator_grads();
    model.zero_discriminator_grads();
    discriminator_backward(model, x, c, noise);
    generator_backward(model, x, c, noise, {1.0, 4.0});
    for (const ParamRef& p : model.all_params()) {
        double norm = 0.0;
        for (double g : p.grad->data) norm += std::fabs(g);
        INFO("parameter ", p.name);
        CHECK(norm > 0.0);
    }
}

TEST_CASE("generator gradient leaves the discriminator parameters untouched") {
    Rng rng(21);
    Model model(small_config(Variant::ACVAE), rng);
    Matrix x = rng.normal_matrix(4, 8);
    Matrix c = cond_matrix(model, 4, rng);
    TrainNoise noise = draw_noise(model, 4, rng);
    model.zero_discriminator_grads();
    generator_backward(model, x, c, noise, {1.0, 4.0});
    for (const ParamRef& p : model.discriminator_params()) {
        for (double g : p.grad->data) CHECK(g == 0.0);
    }
}

TEST_CASE("gradients match finite differences for every variant (small nets)") {
    for (Variant v : {Variant::AE, Variant::VAE, Variant::CVAE, Variant::AAE, Variant::ACVAE}) {
        Rng rng(100 + static_cast<std::uint64_t>(v));
        Model model(small_config(v), rng);
        Matrix x = rng.normal_matrix(2, 8);
        Matrix c = cond_matrix(model, 2, rng);
        TrainNoise noise = draw_noise(model, 2, rng);
        const LossWeights weights{1.3, is_adversarial(v) ? 2.5 : 0.0};

        model.zero_generator_grads();
        generator_backward(model, x, c, noise, weights);
        testutil::FdFailure fail;
        bool ok = testutil::fd_check_params(
            model.generator_params(),
            [&] { return generator_losses(model, x, c, noise, weights).total; }, 1e-5, 1e-4, 1e-9,
            &fail);
        INFO("variant ", to_string(v), " generator param ", fail.name, " analytic=",
             fail.analytic, " numeric=", fail.numeric);
        CHECK(ok);

        if (is_adversarial(v)) {
            model.zero_discriminator_grads();
            discriminator_backward(model, x, c, noise);
            ok = testutil::fd_check_params(
                model.discriminator_params(),
                [&] { return discriminator_loss(model, x, c, noise); }, 1e-5, 1e-4, 1e-9, &fail);
            INFO("variant ", to_string(v), " disc param ", fail.name);
            CHECK(ok);
        }
    }
}

TEST_CASE("reconstruction adversarial target also passes the gradient check") {
    ModelConfig cfg = small_config(Variant::ACVAE);
    cfg.adv_target = AdvTarget::Reconstruction;
    Rng rng(55);
    Model model(cfg, rng);
    Matrix x = rng.normal_matrix(2, 8);
    Matrix c = cond_matrix(model, 2, rng);
    TrainNoise noise = draw_noise(model, 2, rng);
    const LossWeights weights{1.0, 3.0};
    model.zero_generator_grads();
    generator_backward(model, x, c, noise, weights);
    testutil::FdFailure fail;
    bool ok = testutil::fd_check_params(
        model.generator_params(),
        [&] { return generator_losses(model, x, c, noise, weights).total; }, 1e-5, 1e-4, 1e-9,
        &fail);
    INFO("param ", fail.name, " analytic=", fail.analytic, " numeric=", fail.numeric);
    CHECK(ok);

    model.zero_discriminator_grads();
    discriminator_backward(model, x, c, noise);
    ok = testutil::fd_check_params(
        model.discriminator_params(), [&] { return discriminator_loss(model, x, c, noise); },
        1e-5, 1e-4, 1e-9, &fail);
    CHECK(ok);
}

TEST_CASE("CVAE equals ACVAE with the discriminator detached") {
    Rng r1(42), r2(42);
    Model cvae(small_config(Variant::CVAE), r1);
    Model acvae(small_config(Variant::ACVAE), r2);
    Rng data_rng(1);
    Matrix x = data_rng.normal_matrix(5, 8);
    Matrix c = data_rng.uniform_matrix(5, 3, 0.0, 1.0);
    Rng n1(9), n2(9);
    TrainNoise noise_c = draw_noise(cvae, 5, n1);
    TrainNoise noise_a = draw_noise(acvae, 5, n2);
    CHECK(noise_c.eps.data == noise_a.eps.data);

    GeneratorLosses lc = generator_losses(cvae, x, c, noise_c, {1.0, 0.0});
    GeneratorLosses la = generator_losses(acvae, x, c, noise_a, {1.0, 0.0});
    CHECK(lc.total == la.total);
    CHECK(lc.recon == la.recon);
    CHECK(lc.kl == la.kl);
}

TEST_CASE("VAE equals CVAE with cond_dim zero") {
    ModelConfig cvae_cfg = small_config(Variant::CVAE);
    cvae_cfg.cond_dim = 0;
    Rng r1(7), r2(7);
    Model vae(small_config(Variant::VAE), r1);
    Model cvae(cvae_cfg, r2);
    Rng data_rng(2);
    Matrix x = data_rng.normal_matrix(4, 8);
    Matrix none(4, 0);
    Rng n1(3), n2(3);
    CHECK(generator_losses(vae, x, none, draw_noise(vae, 4, n1), {1.0, 0.0}).total ==
          generator_losses(cvae, x, none, draw_noise(cvae, 4, n2), {1.0, 0.0}).total);
}

TEST_CASE("AE equals AAE with zero adversarial weight") {
    ModelConfig aae_cfg = small_config(Variant::AAE);
    aae_cfg.cond_dim = 0;
    Rng r1(8), r2(8);
    Model ae(small_config(Variant::AE), r1);
    Model aae(aae_cfg, r2);
    Rng data_rng(4);
    Matrix x = data_rng.normal_matrix(4, 8);
    Matrix none(4, 0);
    TrainNoise empty_noise;
    CHECK(generator_losses(ae, x, none, empty_noise, {1.0, 0.0}).total ==
          generator_losses(aae, x, none, empty_noise, {1.0, 0.0}).total);
}

TEST_CASE("checkpoint round trip reproduces forward outputs bit-exactly") {
    Rng rng(23);
    ModelConfig cfg;
    cfg.variant = Variant::ACVAE;
    Model model(cfg, rng);
    PreprocessParams pre;
    pre.scaler.median.assign(100, 0.25);
    pre.scaler.iqr.assign(100, 1.5);
    pre.age_bins.edges = {60, 62, 64, 66, 68, 70, 72, 74, 76};
    pre.icv_bins.edges = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    pre.hc_train_fraction = 0.8;
    pre.split_seed = 99;

    const std::string path = "ckpt_test.json";
    save_checkpoint(model, pre, path);
    Checkpoint loaded = load_checkpoint(path);
    std::remove(path.c_str());

    REQUIRE(loaded.model.has_value());
    CHECK(loaded.config.variant == Variant::ACVAE);
    CHECK(loaded.preprocess.split_seed == 99);
    CHECK(loaded.preprocess.age_bins.edges == pre.age_bins.edges);

    Matrix x = rng.normal_matrix(4, 100);
    Matrix c = rng.uniform_matrix(4, 22, 0.0, 1.0);
    Matrix a = model.reconstruct_mean(x, c);
    Matrix b = loaded.model->reconstruct_mean(x, c);
    CHECK(a.data == b.data);  // bit-exact
}
