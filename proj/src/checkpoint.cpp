#include "acvae/checkpoint.hpp"

#include <fstream>

#include "json.hpp"

#include "acvae/errors.hpp"

namespace acvae {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols) {
        throw DataError("checkpoint: tensor data length does not match its shape");
    }
    return m;
}

json config_to_json(const ModelConfig& cfg) {
    return json{{"variant", to_string(cfg.variant)},
                {"input_dim", cfg.input_dim},
                {"cond_dim", cfg.cond_dim},
                {"latent_dim", cfg.latent_dim},
                {"hidden", {cfg.hidden[0], cfg.hidden[1]}},
                {"leaky_slope", cfg.leaky_slope},
                {"logvar_clamp", cfg.logvar_clamp},
                {"adv_target", to_string(cfg.adv_target)}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig cfg;
    cfg.variant = variant_from_string(j.at("variant").get<std::string>());
    cfg.input_dim = j.at("input_dim").get<std::size_t>();
    cfg.cond_dim = j.at("cond_dim").get<std::size_t>();
    cfg.latent_dim = j.at("latent_dim").get<std::size_t>();
    const auto hidden = j.at("hidden").get<std::vector<std::size_t>>();
    if (hidden.size() != 2) throw DataError("checkpoint: hidden must list two layer sizes");
    cfg.hidden = {hidden[0], hidden[1]};
    cfg.leaky_slope = j.at("leaky_slope").get<double>();
    cfg.logvar_clamp = j.at("logvar_clamp").get<double>();
    cfg.adv_target = adv_target_from_string(j.at("adv_target").get<std::string>());
    return cfg;
}

}  // namespace

void save_checkpoint(Model& model, const PreprocessParams& preprocess, const std::string& path) {
    json params = json::object();
    for (const ParamRef& p : model.all_params()) {
        params[p.name] = matrix_to_json(*p.value);
    }
    json doc{{"format_version", kFormatVersion},
             {"model", config_to_json(model.config())},
             {"params", std::move(params)},
             {"preprocess",
              {{"median", preprocess.scaler.median},
               {"iqr", preprocess.scaler.iqr},
               {"age_edges", preprocess.age_bins.edges},
               {"icv_edges", preprocess.icv_bins.edges},
               {"hc_train_fraction", preprocess.hc_train_fraction},
               {"split_seed", preprocess.split_seed}}}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint '" + path + "'");
    out << doc.dump(2) << "\n";
    if (!out) throw DataError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("checkpoint '" + path + "' is not valid JSON: " + e.what());
    }
    if (doc.at("format_version").get<int>() != kFormatVersion) {
        throw DataError("checkpoint '" + path + "': unsupported format version");
    }

    Checkpoint ckpt;
    ckpt.config = config_from_json(doc.at("model"));
    Rng dummy(0);
    ckpt.model.emplace(ckpt.config, dummy);
    for (const ParamRef& p : ckpt.model->all_params()) {
        const json& stored = doc.at("params").at(p.name);
        Matrix m = matrix_from_json(stored);
        if (!m.same_shape(*p.value)) {
            throw DataError("checkpoint '" + path + "': tensor '" + p.name +
                            "' has an unexpected shape");
        }
        *p.value = std::move(m);
    }

    const json& pre = doc.at("preprocess");
    ckpt.preprocess.scaler.median = pre.at("median").get<std::vector<double>>();
    ckpt.preprocess.scaler.iqr = pre.at("iqr").get<std::vector<double>>();
    ckpt.preprocess.age_bins.edges = pre.at("age_edges").get<std::vector<double>>();
    ckpt.preprocess.icv_bins.edges = pre.at("icv_edges").get<std::vector<double>>();
    ckpt.preprocess.hc_train_fraction = pre.at("hc_train_fraction").get<double>();
    ckpt.preprocess.split_seed = pre.at("split_seed").get<std::uint64_t>();
    return ckpt;
}

}  // namespace acvae
