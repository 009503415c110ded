#include "acvae/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "acvae/errors.hpp"

namespace acvae {

void SynthSpec::validate() const {
    if (n_hc == 0) throw ConfigError("SynthSpec: n_hc must be positive");
    if (atrophy_fraction < 0.0 || atrophy_fraction >= 1.0) {
        throw ConfigError("SynthSpec: atrophy_fraction must be in [0, 1)");
    }
    for (std::size_t r : atrophy_regions) {
        if (r >= kNumRegions) {
            throw ConfigError("SynthSpec: atrophy region " + std::to_string(r) + " out of range");
        }
    }
    if (!(age_min > 0.0) || !(age_max >= age_min)) {
        throw ConfigError("SynthSpec: requires 0 < age_min <= age_max");
    }
    if (noise_sd < 0.0) throw ConfigError("SynthSpec: noise_sd must be non-negative");
}

double synth_age_slope(std::size_t region) {
    return 0.001 + 0.005 * static_cast<double>(region) / static_cast<double>(kNumRegions - 1);
}

namespace {

SubjectRecord make_record(const SynthSpec& spec, const std::vector<double>& base,
                          const std::string& id, Group group, Rng& rng) {
    SubjectRecord rec;
    rec.subject_id = id;
    rec.session_day = 0;
    rec.group = group;
    rec.gender = rng.next_below(2) == 0 ? Gender::M : Gender::F;
    rec.age = spec.age_min + (spec.age_max - spec.age_min) * rng.next_uniform();
    for (std::size_t i = 0; i < kNumRegions; ++i) {
        const double decline = 1.0 - synth_age_slope(i) * (rec.age - spec.age_min);
        double v = base[i] * decline + base[i] * spec.noise_sd * rng.next_normal();
        rec.roi[i] = std::max(v, 0.0);
    }
    if (group == Group::AD) {
        for (std::size_t r : spec.atrophy_regions) rec.roi[r] *= 1.0 - spec.atrophy_fraction;
    }
    return rec;
}

std::string make_id(const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%04zu", prefix, i + 1);
    return buf;
}

}  // namespace

Cohort generate_synthetic_cohort(const SynthSpec& spec, Rng& rng) {
    spec.validate();
    // Per-region base volumes; roughly 400..800 so the ICV lands near 6e4.
    std::vector<double> base(kNumRegions);
    for (double& b : base) b = 400.0 + 400.0 * rng.next_uniform();

    Cohort cohort;
    cohort.provenance = Provenance::Synthetic;
    cohort.records.reserve(spec.n_hc + spec.n_ad);
    for (std::size_t i = 0; i < spec.n_hc; ++i) {
        cohort.records.push_back(make_record(spec, base, make_id("HC", i), Group::HC, rng));
    }
    for (std::size_t i = 0; i < spec.n_ad; ++i) {
        cohort.records.push_back(make_record(spec, base, make_id("AD", i), Group::AD, rng));
    }
    return cohort;
}

Cohort generate_synthetic_cohort(const SynthSpec& spec) {
    Rng rng(spec.seed);
    return generate_synthetic_cohort(spec, rng);
}

}  // namespace acvae
