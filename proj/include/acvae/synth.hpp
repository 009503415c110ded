#pragma once

#include <cstdint>
#include <vector>

#include "acvae/data.hpp"

namespace acvae {

// Parameters of the synthetic ROI-volume generator. HC volumes follow a
// per-region base level with a linear age decline plus Gaussian noise; AD
// subjects additionally lose `atrophy_fraction` of volume in
// `atrophy_regions`. Defaults mirror the scale of a large single-site
// aging cohort (about 1500 controls, ICV around 6e4).
struct SynthSpec {
    std::size_t n_hc = 1476;
    std::size_t n_ad = 21;
    std::vector<std::size_t> atrophy_regions = {5, 17, 23, 31, 42, 57, 64, 78, 85, 93};
    double atrophy_fraction = 0.5;
    double age_min = 55.0;
    double age_max = 90.0;
    double noise_sd = 0.05;  // relative to the region base volume
    std::uint64_t seed = 42;

    void validate() const;
};

// Fractional volume loss per year for region i; higher-index regions age
// faster, giving the cohort a graded age confound.
double synth_age_slope(std::size_t region);

Cohort generate_synthetic_cohort(const SynthSpec& spec, Rng& rng);
Cohort generate_synthetic_cohort(const SynthSpec& spec);

}  // namespace acvae
