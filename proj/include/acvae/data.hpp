#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "acvae/matrix.hpp"
#include "acvae/rng.hpp"

namespace acvae {

inline constexpr std::size_t kNumRegions = 100;
inline constexpr std::size_t kCovariateDim = 22;  // gender(2) + age bins(10) + ICV bins(10)
inline constexpr std::size_t kNumBins = 10;

enum class Group { HC, AD };
enum class Gender { M, F };

std::string to_string(Group g);
std::string to_string(Gender g);

struct SubjectRecord {
    std::string subject_id;
    std::optional<long> session_day;  // days since study baseline
    Group group = Group::HC;
    double age = 0.0;
    Gender gender = Gender::M;
    std::array<double, kNumRegions> roi{};
};

enum class Provenance { Ingested, Synthetic };

struct Cohort {
    std::vector<SubjectRecord> records;
    Provenance provenance = Provenance::Ingested;

    std::size_t count(Group g) const;
};

// Interior quantile cut points; 9 edges for 10 bins.
struct BinEdges {
    std::vector<double> edges;
};

struct RobustScalerParams {
    std::vector<double> median;  // per feature
    std::vector<double> iqr;     // q75 - q25 per feature; 0 means degenerate
};

struct PreparedDataset {
    Matrix train_x;  // robust-scaled ICV shares, HC only
    Matrix train_c;  // covariate one-hots
    Matrix test_x;
    Matrix test_c;
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    std::vector<Group> test_labels;
    RobustScalerParams scaler;
    BinEdges age_bins;
    BinEdges icv_bins;
};

// --- ingestion ----------------------------------------------------------

// CSV schema: subject_id,session_day,group,age,gender,roi_000,...,roi_099.
// All malformed rows are collected and reported together with line numbers.
Cohort ingest_csv(const std::string& path);
Cohort parse_cohort_csv(const std::string& text, const std::string& origin);
void write_cohort_csv(const Cohort& cohort, const std::string& path);

// --- feature generation -------------------------------------------------

// Sessions of one subject falling in the same window of `window_days`
// (anchored at that subject's first session) are averaged into one record;
// each (subject, window) then counts as an independent subject.
Cohort aggregate_sessions(const Cohort& cohort, long window_days = 100);

double compute_icv(const SubjectRecord& record);

// Quantile edges at k/n_bins, k = 1..n_bins-1, with linear interpolation
// between order statistics.
BinEdges fit_quantile_bins(std::vector<double> values, std::size_t n_bins = kNumBins);

// Count of edges strictly below the value, clamped to the last bin.
std::size_t bin_index(const BinEdges& bins, double value);

// Layout: [gender_M, gender_F, age_bin_0..9, icv_bin_0..9].
std::array<double, kCovariateDim> encode_covariates(const SubjectRecord& record,
                                                    const BinEdges& age_bins,
                                                    const BinEdges& icv_bins);

// ROI volumes divided by ICV; the result sums to 1.
std::array<double, kNumRegions> icv_scale(const SubjectRecord& record);

RobustScalerParams robust_fit(const Matrix& train_x);
Matrix robust_transform(const RobustScalerParams& params, const Matrix& x);
Matrix robust_inverse(const RobustScalerParams& params, const Matrix& x);

// Random 80/20 split of HC; test = held-out HC plus all AD. Bins and scaler
// are fit on the training rows only and applied to both sides.
PreparedDataset split_cohort(const Cohort& cohort, double hc_train_fraction, Rng& rng);

}  // namespace acvae
