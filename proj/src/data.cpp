#include "acvae/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "acvae/errors.hpp"

namespace acvae {

std::string to_string(Group g) { return g == Group::HC ? "HC" : "AD"; }
std::string to_string(Gender g) { return g == Gender::M ? "M" : "F"; }

std::size_t Cohort::count(Group g) const {
    std::size_t n = 0;
    for (const SubjectRecord& r : records) {
        if (r.group == g) ++n;
    }
    return n;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    std::size_t pos = 0;
    try {
        out = std::stod(s, &pos);
    } catch (const std::exception&) {
        return false;
    }
    return pos == s.size() && std::isfinite(out);
}

bool parse_long(const std::string& s, long& out) {
    if (s.empty()) return false;
    std::size_t pos = 0;
    try {
        out = std::stol(s, &pos);
    } catch (const std::exception&) {
        return false;
    }
    return pos == s.size();
}

std::string expected_header() {
    std::string h = "subject_id,session_day,group,age,gender";
    for (std::size_t i = 0; i < kNumRegions; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), ",roi_%03zu", i);
        h += buf;
    }
    return h;
}

// Round-trip formatting for doubles written to CSV.
std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Cohort parse_cohort_csv(const std::string& text, const std::string& origin) {
    std::istringstream stream(text);
    std::string line;
    if (!std::getline(stream, line)) {
        throw IngestError(origin + ": empty file");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected_header()) {
        throw IngestError(origin + ": header does not match schema "
                          "subject_id,session_day,group,age,gender,roi_000..roi_099");
    }

    Cohort cohort;
    std::vector<std::string> problems;
    std::size_t line_no = 1;
    while (std::getline(stream, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        const std::size_t expected = 5 + kNumRegions;
        if (fields.size() != expected) {
            problems.push_back("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(expected) + " columns, got " +
                               std::to_string(fields.size()));
            continue;
        }
        SubjectRecord rec;
        rec.subject_id = fields[0];
        bool ok = !rec.subject_id.empty();
        if (!ok) problems.push_back("line " + std::to_string(line_no) + ": empty subject_id");

        if (!fields[1].empty()) {
            long day = 0;
            if (parse_long(fields[1], day)) {
                rec.session_day = day;
            } else {
                problems.push_back("line " + std::to_string(line_no) + ": bad session_day '" +
                                   fields[1] + "'");
                ok = false;
            }
        }
        if (fields[2] == "HC") {
            rec.group = Group::HC;
        } else if (fields[2] == "AD") {
            rec.group = Group::AD;
        } else {
            problems.push_back("line " + std::to_string(line_no) + ": unknown group '" +
                               fields[2] + "'");
            ok = false;
        }
        if (!parse_double(fields[3], rec.age) || rec.age <= 0.0) {
            problems.push_back("line " + std::to_string(line_no) + ": bad age '" + fields[3] + "'");
            ok = false;
        }
        if (fields[4] == "M") {
            rec.gender = Gender::M;
        } else if (fields[4] == "F") {
            rec.gender = Gender::F;
        } else {
            problems.push_back("line " + std::to_string(line_no) + ": unknown gender '" +
                               fields[4] + "'");
            ok = false;
        }
        for (std::size_t i = 0; i < kNumRegions; ++i) {
            double v = 0.0;
            if (!parse_double(fields[5 + i], v) || v < 0.0) {
                problems.push_back("line " + std::to_string(line_no) + ": bad roi_" +
                                   std::to_string(i) + " value '" + fields[5 + i] + "'");
                ok = false;
                break;
            }
            rec.roi[i] = v;
        }
        if (ok) cohort.records.push_back(std::move(rec));
    }

    if (!problems.empty()) {
        std::string msg = origin + ": " + std::to_string(problems.size()) + " malformed row(s):";
        for (const std::string& p : problems) msg += "\n  " + p;
        throw IngestError(msg);
    }
    return cohort;
}

Cohort ingest_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_cohort_csv(buf.str(), path);
}

void write_cohort_csv(const Cohort& cohort, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << expected_header() << "\n";
    for (const SubjectRecord& r : cohort.records) {
        out << r.subject_id << ',';
        if (r.session_day) out << *r.session_day;
        out << ',' << to_string(r.group) << ',' << fmt_double(r.age) << ',' << to_string(r.gender);
        for (double v : r.roi) out << ',' << fmt_double(v);
        out << '\n';
    }
    if (!out) throw DataError("failed writing '" + path + "'");
}

Cohort aggregate_sessions(const Cohort& cohort, long window_days) {
    if (window_days <= 0) throw ConfigError("aggregate_sessions: window_days must be positive");
    for (const SubjectRecord& r : cohort.records) {
        if (!r.session_day) {
            throw DataError("aggregate_sessions: record of subject '" + r.subject_id +
                            "' has no session_day");
        }
    }

    // Map subject -> first session day (window anchor).
    std::map<std::string, long> anchor;
    for (const SubjectRecord& r : cohort.records) {
        auto it = anchor.find(r.subject_id);
        if (it == anchor.end() || *r.session_day < it->second) anchor[r.subject_id] = *r.session_day;
    }

    struct Bucket {
        std::vector<const SubjectRecord*> members;
    };
    std::map<std::pair<std::string, long>, Bucket> buckets;
    for (const SubjectRecord& r : cohort.records) {
        const long window = (*r.session_day - anchor[r.subject_id]) / window_days;
        buckets[{r.subject_id, window}].members.push_back(&r);
    }

    Cohort out;
    out.provenance = cohort.provenance;
    out.records.reserve(buckets.size());
    for (const auto& [key, bucket] : buckets) {
        const auto& [subject, window] = key;
        SubjectRecord merged;
        merged.subject_id = subject;
        merged.session_day = anchor[subject] + window * window_days;
        merged.group = bucket.members.front()->group;
        merged.gender = bucket.members.front()->gender;
        merged.roi.fill(0.0);
        double age_sum = 0.0;
        for (const SubjectRecord* r : bucket.members) {
            if (r->group != merged.group) {
                throw DataError("aggregate_sessions: subject '" + subject +
                                "' has conflicting group labels within one window");
            }
            if (r->gender != merged.gender) {
                throw DataError("aggregate_sessions: subject '" + subject +
                                "' has conflicting gender labels within one window");
            }
            age_sum += r->age;
            for (std::size_t i = 0; i < kNumRegions; ++i) merged.roi[i] += r->roi[i];
        }
        const double n = static_cast<double>(bucket.members.size());
        merged.age = age_sum / n;
        for (double& v : merged.roi) v /= n;
        out.records.push_back(std::move(merged));
    }
    return out;
}

double compute_icv(const SubjectRecord& record) {
    double icv = 0.0;
    for (double v : record.roi) icv += v;
    return icv;
}

namespace {

// Linear interpolation between order statistics (the numpy/scikit-learn
// default estimator).
double quantile_sorted(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = p * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= n) return sorted[n - 1];
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

BinEdges fit_quantile_bins(std::vector<double> values, std::size_t n_bins) {
    if (values.empty()) throw DataError("fit_quantile_bins: no values");
    if (n_bins < 2) throw ConfigError("fit_quantile_bins: need at least 2 bins");
    std::sort(values.begin(), values.end());
    BinEdges bins;
    bins.edges.reserve(n_bins - 1);
    for (std::size_t k = 1; k < n_bins; ++k) {
        bins.edges.push_back(quantile_sorted(values, static_cast<double>(k) / n_bins));
    }
    return bins;
}

std::size_t bin_index(const BinEdges& bins, double value) {
    std::size_t idx = 0;
    for (double e : bins.edges) {
        if (e < value) ++idx;
    }
    return std::min(idx, bins.edges.size());
}

std::array<double, kCovariateDim> encode_covariates(const SubjectRecord& record,
                                                    const BinEdges& age_bins,
                                                    const BinEdges& icv_bins) {
    std::array<double, kCovariateDim> c{};
    c[record.gender == Gender::M ? 0 : 1] = 1.0;
    c[2 + bin_index(age_bins, record.age)] = 1.0;
    c[12 + bin_index(icv_bins, compute_icv(record))] = 1.0;
    return c;
}

std::array<double, kNumRegions> icv_scale(const SubjectRecord& record) {
    const double icv = compute_icv(record);
    if (icv <= 0.0) {
        throw DataError("icv_scale: subject '" + record.subject_id + "' has non-positive ICV");
    }
    std::array<double, kNumRegions> out{};
    for (std::size_t i = 0; i < kNumRegions; ++i) out[i] = record.roi[i] / icv;
    return out;
}

RobustScalerParams robust_fit(const Matrix& train_x) {
    if (train_x.rows == 0) throw DataError("robust_fit: empty training matrix");
    RobustScalerParams params;
    params.median.resize(train_x.cols);
    params.iqr.resize(train_x.cols);
    std::vector<double> column(train_x.rows);
    for (std::size_t j = 0; j < train_x.cols; ++j) {
        for (std::size_t i = 0; i < train_x.rows; ++i) column[i] = train_x(i, j);
        std::sort(column.begin(), column.end());
        params.median[j] = quantile_sorted(column, 0.5);
        params.iqr[j] = quantile_sorted(column, 0.75) - quantile_sorted(column, 0.25);
    }
    return params;
}

Matrix robust_transform(const RobustScalerParams& params, const Matrix& x) {
    if (x.cols != params.median.size()) {
        throw DimensionError("robust_transform: feature count mismatch");
    }
    Matrix out = x;
    for (std::size_t j = 0; j < x.cols; ++j) {
        // Degenerate features (IQR 0) fall back to divisor 1.
        const double div = params.iqr[j] > 0.0 ? params.iqr[j] : 1.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            out(i, j) = (x(i, j) - params.median[j]) / div;
        }
    }
    return out;
}

Matrix robust_inverse(const RobustScalerParams& params, const Matrix& x) {
    if (x.cols != params.median.size()) {
        throw DimensionError("robust_inverse: feature count mismatch");
    }
    Matrix out = x;
    for (std::size_t j = 0; j < x.cols; ++j) {
        const double div = params.iqr[j] > 0.0 ? params.iqr[j] : 1.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            out(i, j) = x(i, j) * div + params.median[j];
        }
    }
    return out;
}

PreparedDataset split_cohort(const Cohort& cohort, double hc_train_fraction, Rng& rng) {
    if (hc_train_fraction <= 0.0 || hc_train_fraction >= 1.0) {
        throw ConfigError("split_cohort: hc_train_fraction must be in (0, 1)");
    }
    std::vector<std::size_t> hc_idx, ad_idx;
    for (std::size_t i = 0; i < cohort.records.size(); ++i) {
        (cohort.records[i].group == Group::HC ? hc_idx : ad_idx).push_back(i);
    }
    if (hc_idx.empty()) throw DataError("split_cohort: cohort has no HC records");
    if (ad_idx.empty()) throw DataError("split_cohort: cohort has no AD records");

    const std::vector<std::size_t> perm = rng.permutation(hc_idx.size());
    const auto n_train = static_cast<std::size_t>(
        std::llround(hc_train_fraction * static_cast<double>(hc_idx.size())));
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < hc_idx.size(); ++i) {
        (i < n_train ? train_rows : test_rows).push_back(hc_idx[perm[i]]);
    }
    test_rows.insert(test_rows.end(), ad_idx.begin(), ad_idx.end());
    if (train_rows.empty()) throw DataError("split_cohort: training split is empty");

    // Bins are fit on raw training age / raw training ICV; the features are
    // ICV shares, robust-scaled with training statistics.
    std::vector<double> train_ages, train_icvs;
    train_ages.reserve(train_rows.size());
    train_icvs.reserve(train_rows.size());
    for (std::size_t i : train_rows) {
        train_ages.push_back(cohort.records[i].age);
        train_icvs.push_back(compute_icv(cohort.records[i]));
    }

    PreparedDataset prepared;
    prepared.age_bins = fit_quantile_bins(train_ages, kNumBins);
    prepared.icv_bins = fit_quantile_bins(train_icvs, kNumBins);

    auto build_x = [&](const std::vector<std::size_t>& rows) {
        Matrix x(rows.size(), kNumRegions);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto shares = icv_scale(cohort.records[rows[r]]);
            for (std::size_t j = 0; j < kNumRegions; ++j) x(r, j) = shares[j];
        }
        return x;
    };
    auto build_c = [&](const std::vector<std::size_t>& rows) {
        Matrix c(rows.size(), kCovariateDim);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto cov =
                encode_covariates(cohort.records[rows[r]], prepared.age_bins, prepared.icv_bins);
            for (std::size_t j = 0; j < kCovariateDim; ++j) c(r, j) = cov[j];
        }
        return c;
    };

    const Matrix raw_train = build_x(train_rows);
    const Matrix raw_test = build_x(test_rows);
    prepared.scaler = robust_fit(raw_train);
    prepared.train_x = robust_transform(prepared.scaler, raw_train);
    prepared.test_x = robust_transform(prepared.scaler, raw_test);
    prepared.train_c = build_c(train_rows);
    prepared.test_c = build_c(test_rows);

    for (std::size_t i : train_rows) prepared.train_ids.push_back(cohort.records[i].subject_id);
    for (std::size_t i : test_rows) {
        prepared.test_ids.push_back(cohort.records[i].subject_id);
        prepared.test_labels.push_back(cohort.records[i].group);
    }
    return prepared;
}

}  // namespace acvae
