#pragma once

#include <stdexcept>
#include <string>

namespace acvae {

// Error taxonomy used across the library. All are runtime_error so callers
// that do not care about the category can catch one type.

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IngestError : std::runtime_error {
    explicit IngestError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when training hits a non-finite loss; carries the location so the
// CLI can report it and preserve the partial log.
struct TrainError : std::runtime_error {
    int epoch = -1;
    int batch = -1;
    TrainError(const std::string& msg, int epoch_idx, int batch_idx)
        : std::runtime_error(msg), epoch(epoch_idx), batch(batch_idx) {}
};

}  // namespace acvae
