#pragma once

#include <string>
#include <vector>

namespace rlmtkit {

/// One optimizer step's worth of training telemetry.
struct MetricsRow {
    int64_t step = 0;
    double mean_reward = 0.0;
    double mean_thought_tokens = 0.0;
    double mean_response_tokens = 0.0;
    double mean_kl = 0.0;
    double loss = 0.0;
    double well_formed_frac = 0.0;
};

namespace metrics {

inline constexpr const char* kCsvHeader =
    "step,mean_reward,mean_thought_tokens,mean_response_tokens,mean_kl,loss,"
    "well_formed_frac";

std::string to_csv(const std::vector<MetricsRow>& rows);
void save_csv(const std::string& path, const std::vector<MetricsRow>& rows);

/// Parses a metrics CSV; malformed rows raise DataError with the row number.
std::vector<MetricsRow> load_csv(const std::string& path);

}  // namespace metrics
}  // namespace rlmtkit
