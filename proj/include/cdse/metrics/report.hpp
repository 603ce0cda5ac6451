#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdse/metrics/pesq.hpp"
#include "cdse/metrics/quality.hpp"
#include "cdse/signal/waveform.hpp"

namespace cdse::metrics {

// One row of the comparison table. stoi is a fraction; tables print it as %.
struct MetricsReport {
  std::optional<double> pesq;
  double csig = 0.0;
  double cbak = 0.0;
  double covl = 0.0;
  double ssnr_db = 0.0;
  double stoi = 0.0;
  double one_minus_wer = 0.0;

  // Throws kMalformed when a field leaves its range.
  void validate(const SsnrOptions& ssnr = {}) const;
  bool operator==(const MetricsReport&) const = default;
};

void to_json(nlohmann::json& j, const MetricsReport& r);
void from_json(const nlohmann::json& j, MetricsReport& r);

// Column means. pesq is present only when every input has it.
MetricsReport aggregate(const std::vector<MetricsReport>& reports);

// All columns for one track. Without a PESQ scorer the composite measures
// cannot be formed: kMissingPesq.
MetricsReport score_track(const signal::Waveform& clean, const signal::Waveform& estimate,
                          const std::string& reference_text, const std::string& hypothesis_text,
                          const PesqScorer* pesq);

}  // namespace cdse::metrics
