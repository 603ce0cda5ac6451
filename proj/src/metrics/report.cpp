#include "cdse/metrics/report.hpp"

#include <cmath>

#include "cdse/error.hpp"
#include "cdse/metrics/stoi.hpp"
#include "cdse/metrics/wer.hpp"

namespace cdse::metrics {

void MetricsReport::validate(const SsnrOptions& ssnr) const {
  auto check = [](bool ok, const std::string& what) { require(ok, ErrorCode::kMalformed, "metrics report: " + what); };
  check(ssnr_db >= ssnr.min_db && ssnr_db <= ssnr.max_db, "ssnr_db outside the clamp range");
  check(stoi >= 0.0 && stoi <= 1.0, "stoi outside [0, 1]");
  check(one_minus_wer <= 1.0, "1 - WER above 1");
  for (const double v : {csig, cbak, covl}) check(v >= 1.0 && v <= 5.0, "composite measure outside [1, 5]");
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
  j = nlohmann::json{{"pesq", r.pesq ? nlohmann::json(*r.pesq) : nlohmann::json(nullptr)},
                     {"csig", r.csig},
                     {"cbak", r.cbak},
                     {"covl", r.covl},
                     {"ssnr_db", r.ssnr_db},
                     {"stoi", r.stoi},
                     {"one_minus_wer", r.one_minus_wer}};
}

void from_json(const nlohmann::json& j, MetricsReport& r) {
  r.pesq = j.at("pesq").is_null() ? std::nullopt : std::optional<double>(j.at("pesq").get<double>());
  j.at("csig").get_to(r.csig);
  j.at("cbak").get_to(r.cbak);
  j.at("covl").get_to(r.covl);
  j.at("ssnr_db").get_to(r.ssnr_db);
  j.at("stoi").get_to(r.stoi);
  j.at("one_minus_wer").get_to(r.one_minus_wer);
}

MetricsReport aggregate(const std::vector<MetricsReport>& reports) {
  require(!reports.empty(), ErrorCode::kMalformed, "nothing to aggregate");
  MetricsReport m;
  double pesq = 0.0;
  bool all_pesq = true;
  for (const auto& r : reports) {
    m.csig += r.csig;
    m.cbak += r.cbak;
    m.covl += r.covl;
    m.ssnr_db += r.ssnr_db;
    m.stoi += r.stoi;
    m.one_minus_wer += r.one_minus_wer;
    all_pesq = all_pesq && r.pesq.has_value();
    if (r.pesq) pesq += *r.pesq;
  }
  const auto n = static_cast<double>(reports.size());
  m.csig /= n;
  m.cbak /= n;
  m.covl /= n;
  m.ssnr_db /= n;
  m.stoi /= n;
  m.one_minus_wer /= n;
  if (all_pesq) m.pesq = pesq / n;
  return m;
}

MetricsReport score_track(const signal::Waveform& clean, const signal::Waveform& estimate,
                          const std::string& reference_text, const std::string& hypothesis_text,
                          const PesqScorer* pesq) {
  require(pesq != nullptr, ErrorCode::kMissingPesq, "composite measures need a PESQ scorer");
  MetricsReport r;
  r.ssnr_db = ssnr(clean, estimate);
  r.stoi = stoi(clean, estimate);
  r.pesq = pesq->score(clean, estimate);
  const auto c = composite_measures(*r.pesq, llr(clean, estimate), wss(clean, estimate), r.ssnr_db);
  r.csig = c.csig;
  r.cbak = c.cbak;
  r.covl = c.covl;
  r.one_minus_wer = 1.0 - wer(reference_text, hypothesis_text);
  return r;
}

}  // namespace cdse::metrics
