#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "newsrank/errors.hpp"

namespace newsrank {

/// The published inverse formula b·(hi−lo)/(2R) does not return bin centers
/// (bin b's center is (2b−1)(hi−lo)/(2R) + lo); both are offered and the
/// self-consistent midpoint is the default.
enum class InverseConvention { paper_literal, bin_midpoint };

struct BinSpec {
  int R = 20;
  double lo = 0.0;
  double hi = 1.0;
  InverseConvention inverse = InverseConvention::bin_midpoint;

  void validate() const {
    if (R < 1) throw ConfigError("bin count R must be >= 1");
    if (!(lo < hi)) throw ConfigError("bin range requires lo < hi");
  }
};

/// Discretizes o ∈ [lo, hi] into a 1-based bin: ⌈(o − lo)/((hi − lo)/R)⌉,
/// with o == lo pinned to bin 1.
inline int bin_numeric(double o, const BinSpec& spec) {
  spec.validate();
  if (!(o >= spec.lo && o <= spec.hi))
    throw DataError("out of range: " + std::to_string(o));
  double width = (spec.hi - spec.lo) / double(spec.R);
  long b = long(std::ceil((o - spec.lo) / width));
  if (b < 1) b = 1;
  if (b > spec.R) b = spec.R;
  return int(b);
}

inline double unbin_numeric(int b, const BinSpec& spec) {
  spec.validate();
  if (b < 1 || b > spec.R) throw DataError("bin out of range: " + std::to_string(b));
  if (spec.inverse == InverseConvention::bin_midpoint)
    return spec.lo + double(2 * b - 1) * (spec.hi - spec.lo) / double(2 * spec.R);
  return double(b) * (spec.hi - spec.lo) / double(2 * spec.R);
}

// ---------------------------------------------------------------------------
// Training objective over externally supplied model outputs
// ---------------------------------------------------------------------------

inline constexpr double kLogClip = 1e-7;

struct LossReport {
  double decoder_term = 0.0;
  double alignment_term = 0.0;
  double total = 0.0;
  double lambda = 0.0;
  bool gt_clipped = false;  // ground-truth probability was raised to the clip floor

  bool operator==(const LossReport&) const = default;
};

/// Mean binary cross-entropy between confidences u and crowd targets h.
/// u is clipped into [δ, 1−δ] before the logs; h is used as-is.
inline double alignment_term(const std::vector<double>& h, const std::vector<double>& u) {
  if (h.size() != u.size()) throw DataError("alignment length mismatch");
  if (h.empty()) throw DataError("alignment lists empty");
  double sum = 0.0;
  for (size_t i = 0; i < h.size(); ++i) {
    if (!(h[i] >= 0.0 && h[i] <= 1.0))
      throw DataError("alignment target outside [0,1]");
    double ui = std::clamp(u[i], kLogClip, 1.0 - kLogClip);
    sum += -(h[i] * std::log(ui) + (1.0 - h[i]) * std::log(1.0 - ui));
  }
  return sum / double(h.size());
}

/// Negative log-likelihood of the ground truth plus λ times the alignment
/// term. Empty h/u (a record with no articles) contributes no alignment.
inline LossReport forecast_loss(const std::map<std::string, double>& pred,
                                const std::string& gt_label, const std::vector<double>& h,
                                const std::vector<double>& u, double lambda) {
  if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
  double mass = 0.0;
  for (const auto& [label, p] : pred) {
    if (!(p >= 0.0)) throw DataError("negative probability for label " + label);
    mass += p;
  }
  if (std::fabs(mass - 1.0) > 1e-6) throw DataError("prediction not normalized");
  auto it = pred.find(gt_label);
  if (it == pred.end())
    throw DataError("ground truth label missing from prediction: " + gt_label);

  LossReport report;
  report.lambda = lambda;
  double p = it->second;
  if (p < kLogClip) {
    p = kLogClip;
    report.gt_clipped = true;
  }
  report.decoder_term = -std::log(p);
  report.alignment_term = h.empty() && u.empty() ? 0.0 : alignment_term(h, u);
  report.total = report.decoder_term + lambda * report.alignment_term;
  return report;
}

}  // namespace newsrank
