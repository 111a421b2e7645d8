#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "newsrank/corpus.hpp"
#include "newsrank/errors.hpp"
#include "newsrank/format.hpp"
#include "newsrank/rerank.hpp"

namespace newsrank {

/// Final answer for one question: a choice label, or a unit-interval number
/// for numerical questions.
struct Prediction {
  std::string label;
  double value = 0.0;
  bool is_number = false;
};

struct MetricsReport {
  double tf_accuracy = 0.0;    // percent correct
  double mcq_accuracy = 0.0;   // percent correct
  double num_abs_error = 0.0;  // mean |pred - gt| × 100
  size_t tf_count = 0, mcq_count = 0, num_count = 0;
  std::vector<std::string> unanswered;  // qids without a usable prediction
  std::vector<std::string> flagged;     // qid: reason
  std::string fingerprint;

  json to_json() const {
    json out;
    out["tf"] = {{"accuracy", tf_accuracy}, {"count", tf_count}};
    out["mcq"] = {{"accuracy", mcq_accuracy}, {"count", mcq_count}};
    out["num"] = {{"abs_error", num_abs_error}, {"count", num_count}};
    out["unanswered"] = unanswered;
    out["flagged"] = flagged;
    out["fingerprint"] = fingerprint;
    return out;
  }
};

/// Accuracy for choice questions, mean absolute error for numerical ones.
/// Questions without a usable prediction are excluded from the means and
/// listed; a label outside the choices counts as wrong and is flagged.
inline MetricsReport evaluate_predictions(const QuestionSet& qs,
                                          const std::map<std::string, Prediction>& preds,
                                          const std::string& fingerprint = "") {
  MetricsReport rep;
  rep.fingerprint = fingerprint;
  size_t tf_correct = 0, mcq_correct = 0;
  double num_err_sum = 0.0;
  for (const auto& q : qs) {
    auto it = preds.find(q.id);
    if (it == preds.end()) {
      rep.unanswered.push_back(q.id);
      continue;
    }
    const Prediction& p = it->second;
    if (q.qtype == QType::NUM) {
      if (!p.is_number) {
        rep.flagged.push_back(q.id + ": numerical prediction is not a number");
        rep.unanswered.push_back(q.id);
        continue;
      }
      ++rep.num_count;
      num_err_sum += std::fabs(p.value - q.answer_value) * 100.0;
      continue;
    }
    bool known_label =
        std::find(q.choices.begin(), q.choices.end(), p.label) != q.choices.end();
    if (!known_label)
      rep.flagged.push_back(q.id + ": prediction label outside choices");
    bool correct = known_label && p.label == q.answer_text;
    if (q.qtype == QType::TF) {
      ++rep.tf_count;
      tf_correct += correct ? 1 : 0;
    } else {
      ++rep.mcq_count;
      mcq_correct += correct ? 1 : 0;
    }
  }
  rep.tf_accuracy = rep.tf_count ? 100.0 * double(tf_correct) / double(rep.tf_count) : 0.0;
  rep.mcq_accuracy =
      rep.mcq_count ? 100.0 * double(mcq_correct) / double(rep.mcq_count) : 0.0;
  rep.num_abs_error = rep.num_count ? num_err_sum / double(rep.num_count) : 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Curve export
// ---------------------------------------------------------------------------

/// CSV rows bin_left,bin_right,raw,normalized,count. A leading "#" comment
/// carries the fingerprint; values use shortest round-trip formatting so a
/// re-parse reproduces the curve exactly.
inline void emit_recency_curve(const RecencyCurve& curve, std::ostream& os,
                               const std::string& fingerprint = "") {
  if (!fingerprint.empty()) os << "# fingerprint=" << fingerprint << "\n";
  os << "bin_left,bin_right,raw,normalized,count\n";
  for (int i = 0; i < curve.bins; ++i) {
    os << format_double(curve.bin_edges[size_t(i)]) << ','
       << format_double(curve.bin_edges[size_t(i) + 1]) << ','
       << format_double(curve.raw_values[size_t(i)]) << ','
       << format_double(curve.normalized_values[size_t(i)]) << ','
       << curve.sample_counts[size_t(i)] << "\n";
  }
}

/// Rebuilds a curve from the CSV (epsilon is not stored; the default stands).
inline RecencyCurve parse_recency_curve(std::istream& is) {
  RecencyCurve curve;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "bin_left,bin_right,raw,normalized,count")
        throw DataError("curve CSV: unexpected header");
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw DataError("curve CSV: expected 5 columns");
    if (curve.bin_edges.empty()) curve.bin_edges.push_back(parse_double(cells[0]));
    curve.bin_edges.push_back(parse_double(cells[1]));
    curve.raw_values.push_back(parse_double(cells[2]));
    curve.normalized_values.push_back(parse_double(cells[3]));
    curve.sample_counts.push_back(std::stol(cells[4]));
  }
  if (!header_seen) throw DataError("curve CSV: missing header");
  curve.bins = int(curve.raw_values.size());
  if (curve.bins == 0) throw DataError("curve CSV: no data rows");
  return curve;
}

}  // namespace newsrank
