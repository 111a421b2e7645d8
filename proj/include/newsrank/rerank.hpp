#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "newsrank/backend.hpp"
#include "newsrank/candidate.hpp"
#include "newsrank/corpus.hpp"
#include "newsrank/errors.hpp"
#include "newsrank/prompts.hpp"

namespace newsrank {

/// Mean rating mapped to the unit interval: mean(samples)/(G-1).
inline double relevance_score(const std::vector<int>& samples, int G) {
  if (samples.empty()) throw DataError("no relevance draws");
  if (G < 2) throw ConfigError("G must be >= 2");
  double sum = 0.0;
  for (int s : samples) {
    if (s < 0 || s > G - 1)
      throw DataError("relevance sample out of range: " + std::to_string(s));
    sum += double(s);
  }
  return (sum / double(samples.size())) / double(G - 1);
}

/// First whole number in [0, G-1] found in the reply, scanning maximal digit
/// runs left to right. Out-of-range runs are skipped, so a reply echoing the
/// rating scale does not poison the parse.
inline std::optional<int> parse_relevance_label(std::string_view text, int G) {
  size_t i = 0;
  while (i < text.size()) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    long value = 0;
    bool overflow = false;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      if (value > 100000000L)
        overflow = true;
      else
        value = value * 10 + (text[i] - '0');
      ++i;
    }
    if (!overflow && value <= long(G - 1)) return int(value);
  }
  return std::nullopt;
}

/// Crowd accuracy at normalized time t: the latest crowd point at or before
/// t, the flat prior before the first point or when the series is empty.
inline double human_accuracy_at(const Question& q, double t) {
  double value = q.prior();
  for (const auto& p : q.crowd_series) {
    // Timestamps are strictly increasing, so normalized times never decrease.
    if (normalize_time(q, p.timestamp) > t) break;
    value = p.prob_correct;
  }
  return value;
}

// ---------------------------------------------------------------------------
// Recency curve
// ---------------------------------------------------------------------------

struct RecencyCurve {
  int bins = 0;
  double epsilon = 0.05;
  std::vector<double> bin_edges;          // bins+1 values from 0 to 1
  std::vector<double> raw_values;         // per-bin mean accuracy slope, 0 if empty
  std::vector<double> normalized_values;  // min-max rescaled into [epsilon, 1]
  std::vector<long> sample_counts;

  bool operator==(const RecencyCurve&) const = default;
};

/// Right-closed bins: bin i covers (i/B, (i+1)/B], with 0 falling into bin 0.
inline int curve_bin(double t, int bins) {
  long idx = long(std::ceil(t * double(bins))) - 1;
  return int(std::clamp(idx, 0L, long(bins - 1)));
}

/// Slope of crowd accuracy between consecutive article times, pooled over
/// all questions and averaged per bin. Each retrieval list is ordered
/// chronologically (ties by article id) before pairing; pairs whose
/// normalized times coincide contribute nothing.
inline RecencyCurve estimate_recency_curve(const QuestionSet& qs,
                                           const CandidateMap& retrievals, int bins,
                                           double epsilon) {
  if (bins < 2) throw ConfigError("curve bins must be >= 2");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw ConfigError("curve epsilon must be in (0, 1)");

  std::vector<double> sums(size_t(bins), 0.0);
  std::vector<long> counts(size_t(bins), 0);
  long usable_pairs = 0;

  for (const auto& [qid, list] : retrievals) {
    const Question* q = qs.find(qid);
    if (!q) throw DataError("retrievals reference unknown question " + qid);
    auto ordered = list;
    std::sort(ordered.begin(), ordered.end(),
              [](const RetrievalCandidate& a, const RetrievalCandidate& b) {
                if (a.publish_date != b.publish_date)
                  return a.publish_date < b.publish_date;
                return a.article_id < b.article_id;
              });
    for (size_t i = 1; i < ordered.size(); ++i) {
      double t0 = ordered[i - 1].t_norm;
      double t1 = ordered[i].t_norm;
      if (!(t1 > t0)) continue;
      double slope = (human_accuracy_at(*q, t1) - human_accuracy_at(*q, t0)) / (t1 - t0);
      int b = curve_bin(t1, bins);
      sums[size_t(b)] += slope;
      counts[size_t(b)] += 1;
      ++usable_pairs;
    }
  }
  if (usable_pairs == 0) throw DataError("insufficient temporal data");

  RecencyCurve curve;
  curve.bins = bins;
  curve.epsilon = epsilon;
  curve.bin_edges.resize(size_t(bins) + 1);
  for (int i = 0; i <= bins; ++i) curve.bin_edges[size_t(i)] = double(i) / double(bins);
  curve.raw_values.resize(size_t(bins));
  for (int i = 0; i < bins; ++i)
    curve.raw_values[size_t(i)] =
        counts[size_t(i)] ? sums[size_t(i)] / double(counts[size_t(i)]) : 0.0;
  curve.sample_counts = std::move(counts);

  auto [lo_it, hi_it] = std::minmax_element(curve.raw_values.begin(), curve.raw_values.end());
  double lo = *lo_it, hi = *hi_it;
  curve.normalized_values.resize(size_t(bins));
  for (int i = 0; i < bins; ++i) {
    // A flat raw curve carries no shape; it becomes the neutral multiplier 1.
    curve.normalized_values[size_t(i)] =
        hi > lo ? epsilon + (curve.raw_values[size_t(i)] - lo) * (1.0 - epsilon) / (hi - lo)
                : 1.0;
  }
  return curve;
}

inline double recency_score(const RecencyCurve& curve, double t_norm) {
  if (curve.bins < 1 || curve.normalized_values.empty())
    throw DataError("recency curve not built");
  return curve.normalized_values[size_t(curve_bin(t_norm, curve.bins))];
}

// ---------------------------------------------------------------------------
// Relevance rating through the backend
// ---------------------------------------------------------------------------

inline constexpr double kRelevanceTemperature = 0.7;
inline constexpr int kRelevanceMaxTokens = 16;

/// Draws l ratings for one pair. A reply with no in-range number is redrawn
/// once under a fresh sample index; a second failure discards that draw.
inline std::vector<int> rate_candidate(const Question& q, const NewsArticle& n, int G,
                                       int l, CompletionBackend& backend) {
  if (l < 1) throw ConfigError("l must be >= 1");
  std::string prompt = prompts::relevance_prompt(q, n.title, n.body, G);
  std::vector<int> labels;
  for (int i = 0; i < l; ++i) {
    CompletionRequest req{prompt, kRelevanceMaxTokens, kRelevanceTemperature, uint64_t(i)};
    auto label = parse_relevance_label(backend.complete(req), G);
    if (!label) {
      req.sample_index = uint64_t(l + i);  // redraw under a distinct cache slot
      label = parse_relevance_label(backend.complete(req), G);
    }
    if (label) labels.push_back(*label);
  }
  if (labels.empty())
    throw BackendError("unratable pair: " + q.id + " / " + n.id);
  return labels;
}

/// Fans relevance rating out over every candidate with bounded concurrency,
/// then fills samples, s_r, s_t and the combined s. Candidate order inside
/// each question is preserved.
inline CandidateMap score_candidates(const QuestionSet& qs, const ArticleStore& store,
                                     const CandidateMap& retrieved,
                                     const RecencyCurve& curve, int G, int l,
                                     CompletionBackend& backend, unsigned in_flight) {
  if (l < 1) throw ConfigError("l must be >= 1");

  struct PairRef {
    const Question* q;
    const NewsArticle* n;
    std::string qid;
    size_t slot;  // index into the question's candidate list
  };
  std::vector<PairRef> pairs;
  CandidateMap out = retrieved;
  for (auto& [qid, list] : out) {
    const Question* q = qs.find(qid);
    if (!q) throw DataError("candidates reference unknown question " + qid);
    for (size_t i = 0; i < list.size(); ++i) {
      const NewsArticle* n = store.find(list[i].article_id);
      if (!n) throw DataError("candidate references unknown article " + list[i].article_id);
      pairs.push_back({q, n, qid, i});
    }
  }

  std::vector<CompletionRequest> reqs;
  reqs.reserve(pairs.size() * size_t(l));
  for (const auto& p : pairs) {
    std::string prompt = prompts::relevance_prompt(*p.q, p.n->title, p.n->body, G);
    for (int i = 0; i < l; ++i)
      reqs.push_back({prompt, kRelevanceMaxTokens, kRelevanceTemperature, uint64_t(i)});
  }
  auto outcomes = complete_many(backend, reqs, in_flight);

  // Failed parses get one redraw each, batched as a second wave.
  std::vector<CompletionRequest> redraws;
  std::vector<size_t> redraw_origin;  // index into reqs/outcomes
  std::vector<std::optional<int>> labels(reqs.size());
  for (size_t i = 0; i < reqs.size(); ++i) {
    if (!outcomes[i].ok)
      throw BackendError(outcomes[i].error, outcomes[i].http_status);
    labels[i] = parse_relevance_label(outcomes[i].text, G);
    if (!labels[i]) {
      CompletionRequest r = reqs[i];
      r.sample_index += uint64_t(l);
      redraw_origin.push_back(i);
      redraws.push_back(std::move(r));
    }
  }
  if (!redraws.empty()) {
    auto second = complete_many(backend, redraws, in_flight);
    for (size_t k = 0; k < second.size(); ++k) {
      if (!second[k].ok)
        throw BackendError(second[k].error, second[k].http_status);
      labels[redraw_origin[k]] = parse_relevance_label(second[k].text, G);
    }
  }

  for (size_t p = 0; p < pairs.size(); ++p) {
    std::vector<int> samples;
    for (int i = 0; i < l; ++i) {
      auto& label = labels[p * size_t(l) + size_t(i)];
      if (label) samples.push_back(*label);
    }
    auto& cand = out[pairs[p].qid][pairs[p].slot];
    if (samples.empty())
      throw BackendError("unratable pair: " + pairs[p].qid + " / " + cand.article_id);
    cand.relevance_samples = std::move(samples);
    cand.s_r = relevance_score(cand.relevance_samples, G);
    cand.s_t = recency_score(curve, cand.t_norm);
    cand.s = cand.s_r * cand.s_t;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Selection
// ---------------------------------------------------------------------------

/// Top-N by combined score; ties prefer the newer article, then the smaller
/// id. The sort key is total, so input order never matters.
inline std::vector<RetrievalCandidate> rerank_select(std::vector<RetrievalCandidate> candidates,
                                                     int N) {
  if (N < 1) throw ConfigError("N must be >= 1");
  std::sort(candidates.begin(), candidates.end(),
            [](const RetrievalCandidate& a, const RetrievalCandidate& b) {
              if (a.s != b.s) return a.s > b.s;
              if (a.publish_date != b.publish_date) return a.publish_date > b.publish_date;
              return a.article_id < b.article_id;
            });
  if (candidates.size() > size_t(N)) candidates.resize(size_t(N));
  return candidates;
}

inline std::vector<RetrievalCandidate> filter_by_threshold(
    std::vector<RetrievalCandidate> candidates, double theta) {
  std::erase_if(candidates, [&](const RetrievalCandidate& c) { return c.s < theta; });
  return candidates;
}

}  // namespace newsrank
