#pragma once

// Independent reference implementations used only to cross-check the library.
// These deliberately avoid the library's index/scoring code paths.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <newsrank/corpus.hpp>
#include <newsrank/targets.hpp>
#include <newsrank/tokenizer.hpp>

namespace oracles {

/// Okapi BM25 computed directly from token vectors, no inverted index.
struct BruteDoc {
  std::string id;
  newsrank::Date date;
  std::vector<std::string> tokens;
};

inline double brute_bm25(const std::vector<BruteDoc>& corpus, size_t doc,
                         const std::vector<std::string>& query, double k1, double b) {
  double n = double(corpus.size());
  double avgdl = 0.0;
  for (const auto& d : corpus) avgdl += double(d.tokens.size());
  avgdl = corpus.empty() ? 0.0 : avgdl / n;

  double score = 0.0;
  for (const auto& term : query) {
    double df = 0.0;
    for (const auto& d : corpus)
      if (std::find(d.tokens.begin(), d.tokens.end(), term) != d.tokens.end()) df += 1.0;
    double tf = 0.0;
    for (const auto& t : corpus[doc].tokens)
      if (t == term) tf += 1.0;
    if (tf == 0.0) continue;
    double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    double dl = double(corpus[doc].tokens.size());
    double norm = avgdl > 0.0 ? dl / avgdl : 0.0;
    score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * norm));
  }
  return score;
}

/// Window filter + sort + truncate, mirroring the retrieval contract but
/// computed from the brute-force scores.
inline std::vector<std::string> brute_retrieve(const std::vector<BruteDoc>& corpus,
                                               const std::vector<std::string>& query,
                                               const newsrank::Date& start,
                                               const newsrank::Date& expiry, int K,
                                               double k1, double b) {
  struct Row {
    std::string id;
    newsrank::Date date;
    double score;
  };
  std::vector<Row> rows;
  for (size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].date < start || corpus[i].date > expiry) continue;
    rows.push_back({corpus[i].id, corpus[i].date, brute_bm25(corpus, i, query, k1, b)});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b2) {
    if (a.score != b2.score) return a.score > b2.score;
    if (a.date != b2.date) return a.date < b2.date;
    return a.id < b2.id;
  });
  if (rows.size() > size_t(K)) rows.resize(size_t(K));
  std::vector<std::string> ids;
  for (const auto& r : rows) ids.push_back(r.id);
  return ids;
}

/// Plain mean over integer samples, accumulated in extended precision.
inline double brute_relevance(const std::vector<int>& samples, int G) {
  long double sum = 0.0L;
  for (int s : samples) sum += s;
  return double(sum / (long double)(samples.size()) / (long double)(G - 1));
}

/// Grid search over constant confidence vectors; returns the minimizing u.
inline double grid_min_alignment(const std::vector<double>& h) {
  double best_u = 0.01, best = 1e300;
  for (int i = 1; i <= 99; ++i) {
    double u = double(i) / 100.0;
    std::vector<double> uv(h.size(), u);
    double v = newsrank::alignment_term(h, uv);
    if (v < best) {
      best = v;
      best_u = u;
    }
  }
  return best_u;
}

inline double grid_min_alignment_value(const std::vector<double>& h) {
  double best = 1e300;
  for (int i = 1; i <= 99; ++i) {
    double u = double(i) / 100.0;
    std::vector<double> uv(h.size(), u);
    best = std::min(best, newsrank::alignment_term(h, uv));
  }
  return best;
}

}  // namespace oracles
