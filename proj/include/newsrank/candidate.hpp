#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "newsrank/corpus.hpp"
#include "newsrank/date.hpp"
#include "newsrank/errors.hpp"

namespace newsrank {

/// One (question, article) pairing moving through retrieval and re-ranking.
/// publish_date is carried for sorting and recency lookups; the persisted
/// form holds the scores only and restores dates from the article store.
struct RetrievalCandidate {
  std::string question_id;
  std::string article_id;
  double bm25 = 0.0;
  std::vector<int> relevance_samples;
  double s_r = 0.0;
  double t_norm = 0.0;
  double s_t = 0.0;
  double s = 0.0;
  Date publish_date;

  bool operator==(const RetrievalCandidate&) const = default;
};

inline json candidate_to_json(const RetrievalCandidate& c) {
  json out;
  out["qid"] = c.question_id;
  out["aid"] = c.article_id;
  out["bm25"] = c.bm25;
  out["samples"] = c.relevance_samples;
  out["s_r"] = c.s_r;
  out["t_norm"] = c.t_norm;
  out["s_t"] = c.s_t;
  out["s"] = c.s;
  return out;
}

inline RetrievalCandidate candidate_from_json(const json& obj, const ArticleStore& store) {
  RetrievalCandidate c;
  c.question_id = obj.at("qid").get<std::string>();
  c.article_id = obj.at("aid").get<std::string>();
  c.bm25 = obj.at("bm25").get<double>();
  if (obj.contains("samples"))
    c.relevance_samples = obj["samples"].get<std::vector<int>>();
  if (obj.contains("s_r")) c.s_r = obj["s_r"].get<double>();
  c.t_norm = obj.at("t_norm").get<double>();
  if (obj.contains("s_t")) c.s_t = obj["s_t"].get<double>();
  if (obj.contains("s")) c.s = obj["s"].get<double>();
  const NewsArticle* a = store.find(c.article_id);
  if (!a) throw DataError("candidate references unknown article " + c.article_id);
  c.publish_date = a->publish_date;
  return c;
}

/// Candidates grouped per question, preserving within-question order.
using CandidateMap = std::map<std::string, std::vector<RetrievalCandidate>>;

}  // namespace newsrank
