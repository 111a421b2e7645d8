#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "newsrank/assemble.hpp"
#include "newsrank/backend.hpp"
#include "newsrank/candidate.hpp"
#include "newsrank/config.hpp"
#include "newsrank/corpus.hpp"
#include "newsrank/errors.hpp"
#include "newsrank/evaluate.hpp"
#include "newsrank/index.hpp"
#include "newsrank/jsonl.hpp"
#include "newsrank/rerank.hpp"
#include "newsrank/summarize.hpp"
#include "newsrank/targets.hpp"

namespace newsrank {

/// Fixed artifact layout under the configured output directory. Stages read
/// their predecessors' files from here and nowhere else.
struct ArtifactPaths {
  explicit ArtifactPaths(const PipelineConfig& cfg) : out(cfg.paths.out) {}
  std::string out;

  std::string questions() const { return out + "/questions.jsonl"; }
  std::string articles() const { return out + "/articles.jsonl"; }
  std::string validation() const { return out + "/validation.json"; }
  std::string index() const { return out + "/index.json"; }
  std::string retrieved() const { return out + "/retrieved.jsonl"; }
  std::string curve() const { return out + "/curve.csv"; }
  std::string reranked() const { return out + "/reranked.jsonl"; }
  std::string summaries() const { return out + "/summaries.jsonl"; }
  std::string assembled() const { return out + "/assembled.jsonl"; }
  std::string loss() const { return out + "/loss.json"; }
  std::string metrics() const { return out + "/metrics.json"; }
};

namespace detail {

inline void require_artifact(const std::string& path, const char* producer) {
  if (!std::filesystem::exists(path))
    throw StageError(std::string("requires: ") + producer);
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  json obj = json::parse(in, nullptr, false);
  if (obj.is_discarded()) throw DataError("cannot parse JSON: " + path);
  return obj;
}

}  // namespace detail

/// Canonical dataset written by `ingest`. These files are produced by this
/// tool, so any reject means corruption.
inline LoadResult load_canonical(const ArtifactPaths& ap) {
  detail::require_artifact(ap.questions(), "ingest");
  detail::require_artifact(ap.articles(), "ingest");
  auto res = load_dataset(ap.questions(), ap.articles());
  if (!res.report.rejects.empty()) {
    const auto& r = res.report.rejects.front();
    throw DataError("canonical artifact invalid at " + r.file + ":" +
                    std::to_string(r.line) + ": " + r.reason);
  }
  return res;
}

inline CandidateMap load_candidates(const std::string& path, const ArticleStore& store) {
  CandidateMap out;
  read_artifact_jsonl(path, [&](const json& obj) {
    RetrievalCandidate c = candidate_from_json(obj, store);
    out[c.question_id].push_back(std::move(c));
  });
  return out;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

/// Reads the raw inputs, validates them, and writes the canonical dataset
/// plus a validation report. Question files in the published Autocast array
/// layout are converted on the fly.
inline LoadResult run_ingest(const PipelineConfig& cfg) {
  if (cfg.paths.questions.empty())
    throw ConfigError("invalid config field paths.questions: required");
  if (cfg.paths.articles.empty())
    throw ConfigError("invalid config field paths.articles: required");
  ArtifactPaths ap(cfg);

  std::ifstream probe(cfg.paths.questions);
  if (!probe) throw DataError("cannot open file: " + cfg.paths.questions);
  char first = 0;
  probe >> std::ws;
  probe.get(first);
  probe.close();

  LoadResult res;
  if (first == '[')
    res.questions = load_autocast_questions(cfg.paths.questions, res.report);
  else
    res.questions = load_questions(cfg.paths.questions, res.report);
  res.articles = load_articles(cfg.paths.articles, res.report);
  if (!cfg.paths.forecasts.empty())
    attach_forecasts(res.questions, cfg.paths.forecasts, res.report);
  flag_missing_crowd(res.questions, res.report);

  ValidationReport vrep = validate_dataset(res.questions, cfg.cutoff());

  json meta = {{"fingerprint", cfg.fingerprint()}};
  {
    auto os = open_artifact(ap.questions());
    write_jsonl_meta(os, meta);
    write_questions_jsonl(res.questions, os);
  }
  {
    auto os = open_artifact(ap.articles());
    write_jsonl_meta(os, meta);
    write_articles_jsonl(res.articles, os);
  }
  {
    json out = vrep.to_json();
    out["fingerprint"] = cfg.fingerprint();
    out["load_report"] = res.report.to_json();
    auto os = open_artifact(ap.validation());
    os << out.dump(2) << "\n";
  }
  return res;
}

inline void run_index(const PipelineConfig& cfg) {
  ArtifactPaths ap(cfg);
  auto data = load_canonical(ap);
  Index ix = Index::build(data.articles, cfg.retrieval.k1, cfg.retrieval.b);
  json out = ix.to_json();
  out["fingerprint"] = cfg.fingerprint();
  auto os = open_artifact(ap.index());
  os << out.dump() << "\n";
}

inline void run_retrieve(const PipelineConfig& cfg) {
  ArtifactPaths ap(cfg);
  auto data = load_canonical(ap);
  detail::require_artifact(ap.index(), "index");
  Index ix = Index::from_json(detail::load_json_file(ap.index()));

  auto os = open_artifact(ap.retrieved());
  write_jsonl_meta(os, {{"fingerprint", cfg.fingerprint()}});
  for (const auto& q : data.questions) {
    for (const auto& c : ix.retrieve_topk(q, cfg.retrieval.K)) {
      json line;
      line["qid"] = c.question_id;
      line["aid"] = c.article_id;
      line["bm25"] = c.bm25;
      line["t_norm"] = c.t_norm;
      os << line.dump() << "\n";
    }
  }
}

/// Estimates the recency curve on training-split questions only (expiry
/// before the cut-off), so test questions never leak into it.
inline RecencyCurve run_curve(const PipelineConfig& cfg) {
  ArtifactPaths ap(cfg);
  auto data = load_canonical(ap);
  detail::require_artifact(ap.retrieved(), "retrieve");
  CandidateMap all = load_candidates(ap.retrieved(), data.articles);

  Date cutoff = cfg.cutoff();
  CandidateMap train;
  for (auto& [qid, list] : all) {
    const Question* q = data.questions.find(qid);
    if (!q) throw DataError("retrievals reference unknown question " + qid);
    if (is_train(*q, cutoff)) train[qid] = list;
  }
  RecencyCurve curve =
      estimate_recency_curve(data.questions, train, cfg.rerank.B, cfg.rerank.epsilon);
  auto os = open_artifact(ap.curve());
  emit_recency_curve(curve, os, cfg.fingerprint());
  return curve;
}

/// Rates every retrieved pair through the backend, combines relevance with
/// recency, and keeps the filtered top-N per question.
inline void run_rerank(const PipelineConfig& cfg) {
  ArtifactPaths ap(cfg);
  auto data = load_canonical(ap);
  detail::require_artifact(ap.retrieved(), "retrieve");
  detail::require_artifact(ap.curve(), "curve");

  CandidateMap retrieved = load_candidates(ap.retrieved(), data.articles);
  RecencyCurve curve;
  {
    std::ifstream in(ap.curve());
    curve = parse_recency_curve(in);
  }
  auto backend = cfg.make_backend();
  CandidateMap scored =
      score_candidates(data.questions, data.articles, retrieved, curve, cfg.rerank.G,
                       cfg.rerank.l, *backend, unsigned(cfg.backend.concurrency));

  auto os = open_artifact(ap.reranked());
  write_jsonl_meta(os, {{"fingerprint", cfg.fingerprint()}});
  for (const auto& q : data.questions) {
    auto it = scored.find(q.id);
    if (it == scored.end()) continue;
    auto selected =
        filter_by_threshold(rerank_select(it->second, cfg.rerank.N), cfg.rerank.theta);
    for (const auto& c : selected) os << candidate_to_json(c).dump() << "\n";
  }
}

inline DistillBatch run_summarize(const PipelineConfig& cfg) {
  ArtifactPaths ap(cfg);
  auto data = load_canonical(ap);
  detail::require_artifact(ap.reranked(), "rerank");

  std::set<std::string> aids;
  read_artifact_jsonl(ap.reranked(), [&](const json& obj) {
    aids.insert(obj.at("aid").get<std::string>());
  });
  std::vector<NewsArticle> inputs;
  for (const auto& aid : aids) {
    const NewsArticle* a = data.articles.find(aid);
    if (!a) throw DataError("reranked candidates reference unknown article " + aid);
    inputs.push_back(*a);
  }

  auto backend = cfg.make_backend();
  SummarizeOptions opt;
  opt.min_tokens = cfg.summarize.min_tokens;
  opt.max_output_tokens = cfg.summarize.max_output_tokens;
  opt.in_flight = unsigned(cfg.backend.concurrency);
  DistillBatch batch = distill_batch(inputs, *backend, opt);

  json meta = {{"fingerprint", cfg.fingerprint()}};
  json failures = json::array();
  for (const auto& [aid, reason] : batch.failures)
    failures.push_back({{"aid", aid}, {"reason", reason}});
  meta["failures"] = std::move(failures);
  auto os = open_artifact(ap.summaries());
  write_jsonl_meta(os, meta);
  for (const auto& s : batch.summaries) {
    json line;
    line["aid"] = s.origin;
    line["summary"] = s.summary;
    os << line.dump() << "\n";
  }
  return batch;
}

/// One reader-ready record per question; questions whose selection came out
/// empty still get a record so downstream joins stay total.
inline std::vector<std::string> run_assemble(const PipelineConfig& cfg) {
  ArtifactPaths ap(cfg);
  auto data = load_canonical(ap);
  detail::require_artifact(ap.reranked(), "rerank");
  detail::require_artifact(ap.summaries(), "summarize");

  CandidateMap selected = load_candidates(ap.reranked(), data.articles);
  std::map<std::string, std::string> summaries;
  read_artifact_jsonl(ap.summaries(), [&](const json& obj) {
    summaries[obj.at("aid").get<std::string>()] = obj.at("summary").get<std::string>();
  });

  std::vector<std::string> flags;
  auto os = open_artifact(ap.assembled());
  write_jsonl_meta(os, {{"fingerprint", cfg.fingerprint()}});
  for (const auto& q : data.questions) {
    std::vector<SummarizedArticle> chosen;
    auto it = selected.find(q.id);
    if (it != selected.end()) {
      for (const auto& c : it->second) {
        const NewsArticle* a = data.articles.find(c.article_id);
        if (!a) throw DataError("candidate references unknown article " + c.article_id);
        auto sit = summaries.find(c.article_id);
        if (sit == summaries.end()) {
          flags.push_back(q.id + ": no summary for article " + c.article_id);
          continue;
        }
        SummarizedArticle s;
        s.origin = a->id;
        s.title = a->title;
        s.publish_date = a->publish_date;
        s.summary = sit->second;
        s.origin_token_count = token_count(a->body);
        s.summary_token_count = token_count(s.summary);
        chosen.push_back(std::move(s));
      }
    }
    if (chosen.empty()) flags.push_back(q.id + ": empty selection");
    AssembledRecord rec = assemble_record(q, std::move(chosen), cfg.bin_spec());
    os << record_to_json(rec).dump() << "\n";
  }
  return flags;
}

/// Scores externally produced model outputs against the assembled targets.
/// Prediction lines: {"qid", "pred": {label: prob}, "u": [...]}.
inline json run_loss(const PipelineConfig& cfg) {
  ArtifactPaths ap(cfg);
  detail::require_artifact(ap.assembled(), "assemble");
  if (cfg.paths.predictions.empty())
    throw ConfigError("invalid config field paths.predictions: required for loss");

  std::map<std::string, AssembledRecord> records;
  read_artifact_jsonl(ap.assembled(), [&](const json& obj) {
    AssembledRecord rec = record_from_json(obj);
    records[rec.question_id] = std::move(rec);
  });

  struct PredEntry {
    std::map<std::string, double> pred;
    std::vector<double> u;
    bool has_pred = false;
  };
  std::map<std::string, PredEntry> preds;
  read_artifact_jsonl(cfg.paths.predictions, [&](const json& obj) {
    std::string qid = obj.at("qid").get<std::string>();
    PredEntry& e = preds[qid];
    if (obj.contains("pred")) {
      e.has_pred = true;
      for (const auto& [label, p] : obj["pred"].items())
        e.pred[label] = p.get<double>();
      if (obj.contains("u")) e.u = obj["u"].get<std::vector<double>>();
    }
  });

  json per_question = json::object();
  json skipped = json::array();
  double sum_total = 0.0, sum_decoder = 0.0, sum_alignment = 0.0;
  size_t n = 0;
  for (const auto& [qid, rec] : records) {
    auto it = preds.find(qid);
    if (it == preds.end() || !it->second.has_pred) {
      skipped.push_back(qid);
      continue;
    }
    const PredEntry& e = it->second;
    if (e.u.size() != rec.alignment_targets.size())
      throw DataError("prediction u length mismatch for question " + qid);
    LossReport r = forecast_loss(e.pred, rec.answer_text, rec.alignment_targets, e.u,
                                 cfg.targets.lambda);
    per_question[qid] = {{"decoder", r.decoder_term},
                         {"alignment", r.alignment_term},
                         {"total", r.total},
                         {"gt_clipped", r.gt_clipped}};
    sum_total += r.total;
    sum_decoder += r.decoder_term;
    sum_alignment += r.alignment_term;
    ++n;
  }

  json out;
  out["fingerprint"] = cfg.fingerprint();
  out["lambda"] = cfg.targets.lambda;
  out["per_question"] = std::move(per_question);
  out["skipped"] = std::move(skipped);
  out["aggregate"] = {{"count", n},
                      {"mean_total", n ? sum_total / double(n) : 0.0},
                      {"mean_decoder", n ? sum_decoder / double(n) : 0.0},
                      {"mean_alignment", n ? sum_alignment / double(n) : 0.0}};
  auto os = open_artifact(ap.loss());
  os << out.dump(2) << "\n";
  return out;
}

/// Final-answer metrics. Prediction lines: {"qid", "answer"} where answer is
/// a choice label or, for numerical questions, a unit-interval number.
inline MetricsReport run_eval(const PipelineConfig& cfg) {
  ArtifactPaths ap(cfg);
  auto data = load_canonical(ap);
  if (cfg.paths.predictions.empty())
    throw ConfigError("invalid config field paths.predictions: required for eval");

  std::map<std::string, Prediction> preds;
  read_artifact_jsonl(cfg.paths.predictions, [&](const json& obj) {
    if (!obj.contains("answer")) return;
    std::string qid = obj.at("qid").get<std::string>();
    Prediction p;
    if (obj["answer"].is_number()) {
      p.is_number = true;
      p.value = obj["answer"].get<double>();
    } else if (obj["answer"].is_string()) {
      p.label = obj["answer"].get<std::string>();
    } else {
      return;
    }
    preds[qid] = std::move(p);
  });

  MetricsReport rep = evaluate_predictions(data.questions, preds, cfg.fingerprint());
  auto os = open_artifact(ap.metrics());
  os << rep.to_json().dump(2) << "\n";
  return rep;
}

/// Full chain. Loss and eval run only when a predictions file is configured,
/// since model outputs are an external input.
inline void run_all(const PipelineConfig& cfg) {
  run_ingest(cfg);
  run_index(cfg);
  run_retrieve(cfg);
  run_curve(cfg);
  run_rerank(cfg);
  run_summarize(cfg);
  run_assemble(cfg);
  if (!cfg.paths.predictions.empty()) {
    run_loss(cfg);
    run_eval(cfg);
  }
}

}  // namespace newsrank
