#pragma once

#include <string>
#include <utility>
#include <vector>

#include "newsrank/backend.hpp"
#include "newsrank/corpus.hpp"
#include "newsrank/errors.hpp"
#include "newsrank/prompts.hpp"
#include "newsrank/tokenizer.hpp"

namespace newsrank {

struct SummarizedArticle {
  std::string origin;  // source article id
  std::string title;
  Date publish_date;
  std::string summary;
  size_t origin_token_count = 0;
  size_t summary_token_count = 0;

  bool operator==(const SummarizedArticle&) const = default;
};

struct SummarizeOptions {
  int min_tokens = 64;         // bodies at or under this length bypass the backend
  int max_output_tokens = 512;
  unsigned in_flight = 4;
};

inline constexpr double kSummaryTemperature = 0.0;

namespace detail {

inline SummarizedArticle passthrough_summary(const NewsArticle& a, size_t origin_tokens) {
  SummarizedArticle s;
  s.origin = a.id;
  s.title = a.title;
  s.publish_date = a.publish_date;
  s.summary = a.body;
  s.origin_token_count = origin_tokens;
  s.summary_token_count = origin_tokens;
  return s;
}

}  // namespace detail

/// Replaces the body with a backend summary. Short bodies pass through
/// unchanged; an empty reply gets one redraw before failing.
inline SummarizedArticle distill(const NewsArticle& article, CompletionBackend& backend,
                                 const SummarizeOptions& opt = {}) {
  size_t origin_tokens = token_count(article.body);
  if (origin_tokens <= size_t(opt.min_tokens))
    return detail::passthrough_summary(article, origin_tokens);

  CompletionRequest req{prompts::summary_prompt(article.title, article.body),
                        opt.max_output_tokens, kSummaryTemperature, 0};
  std::string reply;
  try {
    reply = backend.complete(req);
    if (reply.empty()) {
      req.sample_index = 1;
      reply = backend.complete(req);
    }
  } catch (const BackendError& e) {
    throw BackendError(std::string(e.what()) + " (article " + article.id + ")",
                       e.http_status);
  }
  if (reply.empty()) throw BackendError("empty summary: " + article.id);

  SummarizedArticle s;
  s.origin = article.id;
  s.title = article.title;
  s.publish_date = article.publish_date;
  s.summary = std::move(reply);
  s.origin_token_count = origin_tokens;
  s.summary_token_count = token_count(s.summary);
  return s;
}

struct DistillBatch {
  std::vector<SummarizedArticle> summaries;                    // successes, input order
  std::vector<std::pair<std::string, std::string>> failures;   // (article id, reason)
};

/// Batch distillation with bounded concurrency. Failures never abort the
/// batch; they are collected per article. Output order follows input order
/// regardless of completion order.
inline DistillBatch distill_batch(const std::vector<NewsArticle>& articles,
                                  CompletionBackend& backend,
                                  const SummarizeOptions& opt = {}) {
  DistillBatch out;
  std::vector<size_t> origin_tokens(articles.size(), 0);
  std::vector<CompletionRequest> reqs;  // one per article needing the backend, ascending
  for (size_t i = 0; i < articles.size(); ++i) {
    origin_tokens[i] = token_count(articles[i].body);
    if (origin_tokens[i] > size_t(opt.min_tokens))
      reqs.push_back({prompts::summary_prompt(articles[i].title, articles[i].body),
                      opt.max_output_tokens, kSummaryTemperature, 0});
  }

  auto outcomes = complete_many(backend, reqs, opt.in_flight);

  // Empty replies get one batched redraw under the next sample index.
  std::vector<CompletionRequest> redraws;
  std::vector<size_t> redraw_slot;  // index into reqs/outcomes
  for (size_t k = 0; k < outcomes.size(); ++k) {
    if (outcomes[k].ok && outcomes[k].text.empty()) {
      CompletionRequest r = reqs[k];
      r.sample_index = 1;
      redraw_slot.push_back(k);
      redraws.push_back(std::move(r));
    }
  }
  if (!redraws.empty()) {
    auto second = complete_many(backend, redraws, opt.in_flight);
    for (size_t j = 0; j < second.size(); ++j) outcomes[redraw_slot[j]] = second[j];
  }

  size_t next_backend = 0;
  for (size_t i = 0; i < articles.size(); ++i) {
    const auto& a = articles[i];
    if (origin_tokens[i] <= size_t(opt.min_tokens)) {
      out.summaries.push_back(detail::passthrough_summary(a, origin_tokens[i]));
      continue;
    }
    const auto& oc = outcomes[next_backend++];
    if (!oc.ok) {
      out.failures.emplace_back(a.id, oc.error);
      continue;
    }
    if (oc.text.empty()) {
      out.failures.emplace_back(a.id, "empty summary");
      continue;
    }
    SummarizedArticle s;
    s.origin = a.id;
    s.title = a.title;
    s.publish_date = a.publish_date;
    s.summary = oc.text;
    s.origin_token_count = origin_tokens[i];
    s.summary_token_count = token_count(s.summary);
    out.summaries.push_back(std::move(s));
  }
  return out;
}

}  // namespace newsrank
