#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "newsrank/backend.hpp"
#include "newsrank/date.hpp"
#include "newsrank/digest.hpp"
#include "newsrank/errors.hpp"
#include "newsrank/format.hpp"
#include "newsrank/targets.hpp"

namespace newsrank {

/// Every knob the pipeline honors. Flags override the config file, which
/// overrides these defaults. Credentials never live here; the live backend
/// reads them from the environment variable named below.
struct PipelineConfig {
  struct Paths {
    std::string questions;    // input questions JSONL (or published-layout JSON)
    std::string articles;     // input articles JSONL
    std::string forecasts;    // optional separate crowd-series JSONL
    std::string predictions;  // optional model outputs for loss/eval stages
    std::string out = "out";
    std::string cache = "cache";
  } paths;

  struct Retrieval {
    int K = 50;
    double k1 = 1.2;
    double b = 0.75;
  } retrieval;

  struct Rerank {
    int G = 5;          // rating scale size (labels 0..G-1)
    int l = 5;          // relevance draws per pair
    int N = 10;         // survivors per question
    int B = 20;         // recency curve bins
    double epsilon = 0.05;
    double theta = 0.0;  // combined-score threshold
  } rerank;

  struct Summarize {
    int min_tokens = 64;
    int max_output_tokens = 512;
    int mock_sentences = 3;
  } summarize;

  struct Targets {
    int R = 20;
    double lambda = 0.1;
    std::string inverse = "bin_midpoint";  // or "paper_literal"
  } targets;

  struct Backend {
    std::string kind = "mock";  // "mock" or "live"
    std::string base_url;
    std::string model;
    std::string api_key_env = "NEWSRANK_API_KEY";
    uint64_t seed = 0;
    int concurrency = 4;
    int max_retries = 3;
    int retry_initial_ms = 250;
  } backend;

  struct Split {
    std::string cutoff = "2021-07-01";  // train: expiry strictly before this
  } split;

  void validate() const {
    if (retrieval.K < 1) throw ConfigError("invalid config field retrieval.K: must be >= 1");
    if (rerank.N < 1) throw ConfigError("invalid config field rerank.N: must be >= 1");
    if (retrieval.K < rerank.N)
      throw ConfigError("invalid config field retrieval.K: must be >= rerank.N");
    if (rerank.G < 2) throw ConfigError("invalid config field rerank.G: must be >= 2");
    if (rerank.l < 1) throw ConfigError("invalid config field rerank.l: must be >= 1");
    if (rerank.B < 2) throw ConfigError("invalid config field rerank.B: must be >= 2");
    if (!(rerank.epsilon > 0.0 && rerank.epsilon < 1.0))
      throw ConfigError("invalid config field rerank.epsilon: must be in (0, 1)");
    if (targets.lambda < 0.0)
      throw ConfigError("invalid config field targets.lambda: must be >= 0");
    if (targets.R < 1) throw ConfigError("invalid config field targets.R: must be >= 1");
    if (targets.inverse != "bin_midpoint" && targets.inverse != "paper_literal")
      throw ConfigError(
          "invalid config field targets.inverse: expected bin_midpoint or paper_literal");
    if (backend.kind != "mock" && backend.kind != "live")
      throw ConfigError("invalid config field backend.kind: expected mock or live");
    if (backend.concurrency < 1)
      throw ConfigError("invalid config field backend.concurrency: must be >= 1");
    if (summarize.min_tokens < 0)
      throw ConfigError("invalid config field summarize.min_tokens: must be >= 0");
    if (summarize.max_output_tokens < 1)
      throw ConfigError("invalid config field summarize.max_output_tokens: must be >= 1");
    if (summarize.mock_sentences < 1)
      throw ConfigError("invalid config field summarize.mock_sentences: must be >= 1");
    if (!Date::try_parse(split.cutoff))
      throw ConfigError("invalid config field split.cutoff: expected YYYY-MM-DD");
  }

  Date cutoff() const { return Date::parse(split.cutoff); }

  BinSpec bin_spec() const {
    BinSpec spec;
    spec.R = targets.R;
    spec.lo = 0.0;
    spec.hi = 1.0;
    spec.inverse = targets.inverse == "paper_literal" ? InverseConvention::paper_literal
                                                      : InverseConvention::bin_midpoint;
    return spec;
  }

  /// Must mirror the ids the constructed backends report, without requiring
  /// a live credential just to name the configuration.
  std::string backend_descriptor() const {
    if (backend.kind == "mock")
      return "mock:seed=" + std::to_string(backend.seed) +
             ",s=" + std::to_string(summarize.mock_sentences);
    return "live:" + backend.model;
  }

  /// Digest of everything that shapes artifact content, embedded in every
  /// output so ablation runs stay distinguishable.
  std::string fingerprint() const {
    std::string material;
    material += "K=" + std::to_string(retrieval.K);
    material += ";k1=" + format_double(retrieval.k1);
    material += ";b=" + format_double(retrieval.b);
    material += ";N=" + std::to_string(rerank.N);
    material += ";G=" + std::to_string(rerank.G);
    material += ";l=" + std::to_string(rerank.l);
    material += ";B=" + std::to_string(rerank.B);
    material += ";eps=" + format_double(rerank.epsilon);
    material += ";theta=" + format_double(rerank.theta);
    material += ";R=" + std::to_string(targets.R);
    material += ";lambda=" + format_double(targets.lambda);
    material += ";inverse=" + targets.inverse;
    material += ";min_tokens=" + std::to_string(summarize.min_tokens);
    material += ";cutoff=" + split.cutoff;
    material += ";backend=" + backend_descriptor();
    return sha256_hex(material).substr(0, 16);
  }

  /// Backend per config, always wrapped in the disk cache.
  std::unique_ptr<CompletionBackend> make_backend() const {
    std::unique_ptr<CompletionBackend> inner;
    if (backend.kind == "mock") {
      inner = std::make_unique<MockBackend>(backend.seed, summarize.mock_sentences);
    } else {
      LiveBackend::Options opt;
      opt.base_url = backend.base_url;
      opt.model = backend.model;
      opt.api_key_env = backend.api_key_env;
      opt.max_retries = backend.max_retries;
      opt.retry_initial_ms = backend.retry_initial_ms;
      inner = std::make_unique<LiveBackend>(std::move(opt));
    }
    return std::make_unique<CachedBackend>(std::move(inner), paths.cache);
  }
};

}  // namespace newsrank
