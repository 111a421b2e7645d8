#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "newsrank/digest.hpp"
#include "newsrank/errors.hpp"
#include "newsrank/prompts.hpp"
#include "newsrank/tokenizer.hpp"

namespace newsrank {

struct CompletionRequest {
  std::string prompt;
  int max_output_tokens = 256;
  double temperature = 0.0;
  uint64_t sample_index = 0;  // distinguishes repeated draws of one prompt
};

/// Text-completion capability. Implementations must be safe to call from
/// multiple threads; callers must not depend on completion order.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string kind() const = 0;      // "mock" or "live"
  virtual std::string model_id() const = 0;  // cache/fingerprint component
  virtual std::string complete(const CompletionRequest& req) = 0;

  std::string backend_id() const { return kind() + ":" + model_id(); }
};

// ---------------------------------------------------------------------------
// Deterministic mock
// ---------------------------------------------------------------------------

/// Offline stand-in keyed entirely by (seed, request). Relevance prompts get
/// a digit derived from token overlap; summary prompts get the leading
/// sentences of the article segment. See prompts.hpp for the markers it
/// relies on.
class MockBackend : public CompletionBackend {
 public:
  explicit MockBackend(uint64_t seed = 0, int summary_sentences = 3)
      : seed_(seed), sentences_(summary_sentences) {}

  std::string kind() const override { return "mock"; }
  std::string model_id() const override {
    return "seed=" + std::to_string(seed_) + ",s=" + std::to_string(sentences_);
  }

  std::string complete(const CompletionRequest& req) override {
    if (req.prompt.find(prompts::kRelevanceInstruction) != std::string::npos)
      return relevance_reply(req);
    if (req.prompt.find(prompts::kSummaryInstruction) != std::string::npos)
      return summary_reply(req);
    // Unknown prompt shape: echo a fixed token so callers fail loudly.
    return "unsupported prompt";
  }

 private:
  /// Text between the first begin_marker and the end_marker. The trailing
  /// instruction line is appended last, so its marker is searched from the
  /// right; structural markers near the front are searched from the left.
  static std::string_view segment(std::string_view prompt, std::string_view begin_marker,
                                  std::string_view end_marker, bool end_from_right) {
    size_t b = prompt.find(begin_marker);
    if (b == std::string_view::npos) return {};
    b += begin_marker.size();
    size_t e = end_from_right ? prompt.rfind(end_marker) : prompt.find(end_marker, b);
    if (e == std::string_view::npos || e < b) e = prompt.size();
    return prompt.substr(b, e - b);
  }

  std::string relevance_reply(const CompletionRequest& req) const {
    std::string_view prompt = req.prompt;
    int top = 4;
    size_t sc = prompt.rfind("scale of 0 to ");
    if (sc != std::string_view::npos) {
      sc += std::string_view("scale of 0 to ").size();
      int v = 0;
      bool any = false;
      while (sc < prompt.size() && std::isdigit(static_cast<unsigned char>(prompt[sc]))) {
        v = v * 10 + (prompt[sc] - '0');
        ++sc;
        any = true;
      }
      if (any && v >= 1) top = v;
    }
    auto q_seg = segment(prompt, prompts::kQuestionMarker,
                         std::string("\n") + prompts::kTitleMarker, false);
    auto n_seg = segment(prompt, prompts::kArticleMarker, "\nPlease rate", true);

    auto q_tokens = tokenize(q_seg);
    auto n_tokens = tokenize(n_seg);
    std::set<std::string> qa(q_tokens.begin(), q_tokens.end());
    std::set<std::string> na(n_tokens.begin(), n_tokens.end());
    size_t inter = 0;
    for (const auto& t : qa) inter += na.count(t);
    size_t uni = qa.size() + na.size() - inter;
    double j = uni == 0 ? 0.0 : double(inter) / double(uni);

    long digit = std::lround(double(top) * j);
    // With probability 0.2 the digit shifts one step, direction split evenly.
    uint64_t h = mix64(seed_ + 0x9e3779b97f4a7c15ULL * (req.sample_index + 1));
    double u = double(h >> 11) * 0x1.0p-53;
    if (u < 0.1)
      digit -= 1;
    else if (u < 0.2)
      digit += 1;
    digit = std::clamp(digit, 0L, long(top));
    return std::to_string(digit);
  }

  std::string summary_reply(const CompletionRequest& req) const {
    auto body = segment(req.prompt, prompts::kArticleMarker, "\nPlease write", true);
    size_t start = body.find_first_not_of(" \t\r\n");
    if (start == std::string_view::npos) return "";
    body.remove_prefix(start);
    int seen = 0;
    size_t end = body.size();
    for (size_t i = 0; i < body.size(); ++i) {
      char c = body[i];
      if (c == '.' || c == '!' || c == '?') {
        while (i + 1 < body.size() &&
               (body[i + 1] == '.' || body[i + 1] == '!' || body[i + 1] == '?'))
          ++i;
        if (++seen == sentences_) {
          end = i + 1;
          break;
        }
      }
    }
    std::string out(body.substr(0, end));
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back())))
      out.pop_back();
    return out;
  }

  uint64_t seed_;
  int sentences_;
};

// ---------------------------------------------------------------------------
// Live HTTP client
// ---------------------------------------------------------------------------

/// Chat-completion client (POST {base_url}/chat/completions). The credential
/// comes from the environment variable named in the options and is required
/// at construction, never at call time. Transient failures (transport, 408,
/// 429, 5xx) are retried with exponential backoff.
class LiveBackend : public CompletionBackend {
 public:
  struct Options {
    std::string base_url;  // scheme://host[:port][/path-prefix]
    std::string model;
    std::string api_key_env = "NEWSRANK_API_KEY";
    int max_retries = 3;
    int retry_initial_ms = 250;
    int timeout_s = 60;
  };

  explicit LiveBackend(Options opt) : opt_(std::move(opt)) {
    if (opt_.base_url.empty()) throw ConfigError("backend.base_url is required");
    if (opt_.model.empty()) throw ConfigError("backend.model is required");
    const char* key = std::getenv(opt_.api_key_env.c_str());
    if (!key || !*key)
      throw ConfigError("missing credential: environment variable " + opt_.api_key_env +
                        " is not set");
    api_key_ = key;

    auto scheme_end = opt_.base_url.find("://");
    size_t path_start = scheme_end == std::string::npos
                            ? opt_.base_url.find('/')
                            : opt_.base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      host_ = opt_.base_url;
    } else {
      host_ = opt_.base_url.substr(0, path_start);
      path_prefix_ = opt_.base_url.substr(path_start);
      while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
  }

  std::string kind() const override { return "live"; }
  std::string model_id() const override { return opt_.model; }

  std::string complete(const CompletionRequest& req) override {
    json body = {
        {"model", opt_.model},
        {"messages", json::array({{{"role", "user"}, {"content", req.prompt}}})},
        {"temperature", req.temperature},
        {"max_tokens", req.max_output_tokens},
    };
    std::string payload = body.dump();
    httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};

    int last_status = 0;
    std::string last_error;
    for (int attempt = 0; attempt <= opt_.max_retries; ++attempt) {
      if (attempt > 0) {
        auto delay = std::chrono::milliseconds(opt_.retry_initial_ms) * (1L << (attempt - 1));
        std::this_thread::sleep_for(delay);
      }
      // One client per call: httplib clients are not safe for concurrent use.
      httplib::Client cli(host_);
      cli.set_connection_timeout(opt_.timeout_s);
      cli.set_read_timeout(opt_.timeout_s);
      auto res = cli.Post(path_prefix_ + "/chat/completions", headers, payload,
                          "application/json");
      if (!res) {
        last_status = 0;
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      last_status = res->status;
      if (res->status == 200) {
        json reply = json::parse(res->body, nullptr, false);
        if (reply.is_discarded())
          throw BackendError("malformed response body", res->status);
        try {
          return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception&) {
          throw BackendError("response missing choices[0].message.content", res->status);
        }
      }
      if (res->status == 408 || res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      throw BackendError("request rejected: HTTP " + std::to_string(res->status),
                         res->status);
    }
    if (last_status == 429)
      throw BackendError("rate limited after " + std::to_string(opt_.max_retries) +
                             " retries",
                         429);
    throw BackendError("request failed after " + std::to_string(opt_.max_retries) +
                           " retries: " + last_error,
                       last_status);
  }

 private:
  Options opt_;
  std::string api_key_;
  std::string host_;         // scheme://host[:port]
  std::string path_prefix_;  // leading path, no trailing slash
};

// ---------------------------------------------------------------------------
// Write-through disk cache
// ---------------------------------------------------------------------------

/// Content-addressed response cache: {root}/{first 2 hex}/{key}.json where
/// key = sha256(kind, model, prompt, sample_index). Entries never expire.
/// Reads are lock-free (files appear atomically via rename); writes are
/// serialized. Concurrent misses on one key both hit the inner backend and
/// write the same value, which is harmless.
class CachedBackend : public CompletionBackend {
 public:
  CachedBackend(std::unique_ptr<CompletionBackend> inner, std::filesystem::path root)
      : inner_(std::move(inner)), root_(std::move(root)) {
    std::filesystem::create_directories(root_);
  }

  std::string kind() const override { return inner_->kind(); }
  std::string model_id() const override { return inner_->model_id(); }

  std::string cache_key(const CompletionRequest& req) const {
    std::string material = kind();
    material += '\x1f';
    material += model_id();
    material += '\x1f';
    material += req.prompt;
    material += '\x1f';
    material += std::to_string(req.sample_index);
    return sha256_hex(material);
  }

  std::string complete(const CompletionRequest& req) override {
    std::string key = cache_key(req);
    auto path = entry_path(key);
    {
      std::ifstream in(path);
      if (in) {
        json entry = json::parse(in, nullptr, false);
        if (!entry.is_discarded() && entry.contains("value"))
          return entry["value"].get<std::string>();
      }
    }
    std::string value = inner_->complete(req);
    json entry = {{"key", key}, {"value", value}, {"created_at", now_iso8601()}};
    std::lock_guard<std::mutex> lock(write_mu_);
    std::filesystem::create_directories(path.parent_path());
    auto tmp = path.parent_path() / (path.filename().string() + ".tmp");
    {
      std::ofstream out(tmp);
      out << entry.dump() << "\n";
    }
    std::filesystem::rename(tmp, path);
    return value;
  }

 private:
  std::filesystem::path entry_path(const std::string& key) const {
    return root_ / key.substr(0, 2) / (key + ".json");
  }

  static std::string now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  std::unique_ptr<CompletionBackend> inner_;
  std::filesystem::path root_;
  std::mutex write_mu_;
};

// ---------------------------------------------------------------------------
// Bounded-concurrency fan-out
// ---------------------------------------------------------------------------

struct CompletionOutcome {
  bool ok = false;
  std::string text;
  std::string error;
  int http_status = 0;
};

/// Runs the requests through the backend with at most `in_flight` worker
/// threads. Outcomes are indexed by request position, so callers see request
/// order no matter how completions interleave.
inline std::vector<CompletionOutcome> complete_many(CompletionBackend& backend,
                                                    const std::vector<CompletionRequest>& reqs,
                                                    unsigned in_flight) {
  std::vector<CompletionOutcome> results(reqs.size());
  if (reqs.empty()) return results;
  unsigned workers = std::max(1u, std::min<unsigned>(in_flight, unsigned(reqs.size())));
  std::atomic<size_t> next{0};
  auto run = [&]() {
    for (size_t i = next.fetch_add(1); i < reqs.size(); i = next.fetch_add(1)) {
      try {
        results[i] = {true, backend.complete(reqs[i]), "", 0};
      } catch (const BackendError& e) {
        results[i] = {false, "", e.what(), e.http_status};
      } catch (const std::exception& e) {
        results[i] = {false, "", e.what(), 0};
      }
    }
  };
  if (workers == 1) {
    run();
    return results;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace newsrank
