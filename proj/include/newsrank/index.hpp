#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "newsrank/candidate.hpp"
#include "newsrank/corpus.hpp"
#include "newsrank/errors.hpp"
#include "newsrank/tokenizer.hpp"

namespace newsrank {

/// Inverted index with Okapi BM25 scoring. Documents are indexed over title
/// and body concatenated. Immutable after build; scoring is pure, so
/// concurrent retrieval across questions is safe.
class Index {
 public:
  struct Posting {
    uint32_t doc = 0;  // position in docs()
    uint32_t tf = 0;
  };
  struct DocInfo {
    std::string id;
    uint32_t length = 0;  // token count
    Date date;
  };

  static Index build(const ArticleStore& store, double k1 = 1.2, double b = 0.75) {
    Index ix;
    ix.k1_ = k1;
    ix.b_ = b;
    uint64_t total_len = 0;
    for (const auto& a : store) {
      uint32_t doc = uint32_t(ix.docs_.size());
      auto tokens = tokenize(a.title + " " + a.body);
      std::map<std::string, uint32_t> tf;  // sorted: postings stay deterministic
      for (auto& t : tokens) ++tf[t];
      for (auto& [term, count] : tf) ix.postings_[term].push_back({doc, count});
      ix.doc_idx_[a.id] = doc;
      ix.docs_.push_back({a.id, uint32_t(tokens.size()), a.publish_date});
      total_len += tokens.size();
    }
    ix.avgdl_ = ix.docs_.empty() ? 0.0 : double(total_len) / double(ix.docs_.size());
    return ix;
  }

  size_t doc_count() const { return docs_.size(); }
  double avg_doc_length() const { return avgdl_; }
  double k1() const { return k1_; }
  double b() const { return b_; }
  const std::vector<DocInfo>& docs() const { return docs_; }

  /// idf(t) = ln(1 + (N - df + 0.5)/(df + 0.5)); always positive.
  double idf(const std::string& term) const {
    auto it = postings_.find(term);
    double df = it == postings_.end() ? 0.0 : double(it->second.size());
    double n = double(docs_.size());
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
  }

  /// Okapi BM25 of one document against a token sequence. Repeated query
  /// tokens contribute once per occurrence. Throws on an unknown id.
  double bm25_score(const std::vector<std::string>& query_tokens,
                    const std::string& article_id) const {
    auto it = doc_idx_.find(article_id);
    if (it == doc_idx_.end()) throw DataError("unknown id: " + article_id);
    uint32_t doc = it->second;
    double score = 0.0;
    for (const auto& term : query_tokens) {
      auto pit = postings_.find(term);
      if (pit == postings_.end()) continue;
      const auto& plist = pit->second;
      auto dit = std::lower_bound(plist.begin(), plist.end(), doc,
                                  [](const Posting& p, uint32_t d) { return p.doc < d; });
      if (dit == plist.end() || dit->doc != doc) continue;
      score += idf(term) * tf_part(dit->tf, docs_[doc].length);
    }
    return score;
  }

  json to_json() const {
    json out;
    out["format_version"] = 1;
    out["k1"] = k1_;
    out["b"] = b_;
    json docs = json::array();
    for (const auto& d : docs_)
      docs.push_back({{"id", d.id}, {"len", d.length}, {"date", d.date.str()}});
    out["docs"] = std::move(docs);
    json post = json::object();
    for (const auto& [term, plist] : postings_) {
      json rows = json::array();
      for (const auto& p : plist) rows.push_back({p.doc, p.tf});
      post[term] = std::move(rows);
    }
    out["postings"] = std::move(post);
    return out;
  }

  static Index from_json(const json& obj) {
    if (!obj.is_object() || !obj.contains("format_version"))
      throw DataError("index file: missing format_version");
    if (obj["format_version"].get<int>() != 1)
      throw DataError("index file: unsupported format_version");
    Index ix;
    ix.k1_ = obj.at("k1").get<double>();
    ix.b_ = obj.at("b").get<double>();
    uint64_t total_len = 0;
    for (const auto& d : obj.at("docs")) {
      DocInfo info;
      info.id = d.at("id").get<std::string>();
      info.length = d.at("len").get<uint32_t>();
      info.date = Date::parse(d.at("date").get<std::string>());
      ix.doc_idx_[info.id] = uint32_t(ix.docs_.size());
      total_len += info.length;
      ix.docs_.push_back(std::move(info));
    }
    for (const auto& [term, rows] : obj.at("postings").items()) {
      auto& plist = ix.postings_[term];
      for (const auto& r : rows)
        plist.push_back({r.at(0).get<uint32_t>(), r.at(1).get<uint32_t>()});
      for (const auto& p : plist)
        if (p.doc >= ix.docs_.size())
          throw DataError("index file: posting references unknown doc");
    }
    ix.avgdl_ = ix.docs_.empty() ? 0.0 : double(total_len) / double(ix.docs_.size());
    return ix;
  }

  /// All articles published inside the question's window, scored against
  /// tokenize(question text + choices), best first. Ties break toward the
  /// older publish date, then the lexicographically smaller id. At most K.
  std::vector<RetrievalCandidate> retrieve_topk(const Question& q, int K) const {
    if (K < 1) throw ConfigError("K must be >= 1");
    auto query = query_tokens(q);
    std::vector<double> scores(docs_.size(), 0.0);
    for (const auto& term : query) {
      auto pit = postings_.find(term);
      if (pit == postings_.end()) continue;
      double w = idf(term);
      for (const auto& p : pit->second)
        scores[p.doc] += w * tf_part(p.tf, docs_[p.doc].length);
    }
    std::vector<uint32_t> eligible;
    for (uint32_t d = 0; d < docs_.size(); ++d) {
      if (docs_[d].date >= q.start_date && docs_[d].date <= q.expiry_date)
        eligible.push_back(d);
    }
    std::sort(eligible.begin(), eligible.end(), [&](uint32_t a, uint32_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      if (docs_[a].date != docs_[b].date) return docs_[a].date < docs_[b].date;
      return docs_[a].id < docs_[b].id;
    });
    if (eligible.size() > size_t(K)) eligible.resize(size_t(K));
    std::vector<RetrievalCandidate> out;
    out.reserve(eligible.size());
    for (uint32_t d : eligible) {
      RetrievalCandidate c;
      c.question_id = q.id;
      c.article_id = docs_[d].id;
      c.bm25 = scores[d];
      c.publish_date = docs_[d].date;
      c.t_norm = normalize_time(q, docs_[d].date);
      out.push_back(std::move(c));
    }
    return out;
  }

  static std::vector<std::string> query_tokens(const Question& q) {
    std::string text = q.text;
    for (const auto& c : q.choices) {
      text += " ";
      text += c;
    }
    return tokenize(text);
  }

 private:
  double tf_part(uint32_t tf, uint32_t dl) const {
    double norm = avgdl_ > 0.0 ? double(dl) / avgdl_ : 0.0;
    double t = double(tf);
    return t * (k1_ + 1.0) / (t + k1_ * (1.0 - b_ + b_ * norm));
  }

  std::map<std::string, std::vector<Posting>> postings_;
  std::vector<DocInfo> docs_;
  std::unordered_map<std::string, uint32_t> doc_idx_;
  double avgdl_ = 0.0;
  double k1_ = 1.2;
  double b_ = 0.75;
};

}  // namespace newsrank
