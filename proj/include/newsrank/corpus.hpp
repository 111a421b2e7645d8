#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "newsrank/date.hpp"
#include "newsrank/errors.hpp"

namespace newsrank {

using json = nlohmann::json;

enum class QType { TF, MCQ, NUM };

inline std::string qtype_str(QType t) {
  switch (t) {
    case QType::TF: return "t/f";
    case QType::MCQ: return "mc";
    case QType::NUM: return "num";
  }
  return "?";
}

inline std::optional<QType> parse_qtype(std::string_view s) {
  if (s == "t/f") return QType::TF;
  if (s == "mc") return QType::MCQ;
  if (s == "num") return QType::NUM;
  return std::nullopt;
}

/// One aggregated crowd forecast: the probability mass the human crowd
/// assigned to the eventually-correct answer on that day.
struct CrowdPoint {
  Date timestamp;
  double prob_correct = 0.0;

  bool operator==(const CrowdPoint&) const = default;
};

struct Question {
  std::string id;
  std::string text;
  QType qtype = QType::TF;
  std::vector<std::string> choices;  // TF is always [yes, no]; NUM is empty
  Date start_date;
  Date expiry_date;
  std::string answer_text;   // TF/MCQ ground truth
  double answer_value = 0.0; // NUM ground truth in [0, 1]
  std::vector<CrowdPoint> crowd_series;
  bool crowd_missing = false;

  /// Flat prior used before the first crowd point (and when the series is
  /// empty): 1/|choices|, 0.5 for numerical questions.
  double prior() const {
    if (qtype == QType::NUM) return 0.5;
    return choices.empty() ? 0.5 : 1.0 / double(choices.size());
  }

  bool operator==(const Question&) const = default;
};

struct NewsArticle {
  std::string id;
  std::string title;
  std::string body;
  Date publish_date;
  std::string source;

  bool operator==(const NewsArticle&) const = default;
};

struct Reject {
  std::string file;
  size_t line = 0;
  std::string reason;
};

struct LoadReport {
  std::vector<Reject> rejects;
  std::vector<std::string> flags;  // non-fatal notices, e.g. missing crowd series

  json to_json() const {
    json out;
    out["rejects"] = json::array();
    for (const auto& r : rejects)
      out["rejects"].push_back({{"file", r.file}, {"line", r.line}, {"reason", r.reason}});
    out["flags"] = flags;
    return out;
  }
};

class QuestionSet {
 public:
  bool add(Question q) {
    if (by_id_.count(q.id)) return false;
    by_id_[q.id] = items_.size();
    items_.push_back(std::move(q));
    return true;
  }
  const Question* find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &items_[it->second];
  }
  Question* find(const std::string& id) {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &items_[it->second];
  }
  size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }
  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  const std::vector<Question>& items() const { return items_; }

  bool operator==(const QuestionSet& o) const { return items_ == o.items_; }

 private:
  std::vector<Question> items_;
  std::unordered_map<std::string, size_t> by_id_;
};

class ArticleStore {
 public:
  /// Throws DataError on a duplicate article id.
  void add(NewsArticle a) {
    if (by_id_.count(a.id)) throw DataError("duplicate id: " + a.id);
    by_id_[a.id] = items_.size();
    items_.push_back(std::move(a));
  }
  const NewsArticle* find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &items_[it->second];
  }
  size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }
  const std::vector<NewsArticle>& items() const { return items_; }

  bool operator==(const ArticleStore& o) const { return items_ == o.items_; }

 private:
  std::vector<NewsArticle> items_;
  std::unordered_map<std::string, size_t> by_id_;
};

// ---------------------------------------------------------------------------
// Invariant checks (shared by the loader and validate_dataset)
// ---------------------------------------------------------------------------

inline std::optional<std::string> check_question(const Question& q) {
  if (q.id.empty()) return "missing field id";
  if (q.start_date > q.expiry_date) return "inverted window";
  switch (q.qtype) {
    case QType::TF:
      if (q.choices != std::vector<std::string>{"yes", "no"})
        return "TF choices must be [yes, no]";
      if (q.answer_text != "yes" && q.answer_text != "no")
        return "ground truth not in choices";
      break;
    case QType::MCQ: {
      if (q.choices.size() < 2) return "MCQ needs at least 2 choices";
      bool found = std::find(q.choices.begin(), q.choices.end(), q.answer_text) !=
                   q.choices.end();
      if (!found) return "ground truth not in choices";
      break;
    }
    case QType::NUM:
      if (!q.choices.empty()) return "NUM must have no choices";
      if (!(q.answer_value >= 0.0 && q.answer_value <= 1.0))
        return "NUM ground truth outside [0,1]";
      break;
  }
  for (const auto& p : q.crowd_series) {
    if (!(p.prob_correct >= 0.0 && p.prob_correct <= 1.0))
      return "crowd prob_correct outside [0,1]";
  }
  for (size_t i = 1; i < q.crowd_series.size(); ++i) {
    if (!(q.crowd_series[i - 1].timestamp < q.crowd_series[i].timestamp))
      return "crowd series not strictly increasing";
  }
  return std::nullopt;
}

inline std::optional<std::string> check_article(const NewsArticle& a) {
  if (a.id.empty()) return "missing field id";
  if (a.title.empty() && a.body.empty()) return "title and body both empty";
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Time normalization
// ---------------------------------------------------------------------------

/// Maps a calendar date into [0, 1] relative to the question window using
/// whole-day counts. Dates outside the window clamp; a zero-length window
/// maps everything to 0.
inline double normalize_time(const Question& q, const Date& d) {
  long span = q.start_date.days_until(q.expiry_date);
  if (span <= 0) return 0.0;
  double t = double(q.start_date.days_until(d)) / double(span);
  return std::clamp(t, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Canonical JSONL serialization
// ---------------------------------------------------------------------------

inline json question_to_json(const Question& q) {
  json out;
  out["id"] = q.id;
  out["question"] = q.text;
  out["qtype"] = qtype_str(q.qtype);
  out["choices"] = q.choices;
  out["begin_date"] = q.start_date.str();
  out["expiry_date"] = q.expiry_date.str();
  if (q.qtype == QType::NUM)
    out["answer"] = q.answer_value;
  else
    out["answer"] = q.answer_text;
  json crowd = json::array();
  for (const auto& p : q.crowd_series)
    crowd.push_back({{"date", p.timestamp.str()}, {"prob_correct", p.prob_correct}});
  out["crowd"] = crowd;
  return out;
}

inline json article_to_json(const NewsArticle& a) {
  json out;
  out["id"] = a.id;
  out["title"] = a.title;
  out["text"] = a.body;
  out["date"] = a.publish_date.str();
  out["source"] = a.source;
  return out;
}

namespace detail {

inline std::string require_string(const json& obj, const char* field) {
  if (!obj.contains(field)) throw DataError(std::string("missing field ") + field);
  if (!obj[field].is_string())
    throw DataError(std::string("field ") + field + ": expected string");
  return obj[field].get<std::string>();
}

inline Date require_date(const json& obj, const char* field) {
  auto s = require_string(obj, field);
  auto d = Date::try_parse(s);
  if (!d) throw DataError("invalid date: " + s);
  return *d;
}

inline std::vector<CrowdPoint> parse_crowd(const json& arr) {
  if (!arr.is_array()) throw DataError("field crowd: expected array");
  std::vector<CrowdPoint> out;
  for (const auto& e : arr) {
    if (!e.is_object()) throw DataError("field crowd: expected objects");
    CrowdPoint p;
    p.timestamp = require_date(e, "date");
    if (!e.contains("prob_correct") || !e["prob_correct"].is_number())
      throw DataError("field crowd: missing prob_correct");
    p.prob_correct = e["prob_correct"].get<double>();
    out.push_back(p);
  }
  return out;
}

inline Question question_from_json(const json& obj) {
  Question q;
  q.id = require_string(obj, "id");
  q.text = require_string(obj, "question");
  auto qt = parse_qtype(require_string(obj, "qtype"));
  if (!qt) throw DataError("field qtype: expected t/f, mc or num");
  q.qtype = *qt;
  if (obj.contains("choices")) {
    if (!obj["choices"].is_array()) throw DataError("field choices: expected array");
    for (const auto& c : obj["choices"]) {
      if (!c.is_string()) throw DataError("field choices: expected strings");
      q.choices.push_back(c.get<std::string>());
    }
  }
  if (q.qtype == QType::TF && q.choices.empty()) q.choices = {"yes", "no"};
  q.start_date = require_date(obj, "begin_date");
  q.expiry_date = require_date(obj, "expiry_date");
  if (!obj.contains("answer")) throw DataError("missing field answer");
  if (q.qtype == QType::NUM) {
    if (!obj["answer"].is_number()) throw DataError("field answer: expected number");
    q.answer_value = obj["answer"].get<double>();
  } else {
    if (!obj["answer"].is_string()) throw DataError("field answer: expected string");
    q.answer_text = obj["answer"].get<std::string>();
  }
  if (obj.contains("crowd")) q.crowd_series = parse_crowd(obj["crowd"]);
  q.crowd_missing = q.crowd_series.empty();
  if (auto reason = check_question(q)) throw DataError(*reason);
  return q;
}

inline NewsArticle article_from_json(const json& obj) {
  NewsArticle a;
  a.id = require_string(obj, "id");
  a.title = obj.contains("title") ? require_string(obj, "title") : "";
  a.body = obj.contains("text") ? require_string(obj, "text") : "";
  a.publish_date = require_date(obj, "date");
  if (obj.contains("source") && obj["source"].is_string())
    a.source = obj["source"].get<std::string>();
  if (auto reason = check_article(a)) throw DataError(*reason);
  return a;
}

/// Calls `fn(line_number, parsed_object)` for every JSON object line.
/// Lines that fail to parse are recorded as rejects. Whitespace-only lines
/// and "_meta" header lines are skipped.
template <typename Fn>
void for_each_jsonl(const std::string& path, LoadReport& report, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      report.rejects.push_back({path, lineno, "malformed JSON"});
      continue;
    }
    if (obj.contains("_meta")) continue;
    try {
      fn(lineno, obj);
    } catch (const DataError& e) {
      report.rejects.push_back({path, lineno, e.what()});
    }
  }
}

}  // namespace detail

struct LoadResult {
  QuestionSet questions;
  ArticleStore articles;
  LoadReport report;
};

inline QuestionSet load_questions(const std::string& path, LoadReport& report) {
  QuestionSet qs;
  detail::for_each_jsonl(path, report, [&](size_t lineno, const json& obj) {
    Question q = detail::question_from_json(obj);
    if (!qs.add(std::move(q))) report.rejects.push_back({path, lineno, "duplicate id"});
  });
  return qs;
}

inline ArticleStore load_articles(const std::string& path, LoadReport& report) {
  ArticleStore store;
  detail::for_each_jsonl(path, report, [&](size_t lineno, const json& obj) {
    NewsArticle a = detail::article_from_json(obj);
    try {
      store.add(std::move(a));
    } catch (const DataError&) {
      report.rejects.push_back({path, lineno, "duplicate id"});
    }
  });
  return store;
}

/// Attaches crowd series from a standalone forecasts file, replacing any
/// inlined series on matching questions.
inline void attach_forecasts(QuestionSet& qs, const std::string& path, LoadReport& report) {
  detail::for_each_jsonl(path, report, [&](size_t, const json& obj) {
    auto id = detail::require_string(obj, "id");
    if (!obj.contains("crowd")) throw DataError("missing field crowd");
    auto series = detail::parse_crowd(obj["crowd"]);
    Question* q = qs.find(id);
    if (!q) throw DataError("forecast references unknown question " + id);
    Question updated = *q;
    updated.crowd_series = std::move(series);
    updated.crowd_missing = updated.crowd_series.empty();
    if (auto reason = check_question(updated)) throw DataError(*reason);
    *q = std::move(updated);
  });
}

inline void flag_missing_crowd(QuestionSet& qs, LoadReport& report) {
  for (auto& q : qs) {
    if (q.crowd_series.empty()) {
      q.crowd_missing = true;
      report.flags.push_back("question " + q.id + ": no crowd series, using flat prior");
    }
  }
}

/// Loads the canonical JSONL collections. `forecasts_path` may be empty when
/// crowd series are inlined in the question records. Records failing schema
/// or invariant checks land in the rejects report, never silently dropped.
inline LoadResult load_dataset(const std::string& questions_path,
                               const std::string& articles_path,
                               const std::string& forecasts_path = "") {
  LoadResult out;
  out.questions = load_questions(questions_path, out.report);
  out.articles = load_articles(articles_path, out.report);
  if (!forecasts_path.empty()) attach_forecasts(out.questions, forecasts_path, out.report);
  flag_missing_crowd(out.questions, out.report);
  return out;
}

inline void write_questions_jsonl(const QuestionSet& qs, std::ostream& os) {
  for (const auto& q : qs) os << question_to_json(q).dump() << "\n";
}

inline void write_articles_jsonl(const ArticleStore& store, std::ostream& os) {
  for (const auto& a : store) os << article_to_json(a).dump() << "\n";
}

// ---------------------------------------------------------------------------
// Validation report
// ---------------------------------------------------------------------------

struct ValidationReport {
  size_t tf_count = 0, mcq_count = 0, num_count = 0;
  size_t tf_train = 0, mcq_train = 0, num_train = 0;
  size_t tf_test = 0, mcq_test = 0, num_test = 0;
  Date cutoff;
  std::vector<std::pair<std::string, std::string>> violations;  // (id, reason)

  size_t total() const { return tf_count + mcq_count + num_count; }

  json to_json() const {
    json out;
    out["counts"] = {{"tf", tf_count}, {"mcq", mcq_count}, {"num", num_count},
                     {"total", total()}};
    out["split"] = {{"cutoff", cutoff.str()},
                    {"train", {{"tf", tf_train}, {"mcq", mcq_train}, {"num", num_train}}},
                    {"test", {{"tf", tf_test}, {"mcq", mcq_test}, {"num", num_test}}}};
    out["violations"] = json::array();
    for (const auto& [id, reason] : violations)
      out["violations"].push_back({{"id", id}, {"reason", reason}});
    return out;
  }
};

/// A question belongs to the training split when it expires strictly before
/// the cut-off date.
inline bool is_train(const Question& q, const Date& cutoff) {
  return q.expiry_date < cutoff;
}

inline ValidationReport validate_dataset(const QuestionSet& qs, const Date& cutoff) {
  ValidationReport rep;
  rep.cutoff = cutoff;
  for (const auto& q : qs) {
    bool train = is_train(q, cutoff);
    switch (q.qtype) {
      case QType::TF: ++rep.tf_count; (train ? rep.tf_train : rep.tf_test)++; break;
      case QType::MCQ: ++rep.mcq_count; (train ? rep.mcq_train : rep.mcq_test)++; break;
      case QType::NUM: ++rep.num_count; (train ? rep.num_train : rep.num_test)++; break;
    }
    if (auto reason = check_question(q)) rep.violations.emplace_back(q.id, *reason);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Converter for the published Autocast JSON layout
// ---------------------------------------------------------------------------

namespace detail {

/// Crowd entries in the published layout carry a full timestamp and, per
/// question type, either a scalar forecast or a per-choice vector. They are
/// reduced to one point per day (last wins) with prob_correct = mass on the
/// eventually-correct answer; numerical forecasts map to 1 - |f - gt|.
inline std::vector<CrowdPoint> convert_autocast_crowd(const json& arr, QType qtype,
                                                      size_t answer_index,
                                                      double answer_value) {
  std::map<Date, double> per_day;
  if (!arr.is_array()) return {};
  for (const auto& e : arr) {
    if (!e.is_object() || !e.contains("timestamp")) continue;
    auto d = Date::try_parse(e["timestamp"].get<std::string>());
    if (!d) continue;
    const auto& f = e.contains("forecast") ? e["forecast"] : json();
    double p = -1.0;
    switch (qtype) {
      case QType::TF: {
        if (!f.is_number()) continue;
        double yes = f.get<double>();
        p = answer_index == 0 ? yes : 1.0 - yes;
        break;
      }
      case QType::MCQ: {
        if (!f.is_array()) continue;
        // Choices absent from a partial crowd distribution carry zero mass.
        p = answer_index < f.size() && f[answer_index].is_number()
                ? f[answer_index].get<double>()
                : 0.0;
        break;
      }
      case QType::NUM: {
        if (!f.is_number()) continue;
        p = 1.0 - std::fabs(f.get<double>() - answer_value);
        break;
      }
    }
    if (p < 0.0) continue;
    per_day[*d] = std::clamp(p, 0.0, 1.0);
  }
  std::vector<CrowdPoint> out;
  for (const auto& [d, p] : per_day) out.push_back({d, p});
  return out;
}

inline Question question_from_autocast(const json& obj) {
  Question q;
  q.id = require_string(obj, "id");
  q.text = require_string(obj, "question");
  auto qt = parse_qtype(require_string(obj, "qtype"));
  if (!qt) throw DataError("field qtype: expected t/f, mc or num");
  q.qtype = *qt;

  const char* begin_field = obj.contains("publish_time") ? "publish_time" : "begin_date";
  const char* close_field = obj.contains("close_time") ? "close_time" : "expiry_date";
  q.start_date = require_date(obj, begin_field);
  q.expiry_date = require_date(obj, close_field);

  if (q.qtype == QType::TF) {
    q.choices = {"yes", "no"};
  } else if (q.qtype == QType::MCQ) {
    if (!obj.contains("choices") || !obj["choices"].is_array())
      throw DataError("missing field choices");
    for (const auto& c : obj["choices"]) q.choices.push_back(c.get<std::string>());
  }

  if (!obj.contains("answer")) throw DataError("missing field answer");
  size_t answer_index = 0;
  if (q.qtype == QType::NUM) {
    if (obj["answer"].is_number())
      q.answer_value = obj["answer"].get<double>();
    else if (obj["answer"].is_string())
      q.answer_value = std::stod(obj["answer"].get<std::string>());
    else
      throw DataError("field answer: expected number");
  } else {
    std::string ans = obj["answer"].is_string() ? obj["answer"].get<std::string>() : "";
    if (q.qtype == QType::TF) {
      std::string lower;
      for (char c : ans) lower.push_back(char(std::tolower(static_cast<unsigned char>(c))));
      if (lower != "yes" && lower != "no") throw DataError("ground truth not in choices");
      q.answer_text = lower;
      answer_index = lower == "yes" ? 0 : 1;
    } else {
      // MCQ answers come as a letter indexing the choice list, or verbatim.
      auto it = std::find(q.choices.begin(), q.choices.end(), ans);
      if (it != q.choices.end()) {
        answer_index = size_t(it - q.choices.begin());
      } else if (ans.size() == 1 && ans[0] >= 'A' &&
                 size_t(ans[0] - 'A') < q.choices.size()) {
        answer_index = size_t(ans[0] - 'A');
      } else {
        throw DataError("ground truth not in choices");
      }
      q.answer_text = q.choices[answer_index];
    }
  }

  if (obj.contains("crowd"))
    q.crowd_series =
        convert_autocast_crowd(obj["crowd"], q.qtype, answer_index, q.answer_value);
  q.crowd_missing = q.crowd_series.empty();
  if (auto reason = check_question(q)) throw DataError(*reason);
  return q;
}

}  // namespace detail

/// Reads a published-layout Autocast question file (a JSON array, or JSONL)
/// and converts it to canonical questions. Unconvertible records land in the
/// report.
inline QuestionSet load_autocast_questions(const std::string& path, LoadReport& report) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  QuestionSet qs;
  auto take = [&](size_t lineno, const json& obj) {
    try {
      Question q = detail::question_from_autocast(obj);
      if (!qs.add(std::move(q)))
        report.rejects.push_back({path, lineno, "duplicate id"});
    } catch (const DataError& e) {
      report.rejects.push_back({path, lineno, e.what()});
    } catch (const std::exception& e) {
      report.rejects.push_back({path, lineno, e.what()});
    }
  };

  char first = 0;
  in >> std::ws;
  in.get(first);
  in.unget();
  if (first == '[') {
    json arr = json::parse(in, nullptr, false);
    if (arr.is_discarded() || !arr.is_array())
      throw DataError("cannot parse JSON array: " + path);
    size_t i = 0;
    for (const auto& obj : arr) take(++i, obj);
  } else {
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json obj = json::parse(line, nullptr, false);
      if (obj.is_discarded() || !obj.is_object()) {
        report.rejects.push_back({path, lineno, "malformed JSON"});
        continue;
      }
      take(lineno, obj);
    }
  }
  return qs;
}

}  // namespace newsrank
