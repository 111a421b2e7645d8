#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <json.hpp>

#include "newsrank/corpus.hpp"
#include "newsrank/errors.hpp"
#include "newsrank/rerank.hpp"
#include "newsrank/summarize.hpp"
#include "newsrank/targets.hpp"

namespace newsrank {

/// Reader-ready export for one question: chronologically ordered inputs with
/// matching dates and crowd-accuracy targets.
struct AssembledRecord {
  std::string question_id;
  QType qtype = QType::TF;
  std::vector<std::string> inputs;
  std::vector<Date> article_dates;
  std::vector<double> alignment_targets;
  std::string answer_text;  // numerical questions carry their binned label

  bool operator==(const AssembledRecord&) const = default;
};

/// "{text} [SEP] {start} {expiry} [SEP] {choices | ...}"; numerical
/// questions put the literal "numerical" in the choices slot.
inline std::string prepend_question(const Question& q) {
  std::string choices;
  if (q.qtype == QType::NUM) {
    choices = "numerical";
  } else {
    for (size_t i = 0; i < q.choices.size(); ++i) {
      if (i) choices += " | ";
      choices += q.choices[i];
    }
  }
  return q.text + " [SEP] " + q.start_date.str() + " " + q.expiry_date.str() + " [SEP] " +
         choices;
}

/// "{title} [SEP] {date} [SEP] {summary}"; an empty title leaves its slot
/// empty rather than collapsing the template.
inline std::string prepend_article(const SummarizedArticle& n) {
  return n.title + " [SEP] " + n.publish_date.str() + " [SEP] " + n.summary;
}

/// Builds the per-article input strings, oldest article first, and pairs
/// each with the crowd accuracy at its normalized time. An empty selection
/// yields a record with zero inputs; the caller decides whether to flag it.
inline AssembledRecord assemble_record(const Question& q,
                                       std::vector<SummarizedArticle> selected,
                                       const BinSpec& num_bins = {}) {
  std::sort(selected.begin(), selected.end(),
            [](const SummarizedArticle& a, const SummarizedArticle& b) {
              if (a.publish_date != b.publish_date) return a.publish_date < b.publish_date;
              return a.origin < b.origin;
            });
  AssembledRecord rec;
  rec.question_id = q.id;
  rec.qtype = q.qtype;
  std::string q_part = prepend_question(q);
  for (const auto& n : selected) {
    rec.inputs.push_back("[CLS] " + q_part + " [SEP] " + prepend_article(n) + " [SEP]");
    rec.article_dates.push_back(n.publish_date);
    rec.alignment_targets.push_back(human_accuracy_at(q, normalize_time(q, n.publish_date)));
  }
  if (q.qtype == QType::NUM)
    rec.answer_text = std::to_string(bin_numeric(q.answer_value, num_bins));
  else
    rec.answer_text = q.answer_text;
  return rec;
}

inline json record_to_json(const AssembledRecord& rec) {
  json out;
  out["qid"] = rec.question_id;
  out["qtype"] = qtype_str(rec.qtype);
  out["inputs"] = rec.inputs;
  json dates = json::array();
  for (const auto& d : rec.article_dates) dates.push_back(d.str());
  out["dates"] = std::move(dates);
  out["targets"] = rec.alignment_targets;
  out["answer"] = rec.answer_text;
  return out;
}

inline AssembledRecord record_from_json(const json& obj) {
  AssembledRecord rec;
  rec.question_id = obj.at("qid").get<std::string>();
  auto qt = parse_qtype(obj.at("qtype").get<std::string>());
  if (!qt) throw DataError("field qtype: expected t/f, mc or num");
  rec.qtype = *qt;
  rec.inputs = obj.at("inputs").get<std::vector<std::string>>();
  for (const auto& d : obj.at("dates"))
    rec.article_dates.push_back(Date::parse(d.get<std::string>()));
  rec.alignment_targets = obj.at("targets").get<std::vector<double>>();
  rec.answer_text = obj.at("answer").get<std::string>();
  if (rec.inputs.size() != rec.article_dates.size() ||
      rec.inputs.size() != rec.alignment_targets.size())
    throw DataError("assembled record lists disagree in length");
  return rec;
}

}  // namespace newsrank
