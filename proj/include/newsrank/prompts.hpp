#pragma once

#include <string>

#include "newsrank/corpus.hpp"

namespace newsrank {

/// Prompt layout contract shared with the mock backend: the question segment
/// sits between "Question: " and "\nTitle:", the article segment between
/// "News article: " and the trailing instruction line. Changing a marker
/// breaks mock parsing and invalidates cached responses.
namespace prompts {

inline constexpr const char* kQuestionMarker = "Question: ";
inline constexpr const char* kTitleMarker = "Title: ";
inline constexpr const char* kArticleMarker = "News article: ";
inline constexpr const char* kRelevanceInstruction = "Please rate the relevance";
inline constexpr const char* kSummaryInstruction = "Please write a concise summary";

/// The G=5 instantiation reproduces the relevance instruction verbatim.
inline std::string relevance_instruction(int G) {
  std::string top = std::to_string(G - 1);
  return "Please rate the relevance between the news article and the question on a "
         "scale of 0 to " + top + ", with " + top + " being the most relevant.";
}

inline std::string relevance_prompt(const Question& q, const std::string& title,
                                    const std::string& body, int G) {
  return std::string(kQuestionMarker) + q.text + "\n" + kTitleMarker + title + "\n" +
         kArticleMarker + body + "\n" + relevance_instruction(G);
}

inline std::string summary_prompt(const std::string& title, const std::string& body) {
  return std::string(kTitleMarker) + title + "\n" + kArticleMarker + body + "\n" +
         "Please write a concise summary for this news article.";
}

}  // namespace prompts
}  // namespace newsrank
