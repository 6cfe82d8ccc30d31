#pragma once

// Prompt templates. The built-in copies are byte-identical to the files in
// templates/; golden tests pin both.

#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <string_view>

#include "archrag/error.hpp"

namespace archrag::prompts {

inline constexpr std::string_view kQueryVariation =
    R"(Task: Reformulate the following question in {num_variations} different ways for the purpose of searching in historical archives.
Constraints:
- Preserve the original meaning
- Be concise
- One reformulation per line
- Do not number the reformulations
Input: {original_query}
Output: Reformulations:
)";

inline constexpr std::string_view kAnswerQa =
    R"(You are a history expert and must answer the following question using the provided historical text excerpts. Your task is to answer the question using EXCLUSIVELY the information contained in the newspaper excerpts provided below.

Input: Newspaper Excerpts: {context_text}
Input: Question: {query}

Constraints:
- Make no assumptions; do not use any external knowledge.
- If the excerpts don't contain the necessary information to answer the question, you MUST explicitly state: "I cannot answer this question based solely on the provided information."
- Answer in the same language as the question.
- Carefully verify that each piece of information extracted pertains solely to the main event of the question, excluding those mentioned in the context, unless the causal link is explicit.
- If you identify actors, ensure their relationships are explicitly described in the excerpts before asserting them.
- Do not refer to yourself as an "AI model".
- A consequence is a result or effect that occurs after an event. An event that triggers or causes another event is not a consequence of that event itself.
Output: {}
)";

/// Shorter variant of the QA prompt, kept as an alternate.
inline constexpr std::string_view kAnswerGenerationAlt =
    R"(Task: Act as a history expert. Answer the question using exclusively the provided "Historical Extracts".
Constraints:
- Do not use outside knowledge or make assumptions.
- If information is missing, state: "I cannot answer this question based solely on the provided information."
- Verify that extracted details relate to the main event, not unrelated mentioned events.
- Ensure relationships between entities are explicitly described before asserting them.
- Do not refer to yourself as an AI model.
- Note: A consequence is a result occurring after an event; a cause is not a consequence.
Input: : {context_text}, Question: {query}
Output: Answer: {}
)";

inline constexpr std::string_view kJudgeClaims =
    R"(Break the following answer into atomic factual claims.
Write exactly one claim per line, with no numbering and no commentary.
Answer: {answer}
Claims:
)";

inline constexpr std::string_view kJudgeVerdict =
    R"(Decide whether the claim is directly supported by the context.
Reply with a single word: yes or no.
Context: {context_text}
Claim: {claim}
Verdict:
)";

inline constexpr std::string_view kRelevancyQuestions =
    R"(Write {num_questions} distinct questions that the following answer responds to.
Write exactly one question per line, with no numbering.
Answer: {answer}
Questions:
)";

inline constexpr std::string_view kAbstentionEn =
    "I cannot answer this question based solely on the provided information.";

/// Replaces {name} placeholders in one left-to-right pass; substituted text
/// is never rescanned and unknown braces are kept verbatim.
inline std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = vars.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

inline std::string read_template(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read template file '" + path + "'");
  return {std::istreambuf_iterator<char>(in), {}};
}

/// The set of templates a pipeline uses; defaults are the built-ins.
struct TemplateSet {
  std::string query_variation{kQueryVariation};
  std::string answer{kAnswerQa};
  std::string judge_claims{kJudgeClaims};
  std::string judge_verdict{kJudgeVerdict};
  std::string relevancy_questions{kRelevancyQuestions};

  /// Loads the v1 files from a directory, failing if any is missing.
  static TemplateSet from_directory(const std::string& dir) {
    TemplateSet t;
    t.query_variation = read_template(dir + "/query_variation.v1.txt");
    t.answer = read_template(dir + "/answer_qa.v1.txt");
    t.judge_claims = read_template(dir + "/judge_claims.v1.txt");
    t.judge_verdict = read_template(dir + "/judge_verdict.v1.txt");
    t.relevancy_questions = read_template(dir + "/relevancy_questions.v1.txt");
    return t;
  }
};

}  // namespace archrag::prompts
