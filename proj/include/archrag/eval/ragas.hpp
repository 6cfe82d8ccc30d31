#pragma once

// Answer-level metrics: faithfulness (supported claims / claims) and answer
// relevancy (mean cosine between regenerated questions and the query).

#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "archrag/eval/metrics.hpp"
#include "archrag/generation.hpp"

namespace archrag::eval {

/// Splits an answer into atomic claims and checks each against a context.
class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  virtual std::vector<std::string> extract_claims(const std::string& answer) const = 0;
  virtual bool supported(const std::string& claim, const std::string& context) const = 0;
};

/// Sentence split on . ! ? outside quotes. A terminator only ends a sentence
/// when followed by whitespace or the end of text, so "3.5" stays whole.
inline std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> out;
  std::vector<char32_t> cps;
  std::vector<std::size_t> offs;
  text::for_each_code_point(s, [&](char32_t c, std::size_t off, std::size_t) {
    cps.push_back(c);
    offs.push_back(off);
  });
  offs.push_back(s.size());
  int straight = 0;  // parity of '"'
  int guillemets = 0, curly = 0;
  std::size_t begin = 0;
  auto flush = [&](std::size_t end_cp) {
    const auto piece = text::trim(s.substr(offs[begin], offs[end_cp] - offs[begin]));
    bool has_word = false;
    text::for_each_code_point(piece, [&](char32_t c, std::size_t, std::size_t) {
      if (text::is_alnum(c)) has_word = true;
    });
    if (has_word) out.emplace_back(piece);
    begin = end_cp;
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t c = cps[i];
    if (c == U'"') straight ^= 1;
    else if (c == U'«') ++guillemets;
    else if (c == U'»') guillemets = std::max(0, guillemets - 1);
    else if (c == U'“') ++curly;
    else if (c == U'”') curly = std::max(0, curly - 1);
    if (c != U'.' && c != U'!' && c != U'?') continue;
    if (straight || guillemets || curly) continue;
    std::size_t j = i + 1;
    while (j < cps.size() && (cps[j] == U'.' || cps[j] == U'!' || cps[j] == U'?')) ++j;
    if (j < cps.size() && !text::is_space(cps[j])) continue;
    flush(j);
    i = j - 1;
  }
  if (begin < cps.size()) flush(cps.size());
  return out;
}

inline const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = [] {
    std::set<std::string> w = function_words();
    for (const char* extra :
         {"be", "been", "are", "it", "he", "she", "they", "we", "i", "you", "not", "no", "there",
          "which", "who", "what", "has", "have", "had", "also", "so", "such", "than", "then",
          "if", "s", "t", "il", "elle", "ils", "elles", "on", "nous", "vous", "je", "ne", "pas",
          "se", "sont", "été", "a", "ont", "était", "y", "n", "qu", "c", "s", "dont", "où",
          "comme", "plus", "très", "aussi", "lui", "même"})
      w.insert(extra);
    return w;
  }();
  return words;
}

inline std::vector<std::string> content_words(std::string_view s) {
  std::vector<std::string> out;
  for (auto& w : text::word_tokens(s))
    if (!stopwords().contains(w)) out.push_back(std::move(w));
  return out;
}

/// Deterministic judge for offline runs. A claim is supported when at least
/// `min_overlap` of its content words occur in the context.
class OfflineJudge final : public JudgeBackend {
 public:
  explicit OfflineJudge(double min_overlap = 0.6) : min_overlap_(min_overlap) {}

  std::vector<std::string> extract_claims(const std::string& answer) const override {
    return split_sentences(answer);
  }

  bool supported(const std::string& claim, const std::string& context) const override {
    const auto words = content_words(claim);
    if (words.empty()) return true;
    const auto ctx = text::word_tokens(context);
    const std::set<std::string> vocab(ctx.begin(), ctx.end());
    std::size_t hit = 0;
    for (const auto& w : words)
      if (vocab.contains(w)) ++hit;
    return static_cast<double>(hit) >= min_overlap_ * static_cast<double>(words.size());
  }

 private:
  double min_overlap_;
};

inline std::vector<std::string> nonempty_lines(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto nl = s.find('\n', pos);
    if (nl == std::string_view::npos) nl = s.size();
    const auto line = archrag::detail::strip_enumeration(s.substr(pos, nl - pos));
    if (!line.empty()) out.emplace_back(line);
    pos = nl + 1;
  }
  return out;
}

/// Judge backed by an LLM with the claims and verdict prompts.
class LlmJudge final : public JudgeBackend {
 public:
  LlmJudge(const LlmBackend& llm, std::string model, prompts::TemplateSet templates = {})
      : llm_(llm), model_(std::move(model)), templates_(std::move(templates)) {}

  std::vector<std::string> extract_claims(const std::string& answer) const override {
    const auto reply = llm_.complete(
        {model_, prompts::render(templates_.judge_claims, {{"answer", answer}}), 0.0, 512});
    return nonempty_lines(reply);
  }

  bool supported(const std::string& claim, const std::string& context) const override {
    const auto reply = llm_.complete(
        {model_,
         prompts::render(templates_.judge_verdict, {{"context_text", context}, {"claim", claim}}),
         0.0, 8});
    const auto norm = normalize_for_match(reply);
    return norm.starts_with("yes") || norm.starts_with("oui");
  }

 private:
  const LlmBackend& llm_;
  std::string model_;
  prompts::TemplateSet templates_;
};

/// Supported claims over extracted claims; 0 for an abstained answer.
inline double faithfulness(const Answer& answer, const EvidenceContext& ctx,
                           const JudgeBackend& judge) {
  if (answer.abstained) return 0.0;
  const auto claims = judge.extract_claims(answer.text);
  if (claims.empty()) throw UndefinedMetric("no claims extracted from a non-abstained answer");
  std::size_t ok = 0;
  for (const auto& c : claims)
    if (judge.supported(c, ctx.rendered)) ++ok;
  return static_cast<double>(ok) / static_cast<double>(claims.size());
}

/// Produces N questions an answer would respond to.
class QuestionGenerator {
 public:
  virtual ~QuestionGenerator() = default;
  virtual std::vector<std::string> generate(const std::string& answer, std::size_t n) const = 0;
};

/// Offline stand-in: the answer text itself, N times.
class EchoQuestionGenerator final : public QuestionGenerator {
 public:
  std::vector<std::string> generate(const std::string& answer, std::size_t n) const override {
    return std::vector<std::string>(n, answer);
  }
};

class LlmQuestionGenerator final : public QuestionGenerator {
 public:
  LlmQuestionGenerator(const LlmBackend& llm, std::string model,
                       prompts::TemplateSet templates = {})
      : llm_(llm), model_(std::move(model)), templates_(std::move(templates)) {}

  std::vector<std::string> generate(const std::string& answer, std::size_t n) const override {
    const auto reply = llm_.complete(
        {model_,
         prompts::render(templates_.relevancy_questions,
                         {{"num_questions", std::to_string(n)}, {"answer", answer}}),
         0.0, 512});
    auto qs = nonempty_lines(reply);
    if (qs.size() > n) qs.resize(n);
    return qs;
  }

 private:
  const LlmBackend& llm_;
  std::string model_;
  prompts::TemplateSet templates_;
};

/// Maps texts to vectors (any scale; cosine is taken).
using TextEmbedder = std::function<std::vector<std::vector<double>>(const std::vector<std::string>&)>;

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

/// Mean cosine between each generated-question vector and the query vector.
inline double mean_cosine(const std::vector<std::vector<double>>& generated,
                          const std::vector<double>& original) {
  if (generated.empty()) throw UndefinedMetric("no generated questions");
  double sum = 0.0;
  for (const auto& g : generated) sum += cosine(g, original);
  return sum / static_cast<double>(generated.size());
}

/// Embedder over a provider. The fallback provider is evaluated in double
/// precision; remote vectors are widened from the wire format.
inline TextEmbedder provider_embedder(const ProviderConfig& cfg) {
  return [cfg](const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    if (cfg.kind == ProviderKind::fallback) {
      for (const auto& t : texts) out.push_back(fallback_vector(cfg.query_prefix + t, cfg.dim, cfg.seed));
      return out;
    }
    for (const auto& e : embed_batch(texts, cfg, TextRole::query))
      out.emplace_back(e.values.begin(), e.values.end());
    return out;
  };
}

/// 0 for an abstained answer; nullopt when the question generator or the
/// embedder fails (reported as unavailable).
inline std::optional<double> answer_relevancy(const Answer& answer, const std::string& query,
                                              const QuestionGenerator& gen,
                                              const TextEmbedder& embed, std::size_t n = 3) {
  if (n < 1) throw ConfigError("relevancy needs N >= 1");
  if (answer.abstained) return 0.0;
  try {
    auto questions = gen.generate(answer.text, n);
    if (questions.empty()) return std::nullopt;
    questions.push_back(query);
    auto vecs = embed(questions);
    const auto original = std::move(vecs.back());
    vecs.pop_back();
    return mean_cosine(vecs, original);
  } catch (const BackendError&) {
    return std::nullopt;
  }
}

}  // namespace archrag::eval
