// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>

#include "../support.hpp"
#include "archrag/eval/benchmark.hpp"

using namespace archrag;
using namespace archrag::eval;
using Clock = std::chrono::steady_clock;

namespace {

struct Failure {
  std::string why;
};

void expect(bool ok, const std::string& why) {
  if (!ok) throw Failure{why};
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<ScoredChunk> ranked(const std::vector<std::string>& ids) {
  std::vector<ScoredChunk> out;
  double s = 1.0;
  for (const auto& id : ids) out.push_back({id, s -= 0.05});
  return out;
}

RankedList list_of(const std::string& qid, const std::vector<std::string>& ids) {
  return {qid, ranked(ids), ListSource::dense};
}

// ---- 1 ----
void rrf_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  std::vector<std::string> pool;
  for (int i = 0; i < 10; ++i) pool.push_back("c" + std::to_string(i));
  const int ks[] = {1, 10, 60};
  for (int t = 0; t < 1000; ++t) {
    const int k = ks[t % 3];
    const std::size_t nl = 1 + rng() % 6;
    std::vector<RankedList> lists;
    std::map<std::string, double> want;
    for (std::size_t l = 0; l < nl; ++l) {
      auto ids = pool;
      std::shuffle(ids.begin(), ids.end(), rng);
      ids.resize(rng() % 11);
      for (std::size_t r = 0; r < ids.size(); ++r) want[ids[r]] += 1.0 / (k + double(r + 1));
      lists.push_back(list_of("q" + std::to_string(l), ids));
    }
    const auto got = rrf_fuse(lists, k);
    expect(got.items.size() == want.size(), "fused size differs from union of lists");
    for (std::size_t i = 0; i < got.items.size(); ++i) {
      expect(near(got.items[i].score, want.at(got.items[i].chunk_id), 1e-12), "score differs from direct sum");
      if (i) expect(got.items[i - 1].score >= got.items[i].score, "not sorted by score");
    }
  }
  const double s = elapsed(t0);
  expect(s < 5.0, "runtime " + std::to_string(s) + " s");
}

// ---- 2 ----
void rrf_worked() {
  auto one = rrf_fuse({list_of("q", {"a"})}, 60);
  expect(near(one.items.at(0).score, 1.0 / 61, 1e-12), "single rank-1 != 1/61");
  auto two = rrf_fuse({list_of("q1", {"a"}), list_of("q2", {"x", "y", "a"})}, 60);
  double a = 0;
  for (const auto& it : two.items)
    if (it.chunk_id == "a") a = it.score;
  expect(near(a, 1.0 / 61 + 1.0 / 63, 1e-12), "ranks {1,3} != 1/61+1/63");
  std::vector<RankedList> lists;
  const std::vector<std::string> filler{"f1", "f2", "f3", "f4"};
  for (int i = 0; i < 3; ++i) {
    auto ids = filler;
    for (auto& f : ids) f += "_" + std::to_string(i);
    ids.push_back("consensus");
    lists.push_back(list_of("q" + std::to_string(i), ids));
  }
  lists.push_back(list_of("q3", {"lone"}));
  auto c = rrf_fuse(lists, 60);
  expect(c.items.at(0).chunk_id == "consensus", "consensus item not first");
  expect(near(c.items[0].score, 3.0 / 65, 1e-12), "consensus score != 3/65");
  for (std::size_t i = 1; i < c.items.size(); ++i)
    if (c.items[i].chunk_id == "lone") expect(near(c.items[i].score, 1.0 / 61, 1e-12), "lone rank-1 != 1/61");
}

struct ToyFixture {
  app::AppConfig cfg;
  VectorIndex index;
  std::unique_ptr<LlmBackend> llm;
  std::vector<BenchmarkQuery> queries;
  Qrels qrels;
};

ToyFixture load_toy() {
  ToyFixture f;
  app::apply_config_file(f.cfg, testutil::toy("config.json").string());
  f.index = build_index(load_corpus(f.cfg.corpus_path), f.cfg.embedding);
  f.llm = app::make_llm(f.cfg);
  f.queries = read_queries(testutil::toy("queries.jsonl").string());
  f.qrels = read_qrels(testutil::toy("qrels.txt").string());
  return f;
}

// ---- 3 ----
void fusion_robustness() {
  const auto t0 = Clock::now();
  const auto f = load_toy();
  const auto rep = run_retrieval_benchmark(f.index, f.queries, f.qrels, f.cfg.retrieval, f.cfg.embedding, f.llm.get());
  expect(rep.failed_queries.empty(), "some benchmark queries failed");
  const double d5 = rep.dense.recall.at("5"), f5 = rep.fused.recall.at("5");
  expect(f5 >= d5, "fused R@5 " + std::to_string(f5) + " < dense " + std::to_string(d5));
  bool rescued = false;
  for (const auto& r : rep.per_query) {
    const auto d = r.dense_first_relevant ? r.dense_first_relevant : SIZE_MAX;
    const auto fr = r.fused_first_relevant ? r.fused_first_relevant : SIZE_MAX;
    if (r.variations > 0 && fr < d) rescued = true;
  }
  expect(rescued, "no query improved by expansion");
  const double s = elapsed(t0);
  expect(s < 10.0, "runtime " + std::to_string(s) + " s");
}

// ---- 4 ----
void retrieval_metrics() {
  std::mt19937_64 rng(7);
  std::vector<std::string> pool;
  for (int i = 0; i < 12; ++i) pool.push_back("c" + std::to_string(i));
  auto instance = [&](RunResult& run, Qrels& qrels) {
    const std::size_t nq = 1 + rng() % 5;
    for (std::size_t q = 0; q < nq; ++q) {
      const auto qid = "q" + std::to_string(q);
      auto ids = pool;
      std::shuffle(ids.begin(), ids.end(), rng);
      ids.resize(rng() % 11);
      run[qid] = ranked(ids);
      std::set<std::string> rel;
      for (const auto& c : pool)
        if (rng() % 4 == 0) rel.insert(c);
      if (rel.empty()) rel.insert(pool[q]);
      qrels[qid] = rel;
    }
  };
  for (int t = 0; t < 500; ++t) {
    RunResult run;
    Qrels qrels;
    instance(run, qrels);
    for (std::size_t k : {1, 3, 5, 10}) {
      double sum = 0;
      for (const auto& [q, l] : run) {
        double hit = 0;
        for (std::size_t i = 0; i < std::min(k, l.size()); ++i) hit += qrels[q].count(l[i].chunk_id);
        sum += hit / double(qrels[q].size());
      }
      expect(near(recall_at_k(run, qrels, k), sum / double(run.size()), 1e-12), "recall_at_k oracle");
    }
    double top = 0, drop = 0;
    std::size_t nd = 0;
    std::vector<RankedList> lists;
    for (const auto& [q, l] : run) {
      double hit = 0;
      for (std::size_t i = 0; i < std::min<std::size_t>(5, l.size()); ++i) hit += qrels[q].count(l[i].chunk_id);
      top += hit / 5.0;
      lists.push_back({q, l, ListSource::dense});
      if (l.size() >= 2) {
        drop += l[0].score - l[1].score;
        ++nd;
        expect(near(confidence_drop(lists.back()), l[0].score - l[1].score, 1e-12), "confidence_drop oracle");
      }
    }
    expect(near(top5_rate(run, qrels), top / double(run.size()), 1e-12), "top5_rate oracle");
    expect(near(mean_confidence_drop(lists), nd ? drop / double(nd) : 0.0, 1e-12), "mean drop oracle");
  }
  for (int t = 0; t < 1000; ++t) {
    RunResult run;
    Qrels qrels;
    instance(run, qrels);
    double prev = 0;
    for (std::size_t k = 1; k <= 12; ++k) {
      const double r = recall_at_k(run, qrels, k);
      expect(r >= prev && r <= 1.0, "recall not monotone in K");
      prev = r;
    }
  }
}

// ---- 5 ----
double dist(const Point& a, const Point& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

void clustering_metrics() {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 6 + rng() % 195;
    const int k = 2 + int(rng() % 4);
    const std::size_t d = 1 + rng() % 5;
    std::vector<Point> x(n, Point(d));
    for (auto& p : x)
      for (auto& v : p) v = g(rng);
    std::vector<int> lab(n);
    for (std::size_t i = 0; i < n; ++i) lab[i] = i < std::size_t(k) ? int(i) : int(rng() % k);
    std::shuffle(lab.begin(), lab.end(), rng);

    std::vector<std::vector<std::size_t>> mem(k);
    for (std::size_t i = 0; i < n; ++i) mem[lab[i]].push_back(i);
    double sil = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& own = mem[lab[i]];
      if (own.size() < 2) continue;
      double a = 0;
      for (auto j : own) a += j == i ? 0 : dist(x[i], x[j]);
      a /= double(own.size() - 1);
      double b = INFINITY;
      for (int c = 0; c < k; ++c) {
        if (c == lab[i]) continue;
        double m = 0;
        for (auto j : mem[c]) m += dist(x[i], x[j]);
        b = std::min(b, m / double(mem[c].size()));
      }
      sil += std::max(a, b) == 0 ? 0 : (b - a) / std::max(a, b);
    }
    sil /= double(n);
    std::vector<Point> cen(k, Point(d, 0.0));
    Point mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        cen[lab[i]][j] += x[i][j] / double(mem[lab[i]].size());
        mean[j] += x[i][j] / double(n);
      }
    std::vector<double> sig(k, 0.0);
    double within = 0, between = 0;
    for (int c = 0; c < k; ++c) {
      for (auto j : mem[c]) {
        sig[c] += dist(x[j], cen[c]) / double(mem[c].size());
        within += std::pow(dist(x[j], cen[c]), 2);
      }
      between += double(mem[c].size()) * std::pow(dist(cen[c], mean), 2);
    }
    double db = 0;
    for (int i = 0; i < k; ++i) {
      double w = 0;
      for (int j = 0; j < k; ++j)
        if (i != j && dist(cen[i], cen[j]) > 0) w = std::max(w, (sig[i] + sig[j]) / dist(cen[i], cen[j]));
      db += w / k;
    }
    const double ch = within == 0 || n == std::size_t(k) ? 1.0 : (between / (k - 1)) / (within / double(n - k));
    const auto m = cluster_metrics(x, lab);
    expect(near(m.silhouette, sil, 1e-9), "silhouette oracle");
    expect(near(m.davies_bouldin, db, 1e-9), "Davies-Bouldin oracle");
    expect(near(m.calinski_harabasz, ch, 1e-9 * std::max(1.0, ch)), "Calinski-Harabasz oracle");
    expect(m.silhouette >= -1 && m.silhouette <= 1, "silhouette out of range");
  }
  std::normal_distribution<double> tight(0, 0.01);
  std::vector<Point> blobs;
  for (int i = 0; i < 40; ++i) blobs.push_back({(i < 20 ? 1.0 : -1.0) + tight(rng), tight(rng)});
  const double s = cluster_metrics(blobs, assign_clusters(blobs, 2, 42)).silhouette;
  expect(s > 0.9, "two-blob silhouette " + std::to_string(s));
}

// ---- 6 ----
void abstention() {
  auto f = load_toy();
  auto idx = std::make_shared<VectorIndex>(std::move(f.index));
  std::shared_ptr<const LlmBackend> llm = std::move(f.llm);
  app::Engine engine(f.cfg, idx, llm);
  const auto qa = read_queries(testutil::toy("qa.jsonl").string());
  bool seen = false;
  for (const auto& q : qa) {
    if (q.category != QueryCategory::absurd) continue;
    seen = true;
    const auto r = engine.ask(q.text, q.lang);
    expect(r.answer.abstained, "absurd query not abstained");
    const auto row = score_answer(q, r.answer, app::Engine::context_of(r), OfflineJudge{}, EchoQuestionGenerator{},
                                  provider_embedder(f.cfg.embedding));
    expect(row.faithfulness == 0.0, "faithfulness not 0.000");
    expect(row.answer_relevancy == 0.0, "answer relevancy not 0.000");
  }
  expect(seen, "no absurd question in the QA set");
}

EvidenceContext context_of(const std::string& text) {
  EvidenceContext ctx;
  ctx.groups.push_back({"d", "T", {{"d#0", text, 1, 0.1}}});
  ctx.rendered = render_group(ctx.groups[0]);
  return ctx;
}

Answer answer_of(const std::string& text) {
  Answer a;
  a.text = text;
  return a;
}

// ---- 7 ----
void faithfulness_contract() {
  const std::string ctx =
      "The armistice was signed at Compiègne on 11 November 1918. Marshal Foch led the Allied delegation. "
      "Fighting stopped at eleven o'clock.";
  OfflineJudge judge;
  expect(faithfulness(answer_of(ctx), context_of(ctx), judge) == 1.0, "verbatim answer not 1.0");
  const std::string answer = ctx + " Napoleon commanded a fleet of Japanese submarines.";
  const double n = double(judge.extract_claims(answer).size());
  expect(n == 4, "expected four claims, got " + std::to_string(n));
  expect(faithfulness(answer_of(answer), context_of(ctx), judge) == (n - 1) / n, "injected sentence not (n-1)/n");
}

// ---- 8 ----
void relevancy_contract() {
  class Fixed final : public QuestionGenerator {
   public:
    explicit Fixed(std::vector<std::string> q) : q_(std::move(q)) {}
    std::vector<std::string> generate(const std::string&, std::size_t) const override { return q_; }

   private:
    std::vector<std::string> q_;
  };
  const std::string q = "When was the armistice signed?";
  ProviderConfig p;
  auto r1 = answer_relevancy(answer_of("In 1918."), q, Fixed({q, q, q}), provider_embedder(p), 3);
  expect(r1 && near(*r1, 1.0, 1e-6), "identical questions not 1.0");
  TextEmbedder table = [](const std::vector<std::string>& texts) {
    static const std::map<std::string, std::vector<double>> v{
        {"q", {1.0, 0.0}}, {"g1", {0.8, 0.6}}, {"g2", {0.6, 0.8}}};
    std::vector<std::vector<double>> out;
    for (const auto& t : texts) out.push_back(v.at(t));
    return out;
  };
  auto r2 = answer_relevancy(answer_of("a"), "q", Fixed({"g1", "g2"}), table, 2);
  expect(r2 && near(*r2, 0.7, 1e-12), "0.8/0.6 case not 0.7");
}

// ---- 9 ----
void index_integrity() {
  std::mt19937_64 rng(99);
  testutil::TempDir tmp;
  VectorIndex idx("acc", 32);
  for (int i = 0; i < 100; ++i)
    idx.add("c" + std::to_string(i), testutil::random_unit(rng, 32), {"d", "t", "en", "x"});
  idx.save(tmp / "i.idx");
  const auto back = VectorIndex::load(tmp / "i.idx");
  for (int q = 0; q < 50; ++q) {
    const Embedding e{testutil::random_unit(rng, 32), "acc"};
    const auto a = idx.search(e, 100), b = back.search(e, 100);
    expect(a.items.size() == b.items.size(), "round-trip result size");
    for (std::size_t i = 0; i < a.items.size(); ++i)
      expect(a.items[i].chunk_id == b.items[i].chunk_id &&
                 std::memcmp(&a.items[i].score, &b.items[i].score, sizeof(double)) == 0,
             "round-trip result differs");
  }
  for (std::size_t n : {1u, 2u, 7u, 50u, 333u, 1000u}) {
    VectorIndex x("acc", 16);
    std::vector<std::vector<float>> vecs;
    for (std::size_t i = 0; i < n; ++i) {
      vecs.push_back(testutil::random_unit(rng, 16));
      char id[32];
      std::snprintf(id, sizeof id, "c%05zu", i);
      x.add(id, vecs.back(), {"d", "t", "en", "x"});
    }
    const auto qv = testutil::random_unit(rng, 16);
    std::vector<std::pair<double, std::string>> brute;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < 16; ++j) s += double(qv[j]) * double(vecs[i][j]);
      brute.push_back({-s, x.chunk_id(i)});
    }
    std::sort(brute.begin(), brute.end());
    for (std::size_t k : {std::size_t(1), std::size_t(5), n, n + 3}) {
      const auto r = x.search({qv, "acc"}, k);
      expect(r.items.size() == std::min(k, n), "search size");
      for (std::size_t i = 0; i < r.items.size(); ++i) {
        expect(r.items[i].chunk_id == brute[i].second, "search order differs from brute force");
        expect(near(r.items[i].score, -brute[i].first, 1e-6), "search score differs from brute force");
      }
    }
  }
}

// ---- 10 ----
void prompt_fidelity() {
  const std::string mandated = "I cannot answer this question based solely on the provided information.";
  const std::string variation =
      "Task: Reformulate the following question in {num_variations} different ways for the purpose of searching in historical archives.\n"
      "Constraints:\n- Preserve the original meaning\n- Be concise\n- One reformulation per line\n"
      "- Do not number the reformulations\nInput: {original_query}\nOutput: Reformulations:\n";
  const std::string qa =
      "You are a history expert and must answer the following question using the provided historical text excerpts. "
      "Your task is to answer the question using EXCLUSIVELY the information contained in the newspaper excerpts provided below.\n\n"
      "Input: Newspaper Excerpts: {context_text}\nInput: Question: {query}\n\nConstraints:\n"
      "- Make no assumptions; do not use any external knowledge.\n"
      "- If the excerpts don't contain the necessary information to answer the question, you MUST explicitly state: \"" +
      mandated +
      "\"\n- Answer in the same language as the question.\n"
      "- Carefully verify that each piece of information extracted pertains solely to the main event of the question, "
      "excluding those mentioned in the context, unless the causal link is explicit.\n"
      "- If you identify actors, ensure their relationships are explicitly described in the excerpts before asserting them.\n"
      "- Do not refer to yourself as an \"AI model\".\n"
      "- A consequence is a result or effect that occurs after an event. An event that triggers or causes another event "
      "is not a consequence of that event itself.\nOutput: {}\n";
  expect(std::string(prompts::kQueryVariation) == variation, "variation template differs");
  expect(std::string(prompts::kAnswerQa) == qa, "QA template differs");
  expect(std::string(prompts::kAbstentionEn) == mandated, "mandated sentence differs");
  const auto dir = (testutil::source_dir() / "templates").string();
  expect(testutil::read_text(dir + "/query_variation.v1.txt") == variation, "variation template file differs");
  expect(testutil::read_text(dir + "/answer_qa.v1.txt") == qa, "QA template file differs");
  expect(std::string(kGroupSeparator) == "\n\n---\n\n", "separator differs");

  VectorIndex idx("t", 4);
  std::mt19937_64 rng(5);
  for (int d = 0; d < 6; ++d)
    for (int c = 0; c < 3; ++c)
      idx.add("d" + std::to_string(d) + "#" + std::to_string(c), std::vector<float>(4),
              {"d" + std::to_string(d), "T", "en", "text"});
  for (int t = 0; t < 200; ++t) {
    FusedResult f;
    std::set<std::string> docs;
    for (std::size_t i = 0, n = 1 + rng() % 10; i < n; ++i) {
      const auto id = idx.chunk_id(rng() % idx.size());
      bool dup = false;
      for (const auto& it : f.items) dup |= it.chunk_id == id;
      if (dup) continue;
      f.items.push_back({id, 1.0 / double(60 + f.items.size() + 1), {}});
      docs.insert(idx.meta(id).doc_id);
    }
    const auto ctx = structure_context(f, idx);
    std::size_t seps = 0;
    for (auto p = ctx.rendered.find(kGroupSeparator); p != std::string::npos;
         p = ctx.rendered.find(kGroupSeparator, p + 1))
      ++seps;
    expect(seps == docs.size() - 1, "separator count != groups - 1");
    const auto prompt = build_answer_prompt(ctx, "q?");
    expect(prompt.find(mandated) != std::string::npos, "prompt lacks the mandated sentence");
  }
}

// ---- 11 ----
void synrel() {
  expect(syntactic_relevance({{{"Walter Porzig", "PER", 0, 13}}}) == 1.0, "Walter Porzig/PER not 1.0");
  expect(syntactic_relevance({{{"##iste allemand Walter Porzig", "LABEL_0", 0, 29}}}) == 0.0,
         "##iste allemand Walter Porzig/LABEL_0 not 0.0");
}

// ---- 12 ----
void end_to_end() {
  const auto t0 = Clock::now();
  testutil::TempDir tmp;
  const std::string cfg = testutil::toy("config.json").string();
  auto step = [](const testutil::CliResult& r, const char* what) {
    expect(r.code == 0, std::string(what) + " exited " + std::to_string(r.code) + ": " + r.err);
  };
  step(testutil::cli({"ingest", "--config", cfg, "-i", testutil::toy("corpus.jsonl").string(), "-o",
                      tmp / "chunks.jsonl", "--ner", "mock", "--mock-script", testutil::toy("mock_script.json").string()}),
       "ingest");
  step(testutil::cli({"index", "--config", cfg, "--corpus", tmp / "chunks.jsonl", "--output", tmp / "toy.idx"}), "index");
  const std::map<std::string, std::string> truth{{"qa1", "d001#0"}, {"qa2", "d002#0"}, {"qa3", "d003#0"}};
  for (const auto& q : read_queries(testutil::toy("qa.jsonl").string())) {
    if (q.category == QueryCategory::absurd) continue;
    const auto r = testutil::cli({"ask", "--config", cfg, "--index", tmp / "toy.idx", "-q", q.text, "--lang", q.lang, "--json"});
    step(r, "ask");
    const auto resp = json::parse(r.out).get<app::AskResponse>();
    expect(!resp.answer.abstained, q.query_id + " abstained");
    const auto& cites = resp.answer.citations;
    expect(std::find(cites.begin(), cites.end(), truth.at(q.query_id)) != cites.end(),
           q.query_id + " does not cite " + truth.at(q.query_id));
  }
  step(testutil::cli({"eval", "--config", cfg, "--index", tmp / "toy.idx", "--queries",
                      testutil::toy("queries.jsonl").string(), "--qrels", testutil::toy("qrels.txt").string(), "--qa",
                      testutil::toy("qa.jsonl").string(), "--latent", "--ner-corpus", tmp / "chunks.jsonl", "--out",
                      tmp / "reports"}),
       "eval");
  const auto rep = json::parse(testutil::read_text(tmp / "reports/report.json")).get<EvalReport>();
  expect(rep.retrieval.has_value(), "report lacks the retrieval table");
  for (const auto* cols : {&rep.retrieval->dense, &rep.retrieval->fused})
    expect(cols->recall.contains("1") && cols->recall.contains("5"), "report lacks @1/@5 columns");
  expect(range_violations(rep).empty(), "report has out-of-range rates");
  const auto text = testutil::read_text(tmp / "reports/report.txt");
  for (const char* col : {"@1 (D)", "@5 (D)", "Δ1→2 (D)", "@1 (F)", "@5 (F)", "Δ1→2 (F)", "Time (s)"})
    expect(text.find(col) != std::string::npos, std::string("report lacks column ") + col);
  const double s = elapsed(t0);
  expect(s < 30.0, "runtime " + std::to_string(s) + " s");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void()>>> criteria{
      {"RRF matches direct summation on 1000 random instances in under 5 s", rrf_oracle},
      {"RRF worked values 1/61, 1/61+1/63 and consensus ordering", rrf_worked},
      {"fusion matches or beats dense Recall@5 and rescues a mismatched query in under 10 s", fusion_robustness},
      {"recall, top-5 rate and confidence drop match oracles; recall monotone in K", retrieval_metrics},
      {"silhouette, Davies-Bouldin and Calinski-Harabasz match oracles; blobs > 0.9", clustering_metrics},
      {"absurd question abstains with faithfulness and relevancy 0.000", abstention},
      {"faithfulness 1.0 for verbatim, (n-1)/n with one injected sentence", faithfulness_contract},
      {"answer relevancy 1.0 for identical questions, 0.7 for the 0.8/0.6 case", relevancy_contract},
      {"index round-trip bit-exact; search equals brute force", index_integrity},
      {"prompt templates byte-exact; separator count invariant", prompt_fidelity},
      {"SynRel gives 1.0 and 0.0 on the reference examples", synrel},
      {"ingest, index, ask and eval on the toy corpus in under 30 s", end_to_end},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::string why;
    try {
      criteria[i].second();
    } catch (const Failure& f) {
      why = f.why;
    } catch (const std::exception& e) {
      why = std::string("exception: ") + e.what();
    }
    std::cout << (why.empty() ? "PASS" : "FAIL") << " [" << (i + 1) << "] " << criteria[i].first;
    if (!why.empty()) {
      std::cout << " -- " << why;
      ++failed;
    }
    std::cout << "\n";
  }
  return failed == 0 ? 0 : 1;
}
