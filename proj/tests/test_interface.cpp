#include <catch_amalgamated.hpp>

#include <httplib.h>

#include "archrag/app/cli.hpp"
#include "support.hpp"

using namespace archrag;
using namespace archrag::app;
using testutil::cli;

namespace {

const std::string kConfig = testutil::toy("config.json").string();

// Builds the toy index once per process.
const std::string& toy_index() {
  static testutil::TempDir dir;
  static const std::string path = [] {
    const std::string p = dir / "toy.idx";
    const auto r = cli({"index", "--config", kConfig, "--output", p});
    REQUIRE(r.code == 0);
    return p;
  }();
  return path;
}

std::string jsonl(const std::vector<json>& rows) {
  std::string s;
  for (const auto& r : rows) s += r.dump() + "\n";
  return s;
}

}  // namespace

TEST_CASE("cli: ingest empty file") {
  testutil::TempDir tmp;
  testutil::write_text(tmp / "empty.jsonl", "");
  auto r = cli({"ingest", "-i", tmp / "empty.jsonl", "-o", tmp / "chunks.jsonl"});
  CHECK(r.code == 0);
  CHECK(r.out.find("0 chunks") != std::string::npos);
  CHECK(testutil::read_text(tmp / "chunks.jsonl").empty());
}

TEST_CASE("cli: ingest names the malformed line") {
  testutil::TempDir tmp;
  testutil::write_text(tmp / "bad.jsonl",
                       jsonl({{{"doc_id", "a"}, {"title", "A"}, {"text", "x"}},
                              {{"doc_id", "b"}, {"title", "B"}, {"text", "y"}}}) +
                           "{not json\n");
  auto r = cli({"ingest", "-i", tmp / "bad.jsonl", "-o", tmp / "c.jsonl"});
  CHECK(r.code == 2);
  CHECK(r.err.find("line 3") != std::string::npos);
}

TEST_CASE("cli: ingest then index is byte-identical across runs") {
  testutil::TempDir tmp;
  REQUIRE(cli({"ingest", "-i", testutil::toy("corpus.jsonl").string(), "-o", tmp / "c.jsonl"}).code == 0);
  for (const char* name : {"a.idx", "b.idx"}) {
    auto r = cli({"index", "--corpus", tmp / "c.jsonl", "--embed-dim", "64", "--output", tmp / name});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("dim=64") != std::string::npos);
  }
  CHECK(testutil::read_text(tmp / "a.idx") == testutil::read_text(tmp / "b.idx"));
}

TEST_CASE("cli: remote embedding failure names EMBED_API_BASE") {
  testutil::TempDir tmp;
  MockBackendServer server({}, {64, 0, 0, true});
  server.start();
  testutil::EnvGuard env("EMBED_API_BASE", server.base_url());
  auto r = cli({"index", "--corpus", testutil::toy("corpus.jsonl").string(), "--embed-kind", "remote",
                "--embed-dim", "64", "--output", tmp / "x.idx"});
  CHECK(r.code != 0);
  CHECK(r.err.find("EMBED_API_BASE") != std::string::npos);
}

TEST_CASE("cli: missing LLM names LLM_API_BASE") {
  testutil::EnvGuard env("LLM_API_BASE", "");
  auto r = cli({"ask", "--index", toy_index(), "-q", "Qui est Antoine Meillet ?", "--embed-dim", "768"});
  CHECK(r.code == 2);
  CHECK(r.err.find("LLM_API_BASE") != std::string::npos);
}

TEST_CASE("cli: unknown index path fails") {
  auto r = cli({"search", "--index", "/nonexistent/x.idx", "-q", "x", "--expand", "0"});
  CHECK(r.code != 0);
  CHECK(r.err.find("/nonexistent/x.idx") != std::string::npos);
}

TEST_CASE("cli: search without expansion matches direct index search") {
  const std::string q = "When did the Great War come to a close?";
  auto r = cli({"search", "--config", kConfig, "--index", toy_index(), "-q", q, "--expand", "0", "--k", "5"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("rrf_k=60") != std::string::npos);

  AppConfig c;
  apply_config_file(c, kConfig);
  const auto idx = VectorIndex::load(toy_index());
  const auto direct = idx.search(embed_query(q, c.embedding), 5);
  for (std::size_t i = 0; i < direct.items.size(); ++i) {
    const std::string line = std::to_string(i + 1) + ". " + direct.items[i].chunk_id + " ";
    CHECK(r.out.find(line) != std::string::npos);
  }
}

TEST_CASE("cli: ask abstains on the absurd question and answers the factual one") {
  const std::string absurd =
      "Expliquez en détail comment les voyages interstellaires des Romains ont influencé l'architecture des "
      "temples égyptiens.";
  auto a = cli({"ask", "--config", kConfig, "--index", toy_index(), "-q", absurd});
  REQUIRE(a.code == 0);
  CHECK(a.out.rfind("ABSTAINED: ", 0) == 0);

  auto j = cli({"ask", "--config", kConfig, "--index", toy_index(), "-q", "Qui est Antoine Meillet ?", "--json"});
  REQUIRE(j.code == 0);
  const auto resp = json::parse(j.out).get<AskResponse>();
  CHECK_FALSE(resp.answer.abstained);
  CHECK(std::find(resp.answer.citations.begin(), resp.answer.citations.end(), "d002#0") !=
        resp.answer.citations.end());
}

TEST_CASE("cli: eval writes reports") {
  testutil::TempDir tmp;
  auto r = cli({"eval", "--config", kConfig, "--index", toy_index(), "--queries",
                testutil::toy("queries.jsonl").string(), "--qrels", testutil::toy("qrels.txt").string(), "--qa",
                testutil::toy("qa.jsonl").string(), "--latent", "--csv", "--out", tmp.path().string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  for (const char* f : {"report.json", "report.txt", "report.csv", "run.dense.txt", "run.fused.txt"})
    CHECK(std::filesystem::exists(tmp.path() / f));
  const auto rep = json::parse(testutil::read_text(tmp / "report.json")).get<eval::EvalReport>();
  REQUIRE(rep.retrieval);
  REQUIRE(rep.latent);
  CHECK(rep.qa.size() == 4);
  CHECK(rep.qa.back().abstained);
  CHECK(eval::range_violations(rep).empty());
  CHECK(r.out.find("@1 (F)") != std::string::npos);
}

TEST_CASE("cli: usage errors") {
  CHECK(cli({}).code != 0);
  CHECK(cli({"search"}).code != 0);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("config precedence: flag over env over file over default") {
  testutil::TempDir tmp;
  testutil::write_text(tmp / "c.json", R"({"embedding":{"base_url":"http://file","dim":32},"llm":{"base_url":"http://file-llm"}})");
  CommonFlags f;
  CHECK(resolve_config(f).embedding.dim == 256);
  f.config = tmp / "c.json";
  CHECK(resolve_config(f).embedding.base_url == "http://file");
  CHECK(resolve_config(f).embedding.dim == 32);
  {
    testutil::EnvGuard env("EMBED_API_BASE", "http://env");
    CHECK(resolve_config(f).embedding.base_url == "http://env");
    CHECK(resolve_config(f).llm.base_url == "http://file-llm");
    f.embed_base = "http://flag";
    CHECK(resolve_config(f).embedding.base_url == "http://flag");
  }
  testutil::write_text(tmp / "bad.json", R"({"embedding":{"dim":"x"}})");
  f.config = tmp / "bad.json";
  CHECK_THROWS_AS(resolve_config(f), ConfigError);
}

TEST_CASE("service: health, search and ask") {
  AppConfig c;
  apply_config_file(c, kConfig);
  std::shared_ptr<const LlmBackend> llm = make_llm(c);
  Service svc(c, llm);
  const int port = svc.bind("127.0.0.1", 0);
  svc.start_background();
  httplib::Client client("127.0.0.1", port);
  const auto post = [&](const char* path, const json& body) {
    return client.Post(path, body.dump(), "application/json");
  };

  auto h = client.Get("/health");
  REQUIRE(h);
  CHECK(h->status == 503);
  CHECK(post("/search", {{"query", "x"}})->status == 503);

  auto idx = std::make_shared<VectorIndex>(VectorIndex::load(toy_index()));
  idx->seal();
  svc.set_engine(std::make_shared<const Engine>(c, idx, llm));
  h = client.Get("/health");
  CHECK(h->status == 200);
  CHECK(json::parse(h->body).at("index_count") == idx->size());

  CHECK(post("/search", {{"query", "x"}, {"k", 0}})->status == 400);
  CHECK(post("/search", {{"k", 3}})->status == 400);
  CHECK(client.Post("/search", "{oops", "application/json")->status == 400);

  auto s = post("/search", {{"query", "When did the Great War come to a close?"}, {"k", 3}, {"expand", 0}});
  REQUIRE(s->status == 200);
  const auto sj = json::parse(s->body);
  CHECK(sj.at("rrf_k") == 60);
  CHECK(sj.at("results").size() == 3);

  auto a = post("/ask", {{"question", "Qui est Antoine Meillet ?"}});
  REQUIRE(a->status == 200);
  CHECK_FALSE(json::parse(a->body).at("answer").at("abstained").get<bool>());

  auto ab = post("/ask", {{"question", "Expliquez comment les voyages interstellaires des Romains ont influencé "
                                       "l'architecture des temples égyptiens."}});
  REQUIRE(ab->status == 200);
  CHECK(json::parse(ab->body).at("answer").at("abstained").get<bool>());
  svc.stop();
}

TEST_CASE("service: backend failure maps to 502") {
  MockBackendServer server({}, {64, 0, 0, true});
  server.start();
  AppConfig c;
  c.embedding.dim = 64;
  c.llm_kind = BackendKind::remote;
  c.llm.base_url = server.base_url();
  c.llm.retry.max_attempts = 1;
  std::shared_ptr<const LlmBackend> llm = make_llm(c);
  VectorIndex built = build_index(load_corpus(testutil::toy("corpus.jsonl").string()), c.embedding);
  auto idx = std::make_shared<VectorIndex>(std::move(built));
  Service svc(c, llm);
  svc.set_engine(std::make_shared<const Engine>(c, idx, llm));
  const int port = svc.bind("127.0.0.1", 0);
  svc.start_background();
  httplib::Client client("127.0.0.1", port);
  auto r = client.Post("/ask", json{{"question", "Qui est Antoine Meillet ?"}, {"lang", "fr"}}.dump(),
                       "application/json");
  REQUIRE(r);
  CHECK(r->status == 502);
  CHECK(json::parse(r->body).at("component") == "llm");
  svc.stop();
}
