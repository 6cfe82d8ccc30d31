// Offline stand-in for the LLM, embedding and NER services.

#include <CLI11.hpp>
#include <iostream>

#include "archrag/app/mock.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Scripted LLM / embedding / NER backend", "mock_backend"};
  std::string script_path, host = "127.0.0.1";
  int port = 8090;
  archrag::app::MockServerOptions opts;
  app.add_option("--script", script_path, "mock script (JSON)")->required();
  app.add_option("--host", host, "bind address");
  app.add_option("--port", port, "port");
  app.add_option("--dim", opts.embed_dim, "embedding dimension");
  app.add_option("--seed", opts.embed_seed, "embedding hash seed");
  app.add_option("--fail-first", opts.fail_first, "answer the first N requests with 503");
  CLI11_PARSE(app, argc, argv);
  try {
    archrag::app::MockBackendServer server(archrag::app::MockScript::load(script_path), opts);
    std::cout << "mock backend on " << host << ":" << port << std::endl;
    server.run(host, port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
