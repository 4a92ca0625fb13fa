#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "seaforge/backend.hpp"
#include "seaforge/generation_server.hpp"

// Serves the deterministic mock over the HTTP adapter contract, for dry runs of the
// bld-style and inpaint-style profiles without a diffusion service.
int main(int argc, char** argv) {
  CLI::App app{"Mock generation service", "seaforge_mockgen"};
  std::string host = "127.0.0.1";
  int port = 8090;
  seaforge::MockOptions mock;
  app.add_option("--host", host, "Bind address")->capture_default_str();
  app.add_option("--port", port, "Port")->capture_default_str();
  app.add_flag("--corrupt-objects", mock.corrupt_objects, "Overwrite object pixels");
  app.add_option("--corrupt-every", mock.corrupt_every, "Corrupt outputs whose seed is a multiple of N");
  CLI11_PARSE(app, argc, argv);

  seaforge::GenerationServer server(std::make_shared<seaforge::MockBackend>(mock));
  std::cout << "mock generation service on http://" << host << ":" << port << std::endl;
  server.listen(host, port);
  return 0;
}
