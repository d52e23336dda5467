// HTTP server for live interactive segmentation sessions.
#include <csignal>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "httplib.h"

#include "guidemap/service.hpp"

namespace {
httplib::Server* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive segmentation session server"};
  std::string host = "127.0.0.1";
  int port = 8080;
  int k = 1000;
  std::size_t max_mb = 16;
  int idle_minutes = 30;
  std::string layout = "full";
  app.add_option("--host", host, "Bind address");
  app.add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
  app.add_option("--k", k, "Superpixels per session image")->check(CLI::PositiveNumber);
  app.add_option("--max-upload-mb", max_mb, "Upload size limit in MiB")->check(CLI::PositiveNumber);
  app.add_option("--idle-timeout", idle_minutes, "Session idle timeout in minutes")
      ->check(CLI::PositiveNumber);
  app.add_option("--layout", layout, "Guidance layout used for predictions");
  CLI11_PARSE(app, argc, argv);

  guidemap::service::ServiceConfig config;
  config.slic.k = k;
  config.max_payload_bytes = max_mb << 20;
  config.idle_timeout = std::chrono::minutes(idle_minutes);
  const auto parsed = guidemap::layout_by_name(layout);
  if (!parsed) {
    std::fprintf(stderr, "unknown layout: %s\n", layout.c_str());
    return 1;
  }
  config.layout = *parsed;

  guidemap::service::SessionManager manager(config);
  httplib::Server server;
  guidemap::service::install_routes(server, manager);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::printf("listening on http://%s:%d\n", host.c_str(), port);
  std::fflush(stdout);
  if (!server.listen(host, port)) {
    std::fprintf(stderr, "cannot listen on %s:%d\n", host.c_str(), port);
    return 1;
  }
  return 0;
}
