#include <atomic>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "llmad/backends.hpp"

namespace llmad {

using nlohmann::json;

struct MockServer::Impl {
  httplib::Server server;
  std::thread thread;
  std::string host;
  int port = 0;
  NamingScheme naming = NamingScheme::kData;
  std::atomic<std::uint64_t> counter{0};
};

namespace {

void handle_chat(NamingScheme naming, std::atomic<std::uint64_t>& counter,
                 const httplib::Request& req, httplib::Response& res) {
  const json doc = json::parse(req.body, nullptr, /*allow_exceptions=*/false);
  auto bad_request = [&](const std::string& why) {
    res.status = 400;
    res.set_content(json{{"error", {{"message", why}, {"type", "invalid_request_error"}}}}.dump(),
                    "application/json");
  };
  if (doc.is_discarded() || !doc.is_object()) return bad_request("body is not a JSON object");
  const auto messages = doc.find("messages");
  if (messages == doc.end() || !messages->is_array()) {
    return bad_request("messages must be an array");
  }
  std::optional<std::string> user;
  for (const auto& m : *messages) {
    if (!m.is_object() || !m.contains("role") || !m.contains("content") ||
        !m["role"].is_string() || !m["content"].is_string()) {
      return bad_request("each message needs string role and content");
    }
    if (m["role"] == "user") user = m["content"].get<std::string>();
  }
  if (!user) return bad_request("no user message");

  const MockReply reply = mock_reply(*user, naming);
  if (!reply.matched) {
    res.set_header("X-Mock-Diagnostic", "user message does not follow the serialization template");
  }
  const std::string model =
      doc.contains("model") && doc["model"].is_string() ? doc["model"].get<std::string>()
                                                        : "mock-oracle";
  json body = {
      {"id", "chatcmpl-mock-" + std::to_string(++counter)},
      {"object", "chat.completion"},
      {"model", model},
      {"choices",
       json::array({{{"index", 0},
                     {"message", {{"role", "assistant"}, {"content", reply.content}}},
                     {"finish_reason", "stop"}}})},
  };
  res.set_content(body.dump(), "application/json");
}

}  // namespace

MockServer::MockServer(NamingScheme naming, std::string host, int port)
    : impl_(std::make_unique<Impl>()) {
  impl_->naming = naming;
  impl_->host = std::move(host);
  auto handler = [impl = impl_.get()](const httplib::Request& req,
                                      httplib::Response& res) {
    handle_chat(impl->naming, impl->counter, req, res);
  };
  impl_->server.Post("/chat/completions", handler);
  impl_->server.Post("/v1/chat/completions", handler);

  // SO_REUSEADDR only: the library default of SO_REUSEPORT would let a
  // second server silently share an occupied port.
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(impl_->host);
  } else {
    impl_->port = impl_->server.bind_to_port(impl_->host, port) ? port : -1;
  }
  if (impl_->port <= 0) {
    throw IoError("cannot bind mock server to " + impl_->host + ":" +
                  std::to_string(port));
  }
  impl_->thread = std::thread([impl = impl_.get()] { impl->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

MockServer::~MockServer() {
  stop();
  wait();
}

int MockServer::port() const { return impl_->port; }

std::string MockServer::base_url() const {
  return "http://" + impl_->host + ":" + std::to_string(impl_->port) + "/v1";
}

void MockServer::stop() { impl_->server.stop(); }

void MockServer::wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::unique_ptr<MockServer> serve_mock(int port, NamingScheme naming,
                                       std::string host) {
  return std::make_unique<MockServer>(naming, std::move(host), port);
}

}  // namespace llmad
