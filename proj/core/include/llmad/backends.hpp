#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "llmad/batch.hpp"
#include "llmad/error.hpp"

namespace llmad {

enum class Role { kSystem, kUser, kAssistant };

std::string_view role_name(Role role);
Role parse_role(std::string_view name);

struct ChatMessage {
  Role role = Role::kUser;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// Connection and sampling settings for an OpenAI-compatible endpoint.
struct BackendConfig {
  /// Requests go to {base_url}/chat/completions.
  std::string base_url = "http://127.0.0.1:8080/v1";
  std::string model_name = "mock-oracle";
  double temperature = 0.75;
  double top_p = 0.9;
  /// Omit temperature and top_p from requests, leaving provider defaults.
  bool provider_defaults = false;
  int max_retries = 5;
  std::chrono::milliseconds timeout{60'000};
  std::chrono::milliseconds backoff_base{1'000};
  double backoff_factor = 2.0;
  std::optional<std::string> api_key;

  void validate() const;
};

/// Reads LLMAD_API_KEY, falling back to OPENAI_API_KEY.
std::optional<std::string> api_key_from_env();

class BackendError : public Error {
 public:
  enum class Kind { kTransport, kHttpStatus, kAuthentication, kMalformedResponse };

  BackendError(Kind kind, const std::string& what, int status = 0,
               int attempts = 1)
      : Error(what), kind_(kind), status_(status), attempts_(attempts) {}

  Kind kind() const { return kind_; }
  /// HTTP status of the last response, 0 if none was received.
  int status() const { return status_; }
  int attempts() const { return attempts_; }

 private:
  Kind kind_;
  int status_;
  int attempts_;
};

/// Anything that answers a chat conversation. Implementations must be safe
/// to call from several threads at once.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete_chat(std::span<const ChatMessage> messages) = 0;
};

/// Client for POST {base_url}/chat/completions.
///
/// Transport failures, 429 and 5xx responses are retried up to max_retries
/// times with exponential backoff (base * factor^k, jittered by a uniform
/// factor in [0.5, 1.5)). 401/403 raise kAuthentication; other 4xx statuses
/// raise kHttpStatus immediately.
class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(BackendConfig config);
  std::string complete_chat(std::span<const ChatMessage> messages) override;
  const BackendConfig& config() const { return config_; }

 private:
  BackendConfig config_;
  std::string origin_;
  std::string path_;
};

std::string complete_chat(const BackendConfig& config,
                          std::span<const ChatMessage> messages);

/// JSON request body for the chat-completions endpoint.
std::string encode_chat_request(const BackendConfig& config,
                                std::span<const ChatMessage> messages);
/// choices[0].message.content of a response body; throws BackendError
/// (kMalformedResponse) otherwise.
std::string decode_chat_response(std::string_view body);

/// Two-standard-deviation rule: 1-based indices i with |x_i - mean| > 2 sigma,
/// using the population mean and standard deviation. Constant columns flag
/// nothing.
std::vector<std::int64_t> mock_oracle_detect(std::span<const double> column);

struct MockReply {
  std::string content;
  /// False when the user message did not follow the serialization template.
  bool matched = true;
};

/// The mock oracle's answer to one user message.
MockReply mock_reply(std::string_view user_message, NamingScheme naming);

/// In-process mock: answers the last user message with mock_reply.
class MockOracleBackend final : public ChatBackend {
 public:
  explicit MockOracleBackend(NamingScheme naming = NamingScheme::kData)
      : naming_(naming) {}
  std::string complete_chat(std::span<const ChatMessage> messages) override;

 private:
  NamingScheme naming_;
};

/// Serves the mock oracle over the chat-completions wire protocol on a
/// background thread. Port 0 picks a free port. Stops on destruction.
class MockServer {
 public:
  MockServer(NamingScheme naming, std::string host = "127.0.0.1", int port = 0);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  int port() const;
  std::string base_url() const;
  void stop();
  /// Blocks until the listener thread exits.
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Throws IoError when the port cannot be bound.
std::unique_ptr<MockServer> serve_mock(int port, NamingScheme naming,
                                       std::string host = "127.0.0.1");

}  // namespace llmad
