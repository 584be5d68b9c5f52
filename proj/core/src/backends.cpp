#include "llmad/backends.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "llmad/parser.hpp"
#include "llmad/random.hpp"
#include "llmad/serializer.hpp"

namespace llmad {

using nlohmann::json;

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

Role parse_role(std::string_view name) {
  if (name == "system") return Role::kSystem;
  if (name == "user") return Role::kUser;
  if (name == "assistant") return Role::kAssistant;
  throw ParseError("unknown chat role '" + std::string(name) + "'");
}

void BackendConfig::validate() const {
  if (!(temperature >= 0.0)) throw InvalidArgument("temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw InvalidArgument("top_p must be in (0, 1]");
  }
  if (max_retries < 0) throw InvalidArgument("max_retries must be >= 0");
  if (timeout.count() <= 0) throw InvalidArgument("timeout must be positive");
  if (base_url.empty()) throw InvalidArgument("base_url is empty");
}

std::optional<std::string> api_key_from_env() {
  for (const char* name : {"LLMAD_API_KEY", "OPENAI_API_KEY"}) {
    if (const char* v = std::getenv(name); v != nullptr && *v != '\0') {
      return std::string(v);
    }
  }
  return std::nullopt;
}

std::string encode_chat_request(const BackendConfig& config,
                                std::span<const ChatMessage> messages) {
  json body;
  body["model"] = config.model_name;
  json msgs = json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"role", role_name(m.role)}, {"content", m.content}});
  }
  body["messages"] = std::move(msgs);
  if (!config.provider_defaults) {
    body["temperature"] = config.temperature;
    body["top_p"] = config.top_p;
  }
  return body.dump();
}

std::string decode_chat_response(std::string_view body) {
  const json doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    throw BackendError(BackendError::Kind::kMalformedResponse,
                       "response body is not valid JSON");
  }
  const auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) {
    throw BackendError(BackendError::Kind::kMalformedResponse,
                       "response has no choices");
  }
  const json& first = choices->front();
  if (!first.is_object() || !first.contains("message") ||
      !first["message"].is_object() || !first["message"].contains("content") ||
      !first["message"]["content"].is_string()) {
    throw BackendError(BackendError::Kind::kMalformedResponse,
                       "choices[0].message.content missing or not a string");
  }
  return first["message"]["content"].get<std::string>();
}

namespace {

// Splits "http://host:port/prefix" into origin and path prefix.
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw InvalidArgument("base_url must start with http:// or https://: " + url);
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw InvalidArgument("unsupported URL scheme '" + scheme + "'");
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") {
    throw InvalidArgument("https endpoints need a build with OpenSSL");
  }
#endif
  const auto path_start = url.find('/', scheme_end + 3);
  std::string origin = url.substr(0, path_start);
  std::string path =
      path_start == std::string::npos ? std::string() : url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {origin, path};
}

double jitter() {
  thread_local Rng rng(std::random_device{}());
  return rng.uniform(0.5, 1.5);
}

}  // namespace

HttpChatBackend::HttpChatBackend(BackendConfig config)
    : config_(std::move(config)) {
  config_.validate();
  std::tie(origin_, path_) = split_url(config_.base_url);
}

std::string HttpChatBackend::complete_chat(
    std::span<const ChatMessage> messages) {
  const bool has_user = std::any_of(
      messages.begin(), messages.end(),
      [](const ChatMessage& m) { return m.role == Role::kUser; });
  if (!has_user) throw InvalidArgument("conversation has no user message");

  const std::string body = encode_chat_request(config_, messages);
  const std::string path = path_ + "/chat/completions";
  httplib::Headers headers;
  if (config_.api_key) {
    headers.emplace("Authorization", "Bearer " + *config_.api_key);
  }

  const int max_attempts = config_.max_retries + 1;
  std::string last_error;
  int last_status = 0;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempt > 1) {
      const double scale = std::pow(config_.backoff_factor, attempt - 2);
      const auto delay = std::chrono::duration<double, std::milli>(
          static_cast<double>(config_.backoff_base.count()) * scale * jitter());
      std::this_thread::sleep_for(delay);
    }

    httplib::Client client(origin_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
        config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_status = 0;
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    last_status = res->status;
    if (res->status >= 200 && res->status < 300) {
      return decode_chat_response(res->body);
    }
    if (res->status == 401 || res->status == 403) {
      throw BackendError(BackendError::Kind::kAuthentication,
                         "authentication failed (HTTP " +
                             std::to_string(res->status) + ")",
                         res->status, attempt);
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    throw BackendError(BackendError::Kind::kHttpStatus,
                       "request rejected with HTTP " +
                           std::to_string(res->status) + ": " + res->body,
                       res->status, attempt);
  }
  throw BackendError(last_status == 0 ? BackendError::Kind::kTransport
                                      : BackendError::Kind::kHttpStatus,
                     "giving up after " + std::to_string(max_attempts) +
                         " attempts: " + last_error,
                     last_status, max_attempts);
}

std::string complete_chat(const BackendConfig& config,
                          std::span<const ChatMessage> messages) {
  return HttpChatBackend(config).complete_chat(messages);
}

std::vector<std::int64_t> mock_oracle_detect(std::span<const double> column) {
  std::vector<std::int64_t> flagged;
  if (column.empty()) return flagged;
  const double n = static_cast<double>(column.size());
  double mean = 0.0;
  for (double x : column) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : column) ss += (x - mean) * (x - mean);
  const double sigma = std::sqrt(ss / n);
  if (sigma == 0.0) return flagged;
  for (std::size_t i = 0; i < column.size(); ++i) {
    if (std::fabs(column[i] - mean) > 2.0 * sigma) {
      flagged.push_back(static_cast<std::int64_t>(i + 1));
    }
  }
  return flagged;
}

MockReply mock_reply(std::string_view user_message, NamingScheme naming) {
  const auto values = parse_serialized_column(user_message);
  if (!values) return {render_response({}, naming), false};
  return {render_response(mock_oracle_detect(*values), naming), true};
}

std::string MockOracleBackend::complete_chat(
    std::span<const ChatMessage> messages) {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == Role::kUser) return mock_reply(it->content, naming_).content;
  }
  throw InvalidArgument("conversation has no user message");
}

}  // namespace llmad
