#include "feedguard/llm/gateway.hpp"

#include <thread>

#include <spdlog/spdlog.h>

#include "feedguard/common/error.hpp"
#include "feedguard/common/text.hpp"
#include "feedguard/llm/prompts.hpp"

namespace feedguard::llm {

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options,
                 SchemaRegistry schemas)
    : backend_(std::move(backend)),
      options_(options),
      schemas_(std::move(schemas)),
      limiter_(options.requests_per_second) {
  if (!backend_) throw Error(Errc::InvalidArgument, "gateway needs a backend");
  if (options_.structured_attempts < 1) options_.structured_attempts = 1;
  if (options_.transport_retries < 0) options_.transport_retries = 0;
}

std::string Gateway::call_chat(const ChatRequest& request) {
  for (int attempt = 0;; ++attempt) {
    limiter_.acquire();
    chat_calls_.fetch_add(1);
    try {
      return backend_->chat(request);
    } catch (const Error& e) {
      if (e.code() != Errc::Transport || attempt >= options_.transport_retries) throw;
      spdlog::warn("chat transport failure (try {} of {}): {}", attempt + 1,
                   options_.transport_retries + 1, e.what());
    }
    if (options_.retry_backoff.count() > 0) {
      std::this_thread::sleep_for(options_.retry_backoff * (attempt + 1));
    }
  }
}

ChatResponse Gateway::complete(const ChatRequest& request) {
  validate(request);
  ChatResponse response;
  response.text = call_chat(request);
  response.attempts = 1;
  response.backend_id = backend_->id();
  return response;
}

ChatResponse Gateway::complete_structured(ChatRequest request, std::string_view schema_ref,
                                          const PayloadCheck& extra_check) {
  const Schema* schema = schemas_.find(schema_ref);
  if (schema == nullptr) {
    throw Error(Errc::UnknownSchema, "schema not registered: " + std::string(schema_ref));
  }
  request.schema_ref = std::string(schema_ref);
  request.temperature = 0.0;
  validate(request);
  if (request.messages.back().role != Role::User) {
    throw Error(Errc::InvalidArgument, "structured request must end with a user message");
  }
  const std::string instruction = format_instruction(*schema);
  request.messages.back().text += "\n" + instruction;

  std::vector<std::string> raw_outputs;
  for (int attempt = 1; attempt <= options_.structured_attempts; ++attempt) {
    std::string raw = call_chat(request);
    std::optional<std::string> problem;
    auto parsed = extract_json_object(raw);
    if (!parsed) {
      problem = "it was not a JSON object";
    } else if (auto err = schema->check(*parsed)) {
      problem = std::move(err);
    } else if (extra_check) {
      problem = extra_check(*parsed);
    }
    if (!problem) {
      ChatResponse response;
      response.text = std::move(raw);
      response.parsed = std::move(parsed);
      response.attempts = attempt;
      response.backend_id = backend_->id();
      return response;
    }
    raw_outputs.push_back(raw);
    request.messages.push_back({Role::Assistant, std::move(raw)});
    request.messages.push_back(
        {Role::User, text::render(prompt_template("v1/correction"),
                                  {{"problem", *problem}, {"format", instruction}})});
  }
  throw SchemaViolationError("no valid " + std::string(schema_ref) + " reply after " +
                                 std::to_string(options_.structured_attempts) + " attempts",
                             std::move(raw_outputs));
}

Embedding Gateway::embed(std::string_view raw_text) {
  const std::string cleaned = text::trim(raw_text);
  if (cleaned.empty()) throw Error(Errc::EmptyText, "cannot embed empty text");
  for (int attempt = 0;; ++attempt) {
    limiter_.acquire();
    embed_calls_.fetch_add(1);
    try {
      return normalized(backend_->embed(cleaned));
    } catch (const Error& e) {
      if (e.code() != Errc::Transport || attempt >= options_.transport_retries) throw;
    }
    if (options_.retry_backoff.count() > 0) {
      std::this_thread::sleep_for(options_.retry_backoff * (attempt + 1));
    }
  }
}

ChatMessage system_message() { return {Role::System, prompt_template("v1/system")}; }

ChatRequest single_turn(std::string_view script_key, std::string user_text, std::int64_t seed) {
  ChatRequest request;
  request.messages = {system_message(), {Role::User, std::move(user_text)}};
  request.seed = seed;
  request.script_key = std::string(script_key);
  return request;
}

}  // namespace feedguard::llm
