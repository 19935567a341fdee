#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "feedguard/common/clock.hpp"
#include "feedguard/filter/filter.hpp"
#include "feedguard/llm/gateway.hpp"
#include "feedguard/profile/pipeline.hpp"
#include "feedguard/store/repository.hpp"

namespace feedguard::service {

using nlohmann::json;

struct AppOptions {
  profile::BuilderOptions builder;
  filter::FilterOptions filter;
  store::StoreOptions store;
};

/// The single-user service. Every operation computes its outcome (calling the
/// model where needed), commits one event, and answers from the new state.
/// Operations are serialized.
///
/// Methods take and return the JSON bodies of the HTTP API and throw Error on
/// failure.
class App {
 public:
  App(std::filesystem::path data_dir, std::shared_ptr<llm::Gateway> gateway, std::shared_ptr<Clock> clock,
      AppOptions options = {});

  json ingest_impression(const json& body);
  json filter_feed(const json& body);

  json list_rules() const;
  json create_rule(const json& body);
  json patch_rule(const std::string& id, const json& body);
  json delete_rule(const std::string& id);
  json set_rule_active(const std::string& id, bool active);

  json profile() const;
  json profile_graph() const;

  json filter_records(const store::RecordQuery& query) const;
  json filter_stats(const std::optional<std::string>& rule_id) const;

  json open_conversation(const json& body);
  json post_message(const std::string& session_id, const json& body);
  json get_conversation(const std::string& session_id) const;
  json close_conversation(const std::string& session_id);

  json pending_actions() const;
  json confirm_action(const std::string& action_id, const json& body);

  json health() const;

  /// Copy of the current state.
  store::AppState state() const;
  std::filesystem::path data_dir() const;

 private:
  std::uint64_t commit(std::string_view kind, json payload);
  const needs::ConversationSession& session(const std::string& id) const;

  mutable std::mutex mutex_;
  std::shared_ptr<llm::Gateway> gateway_;
  std::shared_ptr<Clock> clock_;
  AppOptions options_;
  store::Repository repo_;
  profile::ProfileBuilder builder_;
  filter::RuleMatcher matcher_;
};

}  // namespace feedguard::service
