#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace feedguard {

/// Machine-readable failure categories shared by every module.
enum class Errc {
  InvalidArgument,
  NotFound,
  // llm gateway
  Transport,
  NoScript,
  SchemaViolation,
  UnknownSchema,
  EmptyText,
  // preference graph
  EmptyLabel,
  SelfEdge,
  UnknownFeature,
  SurvivorAbsorbed,
  // profile builder
  ExtractionEmpty,
  DuplicateImpression,
  WrongUser,
  // content filter
  DecisionUnavailable,
  InactiveRule,
  // conversations and actions
  SessionClosed,
  StaleAction,
  // event store
  StorageFull,
  SchemaInvalid,
  CorruptLog,
  // eval harness
  MissingFile,
  DanglingItemRef,
  MalformedInput,
  UnknownMethod,
};

std::string_view to_string(Errc code) noexcept;

/// True for the failures a gateway call can produce.
bool is_gateway_error(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Raised after every structured attempt produced unusable output. Carries the
/// raw model outputs in attempt order.
class SchemaViolationError : public Error {
 public:
  SchemaViolationError(const std::string& message, std::vector<std::string> raw_outputs)
      : Error(Errc::SchemaViolation, message), raw_outputs_(std::move(raw_outputs)) {}

  [[nodiscard]] const std::vector<std::string>& raw_outputs() const noexcept {
    return raw_outputs_;
  }

 private:
  std::vector<std::string> raw_outputs_;
};

/// Raised by DanglingItemRef; lists every unresolved item id.
class DanglingRefError : public Error {
 public:
  DanglingRefError(const std::string& message, std::vector<std::string> ids)
      : Error(Errc::DanglingItemRef, message), ids_(std::move(ids)) {}

  [[nodiscard]] const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  std::vector<std::string> ids_;
};

}  // namespace feedguard
