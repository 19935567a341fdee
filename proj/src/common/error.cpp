#include "feedguard/common/error.hpp"

namespace feedguard {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NotFound: return "NotFound";
    case Errc::Transport: return "Transport";
    case Errc::NoScript: return "NoScript";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::UnknownSchema: return "UnknownSchema";
    case Errc::EmptyText: return "EmptyText";
    case Errc::EmptyLabel: return "EmptyLabel";
    case Errc::SelfEdge: return "SelfEdge";
    case Errc::UnknownFeature: return "UnknownFeature";
    case Errc::SurvivorAbsorbed: return "SurvivorAbsorbed";
    case Errc::ExtractionEmpty: return "ExtractionEmpty";
    case Errc::DuplicateImpression: return "DuplicateImpression";
    case Errc::WrongUser: return "WrongUser";
    case Errc::DecisionUnavailable: return "DecisionUnavailable";
    case Errc::InactiveRule: return "InactiveRule";
    case Errc::SessionClosed: return "SessionClosed";
    case Errc::StaleAction: return "StaleAction";
    case Errc::StorageFull: return "StorageFull";
    case Errc::SchemaInvalid: return "SchemaInvalid";
    case Errc::CorruptLog: return "CorruptLog";
    case Errc::MissingFile: return "MissingFile";
    case Errc::DanglingItemRef: return "DanglingItemRef";
    case Errc::MalformedInput: return "MalformedInput";
    case Errc::UnknownMethod: return "UnknownMethod";
  }
  return "Unknown";
}

bool is_gateway_error(Errc code) noexcept {
  return code == Errc::Transport || code == Errc::NoScript ||
         code == Errc::SchemaViolation || code == Errc::UnknownSchema ||
         code == Errc::EmptyText;
}

}  // namespace feedguard
