#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fedgate {

// Every failure mode the library reports. Wire layers map a subset of these
// onto protocol error codes (badArgument, idDoesNotExist, ...).
enum class Err {
  InvalidURI,
  InvalidNamespace,
  BadArgument,
  BadVerb,
  BadResumptionToken,
  NoRecordsMatch,  // the OAI-PMH empty-result signal, not a failure
  ParseError,
  SchemaError,
  ReadOnlyViolation,
  DuplicateRecord,
  SealError,
  NotFound,
  IdDoesNotExist,
  NoSuchInterface,
  NoSuchConstituent,
  EmptyBatch,
  ConflictError,
  UnsupportedVersion,
  UnsupportedPolicy,
  Unreachable,
  ProtocolError,
  HarvestFailure,
  UpstreamUnavailable,
  IntegrityViolation,
  ScenarioError,
  OracleUnavailable,
  IoError,
};

inline const char* err_name(Err e) {
  switch (e) {
    case Err::InvalidURI: return "InvalidURI";
    case Err::InvalidNamespace: return "InvalidNamespace";
    case Err::BadArgument: return "BadArgument";
    case Err::BadVerb: return "BadVerb";
    case Err::BadResumptionToken: return "BadResumptionToken";
    case Err::NoRecordsMatch: return "NoRecordsMatch";
    case Err::ParseError: return "ParseError";
    case Err::SchemaError: return "SchemaError";
    case Err::ReadOnlyViolation: return "ReadOnlyViolation";
    case Err::DuplicateRecord: return "DuplicateRecord";
    case Err::SealError: return "SealError";
    case Err::NotFound: return "NotFound";
    case Err::IdDoesNotExist: return "IdDoesNotExist";
    case Err::NoSuchInterface: return "NoSuchInterface";
    case Err::NoSuchConstituent: return "NoSuchConstituent";
    case Err::EmptyBatch: return "EmptyBatch";
    case Err::ConflictError: return "ConflictError";
    case Err::UnsupportedVersion: return "UnsupportedVersion";
    case Err::UnsupportedPolicy: return "UnsupportedPolicy";
    case Err::Unreachable: return "Unreachable";
    case Err::ProtocolError: return "ProtocolError";
    case Err::HarvestFailure: return "HarvestFailure";
    case Err::UpstreamUnavailable: return "UpstreamUnavailable";
    case Err::IntegrityViolation: return "IntegrityViolation";
    case Err::ScenarioError: return "ScenarioError";
    case Err::OracleUnavailable: return "OracleUnavailable";
    case Err::IoError: return "IoError";
  }
  return "Unknown";
}

// Single exception type carrying a code plus optional structured details
// (e.g. the repository URIs involved in a HarvestFailure).
class FedError : public std::runtime_error {
 public:
  FedError(Err code, const std::string& message, std::vector<std::string> details = {})
      : std::runtime_error(std::string(err_name(code)) + ": " + message),
        code_(code),
        details_(std::move(details)) {}

  Err code() const { return code_; }
  const std::vector<std::string>& details() const { return details_; }

 private:
  Err code_;
  std::vector<std::string> details_;
};

[[noreturn]] inline void fail(Err code, const std::string& message,
                              std::vector<std::string> details = {}) {
  throw FedError(code, message, std::move(details));
}

}  // namespace fedgate
