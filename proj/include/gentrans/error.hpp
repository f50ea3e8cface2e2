#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gentrans {

enum class ErrorKind {
  // corpus
  MissingColumn,
  EmptySource,
  NoReference,
  DescriptorNotFound,
  BadEnum,
  EntityNotInSentence,
  EmptyStratum,
  LineCountMismatch,
  EmptyLine,
  // prompting
  InsufficientPool,
  MissingGenderReference,
  BadTemplate,
  // backends
  Timeout,
  RemoteError,
  MissingFixture,
  BudgetExceeded,
  DigestConflict,
  InvalidRequest,
  // metrics
  LengthMismatch,
  EmptyReference,
  // genderbias
  EntityNotInLexicon,
  IdMismatch,
  // plumbing
  IoError,
  ParseError,
  InvalidConfig,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::EmptySource: return "EmptySource";
    case ErrorKind::NoReference: return "NoReference";
    case ErrorKind::DescriptorNotFound: return "DescriptorNotFound";
    case ErrorKind::BadEnum: return "BadEnum";
    case ErrorKind::EntityNotInSentence: return "EntityNotInSentence";
    case ErrorKind::EmptyStratum: return "EmptyStratum";
    case ErrorKind::LineCountMismatch: return "LineCountMismatch";
    case ErrorKind::EmptyLine: return "EmptyLine";
    case ErrorKind::InsufficientPool: return "InsufficientPool";
    case ErrorKind::MissingGenderReference: return "MissingGenderReference";
    case ErrorKind::BadTemplate: return "BadTemplate";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::RemoteError: return "RemoteError";
    case ErrorKind::MissingFixture: return "MissingFixture";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::DigestConflict: return "DigestConflict";
    case ErrorKind::InvalidRequest: return "InvalidRequest";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyReference: return "EmptyReference";
    case ErrorKind::EntityNotInLexicon: return "EntityNotInLexicon";
    case ErrorKind::IdMismatch: return "IdMismatch";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised for HTTP responses that are not retried (or that exhausted retries).
class RemoteError : public Error {
 public:
  RemoteError(int status, std::string body_excerpt)
      : Error(ErrorKind::RemoteError,
              "status " + std::to_string(status) + ": " + body_excerpt),
        status_(status),
        body_excerpt_(std::move(body_excerpt)) {}

  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

}  // namespace gentrans
