#pragma once

#include <string>
#include <vector>

#include "envdt/model.hpp"

namespace envdt {

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string location;
  std::string message;
  SourceSpan span;
};

struct ValidationReport {
  std::vector<Diagnostic> diagnostics;

  bool ok() const;
  std::size_t error_count() const;
};

/// Structural well-formedness check. Never mutates the model; diagnostics are
/// returned in a deterministic order.
ValidationReport validate_model(const EnvironmentModel& model);

/// "file:line:col: error: location: message"
std::string format_diagnostic(const Diagnostic& d);

}  // namespace envdt
