#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "envdt/model.hpp"

namespace envdt {

struct ParseError {
  SourceSpan span;
  std::string expected;
  std::string found;

  /// "expected 'model', found end of input", or the bare message for
  /// resolution errors (empty `found`).
  std::string message() const;
  std::string format() const;
};

struct ParseResult {
  std::optional<EnvironmentModel> model;
  std::vector<ParseError> errors;

  bool ok() const { return model.has_value() && errors.empty(); }
};

/// Syntax errors stop at the first bad token; name-resolution errors are
/// collected over the whole file.
ParseResult parse_model(std::string_view text, std::string file_name = {});

/// Canonical form: declarations grouped by kind in model order, 2-space indent.
std::string print_model(const EnvironmentModel& model);

class ModelLoadError : public std::runtime_error {
 public:
  ModelLoadError(std::string what, std::vector<ParseError> errors, bool io_failure);

  const std::vector<ParseError>& errors() const { return errors_; }
  bool io_failure() const { return io_failure_; }

 private:
  std::vector<ParseError> errors_;
  bool io_failure_ = false;
};

/// Reads and parses a .envdt file, throwing ModelLoadError on failure.
EnvironmentModel load_model(const std::filesystem::path& path);

}  // namespace envdt
