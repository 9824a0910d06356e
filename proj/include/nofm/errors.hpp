#pragma once

#include <stdexcept>
#include <string>

namespace nofm {

enum class RuleErrorCode {
  malformed_syntax,
  unknown_feature,
  type_mismatch,
  depth_exceeded,
  invalid_parameter,
};

struct RuleError : std::runtime_error {
  RuleErrorCode code;
  RuleError(RuleErrorCode c, const std::string& msg)
      : std::runtime_error(msg), code(c) {}
};

enum class DataErrorCode {
  file_unreadable,
  schema_mismatch,
  non_binary_label,
  bad_cell,
  non_monotone_timestamps,
  too_few_groups,
  mixed_label_group,
};

struct DataError : std::runtime_error {
  DataErrorCode code;
  DataError(DataErrorCode c, const std::string& msg)
      : std::runtime_error(msg), code(c) {}
};

enum class EvalErrorCode {
  unusable_stats,
  unknown_feature,
  single_class,
  length_mismatch,
  empty_checklist,
  insufficient_folds,
  empty_pool,
};

struct EvalError : std::runtime_error {
  EvalErrorCode code;
  EvalError(EvalErrorCode c, const std::string& msg)
      : std::runtime_error(msg), code(c) {}
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TransportError : std::runtime_error {
  int attempts;
  TransportError(const std::string& msg, int attempts_made)
      : std::runtime_error(msg), attempts(attempts_made) {}
};

}  // namespace nofm
