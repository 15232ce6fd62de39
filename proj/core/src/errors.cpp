#include "rank_sde/errors.hpp"

namespace rank_sde {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_state:
      return "invalid_state";
    case ErrorKind::dimension_mismatch:
      return "dimension_mismatch";
    case ErrorKind::invariant_violation:
      return "invariant_violation";
    case ErrorKind::alpha_unbounded:
      return "alpha_unbounded";
    case ErrorKind::inversion_failure:
      return "inversion_failure";
    case ErrorKind::parameter_error:
      return "parameter_error";
    case ErrorKind::config_missing:
      return "config_missing";
    case ErrorKind::config_parse:
      return "config_parse";
    case ErrorKind::constraint_violation:
      return "constraint_violation";
    case ErrorKind::io_error:
      return "io_error";
  }
  return "unknown";
}

}  // namespace rank_sde
