#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tgdh {

enum class ErrorCode {
  invalid_argument,
  duplicate_member,
  unknown_member,
  last_member,
  empty_survivor_set,
  overlapping_membership,
  missing_sibling_blinded_key,
  malformed_encoding,
  tree_too_deep,
  bad_signature,
  stale_epoch,
  not_a_member,
  protocol_overload,
  invalid_state,
  non_quiescence,
  invalid_cell_cover,
  scenario_parse_error,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// C API can map it onto a status value without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tgdh
