#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace synloc {

// Failure categories surfaced by the library. Each maps to one distinct
// contract violation so callers (and tests) can match on the cause.
enum class Errc {
  file_missing,
  unwritable_path,
  unsupported_format,
  corrupt_stream,
  bad_magic,
  dimension_mismatch,
  non_binary_value,
  out_of_bounds,
  out_of_range,
  shape_mismatch,
  single_class,
  empty_input,
  bad_config,
  process_failed,
  bad_response,
  non_finite,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace synloc
