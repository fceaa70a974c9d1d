#pragma once

#include <stdexcept>
#include <string>

namespace vqforge {

// Every domain error carries a stable machine-readable code; the CLI
// prints it on stderr as "error: <CODE>: <message>" and exits 1.
enum class Errc {
  io_error,
  format_error,
  empty_error,
  frame_too_small,
  too_few_frames,
  sidecar_mismatch,
  infeasible_quotas,
  exact_too_large,
  infeasible_geometry,
  bad_meta,
  phase_order,
  missing_golden,
  too_few,
  zero_variance,
  empty_table,
  missing_flags,
  length_mismatch,
  degenerate,
  too_few_subjects,
  no_golden_data,
  no_pairs,
  bad_spec,
  config_error,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace vqforge
