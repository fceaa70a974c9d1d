#include "vqforge/error.hpp"

namespace vqforge {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::io_error: return "IO_ERROR";
    case Errc::format_error: return "FORMAT_ERROR";
    case Errc::empty_error: return "EMPTY_ERROR";
    case Errc::frame_too_small: return "FRAME_TOO_SMALL";
    case Errc::too_few_frames: return "TOO_FEW_FRAMES";
    case Errc::sidecar_mismatch: return "SIDECAR_MISMATCH";
    case Errc::infeasible_quotas: return "INFEASIBLE_QUOTAS";
    case Errc::exact_too_large: return "EXACT_TOO_LARGE";
    case Errc::infeasible_geometry: return "INFEASIBLE_GEOMETRY";
    case Errc::bad_meta: return "BAD_META";
    case Errc::phase_order: return "PHASE_ORDER";
    case Errc::missing_golden: return "MISSING_GOLDEN";
    case Errc::too_few: return "TOO_FEW";
    case Errc::zero_variance: return "ZERO_VARIANCE";
    case Errc::empty_table: return "EMPTY_TABLE";
    case Errc::missing_flags: return "MISSING_FLAGS";
    case Errc::length_mismatch: return "LENGTH_MISMATCH";
    case Errc::degenerate: return "DEGENERATE";
    case Errc::too_few_subjects: return "TOO_FEW_SUBJECTS";
    case Errc::no_golden_data: return "NO_GOLDEN_DATA";
    case Errc::no_pairs: return "NO_PAIRS";
    case Errc::bad_spec: return "BAD_SPEC";
    case Errc::config_error: return "CONFIG_ERROR";
  }
  return "UNKNOWN";
}

}  // namespace vqforge
