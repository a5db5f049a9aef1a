#pragma once
// Error taxonomy shared by the whole pipeline.  Every failure that a caller
// can reasonably hit goes through Error so the CLI can map it to a stable
// exit code (config -> 2, data -> 3, numeric divergence -> 4).

#include <stdexcept>
#include <string>

namespace zsmstm {

enum class Err {
  missing_file,
  io_error,
  malformed_manifest,
  malformed_interval,
  dimension_mismatch,
  alignment_gap,
  non_finite_value,
  empty_dataset,
  empty_input,
  overlapping_splits,
  unknown_speaker,
  too_short,
  bad_index,
  bad_mapping,
  bad_config,
  non_finite_loss,
};

inline const char* err_name(Err e) {
  switch (e) {
    case Err::missing_file: return "MissingFile";
    case Err::io_error: return "IoError";
    case Err::malformed_manifest: return "MalformedManifest";
    case Err::malformed_interval: return "MalformedInterval";
    case Err::dimension_mismatch: return "DimensionMismatch";
    case Err::alignment_gap: return "AlignmentGap";
    case Err::non_finite_value: return "NonFiniteValue";
    case Err::empty_dataset: return "EmptyDataset";
    case Err::empty_input: return "EmptyInput";
    case Err::overlapping_splits: return "OverlappingSplits";
    case Err::unknown_speaker: return "UnknownSpeaker";
    case Err::too_short: return "TooShort";
    case Err::bad_index: return "BadIndex";
    case Err::bad_mapping: return "BadMapping";
    case Err::bad_config: return "BadConfig";
    case Err::non_finite_loss: return "NonFiniteLoss";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(Err kind, const std::string& msg)
      : std::runtime_error(std::string(err_name(kind)) + ": " + msg), kind_(kind) {}
  Err kind() const { return kind_; }

  // Process exit code the CLI should use for this failure.
  int exit_code() const {
    switch (kind_) {
      case Err::bad_config: return 2;
      case Err::non_finite_loss: return 4;
      default: return 3;
    }
  }

 private:
  Err kind_;
};

[[noreturn]] inline void fail(Err kind, const std::string& msg) { throw Error(kind, msg); }

inline void check(bool ok, Err kind, const std::string& msg) {
  if (!ok) fail(kind, msg);
}

}  // namespace zsmstm
