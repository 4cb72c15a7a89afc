#ifndef ONCOPROG_ERROR_HPP
#define ONCOPROG_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace oncoprog {

enum class errc {
  missing_column,
  malformed_row,
  unknown_stage,
  duplicate_clinical,
  empty_cohort,
  all_stages_removed,
  zero_class_size,
  class_too_small,
  index_out_of_range,
  shape_mismatch,
  non_positive_weight,
  non_finite_loss,
  empty_test_set,
  one_class_only,
  empty_stage,
  io_error,
  config_invalid,
  vocabulary_mismatch,
};

[[nodiscard]] constexpr auto
errc_name(errc e) -> std::string_view {
  // clang-format off
  switch (e) {
  case errc::missing_column: return "MissingColumn";
  case errc::malformed_row: return "MalformedRow";
  case errc::unknown_stage: return "UnknownStage";
  case errc::duplicate_clinical: return "DuplicateClinical";
  case errc::empty_cohort: return "EmptyCohort";
  case errc::all_stages_removed: return "AllStagesRemoved";
  case errc::zero_class_size: return "ZeroClassSize";
  case errc::class_too_small: return "ClassTooSmall";
  case errc::index_out_of_range: return "IndexOutOfRange";
  case errc::shape_mismatch: return "ShapeMismatch";
  case errc::non_positive_weight: return "NonPositiveWeight";
  case errc::non_finite_loss: return "NonFiniteLoss";
  case errc::empty_test_set: return "EmptyTestSet";
  case errc::one_class_only: return "OneClassOnly";
  case errc::empty_stage: return "EmptyStage";
  case errc::io_error: return "IoError";
  case errc::config_invalid: return "ConfigInvalid";
  case errc::vocabulary_mismatch: return "VocabularyMismatch";
  }
  // clang-format on
  return "Unknown";
}

// Numeric/model failures map to exit code 1, everything else is an input or
// configuration problem (exit code 2).
[[nodiscard]] constexpr auto
is_numeric(errc e) -> bool {
  return e == errc::non_finite_loss || e == errc::shape_mismatch ||
         e == errc::index_out_of_range;
}

class error : public std::runtime_error {
public:
  error(errc code, const std::string &what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  [[nodiscard]] auto
  code() const noexcept -> errc {
    return code_;
  }

  [[nodiscard]] auto
  exit_code() const noexcept -> int {
    return is_numeric(code_) ? 1 : 2;
  }

private:
  errc code_;
};

}  // namespace oncoprog

#endif  // ONCOPROG_ERROR_HPP
