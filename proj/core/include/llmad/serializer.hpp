#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "llmad/batch.hpp"

namespace llmad {

/// One column rendered as a chat prompt.
struct PromptBundle {
  std::string system;
  std::string user;
  std::size_t column_index = 0;
  std::size_t n_rows = 0;
};

/// Fixed-point rendering with round-half-away-from-zero applied to the exact
/// binary value of `x`. `decimal_places` == 0 renders an integer. A result
/// that rounds to zero carries no sign.
std::string format_value(double x, int decimal_places);

/// "<noun> 1 is <x1>. <noun> 2 is <x2>. ..." with single-space separators.
std::string serialize_column(std::span<const double> column,
                             NamingScheme naming, int decimal_places);

/// Serialized column followed by a space and the task description.
PromptBundle build_prompt(std::span<const double> column,
                          const DetectorConfig& config,
                          std::size_t column_index = 0);

/// Inverse of serialize_column for either noun.
///
/// Reads consecutive "<noun> i is <number>." sentences with i = 1, 2, ...
/// from the start of `text` and returns the values, or nullopt when the text
/// does not start with at least one such sentence. Any trailing text (the
/// task description) is ignored.
std::optional<std::vector<double>> parse_serialized_column(
    std::string_view text);

}  // namespace llmad
