#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "llmad/batch.hpp"

namespace llmad {

/// Indices recovered from one model answer.
struct ParsedPrediction {
  std::set<std::int64_t> indices;
  /// The answer declared that nothing is abnormal.
  bool abstained = false;

  friend bool operator==(const ParsedPrediction&,
                         const ParsedPrediction&) = default;
};

/// Extracts predicted anomaly indices from free-form answer text.
///
/// Procedure, applied in order:
///   1. strip all trailing '.' characters;
///   2. keep only the text after the last ":->" marker, if any;
///   3. replace ':' by a space and delete ',';
///   4. split on whitespace;
///   5. any token equal to "no", "No" or "None" means abstention: return an
///      empty, abstained prediction;
///   6. otherwise collect every token made only of ASCII digits whose value
///      lies in [1, max_index].
///
/// The canonical clean-batch sentences ("All data are normal." and
/// "All rows are normal.") are also reported as abstention. Never throws.
ParsedPrediction parse_response(std::string_view text, std::int64_t max_index);

/// Canonical answer text for a sorted, duplicate-free list of 1-based
/// indices: "Data 5, 10, 13 are abnormal." or "All data are normal.".
/// Throws InvalidArgument on unsorted, duplicate or non-positive input.
std::string render_response(std::span<const std::int64_t> indices,
                            NamingScheme naming);

/// The output grammar that canonical answers follow under Data naming.
inline constexpr std::string_view kAnswerPattern =
    R"(((Data [0-9]+(, [0-9]+)* are abnormal\.)|(All data are normal\.)))";

/// The same grammar for Row naming.
inline constexpr std::string_view kRowAnswerPattern =
    R"(((Row [0-9]+(, [0-9]+)* are abnormal\.)|(All rows are normal\.)))";

std::string_view answer_pattern(NamingScheme naming);

}  // namespace llmad
