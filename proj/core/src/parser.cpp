#include "llmad/parser.hpp"

#include <vector>

#include "llmad/error.hpp"

namespace llmad {

namespace {

// Python's str.split() whitespace restricted to ASCII.
bool is_space(char c) {
  return c == ' ' || (c >= '\t' && c <= '\r') || (c >= '\x1c' && c <= '\x1f');
}

bool all_digits(std::string_view token) {
  if (token.empty()) return false;
  for (char c : token) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

// Compares a digit string against max_index without overflowing.
bool digits_within(std::string_view token, std::int64_t max_index,
                   std::int64_t& value) {
  while (token.size() > 1 && token.front() == '0') token.remove_prefix(1);
  if (token.size() > 18) return false;
  value = 0;
  for (char c : token) value = value * 10 + (c - '0');
  return value <= max_index;
}

}  // namespace

ParsedPrediction parse_response(std::string_view text,
                                std::int64_t max_index) {
  ParsedPrediction result;

  while (!text.empty() && text.back() == '.') text.remove_suffix(1);
  if (const auto marker = text.rfind(":->"); marker != std::string_view::npos) {
    text.remove_prefix(marker + 3);
  }
  {
    std::string_view trimmed = text;
    while (!trimmed.empty() && is_space(trimmed.front())) trimmed.remove_prefix(1);
    while (!trimmed.empty() && is_space(trimmed.back())) trimmed.remove_suffix(1);
    if (trimmed == "All data are normal" || trimmed == "All rows are normal") {
      result.abstained = true;
      return result;
    }
  }

  std::string work;
  work.reserve(text.size());
  for (char c : text) {
    if (c == ',') continue;
    work.push_back(c == ':' ? ' ' : c);
  }

  std::vector<std::string_view> tokens;
  const std::string_view view(work);
  std::size_t i = 0;
  while (i < view.size()) {
    while (i < view.size() && is_space(view[i])) ++i;
    const std::size_t start = i;
    while (i < view.size() && !is_space(view[i])) ++i;
    if (i > start) tokens.push_back(view.substr(start, i - start));
  }

  for (auto token : tokens) {
    if (token == "no" || token == "No" || token == "None") {
      result.abstained = true;
      return result;
    }
  }
  for (auto token : tokens) {
    std::int64_t value = 0;
    if (all_digits(token) && digits_within(token, max_index, value) &&
        value >= 1) {
      result.indices.insert(value);
    }
  }
  return result;
}

std::string render_response(std::span<const std::int64_t> indices,
                            NamingScheme naming) {
  if (indices.empty()) {
    return naming == NamingScheme::kRow ? "All rows are normal."
                                        : "All data are normal.";
  }
  std::string out(noun(naming));
  out.push_back(' ');
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 1) {
      throw InvalidArgument("indices must be positive");
    }
    if (i > 0) {
      if (indices[i] <= indices[i - 1]) {
        throw InvalidArgument("indices must be sorted and distinct");
      }
      out.append(", ");
    }
    out.append(std::to_string(indices[i]));
  }
  out.append(" are abnormal.");
  return out;
}

std::string_view answer_pattern(NamingScheme naming) {
  return naming == NamingScheme::kRow ? kRowAnswerPattern : kAnswerPattern;
}

}  // namespace llmad
