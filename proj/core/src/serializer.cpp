#include "llmad/serializer.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "llmad/error.hpp"

namespace llmad {

namespace {

// Every finite double has a terminating binary expansion of at most 1074
// fractional digits, so this precision makes std::to_chars exact.
constexpr int kExactDigits = 1074;

}  // namespace

std::string format_value(double x, int decimal_places) {
  if (!std::isfinite(x)) {
    throw InvalidArgument("cannot format a non-finite value");
  }
  if (decimal_places < 0 || decimal_places > 300) {
    throw InvalidArgument("decimal_places must be in [0, 300]");
  }
  const bool negative = std::signbit(x);
  const double magnitude = std::fabs(x);

  std::array<char, 1500> buf;
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), magnitude,
                                 std::chars_format::fixed, kExactDigits);
  if (ec != std::errc()) throw Error("format_value: buffer too small");
  std::string exact(buf.data(), end);

  const auto point = exact.find('.');
  std::string digits = exact.substr(0, point);
  const std::string frac = exact.substr(point + 1);
  digits += frac.substr(0, static_cast<std::size_t>(decimal_places));
  const bool round_up = frac[static_cast<std::size_t>(decimal_places)] >= '5';

  if (round_up) {
    int i = static_cast<int>(digits.size()) - 1;
    while (i >= 0 && digits[i] == '9') digits[i--] = '0';
    if (i < 0) {
      digits.insert(digits.begin(), '1');
    } else {
      ++digits[i];
    }
  }

  const std::size_t int_len = digits.size() - decimal_places;
  std::string out;
  out.reserve(digits.size() + 2);
  const bool all_zero = digits.find_first_not_of('0') == std::string::npos;
  if (negative && !all_zero) out.push_back('-');
  out.append(digits, 0, int_len);
  if (decimal_places > 0) {
    out.push_back('.');
    out.append(digits, int_len, std::string::npos);
  }
  return out;
}

std::string serialize_column(std::span<const double> column,
                             NamingScheme naming, int decimal_places) {
  if (column.empty()) throw InvalidArgument("cannot serialize an empty column");
  const std::string_view name = noun(naming);
  std::string out;
  out.reserve(column.size() * (name.size() + 16));
  for (std::size_t i = 0; i < column.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out.append(name);
    out.push_back(' ');
    out.append(std::to_string(i + 1));
    out.append(" is ");
    out.append(format_value(column[i], decimal_places));
    out.push_back('.');
  }
  return out;
}

PromptBundle build_prompt(std::span<const double> column,
                          const DetectorConfig& config,
                          std::size_t column_index) {
  PromptBundle bundle;
  bundle.user = serialize_column(column, config.naming, config.decimal_places);
  bundle.user.push_back(' ');
  bundle.user.append(config.prompt_text);
  bundle.system = std::string(system_message(config.naming));
  bundle.column_index = column_index;
  bundle.n_rows = column.size();
  return bundle;
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool consume(std::string_view& s, std::string_view prefix) {
  if (s.substr(0, prefix.size()) != prefix) return false;
  s.remove_prefix(prefix.size());
  return true;
}

// Reads -?\d+(\.\d+)? followed by the sentence-ending '.'.
std::optional<double> read_number_sentence(std::string_view& s) {
  std::size_t i = 0;
  if (i < s.size() && s[i] == '-') ++i;
  const std::size_t int_start = i;
  while (i < s.size() && is_digit(s[i])) ++i;
  if (i == int_start) return std::nullopt;
  if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
    ++i;
    while (i < s.size() && is_digit(s[i])) ++i;
  }
  if (i >= s.size() || s[i] != '.') return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + i, value);
  if (ec != std::errc() || ptr != s.data() + i) return std::nullopt;
  s.remove_prefix(i + 1);
  return value;
}

}  // namespace

std::optional<std::vector<double>> parse_serialized_column(
    std::string_view text) {
  std::string_view name;
  if (text.starts_with("Data ")) {
    name = "Data";
  } else if (text.starts_with("Row ")) {
    name = "Row";
  } else {
    return std::nullopt;
  }
  std::vector<double> values;
  std::string_view rest = text;
  for (std::size_t index = 1;; ++index) {
    std::string_view probe = rest;
    if (index > 1 && !consume(probe, " ")) break;
    const std::string head =
        std::string(name) + " " + std::to_string(index) + " is ";
    if (!consume(probe, head)) break;
    auto value = read_number_sentence(probe);
    if (!value) break;
    values.push_back(*value);
    rest = probe;
  }
  if (values.empty()) return std::nullopt;
  return values;
}

}  // namespace llmad
