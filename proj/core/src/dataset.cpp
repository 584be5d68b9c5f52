#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include "llmad/error.hpp"
#include "llmad/eval.hpp"

namespace llmad {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_number(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return value;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

DataBatch load_csv_dataset(const std::filesystem::path& path,
                           const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read dataset " + path.string());

  const std::string where = path.string();
  std::vector<std::vector<double>> rows;
  std::optional<std::size_t> label_col;
  std::size_t width = 0;
  bool first = true;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_cells(line);

    std::vector<double> values;
    values.reserve(cells.size());
    std::optional<std::size_t> bad_cell;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto v = parse_number(cells[c]);
      if (!v) {
        bad_cell = c;
        break;
      }
      values.push_back(*v);
    }

    if (first) {
      first = false;
      width = cells.size();
      if (bad_cell) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
          if (iequals(cells[c], "label")) label_col = c;
        }
        continue;
      }
    }
    if (cells.size() != width) {
      throw ParseError(where + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(width) + " cells, found " +
                       std::to_string(cells.size()));
    }
    if (bad_cell) {
      throw ParseError(where + ":" + std::to_string(line_no) +
                       ": non-numeric cell '" + std::string(cells[*bad_cell]) +
                       "' in column " + std::to_string(*bad_cell + 1));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError(where + ": no data rows");

  if (!label_col && options.last_column_is_label) label_col = width - 1;

  std::optional<std::vector<int>> labels;
  if (label_col) {
    labels.emplace();
    labels->reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double v = rows[r][*label_col];
      if (v != 0.0 && v != 1.0) {
        throw ParseError(where + ": label in data row " + std::to_string(r + 1) +
                         " must be 0 or 1");
      }
      labels->push_back(static_cast<int>(v));
      rows[r].erase(rows[r].begin() + static_cast<std::ptrdiff_t>(*label_col));
    }
  }
  if (rows.front().empty()) throw ParseError(where + ": no feature columns");
  DataBatch batch = DataBatch::from_rows(rows, std::move(labels));
  validate_batch(batch);
  return batch;
}

DataBatch subsample(const DataBatch& batch, std::size_t max_rows,
                    std::size_t max_cols, std::uint64_t seed) {
  const std::size_t n = std::min(batch.rows(), max_rows);
  const std::size_t k = std::min(batch.cols(), max_cols);

  std::vector<std::size_t> picked(batch.rows());
  std::iota(picked.begin(), picked.end(), std::size_t{0});
  if (n < batch.rows()) {
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(
          rng.uniform_int(static_cast<std::int64_t>(i),
                          static_cast<std::int64_t>(batch.rows() - 1)));
      std::swap(picked[i], picked[j]);
    }
    picked.resize(n);
    std::sort(picked.begin(), picked.end());
  }

  DataBatch out(n, k);
  std::optional<std::vector<int>> labels;
  if (batch.labels()) labels.emplace(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < k; ++c) out.at(r, c) = batch.at(picked[r], c);
    if (labels) (*labels)[r] = (*batch.labels())[picked[r]];
  }
  out.set_labels(std::move(labels));
  if (n == batch.rows()) out.set_row_ids(batch.row_ids());
  return out;
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw InvalidArgument("auroc: scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  for (double s : scores) {
    if (!std::isfinite(s)) throw InvalidArgument("auroc: non-finite score");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positives = 0.0;
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Mid-rank of the tie group, 1-based.
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] != 0) {
        positives += 1.0;
        rank_sum += mid;
      }
    }
    i = j;
  }
  const double negatives = static_cast<double>(n) - positives;
  if (positives == 0.0 || negatives == 0.0) {
    throw InvalidArgument("auroc needs both positive and negative labels");
  }
  const double u = rank_sum - positives * (positives + 1.0) / 2.0;
  return u / (positives * negatives);
}

}  // namespace llmad
