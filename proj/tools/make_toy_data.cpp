// Writes the small labelled CSV tables bundled under data/.
//
//   llmad_make_toy_data <out_dir>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "llmad/random.hpp"

namespace fs = std::filesystem;

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
};

std::string cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, v == static_cast<long>(v) ? "%.0f" : "%.4f", v);
  return buf;
}

void write(const fs::path& path, const Table& t) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  for (const auto& h : t.header) out << h << ',';
  out << "label\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (double v : t.rows[r]) out << cell(v) << ',';
    out << t.labels[r] << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// Standard normal features; anomalies are shifted by 6 in one feature.
Table gaussian(llmad::Rng& rng) {
  Table t{{"f1", "f2", "f3"}, {}, {}};
  for (int r = 0; r < 200; ++r) {
    std::vector<double> row = {rng.normal(), rng.normal(10, 2), rng.normal(-5, 0.5)};
    const int label = rng.uniform01() < 0.08;
    if (label) {
      const auto f = static_cast<std::size_t>(rng.uniform_int(0, 2));
      const double scale[] = {1, 2, 0.5};
      row[f] += (rng.uniform01() < 0.5 ? -6 : 6) * scale[f];
    }
    t.rows.push_back(row);
    t.labels.push_back(label);
  }
  return t;
}

// Two category columns and two real columns; anomalies use categories
// outside the normal support.
Table categorical(llmad::Rng& rng) {
  Table t{{"c1", "c2", "x1", "x2"}, {}, {}};
  for (int r = 0; r < 150; ++r) {
    const int label = rng.uniform01() < 0.1;
    std::vector<double> row = {static_cast<double>(rng.uniform_int(0, 3)),
                               static_cast<double>(rng.uniform_int(1, 2)), rng.normal(50, 5),
                               rng.normal(0.2, 0.05)};
    if (label) {
      row[0] = static_cast<double>(rng.uniform_int(8, 9));
      row[2] = rng.normal(50, 40);
    }
    t.rows.push_back(row);
    t.labels.push_back(label);
  }
  return t;
}

// Two tight clusters with anomalies scattered uniformly over a wide box.
Table clusters(llmad::Rng& rng) {
  Table t{{"a", "b", "c", "d", "e"}, {}, {}};
  for (int r = 0; r < 240; ++r) {
    const int label = rng.uniform01() < 0.06;
    std::vector<double> row(5);
    const double centre = rng.uniform01() < 0.5 ? -20 : 20;
    for (auto& v : row) v = label ? rng.uniform(-60, 60) : rng.normal(centre, 1.5);
    t.rows.push_back(row);
    t.labels.push_back(label);
  }
  return t;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: llmad_make_toy_data <out_dir>\n";
    return 2;
  }
  const fs::path dir = argv[1];
  fs::create_directories(dir);
  llmad::Rng rng(20240601);
  write(dir / "toy_gaussian.csv", gaussian(rng));
  write(dir / "toy_categorical.csv", categorical(rng));
  write(dir / "toy_clusters.csv", clusters(rng));
  return 0;
}
