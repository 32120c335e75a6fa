#pragma once

// Shared reference implementations ("oracles") and helpers for the test
// suite. Everything here is deliberately brute-force and independent of the
// library code it checks.

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace test_support {

// P(score_pos > score_neg) + 0.5 P(tie) over every positive/negative pair.
inline double pair_count_auc(const std::vector<int>& labels, const std::vector<double>& scores) {
  double wins = 0.0;
  long pairs = 0;
  for (size_t p = 0; p < labels.size(); ++p) {
    if (labels[p] != 1) continue;
    for (size_t n = 0; n < labels.size(); ++n) {
      if (labels[n] != 0) continue;
      ++pairs;
      if (scores[p] > scores[n]) {
        wins += 1.0;
      } else if (scores[p] == scores[n]) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

// Distance from a point to a segment [a, b] in 3D.
inline double point_segment_distance(const double p[3], const double a[3], const double b[3]) {
  double ab[3] = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  double ap[3] = {p[0] - a[0], p[1] - a[1], p[2] - a[2]};
  const double denom = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
  double t = denom > 0.0 ? (ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / denom : 0.0;
  t = std::min(1.0, std::max(0.0, t));
  const double dx = ap[0] - t * ab[0];
  const double dy = ap[1] - t * ab[1];
  const double dz = ap[2] - t * ab[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Unique temporary directory under the system temp root; removed on
// destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("mprkit_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace test_support
