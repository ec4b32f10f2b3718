#pragma once

// Shared helpers for the test binaries.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "edgmat/autograd.hpp"
#include "edgmat/flow_ingest.hpp"
#include "edgmat/tensor.hpp"

namespace edgmat::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("edgmat_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline FlowRecord record(std::string src_ip, std::uint16_t src_port, std::string dst_ip,
                         std::uint16_t dst_port, std::vector<double> features = {1.0},
                         ClassId label = 0, std::size_t row = 0) {
  FlowRecord r;
  r.src_ip = std::move(src_ip);
  r.src_port = src_port;
  r.dst_ip = std::move(dst_ip);
  r.dst_port = dst_port;
  r.features = std::move(features);
  r.label = label;
  r.row_index = row;
  return r;
}

/// Tensor of independent standard normals from a seeded engine.
inline Tensor random_tensor(Shape shape, std::mt19937_64& gen, double scale = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, scale);
  for (double& x : t.data()) x = dist(gen);
  return t;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace edgmat::testing
