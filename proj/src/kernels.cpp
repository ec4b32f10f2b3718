#include "edgmat/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "edgmat/rng.hpp"

namespace edgmat {

Segments Segments::build(std::vector<std::uint32_t> ids, std::size_t segment_count) {
  Segments s;
  s.offsets.assign(segment_count + 1, 0);
  for (std::uint32_t id : ids) {
    if (id >= segment_count) throw std::out_of_range("segment id out of range");
    ++s.offsets[id + 1];
  }
  for (std::size_t i = 0; i < segment_count; ++i) s.offsets[i + 1] += s.offsets[i];
  s.members.resize(ids.size());
  std::vector<std::size_t> cursor(s.offsets.begin(), s.offsets.end() - 1);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    s.members[cursor[ids[i]]++] = static_cast<std::uint32_t>(i);
  }
  s.ids = std::move(ids);
  return s;
}

namespace kernels {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelGrain = 1 << 14;

namespace serial {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t n, std::size_t k, std::size_t m) {
  std::fill(c.begin(), c.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      for (std::size_t j = 0; j < m; ++j) c[i * m + j] += aip * b[p * m + j];
    }
  }
}

void matmul_grad_a(std::span<const double> dc, std::span<const double> b, std::span<double> da,
                   std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += dc[i * m + j] * b[p * m + j];
      da[i * k + p] += acc;
    }
  }
}

void matmul_grad_b(std::span<const double> a, std::span<const double> dc, std::span<double> db,
                   std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      for (std::size_t j = 0; j < m; ++j) db[p * m + j] += aip * dc[i * m + j];
    }
  }
}

void gather_rows(std::span<const double> x, std::span<const std::uint32_t> idx,
                 std::span<double> out, std::size_t cols) {
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(x.data() + idx[i] * cols, cols, out.data() + i * cols);
  }
}

void scatter_add_rows(std::span<const double> x, const Segments& seg, std::span<double> out,
                      std::size_t cols) {
  for (std::size_t i = 0; i < seg.items(); ++i) {
    const std::size_t s = seg.ids[i];
    for (std::size_t j = 0; j < cols; ++j) out[s * cols + j] += x[i * cols + j];
  }
}

void segment_softmax(std::span<const double> scores, const Segments& seg,
                     std::span<double> out) {
  const std::size_t n = seg.items();
  std::vector<double> seg_max(seg.count(), -std::numeric_limits<double>::infinity());
  std::vector<double> seg_sum(seg.count(), 0.0);
  for (std::size_t i = 0; i < n; ++i) seg_max[seg.ids[i]] = std::max(seg_max[seg.ids[i]], scores[i]);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(scores[i] - seg_max[seg.ids[i]]);
    seg_sum[seg.ids[i]] += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= seg_sum[seg.ids[i]];
}

void segment_softmax_backward(std::span<const double> alpha, std::span<const double> dalpha,
                              const Segments& seg, std::span<double> dscores) {
  const std::size_t n = seg.items();
  std::vector<double> dot(seg.count(), 0.0);
  for (std::size_t i = 0; i < n; ++i) dot[seg.ids[i]] += alpha[i] * dalpha[i];
  for (std::size_t i = 0; i < n; ++i) dscores[i] += alpha[i] * (dalpha[i] - dot[seg.ids[i]]);
}

void scale_rows(std::span<const double> x, std::span<const double> s, std::span<double> out,
                std::size_t cols) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = s[i] * x[i * cols + j];
  }
}

void dropout(std::span<const double> x, double p, std::uint64_t key, std::uint64_t base_counter,
             std::span<double> out, std::span<double> keep) {
  const double scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < x.size(); ++i) {
    keep[i] = CounterRng::uniform(key, base_counter + i) < p ? 0.0 : scale;
    out[i] = x[i] * keep[i];
  }
}

}  // namespace serial

namespace parallel {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t n, std::size_t k, std::size_t m) {
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n * k * m > kParallelGrain)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* ci = c.data() + i * m;
    std::fill(ci, ci + m, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* bp = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
}

void matmul_grad_a(std::span<const double> dc, std::span<const double> b, std::span<double> da,
                   std::size_t n, std::size_t k, std::size_t m) {
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n * k * m > kParallelGrain)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* dci = dc.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b.data() + p * m;
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += dci[j] * bp[j];
      da[i * k + p] += acc;
    }
  }
}

void matmul_grad_b(std::span<const double> a, std::span<const double> dc, std::span<double> db,
                   std::size_t n, std::size_t k, std::size_t m) {
  // Partitioned over rows of dB; each element still accumulates in ascending i.
  const auto inner = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(static) if (n * k * m > kParallelGrain)
  for (std::ptrdiff_t pp = 0; pp < inner; ++pp) {
    const auto p = static_cast<std::size_t>(pp);
    double* dbp = db.data() + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double aip = a[i * k + p];
      const double* dci = dc.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) dbp[j] += aip * dci[j];
    }
  }
}

void gather_rows(std::span<const double> x, std::span<const std::uint32_t> idx,
                 std::span<double> out, std::size_t cols) {
  const auto n = static_cast<std::ptrdiff_t>(idx.size());
#pragma omp parallel for schedule(static) if (idx.size() * cols > kParallelGrain)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    std::copy_n(x.data() + idx[i] * cols, cols, out.data() + i * cols);
  }
}

void scatter_add_rows(std::span<const double> x, const Segments& seg, std::span<double> out,
                      std::size_t cols) {
  const auto segments = static_cast<std::ptrdiff_t>(seg.count());
#pragma omp parallel for schedule(dynamic, 64) if (seg.items() * cols > kParallelGrain)
  for (std::ptrdiff_t ss = 0; ss < segments; ++ss) {
    const auto s = static_cast<std::size_t>(ss);
    double* os = out.data() + s * cols;
    for (std::uint32_t i : seg.of(s)) {
      const double* xi = x.data() + static_cast<std::size_t>(i) * cols;
      for (std::size_t j = 0; j < cols; ++j) os[j] += xi[j];
    }
  }
}

void segment_softmax(std::span<const double> scores, const Segments& seg,
                     std::span<double> out) {
  const auto segments = static_cast<std::ptrdiff_t>(seg.count());
#pragma omp parallel for schedule(dynamic, 64) if (seg.items() > kParallelGrain / 16)
  for (std::ptrdiff_t ss = 0; ss < segments; ++ss) {
    const auto members = seg.of(static_cast<std::size_t>(ss));
    double mx = -std::numeric_limits<double>::infinity();
    for (std::uint32_t i : members) mx = std::max(mx, scores[i]);
    double sum = 0.0;
    for (std::uint32_t i : members) {
      out[i] = std::exp(scores[i] - mx);
      sum += out[i];
    }
    for (std::uint32_t i : members) out[i] /= sum;
  }
}

void segment_softmax_backward(std::span<const double> alpha, std::span<const double> dalpha,
                              const Segments& seg, std::span<double> dscores) {
  const auto segments = static_cast<std::ptrdiff_t>(seg.count());
#pragma omp parallel for schedule(dynamic, 64) if (seg.items() > kParallelGrain / 16)
  for (std::ptrdiff_t ss = 0; ss < segments; ++ss) {
    const auto members = seg.of(static_cast<std::size_t>(ss));
    double dot = 0.0;
    for (std::uint32_t i : members) dot += alpha[i] * dalpha[i];
    for (std::uint32_t i : members) dscores[i] += alpha[i] * (dalpha[i] - dot);
  }
}

void scale_rows(std::span<const double> x, std::span<const double> s, std::span<double> out,
                std::size_t cols) {
  const auto n = static_cast<std::ptrdiff_t>(s.size());
#pragma omp parallel for schedule(static) if (s.size() * cols > kParallelGrain)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = s[i] * x[i * cols + j];
  }
}

void dropout(std::span<const double> x, double p, std::uint64_t key, std::uint64_t base_counter,
             std::span<double> out, std::span<double> keep) {
  const double scale = 1.0 / (1.0 - p);
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static) if (x.size() > kParallelGrain)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    keep[i] = CounterRng::uniform(key, base_counter + i) < p ? 0.0 : scale;
    out[i] = x[i] * keep[i];
  }
}

}  // namespace parallel
}  // namespace kernels
}  // namespace edgmat
