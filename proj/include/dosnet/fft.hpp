#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "dosnet/error.hpp"

namespace dosnet::fft {

using cplx = std::complex<double>;

enum class Direction { Forward, Backward };

namespace detail {

// FFTW plans are created in-place and unaligned so that a cached plan can be
// executed on any caller buffer through fftw_execute_dft.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(const std::vector<int>& dims, Direction dir) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(dims, dir == Direction::Forward);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::size_t total = 1;
    for (int d : dims) total *= static_cast<std::size_t>(d);
    auto* scratch = fftw_alloc_complex(total);
    const int sign = dir == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD;
    fftw_plan plan = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), scratch,
                                   scratch, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    if (plan == nullptr) throw NumericError("fftw could not create a plan");
    plans_.emplace(std::move(key), plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::pair<std::vector<int>, bool>, fftw_plan> plans_;
};

}  // namespace detail

/// Unnormalized in-place DFT over a row-major array with the given dims.
/// Forward uses exp(-2πi jk/n), backward exp(+2πi jk/n); neither scales.
inline void transform(std::span<cplx> data, std::span<const std::size_t> dims, Direction dir) {
  std::size_t total = 1;
  std::vector<int> idims;
  idims.reserve(dims.size());
  for (auto d : dims) {
    total *= d;
    idims.push_back(static_cast<int>(d));
  }
  if (total != data.size()) throw DimensionError("fft: buffer size does not match dims");
  if (total == 0) return;
  fftw_plan plan = detail::PlanCache::instance().get(idims, dir);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, ptr, ptr);
}

inline void transform(std::span<cplx> data, std::initializer_list<std::size_t> dims,
                      Direction dir) {
  std::vector<std::size_t> d(dims);
  transform(data, std::span<const std::size_t>(d), dir);
}

inline void forward(std::span<cplx> data) {
  const std::size_t n = data.size();
  transform(data, std::span<const std::size_t>(&n, 1), Direction::Forward);
}

/// Backward transform including the 1/n factor, the exact inverse of forward().
inline void inverse(std::span<cplx> data) {
  const std::size_t n = data.size();
  transform(data, std::span<const std::size_t>(&n, 1), Direction::Backward);
  const double s = 1.0 / static_cast<double>(n);
  for (auto& v : data) v *= s;
}

}  // namespace dosnet::fft
