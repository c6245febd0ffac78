#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <tuple>
#include <vector>

namespace gevrey::fft {

/// Allocator returning SIMD-aligned storage so cached plans can be executed
/// on any buffer through the new-array interface.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) {
    void* p = fftw_malloc(n * sizeof(T));
    if (p == nullptr) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { fftw_free(p); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using Buffer = std::vector<std::complex<double>, AlignedAllocator<std::complex<double>>>;

/// Smallest integer >= target whose prime factors are all in {2, 3, 5, 7}.
inline std::size_t next_fast_size(std::size_t target) {
  if (target <= 1) return 1;
  for (std::size_t s = target;; ++s) {
    std::size_t r = s;
    for (std::size_t p : {2u, 3u, 5u, 7u})
      while (r % p == 0) r /= p;
    if (r == 1) return s;
  }
}

namespace detail {

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const noexcept { fftw_destroy_plan(p); }
};
using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int rank, int points, int sign) {
    const std::lock_guard<std::mutex> lock(mutex_);
    const auto key = std::make_tuple(rank, points, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second.get();
    std::vector<int> dims(static_cast<std::size_t>(rank), points);
    std::size_t total = 1;
    for (int d : dims) total *= static_cast<std::size_t>(d);
    Buffer scratch(total);
    auto* data = reinterpret_cast<fftw_complex*>(scratch.data());
    PlanHandle plan(fftw_plan_dft(rank, dims.data(), data, data, sign, FFTW_ESTIMATE));
    fftw_plan raw = plan.get();
    plans_.emplace(key, std::move(plan));
    return raw;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, PlanHandle> plans_;
};

}  // namespace detail

/// In-place unnormalized DFT over an M^rank row-major array.
/// sign = +1 evaluates sum_k c_k e^{+i k x}; sign = -1 is the analysis transform.
inline void transform(Buffer& data, int rank, std::size_t points, int sign) {
  fftw_plan plan = detail::PlanCache::instance().get(rank, static_cast<int>(points),
                                                     sign > 0 ? FFTW_BACKWARD : FFTW_FORWARD);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, ptr, ptr);
}

}  // namespace gevrey::fft
