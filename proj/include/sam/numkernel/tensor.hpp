#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace sam {

// Per-thread byte counters fed by TrackingAllocator. Only tensor payloads are
// counted, which makes peak figures independent of the platform allocator.
namespace alloc {

struct Stats {
  std::int64_t live_bytes = 0;
  std::int64_t peak_bytes = 0;
};

Stats& thread_stats() noexcept;

/// Resets the peak to the current live size and returns the live size.
std::int64_t reset_peak() noexcept;

/// Tracks the peak payload allocation between construction and peak().
class PeakScope {
 public:
  PeakScope() noexcept : baseline_(reset_peak()) {}
  std::int64_t peak() const noexcept { return thread_stats().peak_bytes - baseline_; }

 private:
  std::int64_t baseline_;
};

}  // namespace alloc

template <class T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() noexcept = default;
  template <class U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    auto* p = static_cast<T*>(::operator new(n * sizeof(T)));
    auto& s = alloc::thread_stats();
    s.live_bytes += static_cast<std::int64_t>(n * sizeof(T));
    if (s.live_bytes > s.peak_bytes) s.peak_bytes = s.live_bytes;
    return p;
  }

  void deallocate(T* p, std::size_t n) noexcept {
    alloc::thread_stats().live_bytes -= static_cast<std::int64_t>(n * sizeof(T));
    ::operator delete(p);
  }

  template <class U>
  bool operator==(const TrackingAllocator<U>&) const noexcept {
    return true;
  }
};

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/// Dense row-major tensor of doubles. Rank 1 is a vector, rank 2 a matrix.
class Tensor {
 public:
  using Storage = std::vector<double, TrackingAllocator<double>>;

  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);

  static Tensor vector(std::initializer_list<double> values);
  static Tensor vector(std::span<const double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> row_major = {});
  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  /// Rows of a matrix; length of a vector.
  std::size_t rows() const noexcept { return shape_.empty() ? 0 : shape_[0]; }
  /// Columns of a matrix; 1 for a vector.
  std::size_t cols() const noexcept { return shape_.size() < 2 ? 1 : shape_[1]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double& at(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols(), cols()};
  }

  bool all_finite() const noexcept;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  Storage data_;
};

}  // namespace sam
