#pragma once

#include <array>
#include <atomic>
#include <cstdint>

#include "lcdog/grid.hpp"

namespace lcdog {

/// Four grid buffers shared by the filter and placement contexts.
///
/// Buffers 0..2 rotate between the current, next and extra roles; buffer 3 is
/// the forecasting destination and belongs to placement. The filter writes into
/// a buffer that is neither current nor pinned by placement, so it never waits.
/// Role state (current, pinned, frame of current) is one packed atomic word.
///
/// The monitor counts every begin_write that finds another writer or a reader
/// on the same buffer, and every begin_read that finds a writer.
class GridBufferPool {
 public:
  static constexpr int kBuffers = 4;
  static constexpr int kForecasting = 3;
  static constexpr int kNone = 7;

  struct Roles {
    int current;
    int pinned;       // kNone when placement holds nothing
    long long frame;  // frame index of the belief in `current` (-1 = prior)
  };

  explicit GridBufferPool(const DynamicOccupancyGrid& initial);

  DynamicOccupancyGrid& buffer(int b) { return buffers_[static_cast<std::size_t>(b)]; }
  const DynamicOccupancyGrid& buffer(int b) const { return buffers_[static_cast<std::size_t>(b)]; }

  Roles roles() const { return unpack(state_.load(std::memory_order_acquire)); }

  /// Filter side. A rotating buffer that is neither current nor pinned.
  /// Returns -1 only if the protocol is broken (counted as a blocked event).
  int acquire_next();
  void publish(int b, long long frame);

  /// Placement side. Pins the buffer that is current right now.
  Roles pin_current();
  void unpin();

  /// Number of publishes so far; waitable.
  const std::atomic<std::uint64_t>& sequence() const { return seq_; }
  void wake_all();

  void begin_write(int b);
  void end_write(int b);
  void begin_read(int b);
  void end_read(int b);

  long long double_writer_violations() const { return double_writer_.load(); }
  long long read_write_conflicts() const { return read_write_.load(); }
  long long blocked() const { return blocked_.load(); }

  static std::uint64_t pack(Roles r);
  static Roles unpack(std::uint64_t s);

 private:
  std::array<DynamicOccupancyGrid, kBuffers> buffers_;
  std::atomic<std::uint64_t> state_;
  std::atomic<std::uint64_t> seq_{0};
  std::array<std::atomic<int>, kBuffers> writers_{};
  std::array<std::atomic<int>, kBuffers> readers_{};
  std::atomic<long long> double_writer_{0};
  std::atomic<long long> read_write_{0};
  std::atomic<long long> blocked_{0};
};

}  // namespace lcdog
