#include "lcdog/buffer_pool.hpp"

namespace lcdog {

std::uint64_t GridBufferPool::pack(Roles r) {
  return static_cast<std::uint64_t>(r.current) | (static_cast<std::uint64_t>(r.pinned) << 2) |
         (static_cast<std::uint64_t>(r.frame + 1) << 8);
}

GridBufferPool::Roles GridBufferPool::unpack(std::uint64_t s) {
  return {static_cast<int>(s & 0x3), static_cast<int>((s >> 2) & 0x7), static_cast<long long>(s >> 8) - 1};
}

GridBufferPool::GridBufferPool(const DynamicOccupancyGrid& initial)
    : state_(pack({0, kNone, -1})) {
  for (auto& b : buffers_) b = initial;
}

int GridBufferPool::acquire_next() {
  const Roles r = roles();
  for (int b = 0; b < kForecasting; ++b) {
    if (b != r.current && b != r.pinned) return b;
  }
  blocked_.fetch_add(1);
  return -1;
}

void GridBufferPool::publish(int b, long long frame) {
  std::uint64_t s = state_.load(std::memory_order_acquire);
  for (;;) {
    Roles r = unpack(s);
    r.current = b;
    r.frame = frame;
    if (state_.compare_exchange_weak(s, pack(r), std::memory_order_acq_rel)) break;
  }
  seq_.fetch_add(1, std::memory_order_release);
  seq_.notify_all();
}

GridBufferPool::Roles GridBufferPool::pin_current() {
  std::uint64_t s = state_.load(std::memory_order_acquire);
  for (;;) {
    Roles r = unpack(s);
    r.pinned = r.current;
    if (state_.compare_exchange_weak(s, pack(r), std::memory_order_acq_rel)) return r;
  }
}

void GridBufferPool::unpin() {
  std::uint64_t s = state_.load(std::memory_order_acquire);
  for (;;) {
    Roles r = unpack(s);
    r.pinned = kNone;
    if (state_.compare_exchange_weak(s, pack(r), std::memory_order_acq_rel)) return;
  }
}

void GridBufferPool::wake_all() {
  seq_.fetch_add(1, std::memory_order_release);
  seq_.notify_all();
}

void GridBufferPool::begin_write(int b) {
  const auto i = static_cast<std::size_t>(b);
  if (writers_[i].fetch_add(1, std::memory_order_acq_rel) != 0) double_writer_.fetch_add(1);
  if (readers_[i].load(std::memory_order_acquire) != 0) read_write_.fetch_add(1);
}

void GridBufferPool::end_write(int b) { writers_[static_cast<std::size_t>(b)].fetch_sub(1, std::memory_order_acq_rel); }

void GridBufferPool::begin_read(int b) {
  const auto i = static_cast<std::size_t>(b);
  readers_[i].fetch_add(1, std::memory_order_acq_rel);
  if (writers_[i].load(std::memory_order_acquire) != 0) read_write_.fetch_add(1);
}

void GridBufferPool::end_read(int b) { readers_[static_cast<std::size_t>(b)].fetch_sub(1, std::memory_order_acq_rel); }

}  // namespace lcdog
