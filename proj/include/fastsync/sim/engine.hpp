#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <vector>

namespace fastsync::sim {

// Min-heap of timestamped payloads; equal timestamps pop in insertion order.
template <class T>
class EventQueue {
 public:
  struct Entry {
    double time;
    std::uint64_t seq;
    T payload;
  };

  void push(double time, T payload) { heap_.push(Entry{time, next_seq_++, std::move(payload)}); }

  // Empty optional is the end-of-simulation signal.
  std::optional<Entry> advance() {
    if (heap_.empty()) return std::nullopt;
    Entry e = heap_.top();
    heap_.pop();
    now_ = e.time;
    return e;
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  double now() const { return now_; }

 private:
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  std::uint64_t next_seq_ = 0;
  double now_ = 0.0;
};

}  // namespace fastsync::sim
