#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <vector>

namespace veld {

struct NetModel {
  double base_latency_ms = 5.0;
  double jitter_ms = 0.0;
  std::uint64_t seed = 1;
};

/// Single-threaded discrete-event network with a virtual clock. Every
/// message on a link is delayed by base + U[0, jitter) ms and never overtakes
/// the previous message on the same link, like one TCP stream. Events at
/// equal times run in scheduling order, so a run is a pure function of the
/// seed and the schedule.
class SimNetwork {
 public:
  struct Link {
    double last_delivery_ms = 0.0;
  };

  explicit SimNetwork(NetModel model);

  double now_ms() const { return now_ms_; }
  const NetModel& model() const { return model_; }

  void schedule(double at_ms, std::function<void()> fn);

  /// Queues `deliver` on `link` and counts it as one network message.
  void transmit(Link& link, std::function<void()> deliver);

  /// Runs the next event; false when the queue is empty.
  bool step();
  /// Runs events until the queue is empty or the clock would pass `limit_ms`.
  /// Returns true when the queue drained.
  bool run_until(double limit_ms);
  bool idle() const { return queue_.empty(); }

  std::uint64_t messages() const { return messages_; }

 private:
  struct Event {
    double at_ms;
    std::uint64_t order;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at_ms != b.at_ms ? a.at_ms > b.at_ms : a.order > b.order;
    }
  };

  NetModel model_;
  std::mt19937_64 rng_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  double now_ms_ = 0.0;
  std::uint64_t next_order_ = 0;
  std::uint64_t messages_ = 0;
};

}  // namespace veld
