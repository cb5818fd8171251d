#include "veld/sim_network.hpp"

#include <algorithm>

namespace veld {

SimNetwork::SimNetwork(NetModel model) : model_(model), rng_(model.seed) {}

void SimNetwork::schedule(double at_ms, std::function<void()> fn) {
  queue_.push(Event{std::max(at_ms, now_ms_), next_order_++, std::move(fn)});
}

void SimNetwork::transmit(Link& link, std::function<void()> deliver) {
  double delay = model_.base_latency_ms;
  if (model_.jitter_ms > 0.0) {
    delay += std::uniform_real_distribution<double>(0.0, model_.jitter_ms)(rng_);
  }
  const double at = std::max(now_ms_ + delay, link.last_delivery_ms);
  link.last_delivery_ms = at;
  ++messages_;
  schedule(at, std::move(deliver));
}

bool SimNetwork::step() {
  if (queue_.empty()) return false;
  // priority_queue::top is const; move the callable out before popping.
  Event event = std::move(const_cast<Event&>(queue_.top()));
  queue_.pop();
  now_ms_ = event.at_ms;
  event.fn();
  return true;
}

bool SimNetwork::run_until(double limit_ms) {
  while (!queue_.empty()) {
    if (queue_.top().at_ms > limit_ms) return false;
    step();
  }
  return true;
}

}  // namespace veld
