#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace smlp {

enum class RoutingScheme { breadth_first, depth_first };

// Synchronous event router over a static module graph.
//
// Breadth-first: when a module emits a batch of events, every event is
// delivered to all of the module's targets (target-major, FIFO) before any
// of the resulting child events is processed.
//
// Depth-first: a child event and all of its descendants are processed
// immediately, before the producer's next sibling event.
//
// dispatch() returns only once the whole cascade has drained.
template <typename Payload>
class Router {
 public:
  // A handler consumes one event and returns the events it emits in turn.
  using Handler = std::function<std::vector<Payload>(const Payload&)>;

  struct TraceRow {
    uint64_t seq;
    std::string producer;
    std::string target;
    std::string kind;
  };

  explicit Router(RoutingScheme scheme = RoutingScheme::breadth_first)
      : scheme_(scheme) {}

  RoutingScheme scheme() const { return scheme_; }
  void set_scheme(RoutingScheme s) { scheme_ = s; }

  int add_module(std::string name, Handler handler) {
    modules_.push_back({std::move(name), std::move(handler), {}});
    return static_cast<int>(modules_.size()) - 1;
  }

  // Fan-out targets are visited in connection order.
  void connect(int from, int to) {
    check_id(from);
    check_id(to);
    modules_[from].targets.push_back(to);
  }

  void set_trace_enabled(bool on) { trace_enabled_ = on; }
  void set_phase(std::string kind) { phase_ = std::move(kind); }
  const std::vector<TraceRow>& trace() const { return trace_; }
  void clear_trace() { trace_.clear(); }

  void write_trace_csv(std::ostream& os) const {
    os << "seq,producer,target,kind\n";
    for (const auto& r : trace_)
      os << r.seq << ',' << r.producer << ',' << r.target << ',' << r.kind
         << '\n';
  }

  // Delivers `events` emitted by `producer` and drains the full cascade.
  void dispatch(int producer, const std::vector<Payload>& events) {
    check_id(producer);
    if (events.empty()) return;
    if (scheme_ == RoutingScheme::breadth_first) {
      enqueue_batch(producer, events);
      drain_queue();
    } else {
      for (const auto& e : events) deliver_depth_first(producer, e);
    }
  }

  // Within one timestep, the forward cascade must be fully drained before
  // any backward event is admitted.  dispatch() is synchronous, so the
  // barrier reduces to checking the queue really is empty.
  void phase_barrier() {
    if (!pending_.empty())
      throw std::logic_error("phase_barrier with undelivered events pending");
  }

 private:
  struct Module {
    std::string name;
    Handler handler;
    std::vector<int> targets;
  };

  void check_id(int id) const {
    if (id < 0 || id >= static_cast<int>(modules_.size()))
      throw std::invalid_argument("router: unknown module id");
  }

  void record(int producer, int target) {
    if (trace_enabled_)
      trace_.push_back(
          {seq_++, modules_[producer].name, modules_[target].name, phase_});
  }

  void enqueue_batch(int producer, const std::vector<Payload>& events) {
    const auto& targets = modules_[producer].targets;
    for (int t : targets)
      for (const auto& e : events) pending_.push_back({producer, t, e});
  }

  void drain_queue() {
    if (draining_) return;  // outer call owns the loop
    draining_ = true;
    while (!pending_.empty()) {
      auto d = std::move(pending_.front());
      pending_.pop_front();
      record(d.producer, d.target);
      auto children = modules_[d.target].handler(d.payload);
      if (!children.empty()) enqueue_batch(d.target, children);
    }
    draining_ = false;
  }

  void deliver_depth_first(int producer, const Payload& event) {
    for (int t : modules_[producer].targets) {
      record(producer, t);
      auto children = modules_[t].handler(event);
      for (const auto& c : children) deliver_depth_first(t, c);
    }
  }

  struct PendingDelivery {
    int producer;
    int target;
    Payload payload;
  };

  RoutingScheme scheme_;
  std::vector<Module> modules_;
  std::deque<PendingDelivery> pending_;
  bool draining_ = false;
  bool trace_enabled_ = false;
  std::string phase_ = "fwd";
  uint64_t seq_ = 0;
  std::vector<TraceRow> trace_;
};

}  // namespace smlp
