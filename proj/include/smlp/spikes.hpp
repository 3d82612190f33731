#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

namespace smlp {

// A signed unit event: the only message passed between layers.
struct SignedSpike {
  uint32_t source = 0;  // index of the emitting unit
  int sign = +1;        // -1 or +1
};

inline bool operator==(const SignedSpike& a, const SignedSpike& b) {
  return a.source == b.source && a.sign == b.sign;
}

struct TimedSpike {
  uint32_t t = 0;  // timestep the spike was emitted on, 1-based
  SignedSpike spike;
};

// Ordered spike record of a quantization run; timesteps are non-decreasing.
struct SpikeTrain {
  std::vector<TimedSpike> spikes;

  std::size_t size() const { return spikes.size(); }
  bool empty() const { return spikes.empty(); }

  void write_csv(std::ostream& os) const {
    os << "t,source,sign\n";
    for (const auto& s : spikes)
      os << s.t << ',' << s.spike.source << ',' << s.spike.sign << '\n';
  }
};

}  // namespace smlp
