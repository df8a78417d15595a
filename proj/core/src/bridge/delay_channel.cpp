#include "twinlift/bridge/delay_channel.hpp"

#include <cmath>

namespace twinlift::bridge {

void DelaySettings::validate() const {
  if (!std::isfinite(delay) || delay < 0.0) {
    throw std::invalid_argument("delay must be finite and non-negative");
  }
  if (!std::isfinite(jitter) || jitter < 0.0) {
    throw std::invalid_argument("jitter must be finite and non-negative");
  }
}

}  // namespace twinlift::bridge
