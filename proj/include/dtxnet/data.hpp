#pragma once

#include <cstdint>
#include <vector>

#include "dtxnet/config.hpp"

namespace dtxnet {

// In-memory episode log at the control rate: per tick the observation
// (joint vector, binary frame, optical flow), the command sent, and the
// task value realized during the step that *ended* at this tick. The file
// format lives in the harness.
struct EpisodeData {
  int image_size = 64;
  double rate_hz = 15.0;
  std::uint64_t sim_config_hash = 0;

  std::vector<float> joints;     // count*6, raw units
  std::vector<std::uint8_t> frames;  // count*S*S, values 0/1
  std::vector<float> flows;      // count*2*S*S, x-plane then y-plane
  std::vector<float> commands;   // count*2
  std::vector<float> tasks;      // count

  int count() const { return static_cast<int>(tasks.size()); }

  void require_consistent() const {
    const size_t n = tasks.size();
    const size_t ss = static_cast<size_t>(image_size) * image_size;
    if (joints.size() != n * 6 || frames.size() != n * ss ||
        flows.size() != n * 2 * ss || commands.size() != n * 2) {
      throw DataError("episode arrays disagree with tick count");
    }
  }
};

}  // namespace dtxnet
