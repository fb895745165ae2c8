#pragma once

#include <cstddef>

#include "assoc/episodes.hpp"
#include "assoc/synthetic.hpp"
#include "assoc/training.hpp"

namespace assoc {

// Desk-scale synthetic experiment: d=16, 20 base / 5 novel classes, 3
// planted relatives each. Shared by the CLI defaults and the acceptance run.
struct Preset {
  SyntheticSpec data;
  ModelConfig model;
  TrainConfig train;
  EpisodeSpec eval;
  std::size_t episodes = 100;
};

Preset synthetic_preset();

}  // namespace assoc
