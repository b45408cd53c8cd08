#pragma once

#include <string>

#include "halfpel/plane.hpp"

namespace halfpel {

// One supervised example: degraded integer-phase patch and the clean
// half-pel-phase patch it should be mapped to. Both on the 0..255 scale.
struct TrainingPair {
  Plane input;
  Plane label;
  Position position = Position::kH;
  int qp = 22;
  std::string source_id;
};

}  // namespace halfpel
