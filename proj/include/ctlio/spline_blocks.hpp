// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "ctlio/bspline.hpp"
#include "ctlio/solver.hpp"

namespace ctlio::detail {

// Window views over solver parameter blocks: residual functors receive the k
// rotation blocks first, then (optionally) the k position blocks, and evaluate
// the cumulative form directly on the current block values.

inline void read_rotations(const std::vector<const ParamBlock*>& blocks, int offset, int k,
                           Rotation* out) {
  for (int j = 0; j < k; ++j) out[j] = blocks[offset + j]->rot();
}

inline void read_positions(const std::vector<const ParamBlock*>& blocks, int offset, int k,
                           Vec3* out) {
  for (int j = 0; j < k; ++j) out[j] = Vec3(blocks[offset + j]->vec());
}

}  // namespace ctlio::detail
