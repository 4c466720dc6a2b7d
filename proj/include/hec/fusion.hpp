#pragma once

#include <vector>

#include "hec/errors.hpp"
#include "hec/geometry.hpp"

namespace hec {

// A batch of pose estimates of the same quantity, to be aggregated.
struct EstimateBatch {
  std::vector<RigidTransform> estimates;
};

// Aggregates the batch into a single estimate: each pose is reduced to a
// (translation, intrinsic XYZ Euler) 6-vector, the lowest-density samples
// under a Gaussian fit are discarded (floor(discard_fraction * N) of them),
// and the survivors are averaged component-wise.
//
// Deterministic and permutation-invariant: any ordering of the same inputs
// produces bit-identical output.  All-equal inputs return that value exactly.
// Requires N >= 2 and at least one survivor after discarding.
//
// Known limitation: rotations are averaged in Euler space, which is only
// meaningful when the batch is tightly clustered and away from the ry = pi/2
// singularity.
RigidTransform fuse_estimates(const EstimateBatch& batch, double discard_fraction = 0.20);

}  // namespace hec
