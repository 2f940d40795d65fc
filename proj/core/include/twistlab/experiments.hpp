#pragma once

#include <functional>

#include "twistlab/carleman.hpp"
#include "twistlab/config.hpp"
#include "twistlab/forward.hpp"
#include "twistlab/inverse.hpp"
#include "twistlab/results.hpp"

namespace twistlab {

// Profile whose rate (and its derivatives) is the sum of the two inputs.
// The window length is the larger of the two.
TwistProfile combine_profiles(const TwistProfile& a, const TwistProfile& b);

// Fork-join over n independent slots with at most `threads` workers. Slot
// outputs land in caller-owned arrays, so results do not depend on the
// worker count. The first slot exception is rethrown after the join.
void parallel_slots(int n, int threads, const std::function<void(int)>& fn);

// Geometric progression from lo to hi with n points.
std::vector<double> geometric_grid(double lo, double hi, int n);

// Common per-config objects shared by the experiment drivers.
struct Scene {
  Grid3D grid;
  TwistProfile ref;   // reference profile
  TwistProfile pert;  // twin partner offset
  TwistProfile twin;  // ref + pert
  CVec q0;
};

Scene build_scene(const ExperimentConfig& c);

// Dispatches on c.experiment; validates the configuration first. Pure: the
// caller decides whether to export the bundle.
ResultsBundle run_experiment(const ExperimentConfig& c);

}  // namespace twistlab
