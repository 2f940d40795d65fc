#pragma once

#include <functional>
#include <string>
#include <vector>

#include "twistlab/geometry.hpp"
#include "twistlab/metric.hpp"
#include "twistlab/norms.hpp"
#include "twistlab/operators.hpp"

namespace twistlab {

struct WaveField {
  std::vector<CVec> levels;  // interior-node values per time level
  double t0 = 0.0;
  double dt = 0.0;
  const Grid3D* grid = nullptr;
  double norm_drift = 0.0;  // max relative L2 drift seen by the stepper

  int steps() const { return int(levels.size()) - 1; }
  double time(int n) const { return t0 + n * dt; }
};

// Dirichlet data on the lift sites of the operator, as a function of time.
// An empty function means homogeneous walls.
using BoundaryData = std::function<CVec(double)>;

// Trapezoidal stepper for -i q' + H q = 0 on [0, T]. The constant system
// matrix is factored once (sparse LU) and every step is polished by
// iterative refinement; a step whose relative residual stays above 1e-10
// aborts. Homogeneous runs conserve the discrete L2 norm to rounding.
WaveField crank_nicolson_solve(const DiscreteOperator& H, const CVec& q0,
                               const BoundaryData& h, double T, double dt);

// Extends a field on [0, T] to [-T, T] by q(-t) = conj(q(t)), valid for real
// initial states only (rejects otherwise).
WaveField symmetrize_time(const WaveField& q);

WaveField difference(const WaveField& a, const WaveField& b);

// Source of the exact difference system: for alpha = dtheta - dtheta_ref,
// R = (alpha((dtheta+dtheta_ref) dphi + 2 d3) + ddalpha) dphi q_ref applied
// levelwise. Pass the time-differentiated reference field to get the source
// of the differentiated system.
WaveField linearized_source(const TwistProfile& th, const TwistProfile& th_ref,
                            const WaveField& q_ref);

// Centered time differences, second-order one-sided at the ends.
WaveField time_derivative(const WaveField& y);

// Max over steps of the cell-weighted L2 norm of the trapezoidal residual
// -i(y^{n+1}-y^n)/dt + H (y^n+y^{n+1})/2 - (R^n+R^{n+1})/2.
double cn_residual(const DiscreteOperator& H, const WaveField& y, const WaveField& R);

// Metric-weighted wall flux nu^T g grad(u) per lateral face and axial level:
// one-sided difference toward the Dirichlet wall, centered tangentially.
// Returns one vector of face values per time level.
std::vector<CVec> boundary_flux(const WaveField& u, const MetricField& m,
                                const std::vector<BoundaryFace>& faces);

enum class ObsKind { interior, boundary };

struct ObsRegions {
  Region3D volume;  // interior kind: where the time-derivative gap is measured
  Region3D init;    // where the initial gap is measured
  std::vector<BoundaryFace> faces;  // boundary kind: observed wall faces
  double flux_z_bound = 0.0;        // boundary kind: |x3| < bound
};

struct ObservationSet {
  ObsKind kind = ObsKind::interior;
  std::vector<CVec> rate_levels;   // (q - q_ref)' per level, interior kind
  std::vector<CVec> flux_levels;   // wall flux of the rate gap, boundary kind
  CVec initial_gap;                // (q - q_ref) at t = 0
  double t0 = 0.0, dt = 0.0;
  double obs_norm_sq = 0.0;   // time-integrated observation norm squared
  double init_norm_sq = 0.0;  // second-order Sobolev norm squared of the gap
};

ObservationSet extract_observations(const WaveField& q, const WaveField& q_ref,
                                    ObsKind kind, const ObsRegions& regions,
                                    const MetricField& metric);

// Initial-state builders. kinds:
//   "plateau":          amp * x1 * b(x), b a radial/axial smoothstep plateau,
//                       params {R_in, R_out, z_in, z_out, amp}
//   "angular_plateau":  amp * (x1 + i x2) * b(x), same params
//   "eigenmode":        rectangle sections, params {mx, my, mz}
struct InitialStateSpec {
  std::string kind;
  std::vector<double> params;
};
CVec make_initial_state(const Grid3D& g, const InitialStateSpec& spec);

// Flat binary snapshot (node-major complex pairs per level) next to a small
// text header.
void export_wavefield(const WaveField& f, const std::string& path_base);

}  // namespace twistlab
