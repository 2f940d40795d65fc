#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "twistlab/forward.hpp"
#include "twistlab/geometry.hpp"
#include "twistlab/metric.hpp"
#include "twistlab/norms.hpp"
#include "twistlab/operators.hpp"

namespace twistlab {

// Uniform cubic spline basis for the recovered rate profile on [-ell, ell].
// The first and last splines are dropped and one linear constraint (zero
// integral) is folded into an orthonormal nullspace, so any coefficient
// vector yields an accumulated profile vanishing at both window ends.
struct RateBasis {
  double ell = 0.0, hk = 0.0;
  int nseg = 0;
  Eigen::MatrixXd nullspace;  // raw_size x size

  int raw_size() const { return nseg + 1; }
  int size() const { return nseg; }

  double beta(int j, double z) const;   // raw spline j
  double alpha(int j, double z) const;  // exact antiderivative from -ell

  Eigen::VectorXd raw(const Eigen::VectorXd& w) const { return nullspace * w; }
  double rate(const Eigen::VectorXd& w, double z) const;   // recovered alpha-dot
  double accum(const Eigen::VectorXd& w, double z) const;  // its antiderivative
};

RateBasis make_rate_basis(double ell, int nseg);

// Initial-state richness over the fit window: the discrete angular derivative
// must stay away from zero on every node there. Throws with the worst nodes
// listed when the margin is below the requested floor.
struct InitialStateCheck {
  double margin = 0.0;   // min |dphi q0| over the window
  int worst_node = -1;
  double scale = 0.0;    // max |dphi q0| over the window
};

InitialStateCheck validate_initial_state(const CVec& q0, const Grid3D& grid,
                                         const Region3D& window, double floor);

// Precomputed fields of the time-zero data equation: with twin data sharing
// the initial state, the rate gap at t = 0 equals the linearized source,
//   -i z(0) = (a (2 td_ref + a) dphi + 2 a d3 + adot) dphi q0,
// which is linear in (a, adot) given the reference and quadratic through the
// rate sum. Restricting to the fit window gives the regression below.
struct InteriorFitData {
  const Grid3D* grid = nullptr;
  CVec v, vphi, v3;        // dphi q0, dphi v, d3 v
  std::vector<int> nodes;  // fit window node list
  Vec znode;               // axial coordinate per fit node
  Vec td_ref;              // reference twist rate at those coordinates
};

InteriorFitData prepare_interior_fit(const CVec& q0_ref, const TwistProfile& ref,
                                     const Grid3D& grid, const Region3D& window);

// Model evaluated on the fit nodes for free parameters w.
CVec interior_model(const InteriorFitData& fit, const RateBasis& basis,
                    const Eigen::VectorXd& w);

struct ReconstructionResult {
  Eigen::VectorXd coeff;      // free parameters
  Eigen::VectorXd raw_coeff;  // spline coefficients
  Vec z_axial;                // axial sample points
  Vec rate_est;               // recovered profile at z_axial
  Vec rate_true;              // truth at z_axial (empty when not supplied)
  std::vector<double> residuals;  // data misfit per iteration
  int iterations = 0;
  bool converged = false;
  double lambda = 0.0;
  double data_norm = 0.0;
  double err_l2 = -1.0, err_sup = -1.0;  // filled when truth supplied
};

// Damped Gauss-Newton on the time-zero data equation. `z0` is the measured
// rate gap field at t = 0 on the full interior grid. Aborts after two
// consecutive residual increases.
ReconstructionResult reconstruct_interior(
    const InteriorFitData& fit, const CVec& z0, const RateBasis& basis,
    double lambda = 1e-8, int max_iter = 20,
    const std::function<double(double)>& truth = nullptr);

// Discretization-consistent variant of the same fit: the response of a
// candidate rate increment is (H[ref] - H[ref + delta]) q0 on the fit window,
// assembled with the forward solver's own stencil. Rate-gap data produced by
// that assembly is therefore matched to solver precision, and the stencil is
// quadratic in the rate, so centered coefficient differences are exact
// sensitivities.
struct OperatorFitData {
  const Grid3D* grid = nullptr;
  TwistProfile ref;
  CVec q0;
  CVec href_q0;            // H[ref] q0, assembled once
  std::vector<int> nodes;  // fit window node list
};

OperatorFitData prepare_operator_fit(const CVec& q0, const TwistProfile& ref,
                                     const Grid3D& grid, const Region3D& window);

// Model evaluated on the fit nodes for free parameters w.
CVec operator_model(const OperatorFitData& fit, const RateBasis& basis,
                    const Eigen::VectorXd& w);

ReconstructionResult reconstruct_interior_operator(
    const OperatorFitData& fit, const CVec& z0, const RateBasis& basis,
    double lambda = 1e-8, int max_iter = 20,
    const std::function<double(double)>& truth = nullptr);

// Gauss-Newton with finite-difference sensitivities on the wall-flux misfit:
// every candidate profile is propagated through a full forward solve and its
// predicted rate-gap flux on the observed wall section is compared with the
// measurement. The reference solve is done once and reused.
struct BoundaryFitConfig {
  double T = 0.0, dt = 0.0;
  double lambda = 1e-6;
  double fd_step = 1e-5;
  int max_iter = 8;
  double tol = 1e-10;  // relative misfit decrease
};

ReconstructionResult reconstruct_boundary(
    const ObservationSet& obs, const CVec& q0, const TwistProfile& ref,
    const Grid3D& grid, const ObsRegions& regions, const MetricField& metric_ref,
    const RateBasis& basis, const BoundaryFitConfig& cfg,
    const std::function<double(double)>& truth = nullptr);

// Stability sampling: pairs of profiles around the reference, the observation
// energy of their twin gap, and the squared rate-difference norm it controls.
struct StabilityPair {
  int id = 0;
  double lhs = 0.0;       // || rate difference ||^2 over the window
  double rhs_obs = 0.0;   // time-integrated H1 energy of the rate gap
  double rhs_init = 0.0;  // H2 energy of the initial gap
  double ratio = 0.0;     // lhs / (rhs_obs + rhs_init)
};

struct StabilityReport {
  std::vector<StabilityPair> pairs;  // scaled family first, then the ensemble
  int dyadic_count = 0;
  double dyadic_spread = 0.0;  // max/min ratio across the scaled family
  double ensemble_median = 0.0, ensemble_max = 0.0;
  bool dyadic_ok = false, ensemble_ok = false;
};

// Scale factors generate the deterministic family (shape fixed, amplitude
// scaled); `ensemble` further pairs are drawn from seeded low-order
// coefficient perturbations. All solves share the reference solution and the
// pair solves run concurrently on `threads` slots with a fixed assignment, so
// the report does not depend on the thread count.
StabilityReport stability_experiment(const Grid3D& grid, const TwistProfile& ref,
                                     const CVec& q0, const ObsRegions& regions,
                                     const MetricField& metric_ref, double T,
                                     double dt, const std::vector<double>& scales,
                                     const std::vector<double>& shape,
                                     int ensemble, std::uint64_t seed,
                                     int threads = 1);

}  // namespace twistlab
