#pragma once

#include <functional>
#include <vector>

#include "twistlab/forward.hpp"
#include "twistlab/geometry.hpp"
#include "twistlab/metric.hpp"
#include "twistlab/norms.hpp"
#include "twistlab/operators.hpp"

namespace twistlab {

enum class WeightMode { interior, boundary };

// Anchor of the quadratic weight: a point outside the working domain, above
// the axial window by d3 and (in boundary mode) far from the section by
// d_tau, plus the sharpness gamma and the shift C that keeps the shifted
// profile within a factor 2/3 of its sup.
struct WeightPoint {
  Eigen::Vector3d a = Eigen::Vector3d::Zero();
  double d3 = 0.0;
  double d_tau = 0.0;
  double gamma = 1.0;
  double C = 0.0;
  double ell = 0.0, L = 0.0;
};

WeightPoint select_weight_point(const Grid3D& grid, double L, double ell,
                                WeightMode mode, double d3, double gamma,
                                double dtau_start = 0.0);

// Spatial profile vartheta = |x-a|^2 + C and everything derived from it
// analytically: the singular-in-time envelopes, their space and time
// derivatives, and the working-domain mask. Time factors are evaluated only
// strictly inside (-T, T); quadratures use the (n+1/2) midpoint offsets.
struct WeightFields {
  const Grid3D* grid = nullptr;
  WeightPoint wp;
  double T = 0.0, dt = 0.0;
  double K = 0.0;       // e^{2 gamma sup vartheta}, sup over the working domain
  double c_norm = 0.0;  // min of eta over domain x midpoints; subtracted in weights
  double r = 0.0, r_prime = 0.0;
  Region3D Mmask;

  Vec vartheta, expg;           // per interior node: vartheta, e^{gamma vartheta}
  Vec dvt_x, dvt_y, dvt_z;      // euclidean gradient of vartheta
  Vec norm2_vt;                 // |grad_g vartheta|^2_g (closed form)
  Vec lap_vt;                   // metric laplacian of vartheta (closed form)
  Vec eta0, d3eta0;             // eta at t = 0 and its axial derivative

  double tau(double t) const { return 1.0 / ((T - t) * (T + t)); }
  double dtau(double t) const { return 2.0 * t * tau(t) * tau(t); }
  int levels() const { return 2 * int(std::llround(T / dt)) + 1; }
  int mid_count() const { return levels() - 1; }
  double tlevel(int n) const { return -T + n * dt; }
  double tmid(int m) const { return -T + (m + 0.5) * dt; }

  double eta_at(int p, double t) const { return (K - expg[p]) * tau(t); }
  double psi_at(int p, double t) const { return expg[p] * tau(t); }
  double weight_at(int p, double t, double s) const {
    return std::exp(-s * (eta_at(p, t) - c_norm));
  }
  double vartheta_at(double x, double y, double z) const {
    const double dx = x - wp.a[0], dy = y - wp.a[1], dz = z - wp.a[2];
    return dx * dx + dy * dy + dz * dz + wp.C;
  }
  double eta0_at(double x, double y, double z) const {
    return (K - std::exp(wp.gamma * vartheta_at(x, y, z))) / (T * T);
  }
};

// Evaluates vartheta and its analytic metric derivatives on the grid for the
// given twist profile; the weight envelopes follow from the closed forms.
WeightFields build_weights(const WeightPoint& wp, const Grid3D& grid, double T,
                           double dt, const TwistProfile& p);

// Pointwise checks of the assumptions behind the weighted estimate: the
// convexity bracket sampled over quasi-uniform directions, the gradient
// lower bound beta, and the observed part of the wall (faces where the
// raised weight gradient points outward, optionally enlarged).
struct HypothesesReport {
  bool convexity_ok = false;
  double convexity_min = 0.0;
  int worst_node = -1, worst_dir = -1;
  double beta = 0.0;
  std::vector<std::uint8_t> gamma0;  // per lateral face
  int gamma0_count = 0;
};

HypothesesReport verify_hypotheses(const MetricField& m, const TwistProfile& p,
                                   const WeightFields& wf, double enlarge = 0.0);

// Conjugated split of B = i d_t + Delta_g: M1 carries the time derivative,
// the metric laplacian and the s^2 gradient-of-eta potential; M2 the
// first-order transport part. Both act on midpoint pairs of time levels.
struct ConjugatedOperators {
  const DiscreteOperator* lap = nullptr;
  const MetricField* metric = nullptr;
  const WeightFields* wf = nullptr;
  double s = 0.0;

  CVec apply_M1(const CVec& wl, const CVec& wr, int mid) const;
  CVec apply_M2(const CVec& wl, const CVec& wr, int mid) const;
};

ConjugatedOperators conjugated_operators(const DiscreteOperator& lap,
                                         const MetricField& metric,
                                         const WeightFields& wf, double s);

struct CarlemanTerms {
  double lhs_grad = 0.0;      // s || W psi^{1/2} grad_g w ||^2
  double lhs_w = 0.0;         // s^3 || W psi^{3/2} w ||^2
  double lhs_M = 0.0;         // sum_j || M_j (W w) ||^2
  double rhs_B = 0.0;         // || W B w ||^2
  double rhs_boundary = 0.0;  // s || W psi dnu w ||^2 on the observed wall
  double lhs() const { return lhs_grad + lhs_w + lhs_M; }
  double rhs() const { return rhs_B + rhs_boundary; }
};

// One field, one s. `gamma0` may be null when the field vanishes at the
// wall (the boundary term is then zero). Rejects fields that fail to vanish
// near the axial ends of the working domain.
CarlemanTerms carleman_functional(const WaveField& w, const DiscreteOperator& lap,
                                  const MetricField& metric, const WeightFields& wf,
                                  double s, const HypothesesReport* gamma0 = nullptr);

// Same field swept over an s grid (shares the midpoint work across s).
std::vector<CarlemanTerms> carleman_functional_grid(
    const WaveField& w, const DiscreteOperator& lap, const MetricField& metric,
    const WeightFields& wf, const std::vector<double>& sgrid,
    const HypothesesReport* gamma0 = nullptr);

struct CarlemanReport {
  std::vector<double> s;
  std::vector<CarlemanTerms> terms;  // summed over the family, per s
  std::vector<double> ratio;
  int s0_index = -1;  // start of the first flat five-point log-log window
  double s0 = 0.0;
  double C0 = 0.0;  // worst ratio on that window
};

CarlemanReport verify_carleman(const std::vector<WaveField>& family,
                               const DiscreteOperator& lap, const MetricField& metric,
                               const WeightFields& wf, const std::vector<double>& sgrid,
                               const HypothesesReport* gamma0 = nullptr);

// Sums per-member term sweeps and locates the ratio plateau; verify_carleman
// is this applied to the family's functional grids. Exposed so drivers can
// compute the per-member sweeps concurrently and still share the summary.
CarlemanReport summarize_carleman(const std::vector<double>& sgrid,
                                  const std::vector<std::vector<CarlemanTerms>>& per_member);

// Weighted axial comparison: the zero-mean-at-the-ends profile alpha against
// its derivative, both under e^{-s eta0} and the cutoff, integrated with a
// fine composite rule in x3 and grid cells transversally. The bound carries
// the factor T / sqrt(d3 s).
struct AxialPoincareResult {
  double lhs = 0.0, rhs = 0.0, factor = 0.0;
  bool pass = false;
};

AxialPoincareResult verify_axial_poincare(const std::function<double(double)>& alpha,
                                          const std::function<double(double)>& dalpha,
                                          const CutoffPair& chi, const WeightFields& wf,
                                          double s, int axial_points = 10000);

// Level-set separation of eta0: the two nested transverse subsets carved out
// by the weight distance, and the sup/inf gap between the inner set and the
// complement band. Fails loudly when the anchor violates the distance
// condition.
struct WeightSeparationResult {
  RegionMask omega0, omega1;
  double eps_hat = 0.0;
  double m0 = 0.0, m1 = 0.0;
  bool pass = false;
};

WeightSeparationResult verify_weight_separation(const WeightFields& wf);

// Decay of the weighted t=0 norm of the cutoff rate field against the
// source-plus-commutator bracket, over an s grid; reports the fitted
// log-log slope and the midpoint-rule telescoping identity defect.
struct TimeZeroBoundReport {
  std::vector<double> s, lhs, bracket, ratio;
  double slope = 0.0;
  double identity_defect = 0.0;
};

TimeZeroBoundReport verify_time_zero_bound(
    const WaveField& z, const CutoffPair& chi,
    const std::function<double(double)>& alpha,
    const std::function<double(double)>& dalpha, const DiscreteOperator& lap,
    const MetricField& metric, const WeightFields& wf,
    const std::vector<double>& sgrid);

}  // namespace twistlab
