#include <cmath>

#include "doctest.h"
#include "twistlab/carleman.hpp"
#include "twistlab/experiments.hpp"
#include "twistlab/forward.hpp"
#include "twistlab/geometry.hpp"
#include "twistlab/metric.hpp"
#include "twistlab/operators.hpp"

using namespace twistlab;

namespace {

// small twisted scene shared by the heavier cases below
struct TinyLab {
  Grid3D grid;
  TwistProfile ref, pert, twin;
  MetricField metric;
  DiscreteOperator lap;
  WeightFields wf;
  CutoffPair chi;
  CVec chiv;
  WaveField rate;  // symmetrized twin-gap rate, uncut

  TinyLab()
      : grid(make_grid(make_disk_section(1.0, 8, 8), 0.8, 16)),
        ref(bump_twist(0.05, 0.2)),
        pert(bump_twist(0.02, 0.2)),
        twin(combine_profiles(ref, pert)),
        metric(assemble_metric(ref, grid)),
        lap(assemble_laplace_beltrami(metric, grid)) {
    const double T = 0.5, dt = 1.0 / 16.0, L = 0.4, ell = 0.2;
    const WeightPoint wp =
        select_weight_point(grid, L, ell, WeightMode::interior, 0.1, 1.0);
    wf = build_weights(wp, grid, T, dt, ref);
    chi = build_cutoffs({false, 0.0, 0.0, 0.2, 0.6}, ell, L, grid);
    chiv.resize(grid.size());
    for (int p = 0; p < grid.size(); ++p) chiv[p] = chi.chi(grid.coords(p));

    const CVec q0 = make_initial_state(grid, {"plateau", {0.4, 0.7, 0.2, 0.5, 1.0}});
    const WaveField qr = symmetrize_time(
        crank_nicolson_solve(assemble_H(ref, grid), q0, BoundaryData{}, T, dt));
    const WaveField qt = symmetrize_time(
        crank_nicolson_solve(assemble_H(twin, grid), q0, BoundaryData{}, T, dt));
    rate = time_derivative(difference(qt, qr));
  }

  WaveField cut() const {
    WaveField w = rate;
    for (auto& lev : w.levels) lev = lev.cwiseProduct(chiv);
    return w;
  }
};

}  // namespace

TEST_SUITE("carleman") {

TEST_CASE("weight point anchors") {
  const Grid3D g = make_grid(make_disk_section(1.0, 10, 10), 2.0, 32);
  const WeightPoint wi =
      select_weight_point(g, 1.0, 0.5, WeightMode::interior, 1.0, 0.2);
  CHECK(wi.d3 == 1.0);
  CHECK(wi.ell == 0.5);
  CHECK(wi.L == 1.0);
  CHECK(wi.gamma == 0.2);
  CHECK(std::abs(wi.a[2]) >= 1.0 + 1.0 - 1e-12);  // beyond the window by d3

  const WeightPoint wb =
      select_weight_point(g, 1.0, 0.5, WeightMode::boundary, 1.0, 0.2, 4.5);
  CHECK(wb.d_tau >= 4.5);
  CHECK(std::hypot(wb.a[0], wb.a[1]) >= wb.d_tau - 1e-12);

  CHECK_THROWS_AS(select_weight_point(g, 0.5, 0.5, WeightMode::interior, 1.0, 0.2),
                  std::invalid_argument);
  CHECK_THROWS_AS(select_weight_point(g, 1.0, 0.5, WeightMode::interior, 0.0, 0.2),
                  std::invalid_argument);
  CHECK_THROWS_AS(select_weight_point(g, 1.0, 0.5, WeightMode::interior, 1.0, 0.0),
                  std::invalid_argument);
}

TEST_CASE("weight field closed forms") {
  const TinyLab lab;
  const WeightFields& wf = lab.wf;
  const Grid3D& g = lab.grid;

  CHECK(wf.Mmask.count > 0);
  CHECK(wf.K > 0.0);

  double max_vt_all = 0.0, max_vt_M = 0.0;
  for (int p = 0; p < g.size(); ++p) {
    const Eigen::Vector3d x = g.coords(p);
    CHECK(wf.vartheta[p] ==
          doctest::Approx(wf.vartheta_at(x[0], x[1], x[2])).epsilon(1e-13));
    CHECK(wf.expg[p] ==
          doctest::Approx(std::exp(wf.wp.gamma * wf.vartheta[p])).epsilon(1e-13));
    CHECK(wf.eta0[p] == doctest::Approx(wf.eta_at(p, 0.0)).epsilon(1e-12));
    CHECK(wf.vartheta[p] > 0.0);
    max_vt_all = std::max(max_vt_all, wf.vartheta[p]);
    if (wf.Mmask.in[p]) max_vt_M = std::max(max_vt_M, wf.vartheta[p]);
  }
  // the envelope constant dominates the raised profile over the working set
  (void)max_vt_all;
  CHECK(wf.K >= std::exp(2.0 * wf.wp.gamma * max_vt_M) * (1.0 - 1e-12));

  // eta stays positive and the shifted weight never exceeds one on the
  // working set
  double min_eta = std::numeric_limits<double>::infinity();
  for (int p = 0; p < g.size(); ++p) {
    if (!wf.Mmask.in[p]) continue;
    for (int mid = 0; mid < wf.mid_count(); mid += 3) {
      const double e = wf.eta_at(p, wf.tmid(mid));
      CHECK(e > 0.0);
      min_eta = std::min(min_eta, e);
    }
  }
  CHECK(min_eta >= wf.c_norm - 1e-12);

  // singular time envelope and its derivative
  for (double t : {-0.31, 0.0, 0.17, 0.43}) {
    const double h = 1e-6;
    CHECK(wf.dtau(t) ==
          doctest::Approx((wf.tau(t + h) - wf.tau(t - h)) / (2 * h)).epsilon(1e-6));
  }

  // axial derivative of the t = 0 envelope
  for (int p = 0; p < g.size(); ++p) {
    const Eigen::Vector3d x = g.coords(p);
    if (std::abs(x[2]) > 0.8 - 2.5 * g.hz) continue;
    const double h = 1e-6;
    const double fd = (wf.eta0_at(x[0], x[1], x[2] + h) -
                       wf.eta0_at(x[0], x[1], x[2] - h)) /
                      (2 * h);
    CHECK(wf.d3eta0[p] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("flat laplacian of the quadratic profile") {
  const Grid3D g = make_grid(make_disk_section(1.0, 8, 8), 0.8, 12);
  const WeightPoint wp =
      select_weight_point(g, 0.4, 0.2, WeightMode::interior, 0.1, 1.0);
  const WeightFields wf = build_weights(wp, g, 0.5, 1.0 / 16.0, zero_twist());
  for (int p = 0; p < g.size(); ++p)
    CHECK(wf.lap_vt[p] == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("pointwise hypotheses") {
  const TinyLab lab;
  const HypothesesReport hyp = verify_hypotheses(lab.metric, lab.ref, lab.wf);
  CHECK(hyp.convexity_ok);
  CHECK(hyp.convexity_min > 0.0);
  CHECK(hyp.beta > 0.0);
  CHECK(hyp.gamma0.size() == lateral_faces(lab.grid.section).size());
}

TEST_CASE("functional accepts cut fields and rejects leaking ones") {
  const TinyLab lab;
  const WaveField cut = lab.cut();

  const CarlemanTerms t =
      carleman_functional(cut, lab.lap, lab.metric, lab.wf, 4.0);
  CHECK(std::isfinite(t.lhs()));
  CHECK(std::isfinite(t.rhs()));
  CHECK(t.lhs_grad >= 0.0);
  CHECK(t.lhs_w > 0.0);
  CHECK(t.lhs_M >= 0.0);
  CHECK(t.rhs_B > 0.0);
  CHECK(t.rhs_boundary == 0.0);  // cut field vanishes at the wall

  // the raw rate does not vanish near the axial ends of the working domain
  CHECK_THROWS_AS(
      carleman_functional(lab.rate, lab.lap, lab.metric, lab.wf, 4.0),
      std::invalid_argument);
}

TEST_CASE("sweep summary matches the one-shot report") {
  const TinyLab lab;
  const WaveField cut = lab.cut();
  const std::vector<double> sgrid = geometric_grid(1.0, 30.0, 8);

  const CarlemanReport one =
      verify_carleman({cut}, lab.lap, lab.metric, lab.wf, sgrid);
  const auto grid_terms =
      carleman_functional_grid(cut, lab.lap, lab.metric, lab.wf, sgrid);
  const CarlemanReport two = summarize_carleman(sgrid, {grid_terms});

  REQUIRE(one.ratio.size() == sgrid.size());
  REQUIRE(two.ratio.size() == sgrid.size());
  for (std::size_t i = 0; i < sgrid.size(); ++i) {
    CHECK(std::isfinite(one.ratio[i]));
    CHECK(one.ratio[i] == doctest::Approx(two.ratio[i]).epsilon(1e-13));
  }
  CHECK(one.s0 == two.s0);
  CHECK(one.C0 == two.C0);
}

TEST_CASE("axial comparison factor and scaling") {
  const TinyLab lab;
  const TwistProfile a1 = bump_twist(0.02, 0.2);
  const TwistProfile a2 = bump_twist(0.04, 0.2);

  for (double s : {1.0, 4.0, 16.0}) {
    const AxialPoincareResult r1 =
        verify_axial_poincare(a1.dtheta, a1.ddtheta, lab.chi, lab.wf, s);
    CHECK(r1.factor ==
          doctest::Approx(lab.wf.T / std::sqrt(lab.wf.wp.d3 * s)).epsilon(1e-14));
    CHECK(r1.pass);
    CHECK(r1.lhs > 0.0);
    CHECK(r1.rhs > 0.0);

    // quadratic in the profile amplitude, so the ratio is scale-free
    const AxialPoincareResult r2 =
        verify_axial_poincare(a2.dtheta, a2.ddtheta, lab.chi, lab.wf, s);
    CHECK(r2.lhs == doctest::Approx(4.0 * r1.lhs).epsilon(1e-11));
    CHECK(r2.rhs == doctest::Approx(4.0 * r1.rhs).epsilon(1e-11));
  }
}

TEST_CASE("level-set separation") {
  const Grid3D g = make_grid(make_disk_section(1.0, 16, 16), 2.0, 32);
  const WeightPoint wp =
      select_weight_point(g, 1.0, 0.5, WeightMode::boundary, 1.0, 0.2, 4.5);
  const WeightFields wf = build_weights(wp, g, 1.0, 1.0 / 64.0, zero_twist());
  const WeightSeparationResult ws = verify_weight_separation(wf);

  CHECK(ws.pass);
  CHECK(ws.eps_hat > 0.0);
  CHECK(ws.m1 < ws.m0);
  CHECK(ws.omega1.count > 0);
  CHECK(ws.omega1.count < ws.omega0.count);
  CHECK(ws.omega0.count < g.nt());
  for (int it = 0; it < g.nt(); ++it)
    if (ws.omega1.in[it]) CHECK(ws.omega0.in[it] == 1);
}

TEST_CASE("time-zero decay") {
  const TinyLab lab;
  const std::vector<double> sgrid{4.0, 8.0, 16.0, 32.0};
  const TimeZeroBoundReport tz =
      verify_time_zero_bound(lab.rate, lab.chi, lab.pert.dtheta, lab.pert.ddtheta,
                             lab.lap, lab.metric, lab.wf, sgrid);

  REQUIRE(tz.s.size() == sgrid.size());
  CHECK(tz.identity_defect <= 1e-10);
  for (std::size_t i = 0; i < sgrid.size(); ++i) {
    CHECK(std::isfinite(tz.lhs[i]));
    CHECK(std::isfinite(tz.bracket[i]));
    CHECK(tz.lhs[i] >= 0.0);
    CHECK(tz.ratio[i] > 0.0);
  }
  CHECK(tz.slope < 0.0);
}

}  // TEST_SUITE
