#include <cmath>
#include <complex>

#include "doctest.h"
#include "twistlab/experiments.hpp"
#include "twistlab/forward.hpp"
#include "twistlab/geometry.hpp"
#include "twistlab/metric.hpp"
#include "twistlab/norms.hpp"
#include "twistlab/operators.hpp"

using namespace twistlab;

TEST_SUITE("forward") {

TEST_CASE("trapezoidal step conserves the norm and the phase") {
  const Grid3D g = make_grid(make_rectangle_section(1.0, 1.0, 10, 10), 1.0, 8);
  const DiscreteOperator H = assemble_H(zero_twist(), g);

  CVec q0(g.size());
  for (int p = 0; p < g.size(); ++p) {
    const Eigen::Vector3d x = g.coords(p);
    q0[p] = std::sin(M_PI * (x[0] + 1.0) / 2.0) * std::sin(M_PI * (x[1] + 1.0) / 2.0) *
            std::sin(M_PI * (x[2] + 1.0) / 2.0);
  }
  const CVec Hq = spmv(H.A, q0);
  int p0 = 0;
  q0.cwiseAbs().maxCoeff(&p0);
  const double lam = std::real(Hq[p0] / q0[p0]);

  const double T = 1.0, dt = 1.0 / 64.0;
  const WaveField wf = crank_nicolson_solve(H, q0, BoundaryData{}, T, dt);
  CHECK(wf.steps() == 64);
  CHECK(wf.norm_drift <= 1e-12);

  // an exact eigenvector picks up the rational CN phase each step
  const Complex iu(0.0, 1.0);
  const Complex mu = (1.0 - iu * lam * dt / 2.0) / (1.0 + iu * lam * dt / 2.0);
  const Complex muN = std::pow(mu, 64);
  CHECK((wf.levels.back() - muN * q0).norm() <= 1e-8 * q0.norm());
}

TEST_CASE("time symmetrization") {
  const Grid3D g = make_grid(make_disk_section(1.0, 8, 8), 1.0, 8);
  const DiscreteOperator H = assemble_H(bump_twist(0.1, 0.5), g);
  const CVec q0 = make_initial_state(g, {"plateau", {0.4, 0.7, 0.4, 0.7, 1.0}});

  const WaveField wf = crank_nicolson_solve(H, q0, BoundaryData{}, 0.25, 1.0 / 32.0);
  const WaveField s = symmetrize_time(wf);
  CHECK(s.levels.size() == 2 * wf.levels.size() - 1);
  CHECK(s.t0 == doctest::Approx(-0.25).epsilon(1e-15));
  const int N = wf.steps();
  for (int n = 0; n <= N; ++n) {
    const CVec want = wf.levels[std::size_t(n)].conjugate();
    CHECK((s.levels[std::size_t(N - n)] - want).norm() == 0.0);
  }

  // the mirror identity needs a real initial state
  const CVec qc = make_initial_state(g, {"angular_plateau", {0.4, 0.7, 0.4, 0.7, 1.0}});
  const WaveField wc = crank_nicolson_solve(H, qc, BoundaryData{}, 0.125, 1.0 / 32.0);
  CHECK_THROWS_AS(symmetrize_time(wc), std::invalid_argument);
}

TEST_CASE("difference and time derivative") {
  const Grid3D g = make_grid(make_disk_section(1.0, 6, 6), 1.0, 6);
  const double dt = 0.1;
  CVec v(g.size()), w(g.size());
  for (int p = 0; p < g.size(); ++p) {
    v[p] = Complex(0.3 + 0.01 * p, -0.2);
    w[p] = Complex(0.05, 0.02 * p);
  }

  WaveField a, b;
  a.grid = b.grid = &g;
  a.t0 = b.t0 = 0.0;
  a.dt = b.dt = dt;
  for (int n = 0; n <= 6; ++n) {
    const double t = n * dt;
    a.levels.push_back(t * t * v + t * w);
    b.levels.push_back(0.5 * t * w);
  }
  const WaveField y = difference(a, b);
  for (int n = 0; n <= 6; ++n) {
    const double t = n * dt;
    CHECK((y.levels[std::size_t(n)] - (t * t * v + 0.5 * t * w)).norm() <= 1e-14);
  }

  // centered interior, second-order one-sided ends: exact on quadratics
  const WaveField dy = time_derivative(y);
  for (int n = 0; n <= 6; ++n) {
    const double t = n * dt;
    const CVec want = 2.0 * t * v + 0.5 * w;
    CHECK((dy.levels[std::size_t(n)] - want).norm() <= 1e-12);
  }
}

TEST_CASE("difference source closed form") {
  const Grid3D g = make_grid(make_disk_section(1.0, 10, 10), 1.0, 16);
  const TwistProfile ref = bump_twist(0.05, 0.5);
  const TwistProfile pert = fourier_twist({0.02, -0.01}, 0.5);
  const TwistProfile twin = combine_profiles(ref, pert);

  WaveField q;
  q.grid = &g;
  q.t0 = 0.0;
  q.dt = 0.1;
  CVec q0(g.size());
  for (int p = 0; p < g.size(); ++p) {
    const Eigen::Vector3d x = g.coords(p);
    q0[p] = Complex(x[0] * (1 - x[2] * x[2]), x[1]);
  }
  q.levels = {q0, CVec(2.0 * q0)};

  const WaveField R = linearized_source(twin, ref, q);
  REQUIRE(R.levels.size() == 2);

  // rebuild from the centered operators
  const CVec v = angular_derivative(g, q0);
  const CVec vphi = angular_derivative(g, v);
  const CVec v3 = axial_derivative(g, v);
  CVec want(g.size());
  for (int p = 0; p < g.size(); ++p) {
    const double z = g.coords(p)[2];
    const double a = twin.dtheta(z) - ref.dtheta(z);
    const double ad = twin.ddtheta(z) - ref.ddtheta(z);
    want[p] = a * ((twin.dtheta(z) + ref.dtheta(z)) * vphi[p] + 2.0 * v3[p]) +
              ad * v[p];
  }
  CHECK((R.levels[0] - want).norm() <= 1e-12 * std::max(1.0, want.norm()));
  CHECK((R.levels[1] - 2.0 * want).norm() <= 1e-12 * std::max(1.0, want.norm()));

  // identical profiles produce a vanishing source
  const WaveField Z = linearized_source(ref, ref, q);
  CHECK(Z.levels[0].norm() == 0.0);
}

TEST_CASE("trapezoidal residual of a homogeneous solve") {
  const Grid3D g = make_grid(make_disk_section(1.0, 8, 8), 1.0, 10);
  const DiscreteOperator H = assemble_H(bump_twist(0.1, 0.5), g);
  const CVec q0 = make_initial_state(g, {"plateau", {0.4, 0.7, 0.4, 0.7, 1.0}});
  const WaveField wf = crank_nicolson_solve(H, q0, BoundaryData{}, 0.5, 1.0 / 32.0);

  WaveField zero = wf;
  for (auto& lev : zero.levels) lev.setZero();
  CHECK(cn_residual(H, wf, zero) <= 1e-8);
}

TEST_CASE("initial states") {
  const Grid3D g = make_grid(make_disk_section(1.0, 12, 12), 2.0, 24);
  const std::vector<double> prm{0.5, 0.8, 0.5, 0.9, 0.7};
  const CVec a = make_initial_state(g, {"plateau", prm});
  const CVec b = make_initial_state(g, {"angular_plateau", prm});
  CHECK((a.real() - b.real()).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(a.imag().cwiseAbs().maxCoeff() == 0.0);
  CHECK(b.imag().cwiseAbs().maxCoeff() > 0.0);

  // support control: zero beyond the outer radius and the outer height
  for (int p = 0; p < g.size(); ++p) {
    const Eigen::Vector3d x = g.coords(p);
    if (std::hypot(x[0], x[1]) >= 0.8 + 1e-12) CHECK(std::abs(a[p]) == 0.0);
    if (std::abs(x[2]) >= 0.9 + 1e-12) CHECK(std::abs(a[p]) == 0.0);
  }

  // linear in the amplitude
  std::vector<double> prm2 = prm;
  prm2[4] = 1.4;
  const CVec c = make_initial_state(g, {"plateau", prm2});
  CHECK((c - 2.0 * a).cwiseAbs().maxCoeff() <= 1e-13);

  CHECK_THROWS_AS(make_initial_state(g, {"plateau", {0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(make_initial_state(g, {"warp", prm}), std::invalid_argument);
}

TEST_CASE("observation extraction bookkeeping") {
  const Grid3D g = make_grid(make_disk_section(1.0, 10, 10), 1.0, 16);
  const TwistProfile ref = bump_twist(0.05, 0.4);
  const TwistProfile twin = combine_profiles(ref, bump_twist(0.02, 0.4));
  const MetricField m = assemble_metric(ref, g);
  const CVec q0 = make_initial_state(g, {"plateau", {0.4, 0.7, 0.4, 0.7, 1.0}});

  const double T = 0.25, dt = 1.0 / 32.0;
  const WaveField qr = crank_nicolson_solve(assemble_H(ref, g), q0, {}, T, dt);
  const WaveField qt = crank_nicolson_solve(assemble_H(twin, g), q0, {}, T, dt);

  ObsRegions regs;
  regs.volume = region_whole(g);
  regs.init = region_whole(g);
  const ObservationSet obs = extract_observations(qt, qr, ObsKind::interior, regs, m);

  // recompute the advertised quadratures
  const WaveField y = difference(qt, qr);
  const WaveField z = time_derivative(y);
  std::vector<double> per;
  for (const CVec& lev : z.levels) per.push_back(h1_sq(g, lev, regs.volume));
  CHECK(obs.obs_norm_sq == doctest::Approx(trapezoid(per, dt)).epsilon(1e-13));
  CHECK(obs.init_norm_sq ==
        doctest::Approx(h2_sq(g, y.levels[0], regs.init)).epsilon(1e-13));
  CHECK(obs.rate_levels.size() == qt.levels.size());
  CHECK(obs.initial_gap.norm() == 0.0);  // shared initial state

  // wall observations carry one value per face and axial level
  ObsRegions bregs;
  bregs.init = region_whole(g);
  bregs.faces = lateral_faces(g.section);
  bregs.flux_z_bound = 0.5;
  const ObservationSet bobs =
      extract_observations(qt, qr, ObsKind::boundary, bregs, m);
  CHECK(bobs.flux_levels.size() == qt.levels.size());
  CHECK(bobs.flux_levels[0].size() ==
        Eigen::Index(bregs.faces.size()) * g.n_axial());
  CHECK(bobs.obs_norm_sq > 0.0);

  // a time axis that misses t = 0 is rejected
  WaveField off = qt, offr = qr;
  off.t0 = offr.t0 = 1.0;
  CHECK_THROWS_AS(extract_observations(off, offr, ObsKind::interior, regs, m),
                  std::invalid_argument);
}

TEST_CASE("flux linearity") {
  const Grid3D g = make_grid(make_disk_section(1.0, 8, 8), 1.0, 8);
  const MetricField m = assemble_metric(bump_twist(0.1, 0.5), g);
  const auto faces = lateral_faces(g.section);

  WaveField u;
  u.grid = &g;
  u.t0 = 0.0;
  u.dt = 0.1;
  CVec f(g.size());
  for (int p = 0; p < g.size(); ++p) {
    const Eigen::Vector3d x = g.coords(p);
    f[p] = Complex(std::cos(x[0]) * x[1], x[2]);
  }
  u.levels = {f};
  WaveField u2 = u;
  u2.levels = {CVec(2.0 * f)};

  const auto F1 = boundary_flux(u, m, faces);
  const auto F2 = boundary_flux(u2, m, faces);
  CHECK((F2[0] - 2.0 * F1[0]).norm() <= 1e-12 * std::max(1.0, F1[0].norm()));
  CHECK(F1[0].size() == Eigen::Index(faces.size()) * g.n_axial());

  WaveField zf = u;
  zf.levels = {CVec(CVec::Zero(g.size()))};
  CHECK(boundary_flux(zf, m, faces)[0].norm() == 0.0);
}

}  // TEST_SUITE
