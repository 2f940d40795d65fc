#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "twistlab/geometry.hpp"

using namespace twistlab;

namespace {

double fd1(const std::function<double(double)>& f, double z, double h) {
  return (f(z + h) - f(z - h)) / (2.0 * h);
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("disk section wiring") {
  const CrossSection s = make_disk_section(1.0, 16, 16);
  CHECK(s.nt() > 0);
  CHECK(int(s.boundary_nodes.size()) > 0);

  // inside flags agree with the analytic test, compact inverts interior_nodes
  for (int it = 0; it < s.nt(); ++it) {
    const int id = s.interior_nodes[it];
    const int i = id % (s.nx + 1), j = id / (s.nx + 1);
    CHECK(s.inside[id] == 1);
    CHECK(s.contains(s.x(i), s.y(j)));
    CHECK(s.compact[id] == it);
  }

  // interior neighbor links are reciprocal; wall neighbors are marked and
  // their outside nodes collected into the Dirichlet ring
  static const int di[4] = {-1, 1, 0, 0}, dj[4] = {0, 0, -1, 1};
  for (int it = 0; it < s.nt(); ++it)
    for (int d = 0; d < 4; ++d) {
      const int nb = s.nbr[it][d];
      if (nb >= 0) {
        const int back = d ^ 1;  // -x<->+x, -y<->+y
        CHECK(s.nbr[nb][back] == it);
      } else {
        CHECK(nb == -1);
        const int id = s.interior_nodes[it];
        const int i = id % (s.nx + 1), j = id / (s.nx + 1);
        const int out = s.node_id(i + di[d], j + dj[d]);
        CHECK(std::count(s.boundary_nodes.begin(), s.boundary_nodes.end(), out) == 1);
      }
    }
}

TEST_CASE("grid indexing round trip") {
  const Grid3D g = make_grid(make_disk_section(1.0, 12, 12), 2.0, 16);
  CHECK(g.size() == g.nt() * (g.nz - 1));
  for (int k = 1; k < g.nz; k += 3)
    for (int it = 0; it < g.nt(); it += 7) {
      const int p = g.index(it, k);
      const Eigen::Vector3d x = g.coords(p);
      CHECK(x[2] == doctest::Approx(g.z(k)).epsilon(1e-14));
      CHECK(g.section.contains(x[0], x[1]));
    }
}

TEST_CASE("bump profile support and derivatives") {
  const double ell = 0.5, amp = 0.3;
  const TwistProfile p = bump_twist(amp, ell);
  CHECK(p.dtheta(0.0) == doctest::Approx(amp).epsilon(1e-14));
  CHECK(p.dtheta(ell) == 0.0);
  CHECK(p.dtheta(-ell) == 0.0);
  CHECK(p.dtheta(ell + 0.1) == 0.0);
  for (double z : {-0.31, -0.07, 0.12, 0.4}) {
    CHECK(p.ddtheta(z) == doctest::Approx(fd1(p.dtheta, z, 1e-6)).epsilon(1e-6));
    CHECK(p.dtheta(z) == doctest::Approx(fd1(p.theta, z, 1e-6)).epsilon(1e-6));
  }
}

TEST_CASE("fourier profile closed forms") {
  const double ell = 0.5;
  const std::vector<double> c{0.02, -0.01, 0.004};
  const TwistProfile p = fourier_twist(c, ell);
  CHECK(p.dtheta(-ell) == doctest::Approx(0.0).epsilon(1e-14));
  for (double z : {-0.4, -0.11, 0.0, 0.23, 0.45}) {
    double want = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
      const double u = std::sin((double(k) + 1) * M_PI * (z + ell) / (2 * ell));
      want += c[k] * u * u;
    }
    CHECK(p.dtheta(z) == doctest::Approx(want).epsilon(1e-12));
    CHECK(p.ddtheta(z) == doctest::Approx(fd1(p.dtheta, z, 1e-6)).epsilon(1e-6));
    CHECK(p.dtheta(z) == doctest::Approx(fd1(p.theta, z, 1e-6)).epsilon(1e-6));
  }
  CHECK(p.dtheta(ell + 0.05) == 0.0);
}

TEST_CASE("admissibility gate") {
  const Admissibility ok = check_admissible(bump_twist(0.05, 0.5), 0.5, 1.0);
  CHECK(ok.ok);
  CHECK(ok.support_leak == 0.0);

  const Admissibility bad = check_admissible(bump_twist(0.3, 0.5), 0.5, 0.1);
  CHECK_FALSE(bad.ok);
  CHECK(bad.c1_norm > 0.1);
  CHECK_FALSE(bad.message.empty());

  CHECK_THROWS_AS(make_twist_profile(ProfileKind::bump, {0.3}, 0.5, 0.1),
                  std::invalid_argument);
  CHECK(check_admissible(zero_twist(), 0.5, 1e-15).ok);
}

TEST_CASE("twist map preserves radius and height") {
  const TwistProfile p = bump_twist(0.2, 0.5);
  const Eigen::Vector3d x(0.3, -0.4, 0.2);
  const Eigen::Vector3d y = twist_map(x, p);
  CHECK(y[0] * y[0] + y[1] * y[1] ==
        doctest::Approx(x[0] * x[0] + x[1] * x[1]).epsilon(1e-14));
  CHECK(y[2] == x[2]);
  // the straightening rotation undoes the accumulated twist
  const double got = std::atan2(y[1], y[0]) - std::atan2(x[1], x[0]);
  const double want = -p.theta(0.2);
  CHECK(std::remainder(got - want, 2 * M_PI) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("quintic smoothstep") {
  CHECK(smoothstep5(0.0) == 0.0);
  CHECK(smoothstep5(1.0) == 1.0);
  CHECK(smoothstep5_d1(0.0) == 0.0);
  CHECK(smoothstep5_d1(1.0) == 0.0);
  CHECK(smoothstep5_d2(0.0) == 0.0);
  CHECK(smoothstep5_d2(1.0) == 0.0);
  double prev = 0.0;
  for (int i = 1; i <= 20; ++i) {
    const double u = i / 20.0;
    CHECK(smoothstep5(u) >= prev);
    prev = smoothstep5(u);
  }
  for (double u : {0.2, 0.5, 0.8}) {
    CHECK(smoothstep5_d1(u) ==
          doctest::Approx(fd1([](double v) { return smoothstep5(v); }, u, 1e-6))
              .epsilon(1e-7));
    CHECK(smoothstep5_d2(u) ==
          doctest::Approx(fd1([](double v) { return smoothstep5_d1(v); }, u, 1e-6))
              .epsilon(1e-7));
  }
}

TEST_CASE("cutoff pair plateau and decay") {
  const Grid3D g = make_grid(make_disk_section(1.0, 16, 16), 2.0, 64);
  const RadialRegionPair reg{false, 0.0, 0.0, 0.2, 0.6};
  const double ell = 0.5, L = 1.0;
  const CutoffPair chi = build_cutoffs(reg, ell, L, g);
  CHECK(chi.r == doctest::Approx(0.5 * (ell + L)).epsilon(1e-14));

  CHECK(chi.rho(0.1, 0.1) == 1.0);
  CHECK(chi.rho(0.7, 0.0) == 0.0);
  CHECK(chi.mu(0.0) == 1.0);
  CHECK(chi.mu(ell) == 1.0);
  CHECK(chi.mu(chi.r) == 0.0);
  CHECK(chi.mu(1.9) == 0.0);
  CHECK(chi.chi({0.0, 0.1, 0.2}) == 1.0);
  CHECK(chi.chi({0.65, 0.0, 0.0}) == 0.0);

  for (double z : {0.55, 0.6, 0.68, -0.62}) {
    CHECK(chi.dmu(z) ==
          doctest::Approx(fd1([&](double v) { return chi.mu(v); }, z, 1e-6))
              .epsilon(1e-6));
    CHECK(chi.d2mu(z) ==
          doctest::Approx(fd1([&](double v) { return chi.dmu(v); }, z, 1e-6))
              .epsilon(1e-6));
  }
}

TEST_CASE("transverse masks") {
  const CrossSection s = make_disk_section(1.0, 16, 16);
  const RegionMask in = disk_mask(s, 0.0, 0.45, 0.35);
  const RegionMask out = complement_mask(s, 0.0, 0.45, 0.35);
  CHECK(in.count > 0);
  CHECK(out.count > 0);
  int marked = 0;
  for (int it = 0; it < s.nt(); ++it) {
    const int id = s.interior_nodes[it];
    const int i = id % (s.nx + 1), j = id / (s.nx + 1);
    const double r = std::hypot(s.x(i), s.y(j) - 0.45);
    if (in.in[it]) {
      CHECK(r <= 0.35 + 1e-12);
      ++marked;
    }
    CHECK((in.in[it] != 0) != (out.in[it] != 0));
  }
  CHECK(marked == in.count);
  CHECK(in.count + out.count == s.nt());
}

TEST_CASE("lateral faces") {
  const CrossSection s = make_disk_section(1.0, 12, 12);
  const auto faces = lateral_faces(s);
  CHECK(faces.size() >= s.boundary_nodes.size());
  for (const auto& f : faces) {
    CHECK(std::hypot(f.nrm_x, f.nrm_y) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_FALSE(s.contains(f.bx, f.by));
    CHECK(f.perp > 0.0);
    CHECK(f.it >= 0);
    CHECK(f.it < s.nt());
  }
}

TEST_CASE("angular derivative on exact fields") {
  const Grid3D g = make_grid(make_disk_section(1.0, 16, 16), 1.0, 8);
  Vec lin(g.size()), rad(g.size());
  for (int p = 0; p < g.size(); ++p) {
    const Eigen::Vector3d x = g.coords(p);
    lin[p] = x[0];
    rad[p] = x[0] * x[0] + x[1] * x[1];
  }
  const Vec dlin = angular_derivative(g, lin);
  const Vec drad = angular_derivative(g, rad);
  // centered differences are exact on polynomials away from the wall stencil
  for (int p = 0; p < g.size(); ++p) {
    const Eigen::Vector3d x = g.coords(p);
    if (x[0] * x[0] + x[1] * x[1] > 0.5 * 0.5) continue;
    CHECK(dlin[p] == doctest::Approx(-x[1]).epsilon(1e-12));
    CHECK(drad[p] == doctest::Approx(0.0).epsilon(1e-12));
  }
}

}  // TEST_SUITE
