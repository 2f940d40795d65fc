#include "twistlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <memory>
#include <numbers>

namespace twistlab {

namespace {

void finish_section(CrossSection& s) {
  const int nx = s.nx, ny = s.ny;
  if (nx < 4 || ny < 4) throw std::invalid_argument("cross-section grid too coarse");
  s.hx = 2.0 * s.half_extent_x() / nx;
  s.hy = 2.0 * s.half_extent_y() / ny;

  const int nn = (nx + 1) * (ny + 1);
  s.inside.assign(nn, 0);
  s.compact.assign(nn, -1);
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      if (s.contains(s.x(i), s.y(j))) s.inside[s.node_id(i, j)] = 1;

  s.interior_nodes.clear();
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      int id = s.node_id(i, j);
      if (s.inside[id]) {
        s.compact[id] = int(s.interior_nodes.size());
        s.interior_nodes.push_back(id);
      }
    }
  if (s.interior_nodes.empty())
    throw std::invalid_argument("cross-section has no interior nodes");

  // interior nodes must not touch the bounding box edge; the Dirichlet ring
  // needs room on all four sides
  for (int id : s.interior_nodes) {
    int i = id % (nx + 1), j = id / (nx + 1);
    if (i == 0 || i == nx || j == 0 || j == ny)
      throw std::invalid_argument("interior node on bounding box edge");
  }

  const int di[4] = {-1, 1, 0, 0};
  const int dj[4] = {0, 0, -1, 1};
  s.nbr.assign(s.interior_nodes.size(), {-1, -1, -1, -1});
  std::vector<std::uint8_t> is_bdry(nn, 0);
  for (std::size_t t = 0; t < s.interior_nodes.size(); ++t) {
    int id = s.interior_nodes[t];
    int i = id % (nx + 1), j = id / (nx + 1);
    for (int d = 0; d < 4; ++d) {
      int nid = s.node_id(i + di[d], j + dj[d]);
      if (s.inside[nid]) {
        s.nbr[t][d] = s.compact[nid];
      } else {
        s.nbr[t][d] = -1;
        is_bdry[nid] = 1;
      }
    }
  }
  s.boundary_nodes.clear();
  for (int id = 0; id < nn; ++id)
    if (is_bdry[id]) s.boundary_nodes.push_back(id);

  // connectivity: every interior node reachable from the first one
  std::vector<std::uint8_t> seen(s.interior_nodes.size(), 0);
  std::deque<int> queue{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    int t = queue.front();
    queue.pop_front();
    for (int d = 0; d < 4; ++d) {
      int u = s.nbr[t][d];
      if (u >= 0 && !seen[u]) {
        seen[u] = 1;
        ++reached;
        queue.push_back(u);
      }
    }
  }
  if (reached != s.interior_nodes.size())
    throw std::invalid_argument("cross-section interior is not connected");
}

}  // namespace

CrossSection make_disk_section(double radius, int nx, int ny) {
  if (radius <= 0) throw std::invalid_argument("disk radius must be positive");
  CrossSection s;
  s.kind = SectionKind::disk;
  s.radius = radius;
  s.nx = nx;
  s.ny = ny;
  finish_section(s);
  return s;
}

CrossSection make_rectangle_section(double wx, double wy, int nx, int ny) {
  if (wx <= 0 || wy <= 0) throw std::invalid_argument("rectangle half-widths must be positive");
  CrossSection s;
  s.kind = SectionKind::rectangle;
  s.wx = wx;
  s.wy = wy;
  s.nx = nx;
  s.ny = ny;
  finish_section(s);
  return s;
}

Grid3D make_grid(CrossSection section, double Lambda, int nz) {
  if (Lambda <= 0) throw std::invalid_argument("axial half-length must be positive");
  if (nz < 4) throw std::invalid_argument("axial grid too coarse");
  Grid3D g;
  g.section = std::move(section);
  g.Lambda = Lambda;
  g.nz = nz;
  g.hz = 2.0 * Lambda / nz;
  return g;
}

// ---------------------------------------------------------------------------
// twist profiles
// ---------------------------------------------------------------------------

TwistProfile zero_twist() {
  TwistProfile p;
  p.ell = 0.0;
  p.theta = [](double) { return 0.0; };
  p.dtheta = [](double) { return 0.0; };
  p.ddtheta = [](double) { return 0.0; };
  return p;
}

namespace {

struct CumTable {
  double z0 = 0, h = 0;
  std::vector<double> F, f;
};

// per-interval Simpson accumulation of f over [z0, z0 + n*h]
std::shared_ptr<CumTable> accumulate(const std::function<double(double)>& f,
                                     double z0, double z1, int n) {
  auto tab = std::make_shared<CumTable>();
  tab->z0 = z0;
  tab->h = (z1 - z0) / n;
  tab->F.resize(n + 1);
  tab->f.resize(n + 1);
  tab->F[0] = 0.0;
  tab->f[0] = f(z0);
  for (int i = 0; i < n; ++i) {
    double a = z0 + i * tab->h, b = a + tab->h;
    double fb = f(b);
    tab->F[i + 1] = tab->F[i] + tab->h / 6.0 * (tab->f[i] + 4.0 * f(0.5 * (a + b)) + fb);
    tab->f[i + 1] = fb;
  }
  return tab;
}

double hermite_eval(const CumTable& t, double z) {
  if (z <= t.z0) return 0.0;
  double zmax = t.z0 + t.h * double(t.F.size() - 1);
  if (z >= zmax) return t.F.back();
  int m = std::min(int((z - t.z0) / t.h), int(t.F.size()) - 2);
  double u = (z - (t.z0 + m * t.h)) / t.h;
  double u2 = u * u, u3 = u2 * u;
  double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
  double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
  return h00 * t.F[m] + h01 * t.F[m + 1] + t.h * (h10 * t.f[m] + h11 * t.f[m + 1]);
}

}  // namespace

TwistProfile bump_twist(double amplitude, double ell) {
  if (ell <= 0) throw std::invalid_argument("bump support half-length must be positive");
  TwistProfile p;
  p.ell = ell;
  auto dth = [amplitude, ell](double z) {
    double u = z / ell, w = 1.0 - u * u;
    if (w <= 0) return 0.0;
    double e = 1.0 - 1.0 / w;
    return e < -700.0 ? 0.0 : amplitude * std::exp(e);
  };
  p.dtheta = dth;
  p.ddtheta = [dth, ell](double z) {
    double u = z / ell, w = 1.0 - u * u;
    if (w <= 0) return 0.0;
    double v = dth(z);
    return v == 0.0 ? 0.0 : v * (-2.0 * u / (ell * w * w));
  };
  auto tab = accumulate(dth, -ell, ell, 1 << 14);
  p.theta = [tab](double z) { return hermite_eval(*tab, z); };
  return p;
}

TwistProfile fourier_twist(const std::vector<double>& coeff, double ell) {
  if (ell <= 0) throw std::invalid_argument("profile support half-length must be positive");
  if (coeff.empty()) throw std::invalid_argument("profile needs at least one coefficient");
  TwistProfile p;
  p.ell = ell;
  const double pi = std::numbers::pi;
  p.dtheta = [coeff, ell, pi](double z) {
    if (z <= -ell || z >= ell) return 0.0;
    double u = z + ell, acc = 0.0;
    for (std::size_t k = 0; k < coeff.size(); ++k) {
      double s = std::sin((double(k) + 1) * pi * u / (2.0 * ell));
      acc += coeff[k] * s * s;
    }
    return acc;
  };
  p.ddtheta = [coeff, ell, pi](double z) {
    if (z <= -ell || z >= ell) return 0.0;
    double u = z + ell, acc = 0.0;
    for (std::size_t k = 0; k < coeff.size(); ++k) {
      double kk = double(k) + 1;
      acc += coeff[k] * (kk * pi / (2.0 * ell)) * std::sin(kk * pi * u / ell);
    }
    return acc;
  };
  p.theta = [coeff, ell, pi](double z) {
    if (z <= -ell) return 0.0;
    double full = 0.0;
    for (double c : coeff) full += c * ell;
    if (z >= ell) return full;
    double u = z + ell, acc = 0.0;
    for (std::size_t k = 0; k < coeff.size(); ++k) {
      double kk = double(k) + 1;
      acc += 0.5 * coeff[k] * (u - (ell / (kk * pi)) * std::sin(kk * pi * u / ell));
    }
    return acc;
  };
  return p;
}

Admissibility check_admissible(const TwistProfile& p, double ell, double eps,
                               int samples) {
  Admissibility a;
  if (samples < 2) samples = 2;
  double c1 = 0.0;
  if (ell > 0) {
    for (int i = 0; i < samples; ++i) {
      double z = -ell + 2.0 * ell * double(i) / double(samples - 1);
      c1 = std::max(c1, std::abs(p.dtheta(z)) + std::abs(p.ddtheta(z)));
    }
  } else {
    c1 = std::abs(p.dtheta(0.0)) + std::abs(p.ddtheta(0.0));
  }
  double leak = 0.0;
  double span = ell > 0 ? 2.0 * ell : 1.0;
  for (int i = 0; i < samples; ++i) {
    double off = span * double(i) / double(samples - 1);
    leak = std::max(leak, std::abs(p.dtheta(ell + off)));
    leak = std::max(leak, std::abs(p.dtheta(-ell - off)));
  }
  a.c1_norm = c1;
  a.support_leak = leak;
  if (leak > 1e-14 * (1.0 + c1)) {
    a.ok = false;
    a.message = "twist rate leaks outside its support interval";
  } else if (c1 > eps) {
    a.ok = false;
    a.message = "twist C1 bound exceeds the admissible size";
  } else {
    a.ok = true;
  }
  return a;
}

TwistProfile make_twist_profile(ProfileKind kind, const std::vector<double>& params,
                                double ell, double eps) {
  TwistProfile p;
  switch (kind) {
    case ProfileKind::zero:
      p = zero_twist();
      p.ell = ell;
      break;
    case ProfileKind::bump:
      if (params.size() != 1) throw std::invalid_argument("bump profile takes one amplitude");
      p = bump_twist(params[0], ell);
      break;
    case ProfileKind::fourier:
      p = fourier_twist(params, ell);
      break;
  }
  Admissibility a = check_admissible(p, ell, eps);
  if (!a.ok) throw std::invalid_argument("inadmissible twist profile: " + a.message);
  return p;
}

Eigen::Vector3d twist_map(const Eigen::Vector3d& x, const TwistProfile& p) {
  double th = p.theta(x[2]);
  double c = std::cos(th), s = std::sin(th);
  return {c * x[0] + s * x[1], -s * x[0] + c * x[1], x[2]};
}

// ---------------------------------------------------------------------------
// regions and cutoffs
// ---------------------------------------------------------------------------

RegionMask disk_mask(const CrossSection& s, double cx, double cy, double r) {
  RegionMask m;
  m.in.assign(s.nt(), 0);
  for (int t = 0; t < s.nt(); ++t) {
    int id = s.interior_nodes[t];
    double dx = s.x(id % (s.nx + 1)) - cx, dy = s.y(id / (s.nx + 1)) - cy;
    if (dx * dx + dy * dy <= r * r) {
      m.in[t] = 1;
      ++m.count;
    }
  }
  return m;
}

RegionMask complement_mask(const CrossSection& s, double cx, double cy, double r) {
  RegionMask m;
  m.in.assign(s.nt(), 0);
  for (int t = 0; t < s.nt(); ++t) {
    int id = s.interior_nodes[t];
    double dx = s.x(id % (s.nx + 1)) - cx, dy = s.y(id / (s.nx + 1)) - cy;
    if (dx * dx + dy * dy >= r * r) {
      m.in[t] = 1;
      ++m.count;
    }
  }
  return m;
}

double smoothstep5(double u) {
  if (u <= 0) return 0.0;
  if (u >= 1) return 1.0;
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double smoothstep5_d1(double u) {
  if (u <= 0 || u >= 1) return 0.0;
  return 30.0 * u * u * (1.0 - u) * (1.0 - u);
}

double smoothstep5_d2(double u) {
  if (u <= 0 || u >= 1) return 0.0;
  return 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
}

double CutoffPair::rho(double x, double y) const {
  double d = std::hypot(x - region.cx, y - region.cy);
  if (!region.complement) {
    if (d <= region.r_one) return 1.0;
    if (d >= region.r_zero) return 0.0;
    return smoothstep5((region.r_zero - d) / (region.r_zero - region.r_one));
  }
  if (d >= region.r_one) return 1.0;
  if (d <= region.r_zero) return 0.0;
  return smoothstep5((d - region.r_zero) / (region.r_one - region.r_zero));
}

double CutoffPair::mu(double z) const {
  double az = std::abs(z);
  if (az <= ell) return 1.0;
  if (az >= r) return 0.0;
  return smoothstep5((r - az) / (r - ell));
}

double CutoffPair::dmu(double z) const {
  double az = std::abs(z);
  if (az <= ell || az >= r) return 0.0;
  double sgn = z > 0 ? 1.0 : -1.0;
  return -sgn / (r - ell) * smoothstep5_d1((r - az) / (r - ell));
}

double CutoffPair::d2mu(double z) const {
  double az = std::abs(z);
  if (az <= ell || az >= r) return 0.0;
  return smoothstep5_d2((r - az) / (r - ell)) / ((r - ell) * (r - ell));
}

CutoffPair build_cutoffs(const RadialRegionPair& region, double ell, double L,
                         const Grid3D& grid) {
  if (!(ell > 0) || !(L > ell)) throw std::invalid_argument("need 0 < ell < L");
  CutoffPair c;
  c.region = region;
  c.ell = ell;
  c.r = 0.5 * (ell + L);
  if (c.r >= grid.Lambda)
    throw std::invalid_argument("axial cutoff band exceeds the computational box");
  if ((c.r - ell) / grid.hz < 3.0)
    throw std::invalid_argument("axial cutoff band narrower than three cells");
  double radial_band = std::abs(region.r_zero - region.r_one);
  if (radial_band / std::min(grid.section.hx, grid.section.hy) < 3.0)
    throw std::invalid_argument("radial cutoff band narrower than three cells");
  if (!region.complement && !(region.r_one < region.r_zero))
    throw std::invalid_argument("inner radius must stay below outer radius");
  if (region.complement && !(region.r_zero < region.r_one))
    throw std::invalid_argument("outer plateau radius must exceed the hole radius");
  return c;
}

std::vector<BoundaryFace> lateral_faces(const CrossSection& s) {
  std::vector<BoundaryFace> faces;
  const double nx_of[4] = {-1, 1, 0, 0};
  const double ny_of[4] = {0, 0, -1, 1};
  for (int t = 0; t < s.nt(); ++t) {
    int id = s.interior_nodes[t];
    int i = id % (s.nx + 1), j = id / (s.nx + 1);
    for (int d = 0; d < 4; ++d) {
      if (s.nbr[t][d] >= 0) continue;
      BoundaryFace f;
      f.it = t;
      f.dir = d;
      f.nrm_x = nx_of[d];
      f.nrm_y = ny_of[d];
      f.bx = s.x(i + int(nx_of[d]));
      f.by = s.y(j + int(ny_of[d]));
      f.perp = d < 2 ? s.hy : s.hx;
      faces.push_back(f);
    }
  }
  return faces;
}

// ---------------------------------------------------------------------------
// angular derivative
// ---------------------------------------------------------------------------

namespace {

template <typename VecT>
VecT angular_derivative_impl(const Grid3D& g, const VecT& u) {
  const CrossSection& s = g.section;
  const int nt = s.nt(), nzi = g.n_axial();
  VecT out(g.size());
  for (int k = 0; k < nzi; ++k) {
    const int base = k * nt;
    for (int t = 0; t < nt; ++t) {
      int id = s.interior_nodes[t];
      double x = s.x(id % (s.nx + 1)), y = s.y(id / (s.nx + 1));
      auto at = [&](int dir) {
        int n = s.nbr[t][dir];
        return n >= 0 ? u[base + n] : typename VecT::Scalar(0);
      };
      auto dx = (at(1) - at(0)) / (2.0 * s.hx);
      auto dy = (at(3) - at(2)) / (2.0 * s.hy);
      out[base + t] = x * dy - y * dx;
    }
  }
  return out;
}

}  // namespace

CVec angular_derivative(const Grid3D& g, const CVec& u) {
  return angular_derivative_impl(g, u);
}

Vec angular_derivative(const Grid3D& g, const Vec& u) {
  return angular_derivative_impl(g, u);
}

}  // namespace twistlab
