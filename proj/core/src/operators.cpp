#include "twistlab/operators.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace twistlab {
namespace {

// symmetric storage order: 11, 22, 33, 12, 13, 23
constexpr int kSym[3][3] = {{0, 3, 4}, {3, 1, 5}, {4, 5, 2}};

struct SiteMap {
  const Grid3D* g;
  int nxp;
  std::vector<std::array<int, 2>> ij;  // transverse index -> (i, j)

  explicit SiteMap(const Grid3D& grid) : g(&grid) {
    const CrossSection& s = grid.section;
    nxp = s.nx + 1;
    ij.resize(s.nt());
    for (int t = 0; t < s.nt(); ++t) {
      const int id = s.interior_nodes[t];
      ij[t] = {id % nxp, id / nxp};
    }
  }

  int interior(int i, int j, int k) const {
    const CrossSection& s = g->section;
    if (k < 1 || k > g->nz - 1) return -1;
    if (i < 0 || i > s.nx || j < 0 || j > s.ny) return -1;
    const int tc = s.compact[s.node_id(i, j)];
    return tc < 0 ? -1 : g->index(tc, k);
  }
};

// Every site a flux stencil can touch: the 6 face and 12 edge neighbors.
constexpr int kReach[18][3] = {
    {-1, 0, 0}, {1, 0, 0},  {0, -1, 0}, {0, 1, 0},  {0, 0, -1}, {0, 0, 1},
    {-1, -1, 0}, {-1, 1, 0}, {1, -1, 0}, {1, 1, 0},
    {-1, 0, -1}, {-1, 0, 1}, {1, 0, -1}, {1, 0, 1},
    {0, -1, -1}, {0, -1, 1}, {0, 1, -1}, {0, 1, 1}};

// Flux scheme for L = -d_j(a_jk d_k .): the flux through the half-node
// between a site and its neighbor along `dir` combines a staggered
// difference in the aligned direction with averaged centered differences in
// the two others. `half(i,j,k,dir,sg)` supplies row `dir` of the coefficient
// matrix at that half-node; `rowscale` multiplies the whole row (used for
// the inverse volume factor and the sign of the metric laplacian). The
// result is symmetrized, which keeps second-order consistency and makes
// max|A - A^T| = 0 exact.
template <class Half, class RowScale>
DiscreteOperator assemble_flux(const Grid3D& grid, Half half, RowScale rowscale) {
  const CrossSection& s = grid.section;
  const SiteMap map(grid);
  const int npl = (s.nx + 1) * (s.ny + 1);
  const double h[3] = {s.hx, s.hy, grid.hz};

  DiscreteOperator op;
  op.grid = &grid;

  // Dirichlet sites in deterministic scan order
  std::vector<int> lift_col(std::size_t(grid.nz + 1) * npl, -1);
  for (int k = 1; k <= grid.nz - 1; ++k)
    for (int t = 0; t < s.nt(); ++t) {
      const int i = map.ij[t][0], j = map.ij[t][1];
      for (const auto& d : kReach) {
        const int i2 = i + d[0], j2 = j + d[1], k2 = k + d[2];
        if (map.interior(i2, j2, k2) >= 0) continue;
        const std::size_t key = std::size_t(k2) * npl + s.node_id(i2, j2);
        if (lift_col[key] < 0) {
          lift_col[key] = int(op.lift_sites.size());
          op.lift_sites.emplace_back(k2, s.node_id(i2, j2));
        }
      }
    }

  std::vector<Eigen::Triplet<double>> tripA, tripL;
  tripA.reserve(std::size_t(grid.size()) * 40);

  for (int k = 1; k <= grid.nz - 1; ++k)
    for (int t = 0; t < s.nt(); ++t) {
      const int p = grid.index(t, k);
      const int i = map.ij[t][0], j = map.ij[t][1];
      const double rs = rowscale(i, j, k);

      auto acc = [&](int i2, int j2, int k2, double v) {
        const int q = map.interior(i2, j2, k2);
        if (q >= 0) {
          tripA.emplace_back(p, q, v);
        } else {
          const std::size_t key = std::size_t(k2) * npl + s.node_id(i2, j2);
          tripL.emplace_back(p, lift_col[key], v);
        }
      };

      for (int dir = 0; dir < 3; ++dir)
        for (int sg = -1; sg <= 1; sg += 2) {
          const int iq = i + (dir == 0 ? sg : 0);
          const int jq = j + (dir == 1 ? sg : 0);
          const int kq = k + (dir == 2 ? sg : 0);
          const std::array<double, 3> c = half(i, j, k, dir, sg);
          const double base = rs / h[dir];

          acc(i, j, k, base * c[dir] / h[dir]);
          acc(iq, jq, kq, -base * c[dir] / h[dir]);

          for (int m = 0; m < 3; ++m) {
            if (m == dir || c[m] == 0.0) continue;
            const double v = sg * base * c[m] / (4.0 * h[m]);
            const int ex = (m == 0), ey = (m == 1), ez = (m == 2);
            acc(i + ex, j + ey, k + ez, -v);
            acc(i - ex, j - ey, k - ez, v);
            acc(iq + ex, jq + ey, kq + ez, -v);
            acc(iq - ex, jq - ey, kq - ez, v);
          }
        }
    }

  const int n = grid.size();
  op.A.resize(n, n);
  op.A.setFromTriplets(tripA.begin(), tripA.end());
  const SpMat at = SpMat(op.A.transpose());
  SpMat sym = 0.5 * (op.A + at);
  op.A = std::move(sym);

  op.lift.resize(n, int(op.lift_sites.size()));
  op.lift.setFromTriplets(tripL.begin(), tripL.end());
  return op;
}

}  // namespace

DiscreteOperator assemble_H(const TwistProfile& p, const Grid3D& grid) {
  const Admissibility adm =
      check_admissible(p, p.ell, std::numeric_limits<double>::infinity());
  if (!adm.ok) throw std::invalid_argument("assemble_H: " + adm.message);

  const CrossSection& s = grid.section;
  auto half = [&](int i, int j, int k, int dir, int sg) -> std::array<double, 3> {
    const double x = s.x(i), y = s.y(j);
    if (dir == 0) {
      const double td = p.dtheta(grid.z(k));
      const double xh = x + 0.5 * sg * s.hx;
      return {1.0 + td * td * y * y, -td * td * xh * y, -td * y};
    }
    if (dir == 1) {
      const double td = p.dtheta(grid.z(k));
      const double yh = y + 0.5 * sg * s.hy;
      return {-td * td * x * yh, 1.0 + td * td * x * x, td * x};
    }
    const double td = p.dtheta(grid.z(k) + 0.5 * sg * grid.hz);
    return {-td * y, td * x, 1.0};
  };
  auto unit = [](int, int, int) { return 1.0; };
  return assemble_flux(grid, half, unit);
}

DiscreteOperator assemble_laplace_beltrami(const MetricField& m, const Grid3D& grid) {
  if (m.grid != &grid) throw std::invalid_argument("metric built on a different grid");
  const CrossSection& s = grid.section;

  auto half = [&](int i, int j, int k, int dir, int sg) -> std::array<double, 3> {
    const int i2 = i + (dir == 0 ? sg : 0);
    const int j2 = j + (dir == 1 ? sg : 0);
    const int k2 = k + (dir == 2 ? sg : 0);
    const int sa = m.slot(k, s.node_id(i, j));
    const int sb = m.slot(k2, s.node_id(i2, j2));
    const double vol = 0.5 * (std::sqrt(m.detG[sa]) + std::sqrt(m.detG[sb]));
    std::array<double, 3> c;
    for (int col = 0; col < 3; ++col)
      c[col] = 0.5 * (m.g[sa][kSym[dir][col]] + m.g[sb][kSym[dir][col]]) * vol;
    return c;
  };
  auto scale = [&](int i, int j, int k) {
    return -1.0 / std::sqrt(m.detG[m.slot(k, s.node_id(i, j))]);
  };
  return assemble_flux(grid, half, scale);
}

namespace {

template <class VecT>
GradientField gradient_impl(const VecT& u, const MetricField& m) {
  const Grid3D& grid = *m.grid;
  const CrossSection& s = grid.section;
  const int n = grid.size();
  if (u.size() != n) throw std::invalid_argument("field size does not match grid");

  GradientField out;
  out.gx.setZero(n);
  out.gy.setZero(n);
  out.gz.setZero(n);
  out.norm2.setZero(n);

  using Scalar = typename VecT::Scalar;
  for (int k = 1; k <= grid.nz - 1; ++k)
    for (int t = 0; t < s.nt(); ++t) {
      const int p = grid.index(t, k);
      const auto& nb = s.nbr[t];
      Scalar dx = Scalar(0), dy = Scalar(0), dz = Scalar(0);
      {
        const Scalar up = nb[1] >= 0 ? u[grid.index(nb[1], k)] : Scalar(0);
        const Scalar um = nb[0] >= 0 ? u[grid.index(nb[0], k)] : Scalar(0);
        dx = (up - um) / (2.0 * s.hx);
      }
      {
        const Scalar up = nb[3] >= 0 ? u[grid.index(nb[3], k)] : Scalar(0);
        const Scalar um = nb[2] >= 0 ? u[grid.index(nb[2], k)] : Scalar(0);
        dy = (up - um) / (2.0 * s.hy);
      }
      {
        const Scalar up = k + 1 <= grid.nz - 1 ? u[grid.index(t, k + 1)] : Scalar(0);
        const Scalar um = k - 1 >= 1 ? u[grid.index(t, k - 1)] : Scalar(0);
        dz = (up - um) / (2.0 * grid.hz);
      }
      const auto& e = m.g[m.slot(k, s.interior_nodes[t])];
      const Scalar X = e[0] * dx + e[3] * dy + e[4] * dz;
      const Scalar Y = e[3] * dx + e[1] * dy + e[5] * dz;
      const Scalar Z = e[4] * dx + e[5] * dy + e[2] * dz;
      out.gx[p] = X;
      out.gy[p] = Y;
      out.gz[p] = Z;
      out.norm2[p] = std::real(Complex(std::conj(Scalar(dx)) * X +
                                       std::conj(Scalar(dy)) * Y +
                                       std::conj(Scalar(dz)) * Z));
    }
  return out;
}

template <class VecT>
VecT axial_impl(const Grid3D& g, const VecT& u) {
  using Scalar = typename VecT::Scalar;
  if (u.size() != g.size()) throw std::invalid_argument("field size does not match grid");
  VecT out = VecT::Zero(g.size());
  const int nt = g.nt();
  for (int k = 1; k <= g.nz - 1; ++k)
    for (int t = 0; t < nt; ++t) {
      const Scalar up = k + 1 <= g.nz - 1 ? u[g.index(t, k + 1)] : Scalar(0);
      const Scalar um = k - 1 >= 1 ? u[g.index(t, k - 1)] : Scalar(0);
      out[g.index(t, k)] = (up - um) / (2.0 * g.hz);
    }
  return out;
}

}  // namespace

GradientField gradient_g(const CVec& u, const MetricField& m) {
  return gradient_impl(u, m);
}

GradientField gradient_g(const Vec& u, const MetricField& m) {
  return gradient_impl(u, m);
}

CVec axial_derivative(const Grid3D& g, const CVec& u) { return axial_impl(g, u); }
Vec axial_derivative(const Grid3D& g, const Vec& u) { return axial_impl(g, u); }

CVec spmv(const SpMat& A, const CVec& u) {
  const Vec re = A * u.real();
  const Vec im = A * u.imag();
  CVec out(re.size());
  out.real() = re;
  out.imag() = im;
  return out;
}

void export_operator(const DiscreteOperator& op, std::ostream& os) {
  os.precision(17);
  for (int c = 0; c < op.A.outerSize(); ++c)
    for (SpMat::InnerIterator it(op.A, c); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << it.value() << " 0\n";
}

}  // namespace twistlab
