#include "twistlab/norms.hpp"

#include <cmath>
#include <stdexcept>

namespace twistlab {
namespace {

double count_region(Region3D& r) {
  int c = 0;
  for (auto v : r.in) c += v ? 1 : 0;
  r.count = c;
  return c;
}

// per-node values of |u|^2 plus requested difference orders, summed over mask
template <class VecT>
double sum_sq(const Grid3D& g, const VecT& u, const Region3D& r, int order) {
  if (int(r.in.size()) != g.size() || u.size() != g.size())
    throw std::invalid_argument("region or field does not match grid");
  const CrossSection& s = g.section;
  const double hx = s.hx, hy = s.hy, hz = g.hz;

  auto at = [&](int t, int k) -> Complex {
    if (t < 0 || k < 1 || k > g.nz - 1) return Complex(0);
    return Complex(u[g.index(t, k)]);
  };

  double acc = 0.0;
  for (int k = 1; k <= g.nz - 1; ++k)
    for (int t = 0; t < s.nt(); ++t) {
      const int p = g.index(t, k);
      if (!r.in[p]) continue;
      const Complex c = Complex(u[p]);
      double v = std::norm(c);
      if (order >= 1) {
        const auto& nb = s.nbr[t];
        const Complex dx = (at(nb[1], k) - at(nb[0], k)) / (2.0 * hx);
        const Complex dy = (at(nb[3], k) - at(nb[2], k)) / (2.0 * hy);
        const Complex dz = (at(t, k + 1) - at(t, k - 1)) / (2.0 * hz);
        v += std::norm(dx) + std::norm(dy) + std::norm(dz);
        if (order >= 2) {
          const Complex xx = (at(nb[1], k) - 2.0 * c + at(nb[0], k)) / (hx * hx);
          const Complex yy = (at(nb[3], k) - 2.0 * c + at(nb[2], k)) / (hy * hy);
          const Complex zz = (at(t, k + 1) - 2.0 * c + at(t, k - 1)) / (hz * hz);
          const int xpyp = nb[1] >= 0 ? s.nbr[nb[1]][3] : -1;
          const int xpym = nb[1] >= 0 ? s.nbr[nb[1]][2] : -1;
          const int xmyp = nb[0] >= 0 ? s.nbr[nb[0]][3] : -1;
          const int xmym = nb[0] >= 0 ? s.nbr[nb[0]][2] : -1;
          const Complex xy = (at(xpyp, k) - at(xpym, k) - at(xmyp, k) + at(xmym, k)) /
                             (4.0 * hx * hy);
          const Complex xz = (at(nb[1], k + 1) - at(nb[1], k - 1) - at(nb[0], k + 1) +
                              at(nb[0], k - 1)) /
                             (4.0 * hx * hz);
          const Complex yz = (at(nb[3], k + 1) - at(nb[3], k - 1) - at(nb[2], k + 1) +
                              at(nb[2], k - 1)) /
                             (4.0 * hy * hz);
          v += std::norm(xx) + std::norm(yy) + std::norm(zz) +
               2.0 * (std::norm(xy) + std::norm(xz) + std::norm(yz));
        }
      }
      acc += v;
    }
  return acc * g.cell_volume();
}

}  // namespace

Region3D make_region(const Grid3D& g, const RegionMask& transverse, double z_lo,
                     double z_hi) {
  if (int(transverse.in.size()) != g.nt())
    throw std::invalid_argument("transverse mask does not match section");
  Region3D r;
  r.in.assign(g.size(), 0);
  const double tol = 1e-9 * g.hz;
  for (int k = 1; k <= g.nz - 1; ++k) {
    const double z = g.z(k);
    if (z < z_lo - tol || z > z_hi + tol) continue;
    for (int t = 0; t < g.nt(); ++t)
      if (transverse.in[t]) r.in[g.index(t, k)] = 1;
  }
  count_region(r);
  return r;
}

Region3D region_whole(const Grid3D& g) {
  Region3D r;
  r.in.assign(g.size(), 1);
  r.count = g.size();
  return r;
}

Region3D region_and_not(const Region3D& a, const Region3D& b) {
  if (a.in.size() != b.in.size()) throw std::invalid_argument("region size mismatch");
  Region3D r;
  r.in.resize(a.in.size());
  for (std::size_t i = 0; i < a.in.size(); ++i) r.in[i] = a.in[i] && !b.in[i];
  count_region(r);
  return r;
}

Region3D region_and(const Region3D& a, const Region3D& b) {
  if (a.in.size() != b.in.size()) throw std::invalid_argument("region size mismatch");
  Region3D r;
  r.in.resize(a.in.size());
  for (std::size_t i = 0; i < a.in.size(); ++i) r.in[i] = a.in[i] && b.in[i];
  count_region(r);
  return r;
}

double l2_sq(const Grid3D& g, const CVec& u, const Region3D& r) {
  return sum_sq(g, u, r, 0);
}

double l2_sq(const Grid3D& g, const Vec& u, const Region3D& r) {
  double acc = 0.0;
  for (int p = 0; p < g.size(); ++p)
    if (r.in[p]) acc += u[p] * u[p];
  return acc * g.cell_volume();
}

double h1_sq(const Grid3D& g, const CVec& u, const Region3D& r) {
  return sum_sq(g, u, r, 1);
}

double h2_sq(const Grid3D& g, const CVec& u, const Region3D& r) {
  return sum_sq(g, u, r, 2);
}

double trapezoid(const std::vector<double>& vals, double dt) {
  if (vals.size() < 2) return 0.0;
  double acc = 0.5 * (vals.front() + vals.back());
  for (std::size_t i = 1; i + 1 < vals.size(); ++i) acc += vals[i];
  return acc * dt;
}

double simpson(const std::function<double(double)>& f, double lo, double hi, int n) {
  if (n < 2) n = 2;
  if (n % 2) ++n;
  const double h = (hi - lo) / n;
  double acc = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace twistlab
