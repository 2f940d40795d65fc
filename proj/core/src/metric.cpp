#include "twistlab/metric.hpp"

#include <cmath>
#include <stdexcept>

namespace twistlab {

Eigen::Matrix3d metric_matrix(double x1, double x2, double td) {
  Eigen::Matrix3d a;
  const double t2 = td * td;
  a << 1.0 + t2 * x2 * x2, -t2 * x1 * x2, -td * x2,
       -t2 * x1 * x2, 1.0 + t2 * x1 * x1, td * x1,
       -td * x2, td * x1, 1.0;
  return a;
}

Eigen::Matrix3d metric_matrix_inverse(double x1, double x2, double td) {
  Eigen::Matrix3d a;
  a << 1.0, 0.0, td * x2,
       0.0, 1.0, -td * x1,
       td * x2, -td * x1, 1.0 + td * td * (x1 * x1 + x2 * x2);
  return a;
}

Eigen::Matrix3d metric_matrix_gradient(double x1, double x2, double td, double tdd, int j) {
  Eigen::Matrix3d d;
  const double t2 = td * td;
  switch (j) {
    case 0:
      d << 0.0, -t2 * x2, 0.0,
           -t2 * x2, 2.0 * t2 * x1, td,
           0.0, td, 0.0;
      break;
    case 1:
      d << 2.0 * t2 * x2, -t2 * x1, -td,
           -t2 * x1, 0.0, 0.0,
           -td, 0.0, 0.0;
      break;
    case 2:
      d << 2.0 * td * x2 * x2, -2.0 * td * x1 * x2, -x2,
           -2.0 * td * x1 * x2, 2.0 * td * x1 * x1, x1,
           -x2, x1, 0.0;
      d *= tdd;
      break;
    default:
      throw std::invalid_argument("coordinate index out of range");
  }
  return d;
}

Eigen::Matrix3d MetricField::g_at(int level, int node_id) const {
  const auto& e = g[slot(level, node_id)];
  Eigen::Matrix3d a;
  a << e[0], e[3], e[4],
       e[3], e[1], e[5],
       e[4], e[5], e[2];
  return a;
}

Eigen::Matrix3d MetricField::gInv_at(int level, int node_id) const {
  const auto& e = gInv[slot(level, node_id)];
  Eigen::Matrix3d a;
  a << e[0], e[3], e[4],
       e[3], e[1], e[5],
       e[4], e[5], e[2];
  return a;
}

double MetricField::inner(int level, int node_id, const Eigen::Vector3d& X,
                          const Eigen::Vector3d& Y) const {
  const auto& e = gInv[slot(level, node_id)];
  return e[0] * X[0] * Y[0] + e[1] * X[1] * Y[1] + e[2] * X[2] * Y[2] +
         e[3] * (X[0] * Y[1] + X[1] * Y[0]) +
         e[4] * (X[0] * Y[2] + X[2] * Y[0]) +
         e[5] * (X[1] * Y[2] + X[2] * Y[1]);
}

MetricField assemble_metric(const TwistProfile& p, const Grid3D& grid) {
  MetricField m;
  m.grid = &grid;
  const CrossSection& s = grid.section;
  m.nodes_per_level = (s.nx + 1) * (s.ny + 1);
  m.levels = grid.nz + 1;
  m.g.resize(std::size_t(m.nodes_per_level) * m.levels);
  m.gInv.resize(m.g.size());
  m.detG.resize(m.g.size());

  for (int k = 0; k <= grid.nz; ++k) {
    const double td = p.dtheta(-grid.Lambda + k * grid.hz);
    for (int j = 0; j <= s.ny; ++j)
      for (int i = 0; i <= s.nx; ++i) {
        const int id = s.node_id(i, j);
        const int at = m.slot(k, id);
        Eigen::Matrix3d a = metric_matrix(s.x(i), s.y(j), td);
        Eigen::Matrix3d b = metric_matrix_inverse(s.x(i), s.y(j), td);
        m.g[at] = {a(0, 0), a(1, 1), a(2, 2), a(0, 1), a(0, 2), a(1, 2)};
        m.gInv[at] = {b(0, 0), b(1, 1), b(2, 2), b(0, 1), b(0, 2), b(1, 2)};
        m.detG[at] = a.determinant();
      }
  }

  if (max_unimodular_defect(m) > 1e-10)
    throw std::runtime_error("metric determinant drifts from 1 beyond 1e-10");
  return m;
}

double max_unimodular_defect(const MetricField& m) {
  double worst = 0.0;
  for (double d : m.detG) worst = std::max(worst, std::abs(d - 1.0));
  return worst;
}

}  // namespace twistlab
