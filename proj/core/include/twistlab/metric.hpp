#pragma once

#include <Eigen/Dense>

#include "twistlab/geometry.hpp"

namespace twistlab {

// Closed-form coefficient matrix of the straightened-frame operator: the
// divergence form of -Delta_tau - (td*dphi + d3)^2 has symmetric coefficient
//   A = diag(1,1,0) + V V^T,  V = (-td*x2, td*x1, 1),
// which doubles as the contravariant metric components. td = dtheta(x3).
Eigen::Matrix3d metric_matrix(double x1, double x2, double td);

// Its inverse in closed form (the pullback of the Euclidean metric under the
// twist map); avoids numerical inversion where exactness matters.
Eigen::Matrix3d metric_matrix_inverse(double x1, double x2, double td);

// Partial derivative of metric_matrix wrt coordinate j (0,1,2). The axial
// derivative brings in tdd = ddtheta(x3).
Eigen::Matrix3d metric_matrix_gradient(double x1, double x2, double td, double tdd, int j);

// Nodewise metric data tabulated on every bounding-box node and axial level
// (including nodes outside the cross-section, where the closed forms are still
// defined); entry order 11,22,33,12,13,23.
struct MetricField {
  const Grid3D* grid = nullptr;
  int nodes_per_level = 0;
  int levels = 0;  // axial levels 0..nz inclusive

  std::vector<std::array<double, 6>> g;     // coefficient matrix (contravariant components)
  std::vector<std::array<double, 6>> gInv;  // covariant components
  std::vector<double> detG;

  int slot(int level, int node_id) const { return level * nodes_per_level + node_id; }

  Eigen::Matrix3d g_at(int level, int node_id) const;
  Eigen::Matrix3d gInv_at(int level, int node_id) const;

  // c1-style inner product of two (co)vectors attached to a node
  double inner(int level, int node_id, const Eigen::Vector3d& X,
               const Eigen::Vector3d& Y) const;
};

// Tabulates the metric and validates unimodularity (the twist map preserves
// volume, so any determinant drift beyond 1e-10 is an assembly bug).
MetricField assemble_metric(const TwistProfile& p, const Grid3D& grid);

double max_unimodular_defect(const MetricField& m);

}  // namespace twistlab
