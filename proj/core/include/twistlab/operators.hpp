#pragma once

#include <Eigen/Sparse>
#include <iosfwd>
#include <utility>
#include <vector>

#include "twistlab/geometry.hpp"
#include "twistlab/metric.hpp"

namespace twistlab {

using SpMat = Eigen::SparseMatrix<double>;

// Sparse operator over the interior unknowns. Entries are real (the
// waveguide Hamiltonian has real coefficients), so Hermitian == symmetric
// and the assembly enforces max|A - A^T| = 0 exactly. Couplings into
// Dirichlet boundary sites are split off into `lift`: the full action on a
// grid function u with boundary values b is A*u + lift*b.
struct DiscreteOperator {
  SpMat A;
  SpMat lift;
  std::vector<std::pair<int, int>> lift_sites;  // (axial level, node_id) per lift column
  const Grid3D* grid = nullptr;
};

// Positive semidefinite discretization of -lap_tau - (td*dphi + d3)^2 in
// divergence form, homogeneous Dirichlet walls. Coefficients evaluated
// analytically at flux half-nodes. Reduces to the 7-point -laplacian stencil
// exactly when the twist rate vanishes.
DiscreteOperator assemble_H(const TwistProfile& p, const Grid3D& grid);

// Discretization of the metric laplacian (1/sqrt(det g)) d_j(sqrt(det g)
// g^{jk} d_k .) from tabulated metric data, same flux scheme with
// coefficients averaged between adjacent nodes. Sign convention fixed by the
// identity-metric case: this returns the (negative semidefinite) laplacian
// stencil, i.e. assemble_H ~ -assemble_laplace_beltrami.
DiscreteOperator assemble_laplace_beltrami(const MetricField& m, const Grid3D& grid);

// Raised gradient X = g^{jk} d_k u with centered differences (zero extension
// past the walls), plus the squared length |grad_g u|^2_g = conj(grad u) . X.
struct GradientField {
  CVec gx, gy, gz;
  Vec norm2;
};
GradientField gradient_g(const CVec& u, const MetricField& m);
GradientField gradient_g(const Vec& u, const MetricField& m);

// Centered first differences on interior fields, zero extension.
CVec axial_derivative(const Grid3D& g, const CVec& u);
Vec axial_derivative(const Grid3D& g, const Vec& u);

// Real sparse matrix times complex field.
CVec spmv(const SpMat& A, const CVec& u);

// Coordinate dump "row col re im", one entry per line.
void export_operator(const DiscreteOperator& op, std::ostream& os);

}  // namespace twistlab
