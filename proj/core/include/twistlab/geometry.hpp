#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace twistlab {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

// ---------------------------------------------------------------------------
// Cross-section: bounded planar domain sampled on a uniform node grid over its
// bounding box. A node is "inside" if it lies strictly in the open domain;
// boundary nodes are the outside nodes adjacent (4-neighborhood) to an inside
// node and carry the Dirichlet data.
// ---------------------------------------------------------------------------

enum class SectionKind { disk, rectangle };

struct CrossSection {
  SectionKind kind = SectionKind::disk;
  double radius = 0.0;        // disk
  double wx = 0.0, wy = 0.0;  // rectangle half-widths
  int nx = 0, ny = 0;         // cells per axis; nodes are 0..nx, 0..ny
  double hx = 0.0, hy = 0.0;

  std::vector<std::uint8_t> inside;  // node flags, (nx+1)*(ny+1)
  std::vector<int> interior_nodes;   // node ids, lexicographic (j-major)
  std::vector<int> compact;          // node id -> transverse index, -1 outside
  std::vector<int> boundary_nodes;   // node ids of the Dirichlet ring
  // per transverse index: neighbor transverse index in -x,+x,-y,+y, or -1
  // when the neighbor is a Dirichlet boundary node (couplings into those
  // sites are carried by the operator lift columns)
  std::vector<std::array<int, 4>> nbr;

  int node_id(int i, int j) const { return j * (nx + 1) + i; }
  double x(int i) const { return -half_extent_x() + i * hx; }
  double y(int j) const { return -half_extent_y() + j * hy; }
  double half_extent_x() const { return kind == SectionKind::disk ? radius : wx; }
  double half_extent_y() const { return kind == SectionKind::disk ? radius : wy; }
  int nt() const { return int(interior_nodes.size()); }

  bool contains(double px, double py) const {
    if (kind == SectionKind::disk) return px * px + py * py < radius * radius;
    return std::abs(px) < wx && std::abs(py) < wy;
  }
};

CrossSection make_disk_section(double radius, int nx, int ny);
CrossSection make_rectangle_section(double wx, double wy, int nx, int ny);

// ---------------------------------------------------------------------------
// 3D grid: cross-section times the truncated axis (-Lambda, Lambda) with
// homogeneous Dirichlet ends. Unknowns live on interior nodes, ordered
// slice-major: index = (k-1)*nt + it for axial level k = 1..nz-1.
// ---------------------------------------------------------------------------

struct Grid3D {
  CrossSection section;
  double Lambda = 0.0;
  int nz = 0;
  double hz = 0.0;

  int nt() const { return section.nt(); }
  int n_axial() const { return nz - 1; }
  int size() const { return nt() * n_axial(); }
  double z(int k) const { return -Lambda + k * hz; }
  int index(int it, int k) const { return (k - 1) * nt() + it; }
  double cell_volume() const { return section.hx * section.hy * hz; }

  // coordinates of interior node by global index
  Eigen::Vector3d coords(int g) const {
    int k = g / nt() + 1, it = g % nt();
    int id = section.interior_nodes[it];
    int i = id % (section.nx + 1), j = id / (section.nx + 1);
    return {section.x(i), section.y(j), z(k)};
  }
};

Grid3D make_grid(CrossSection section, double Lambda, int nz);

// ---------------------------------------------------------------------------
// Twisting profiles: theta with analytically coded first and second
// derivatives. dtheta must be supported in [-ell, ell].
// ---------------------------------------------------------------------------

struct TwistProfile {
  double ell = 0.0;
  std::function<double(double)> theta;    // used by the twist map only
  std::function<double(double)> dtheta;   // enters the metric and operators
  std::function<double(double)> ddtheta;  // enters source terms and weights
};

struct Admissibility {
  bool ok = false;
  double c1_norm = 0.0;      // sampled sup of |dtheta| + |ddtheta| on I_ell
  double support_leak = 0.0; // sampled sup of |dtheta| outside I_ell
  std::string message;
};

Admissibility check_admissible(const TwistProfile& p, double ell, double eps,
                               int samples = 10001);

TwistProfile zero_twist();
// dtheta(z) = amplitude * exp(1 - 1/(1 - (z/ell)^2)) inside I_ell
TwistProfile bump_twist(double amplitude, double ell);
// dtheta(z) = sum_k c_k sin^2(k pi (z+ell)/(2 ell)) inside I_ell (closed-form theta)
TwistProfile fourier_twist(const std::vector<double>& coeff, double ell);

enum class ProfileKind { zero, bump, fourier };

// builds the profile and rejects inadmissible ones (C1 bound or support leak)
TwistProfile make_twist_profile(ProfileKind kind, const std::vector<double>& params,
                                double ell, double eps);

// r_theta(x3) applied to x: the straightening map between the twisted and
// straight frames
Eigen::Vector3d twist_map(const Eigen::Vector3d& x, const TwistProfile& p);

// ---------------------------------------------------------------------------
// Transverse regions and smooth cutoffs.
// ---------------------------------------------------------------------------

// radial region pair against a center point c:
//   complement=false: omega1 = {|x-c| <= r_one},  omega0 = {|x-c| < r_zero}, r_one < r_zero
//   complement=true:  omega1 = {|x-c| >= r_one},  omega0 = {|x-c| > r_zero}, r_zero < r_one
struct RadialRegionPair {
  bool complement = false;
  double cx = 0.0, cy = 0.0;
  double r_one = 0.0, r_zero = 0.0;
};

// mask over transverse interior indices
struct RegionMask {
  std::vector<std::uint8_t> in;  // size nt
  int count = 0;
};

RegionMask disk_mask(const CrossSection& s, double cx, double cy, double r);
RegionMask complement_mask(const CrossSection& s, double cx, double cy, double r);

// chi(x) = rho(x_tau) * mu(x3); rho is a quintic-smoothstep radial profile that
// is 1 on omega1 and 0 off omega0; mu is 1 on |z| <= ell and 0 for |z| >= r,
// r = (ell + L)/2.
struct CutoffPair {
  RadialRegionPair region;
  double ell = 0.0, r = 0.0;
  double rho(double x, double y) const;
  double mu(double z) const;
  double dmu(double z) const;    // analytic first derivative
  double d2mu(double z) const;   // analytic second derivative
  double chi(const Eigen::Vector3d& x) const { return rho(x[0], x[1]) * mu(x[2]); }
};

CutoffPair build_cutoffs(const RadialRegionPair& region, double ell, double L,
                         const Grid3D& grid);

// quintic smoothstep and derivatives on [0,1]
double smoothstep5(double u);
double smoothstep5_d1(double u);
double smoothstep5_d2(double u);

// Lateral boundary faces of the waveguide: for each interior node with an
// outside 4-neighbor, the face between them. The outside node is the staircase
// boundary sample carrying the Dirichlet value.
struct BoundaryFace {
  int it = 0;                 // transverse index of the inner node
  int dir = 0;                // 0:-x 1:+x 2:-y 3:+y
  double nrm_x = 0, nrm_y = 0;  // outward unit normal
  double bx = 0, by = 0;      // outside node position
  double perp = 0;            // in-plane width (hy for x faces, hx for y faces)
};

std::vector<BoundaryFace> lateral_faces(const CrossSection& s);

// ---------------------------------------------------------------------------
// Angular derivative x1 d2 - x2 d1 with centered differences and zero
// extension across the Dirichlet boundary.
// ---------------------------------------------------------------------------
CVec angular_derivative(const Grid3D& g, const CVec& u);
Vec angular_derivative(const Grid3D& g, const Vec& u);

}  // namespace twistlab
