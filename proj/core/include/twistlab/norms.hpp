#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "twistlab/geometry.hpp"

namespace twistlab {

// Node mask over the 3D interior unknowns; quadratures below sum cell
// volumes over the marked nodes. Regions are combined as masks so set
// differences never double-count slices.
struct Region3D {
  std::vector<std::uint8_t> in;
  int count = 0;
};

// transverse mask x closed axial window [z_lo, z_hi] (small tolerance so a
// node sitting exactly on the cut is kept)
Region3D make_region(const Grid3D& g, const RegionMask& transverse, double z_lo,
                     double z_hi);
Region3D region_whole(const Grid3D& g);
Region3D region_and_not(const Region3D& a, const Region3D& b);
Region3D region_and(const Region3D& a, const Region3D& b);

double l2_sq(const Grid3D& g, const CVec& u, const Region3D& r);
double l2_sq(const Grid3D& g, const Vec& u, const Region3D& r);

// adds centered first differences (zero extension past the walls)
double h1_sq(const Grid3D& g, const CVec& u, const Region3D& r);

// adds all six second differences on top of h1_sq
double h2_sq(const Grid3D& g, const CVec& u, const Region3D& r);

// trapezoid rule over uniformly spaced samples
double trapezoid(const std::vector<double>& vals, double dt);

// composite Simpson over [lo, hi] with n subintervals (n made even)
double simpson(const std::function<double(double)>& f, double lo, double hi, int n);

}  // namespace twistlab
