#include "twistlab/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace twistlab {

namespace {

constexpr double kGoldenAngle = 2.399963229728653;

std::vector<Eigen::Vector3d> sphere_directions(int n) {
  std::vector<Eigen::Vector3d> dirs(n);
  for (int i = 0; i < n; ++i) {
    const double u = 1.0 - 2.0 * (i + 0.5) / n;
    const double rad = std::sqrt(std::max(0.0, 1.0 - u * u));
    const double phi = i * kGoldenAngle;
    dirs[i] = {rad * std::cos(phi), rad * std::sin(phi), u};
  }
  return dirs;
}

// outer node id of a lateral face (the staircase Dirichlet sample)
int face_outer_id(const CrossSection& s, const BoundaryFace& fc) {
  const int i = int(std::llround((fc.bx + s.half_extent_x()) / s.hx));
  const int j = int(std::llround((fc.by + s.half_extent_y()) / s.hy));
  return s.node_id(i, j);
}

// |grad u|^2 with plain centered differences, zero extension at walls/ends
Vec euclid_grad_sq(const CVec& u, const Grid3D& g) {
  const CrossSection& s = g.section;
  const int nt = g.nt(), nz = g.nz;
  Vec out = Vec::Zero(u.size());
  const double ix = 0.5 / s.hx, iy = 0.5 / s.hy, iz = 0.5 / g.hz;
  for (int k = 1; k < nz; ++k) {
    const int base = (k - 1) * nt;
    for (int it = 0; it < nt; ++it) {
      const int p = base + it;
      auto side = [&](int d) -> Complex {
        const int nb = s.nbr[it][d];
        return nb >= 0 ? u[base + nb] : Complex(0.0);
      };
      const Complex dx = (side(1) - side(0)) * ix;
      const Complex dy = (side(3) - side(2)) * iy;
      const Complex um = k > 1 ? u[p - nt] : Complex(0.0);
      const Complex up = k < nz - 1 ? u[p + nt] : Complex(0.0);
      const Complex dz = (up - um) * iz;
      out[p] = std::norm(dx) + std::norm(dy) + std::norm(dz);
    }
  }
  return out;
}

double max_abs(const WaveField& w) {
  double m = 0.0;
  for (const auto& lvl : w.levels) m = std::max(m, lvl.cwiseAbs().maxCoeff());
  return m;
}

void check_field_matches_weights(const WaveField& w, const WeightFields& wf) {
  if (w.grid != wf.grid)
    throw std::invalid_argument("field and weights live on different grids");
  if (int(w.levels.size()) != wf.levels())
    throw std::invalid_argument("field level count does not match the weights");
  if (std::abs(w.t0 + wf.T) > 1e-9 * wf.T || std::abs(w.dt - wf.dt) > 1e-12)
    throw std::invalid_argument("field time axis does not match the weights");
}

// Fields entering the weighted quadratures must vanish near the axial edge of
// the working domain; otherwise the estimate does not apply to them.
void check_axial_vanishing(const WaveField& w, const WeightFields& wf, double scale) {
  if (scale <= 0.0) return;
  const Grid3D& g = *wf.grid;
  const int nt = g.nt();
  double bad = 0.0;
  for (int k = 1; k < g.nz; ++k) {
    if (std::abs(g.z(k)) < wf.r_prime) continue;
    for (const auto& lvl : w.levels)
      for (int it = 0; it < nt; ++it)
        bad = std::max(bad, std::abs(lvl[(k - 1) * nt + it]));
  }
  if (bad > 1e-10 * scale)
    throw std::invalid_argument(
        "field does not vanish near the axial ends of the working domain");
}

}  // namespace

WeightPoint select_weight_point(const Grid3D& grid, double L, double ell,
                                WeightMode mode, double d3, double gamma,
                                double dtau_start) {
  if (!(ell > 0.0) || !(L > ell))
    throw std::invalid_argument("select_weight_point: need 0 < ell < L");
  if (!(d3 > 0.0))
    throw std::invalid_argument("select_weight_point: need d3 > 0");
  if (!(gamma > 0.0))
    throw std::invalid_argument("select_weight_point: need gamma > 0");

  WeightPoint wp;
  wp.gamma = gamma;
  wp.ell = ell;
  wp.L = L;
  wp.d3 = d3;
  if (mode == WeightMode::interior) {
    wp.a = {0.0, 0.0, L + d3};
    wp.d_tau = 0.0;
    return wp;
  }

  // Boundary mode: push the transverse anchor away from the section along +y
  // until some of the section survives past the far level set, i.e. the
  // distance condition d(far) > d_tau + 4 L (L + d3) / d_tau holds on nodes.
  const CrossSection& s = grid.section;
  double ytop = -std::numeric_limits<double>::infinity();
  for (int id : s.interior_nodes) ytop = std::max(ytop, s.y(id / (s.nx + 1)));
  double off = std::max(dtau_start, 2.0 * s.hx);
  double dtau = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double yc = ytop + off;
    double dmin = std::numeric_limits<double>::infinity();
    double dmax = 0.0;
    for (int id : s.interior_nodes) {
      const double px = s.x(id % (s.nx + 1)), py = s.y(id / (s.nx + 1));
      const double d = std::hypot(px, py - yc);
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
    }
    dtau = dmin;
    const double reach = dtau + 4.0 * L * (L + d3) / dtau;
    if (dmax > reach) {
      wp.a = {0.0, yc, L + d3};
      wp.d_tau = dtau;
      return wp;
    }
    off *= 1.25;
  }
  throw std::runtime_error(
      "weight point search exhausted: distance condition still failing at d_tau = " +
      std::to_string(dtau));
}

WeightFields build_weights(const WeightPoint& wp, const Grid3D& grid, double T,
                           double dt, const TwistProfile& p) {
  if (!(T > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("build_weights: need positive horizon and step");
  const double steps = T / dt;
  if (std::abs(steps - std::llround(steps)) > 1e-9)
    throw std::invalid_argument("time step must divide the horizon");

  WeightFields wf;
  wf.grid = &grid;
  wf.wp = wp;
  wf.T = T;
  wf.dt = dt;
  wf.r = 0.5 * (wp.ell + wp.L);
  wf.r_prime = 0.5 * (wf.r + wp.L);

  RegionMask all;
  all.in.assign(grid.nt(), 1);
  all.count = grid.nt();
  wf.Mmask = make_region(grid, all, -wf.r_prime, wf.r_prime);

  // Shift C: smallest value keeping the profile above 2/3 of its sup over the
  // working domain. Extrema are scanned over the domain nodes and the lateral
  // wall samples so the weights stay normalized up to the walls.
  const int n = grid.size();
  double min0 = std::numeric_limits<double>::infinity();
  double max0 = -min0;
  auto vt0 = [&](double x, double y, double z) {
    const double dx = x - wp.a[0], dy = y - wp.a[1], dz = z - wp.a[2];
    return dx * dx + dy * dy + dz * dz;
  };
  for (int q = 0; q < n; ++q) {
    if (!wf.Mmask.in[q]) continue;
    const Eigen::Vector3d x = grid.coords(q);
    const double v = vt0(x[0], x[1], x[2]);
    min0 = std::min(min0, v);
    max0 = std::max(max0, v);
  }
  const CrossSection& sec = grid.section;
  const auto faces = lateral_faces(sec);
  for (int k = 1; k < grid.nz; ++k) {
    const double z = grid.z(k);
    if (std::abs(z) > wf.r_prime) continue;
    for (const auto& fc : faces) {
      const int id = sec.interior_nodes[fc.it];
      const double xf = 0.5 * (sec.x(id % (sec.nx + 1)) + fc.bx);
      const double yf = 0.5 * (sec.y(id / (sec.nx + 1)) + fc.by);
      const double v = vt0(xf, yf, z);
      min0 = std::min(min0, v);
      max0 = std::max(max0, v);
    }
  }
  wf.wp.C = std::max(0.0, 2.0 * max0 - 3.0 * min0);
  wf.K = std::exp(2.0 * wp.gamma * (max0 + wf.wp.C));

  wf.vartheta.resize(n);
  wf.expg.resize(n);
  wf.dvt_x.resize(n);
  wf.dvt_y.resize(n);
  wf.dvt_z.resize(n);
  wf.norm2_vt.resize(n);
  wf.lap_vt.resize(n);
  wf.eta0.resize(n);
  wf.d3eta0.resize(n);

  const double g = wp.gamma;
  const double a1 = wp.a[0], a2 = wp.a[1], a3 = wp.a[2];
  double expg_max_M = 0.0;
  for (int q = 0; q < n; ++q) {
    const Eigen::Vector3d x = grid.coords(q);
    const double td = p.dtheta(x[2]);
    const double tdd = p.ddtheta(x[2]);
    const double vt = vt0(x[0], x[1], x[2]) + wf.wp.C;
    wf.vartheta[q] = vt;
    wf.expg[q] = std::exp(g * vt);
    wf.dvt_x[q] = 2.0 * (x[0] - a1);
    wf.dvt_y[q] = 2.0 * (x[1] - a2);
    wf.dvt_z[q] = 2.0 * (x[2] - a3);
    const double wphi = x[0] * a2 - x[1] * a1;
    wf.norm2_vt[q] = 4.0 * ((vt - wf.wp.C) + td * td * wphi * wphi -
                            2.0 * td * (x[2] - a3) * wphi);
    wf.lap_vt[q] = 6.0 + 2.0 * td * td * (a1 * x[0] + a2 * x[1]) +
                   2.0 * tdd * (a1 * x[1] - a2 * x[0]);
    wf.eta0[q] = (wf.K - wf.expg[q]) / (T * T);
    wf.d3eta0[q] = 2.0 * g * (a3 - x[2]) * wf.expg[q] / (T * T);
    if (wf.Mmask.in[q]) expg_max_M = std::max(expg_max_M, wf.expg[q]);
  }
  // Midpoint times stay strictly inside (-T, T); the smallest weight exponent
  // over the working domain sits at |t| = dt/2 and the largest profile value.
  wf.c_norm = (wf.K - expg_max_M) / (T * T - 0.25 * dt * dt);
  return wf;
}

HypothesesReport verify_hypotheses(const MetricField& m, const TwistProfile& p,
                                   const WeightFields& wf, double enlarge) {
  const Grid3D& grid = *wf.grid;
  if (m.grid != &grid)
    throw std::invalid_argument("metric and weights live on different grids");

  HypothesesReport rep;
  const auto dirs = sphere_directions(32);
  const CrossSection& sec = grid.section;
  const int nt = grid.nt();

  double cmin = std::numeric_limits<double>::infinity();
  double beta = cmin;
  for (int q = 0; q < grid.size(); ++q) {
    if (!wf.Mmask.in[q]) continue;
    beta = std::min(beta, wf.norm2_vt[q]);
    const int k = q / nt + 1, it = q % nt;
    const int id = sec.interior_nodes[it];
    const Eigen::Vector3d x = grid.coords(q);
    const double td = p.dtheta(x[2]), tdd = p.ddtheta(x[2]);
    const Eigen::Matrix3d G = m.g_at(k, id);
    const Eigen::Matrix3d Gi = m.gInv_at(k, id);
    Eigen::Matrix3d dG[3];
    for (int j = 0; j < 3; ++j)
      dG[j] = metric_matrix_gradient(x[0], x[1], td, tdd, j);
    const Eigen::Vector3d dvt(wf.dvt_x[q], wf.dvt_y[q], wf.dvt_z[q]);
    const Eigen::Vector3d gvt = G * dvt;
    for (int di = 0; di < int(dirs.size()); ++di) {
      const Eigen::Vector3d& zeta = dirs[di];
      const Eigen::Vector3d xi = Gi * zeta;
      double hess = 2.0 * zeta.squaredNorm();
      for (int j = 0; j < 3; ++j)
        hess += zeta[j] * xi.dot(dG[j] * dvt) - 0.5 * gvt[j] * xi.dot(dG[j] * xi);
      const double val = hess + std::pow(dvt.dot(zeta), 2);
      if (val < cmin) {
        cmin = val;
        rep.worst_node = q;
        rep.worst_dir = di;
      }
    }
  }
  rep.convexity_min = cmin;
  rep.convexity_ok = cmin > 0.0;
  rep.beta = beta;

  // Observed wall: faces whose raised weight gradient has a nonnegative
  // outward component somewhere in the axial window (union over levels keeps
  // the selection a superset of the pointwise one, which is allowed).
  const auto faces = lateral_faces(sec);
  rep.gamma0.assign(faces.size(), 0);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto& fc = faces[f];
    const int id_in = sec.interior_nodes[fc.it];
    const int id_out = face_outer_id(sec, fc);
    const double xf = 0.5 * (sec.x(id_in % (sec.nx + 1)) + fc.bx);
    const double yf = 0.5 * (sec.y(id_in / (sec.nx + 1)) + fc.by);
    const Eigen::Vector3d nu(fc.nrm_x, fc.nrm_y, 0.0);
    for (int k = 1; k < grid.nz; ++k) {
      const double z = grid.z(k);
      if (std::abs(z) > wf.r_prime) continue;
      const Eigen::Matrix3d G =
          0.5 * (m.g_at(k, id_in) + m.g_at(k, id_out));
      const Eigen::Vector3d dvt(2.0 * (xf - wf.wp.a[0]), 2.0 * (yf - wf.wp.a[1]),
                                2.0 * (z - wf.wp.a[2]));
      if (nu.dot(G * dvt) >= -enlarge) {
        rep.gamma0[f] = 1;
        break;
      }
    }
    rep.gamma0_count += rep.gamma0[f];
  }
  return rep;
}

ConjugatedOperators conjugated_operators(const DiscreteOperator& lap,
                                         const MetricField& metric,
                                         const WeightFields& wf, double s) {
  if (lap.grid != wf.grid || metric.grid != wf.grid)
    throw std::invalid_argument("operator, metric and weights must share a grid");
  return ConjugatedOperators{&lap, &metric, &wf, s};
}

CVec ConjugatedOperators::apply_M1(const CVec& wl, const CVec& wr, int mid) const {
  const double tm = wf->tmid(mid);
  const double taum = wf->tau(tm);
  const double g = wf->wp.gamma;
  const CVec wmid = 0.5 * (wl + wr);
  CVec out = spmv(lap->A, wmid);
  const Complex idt(0.0, 1.0 / wf->dt);
  const double s2g2t2 = s * s * g * g * taum * taum;
  for (int p = 0; p < out.size(); ++p) {
    out[p] += idt * (wr[p] - wl[p]);
    out[p] += s2g2t2 * wf->expg[p] * wf->expg[p] * wf->norm2_vt[p] * wmid[p];
  }
  return out;
}

CVec ConjugatedOperators::apply_M2(const CVec& wl, const CVec& wr, int mid) const {
  const double tm = wf->tmid(mid);
  const double taum = wf->tau(tm);
  const double dtaum = wf->dtau(tm);
  const double g = wf->wp.gamma;
  const CVec wmid = 0.5 * (wl + wr);
  const GradientField gr = gradient_g(wmid, *metric);
  CVec out(wmid.size());
  const Complex iu(0.0, 1.0);
  for (int p = 0; p < wmid.size(); ++p) {
    const Complex trans = wf->dvt_x[p] * gr.gx[p] + wf->dvt_y[p] * gr.gy[p] +
                          wf->dvt_z[p] * gr.gz[p];
    const double etap = (wf->K - wf->expg[p]) * dtaum;
    const double geta = -g * wf->expg[p] * taum;  // grad eta = geta * grad vartheta
    const double lapeta = geta * (g * wf->norm2_vt[p] + wf->lap_vt[p]);
    out[p] = iu * (s * etap) * wmid[p] + 2.0 * s * geta * trans + s * lapeta * wmid[p];
  }
  return out;
}

std::vector<CarlemanTerms> carleman_functional_grid(
    const WaveField& w, const DiscreteOperator& lap, const MetricField& metric,
    const WeightFields& wf, const std::vector<double>& sgrid,
    const HypothesesReport* gamma0) {
  check_field_matches_weights(w, wf);
  if (lap.grid != wf.grid || metric.grid != wf.grid)
    throw std::invalid_argument("operator, metric and weights must share a grid");
  if (sgrid.empty()) throw std::invalid_argument("empty s grid");
  const double scale = max_abs(w);
  check_axial_vanishing(w, wf, scale);

  const Grid3D& grid = *wf.grid;
  const CrossSection& sec = grid.section;
  const int n = grid.size();
  const int nt = grid.nt();
  const int NS = int(sgrid.size());
  const int mids = wf.mid_count();
  const double vol = grid.cell_volume();
  const double g = wf.wp.gamma;

  // Wall samples on the observed part, restricted to the axial window.
  struct FaceSample {
    int flux_idx;
    double ef;    // e^{gamma vartheta} at the face midpoint
    double area;  // perp * hz
  };
  std::vector<BoundaryFace> faces;
  std::vector<FaceSample> wall;
  if (gamma0) {
    faces = lateral_faces(sec);
    if (gamma0->gamma0.size() != faces.size())
      throw std::invalid_argument("observed-wall report does not match the section");
    const int nf = int(faces.size());
    for (int k = 1; k < grid.nz; ++k) {
      const double z = grid.z(k);
      if (std::abs(z) > wf.r_prime) continue;
      for (int f = 0; f < nf; ++f) {
        if (!gamma0->gamma0[f]) continue;
        const auto& fc = faces[f];
        const int id = sec.interior_nodes[fc.it];
        const double xf = 0.5 * (sec.x(id % (sec.nx + 1)) + fc.bx);
        const double yf = 0.5 * (sec.y(id / (sec.nx + 1)) + fc.by);
        FaceSample smp;
        smp.flux_idx = (k - 1) * nf + f;
        smp.ef = std::exp(g * wf.vartheta_at(xf, yf, z));
        smp.area = fc.perp * grid.hz;
        wall.push_back(smp);
      }
    }
  }

  std::vector<CarlemanTerms> acc(NS);
  // Weighted variable per s, rolling across midpoints. It is restricted to
  // the working domain: the field vanishes there at the edge (checked above)
  // and the envelope exponent changes sign outside, where it must not be
  // evaluated.
  std::vector<CVec> zl(NS, CVec::Zero(n));

  CVec wmid(n), dwdt(n), Bw(n), zr(n), zmid(n), Dz(n), M1(n), M2v(n);
  for (int m = 0; m < mids; ++m) {
    const CVec& a = w.levels[m];
    const CVec& b = w.levels[m + 1];
    const double tm = wf.tmid(m);
    const double taum = wf.tau(tm);
    const double dtaum = wf.dtau(tm);
    const double tr = wf.tlevel(m + 1);
    wmid = 0.5 * (a + b);
    dwdt = (b - a) / wf.dt;
    const GradientField gradw = gradient_g(wmid, metric);
    Bw = spmv(lap.A, wmid);
    const Complex iu(0.0, 1.0);
    for (int p = 0; p < n; ++p) Bw[p] += iu * dwdt[p];

    CVec fluxmid;
    if (!wall.empty()) {
      WaveField one;
      one.levels = {wmid};
      one.t0 = tm;
      one.dt = wf.dt;
      one.grid = &grid;
      fluxmid = boundary_flux(one, metric, faces)[0];
    }

    for (int is = 0; is < NS; ++is) {
      const double s = sgrid[is];
      for (int p = 0; p < n; ++p) {
        if (!wf.Mmask.in[p]) {
          zr[p] = 0.0;
          continue;
        }
        zr[p] = wf.weight_at(p, tr, s) * b[p];
      }
      zmid = 0.5 * (zl[is] + zr);
      Dz = (zr - zl[is]) / wf.dt;
      M1 = spmv(lap.A, zmid);
      const GradientField gradz = gradient_g(zmid, metric);
      const double s2g2t2 = s * s * g * g * taum * taum;
      CarlemanTerms& t = acc[is];
      for (int p = 0; p < n; ++p) {
        if (!wf.Mmask.in[p]) continue;
        const double W = wf.weight_at(p, tm, s);
        const double W2 = W * W;
        const double psi = wf.expg[p] * taum;
        t.lhs_grad += W2 * psi * gradw.norm2[p];
        t.lhs_w += W2 * psi * psi * psi * std::norm(wmid[p]);
        t.rhs_B += W2 * std::norm(Bw[p]);
        const Complex m1 = M1[p] + iu * Dz[p] +
                           s2g2t2 * wf.expg[p] * wf.expg[p] * wf.norm2_vt[p] * zmid[p];
        const Complex trans = wf.dvt_x[p] * gradz.gx[p] + wf.dvt_y[p] * gradz.gy[p] +
                              wf.dvt_z[p] * gradz.gz[p];
        const double etap = (wf.K - wf.expg[p]) * dtaum;
        const double geta = -g * wf.expg[p] * taum;
        const double lapeta = geta * (g * wf.norm2_vt[p] + wf.lap_vt[p]);
        const Complex m2 =
            iu * (s * etap) * zmid[p] + 2.0 * s * geta * trans + s * lapeta * zmid[p];
        t.lhs_M += std::norm(m1) + std::norm(m2);
      }
      for (const auto& smp : wall) {
        // Wall points can sit marginally outside the node hull used for the
        // normalization; keep the exponent in log space and cap it.
        const double etaf = (wf.K - smp.ef) * taum;
        const double lw = std::min(
            700.0, -2.0 * s * (etaf - wf.c_norm) + 2.0 * std::log(smp.ef * taum));
        t.rhs_boundary += std::exp(lw) * std::norm(fluxmid[smp.flux_idx]) * smp.area;
      }
      zl[is] = zr;
    }
  }

  for (int is = 0; is < NS; ++is) {
    const double s = sgrid[is];
    acc[is].lhs_grad *= s * vol * wf.dt;
    acc[is].lhs_w *= s * s * s * vol * wf.dt;
    acc[is].lhs_M *= vol * wf.dt;
    acc[is].rhs_B *= vol * wf.dt;
    acc[is].rhs_boundary *= s * wf.dt;
  }
  return acc;
}

CarlemanTerms carleman_functional(const WaveField& w, const DiscreteOperator& lap,
                                  const MetricField& metric, const WeightFields& wf,
                                  double s, const HypothesesReport* gamma0) {
  return carleman_functional_grid(w, lap, metric, wf, {s}, gamma0)[0];
}

CarlemanReport verify_carleman(const std::vector<WaveField>& family,
                               const DiscreteOperator& lap, const MetricField& metric,
                               const WeightFields& wf, const std::vector<double>& sgrid,
                               const HypothesesReport* gamma0) {
  if (family.empty()) throw std::invalid_argument("empty field family");
  double scale = 0.0;
  for (const auto& w : family) scale = std::max(scale, max_abs(w));
  if (scale <= 0.0)
    throw std::invalid_argument("degenerate family: every field vanishes identically");

  std::vector<std::vector<CarlemanTerms>> per_member;
  per_member.reserve(family.size());
  for (const auto& w : family)
    per_member.push_back(carleman_functional_grid(w, lap, metric, wf, sgrid, gamma0));
  return summarize_carleman(sgrid, per_member);
}

CarlemanReport summarize_carleman(
    const std::vector<double>& sgrid,
    const std::vector<std::vector<CarlemanTerms>>& per_member) {
  if (per_member.empty()) throw std::invalid_argument("empty term family");
  CarlemanReport rep;
  rep.s = sgrid;
  rep.terms.assign(sgrid.size(), CarlemanTerms{});
  for (const auto& terms : per_member) {
    if (terms.size() != sgrid.size())
      throw std::invalid_argument("term sweep does not match the s grid");
    for (std::size_t i = 0; i < terms.size(); ++i) {
      rep.terms[i].lhs_grad += terms[i].lhs_grad;
      rep.terms[i].lhs_w += terms[i].lhs_w;
      rep.terms[i].lhs_M += terms[i].lhs_M;
      rep.terms[i].rhs_B += terms[i].rhs_B;
      rep.terms[i].rhs_boundary += terms[i].rhs_boundary;
    }
  }
  rep.ratio.resize(sgrid.size());
  for (std::size_t i = 0; i < sgrid.size(); ++i) {
    const double rhs = rep.terms[i].rhs();
    rep.ratio[i] = rhs > 0.0 ? rep.terms[i].lhs() / rhs
                             : std::numeric_limits<double>::quiet_NaN();
  }

  // Plateau: first five-point window whose log-log slope is flat. The ratio
  // curve typically decays, bottoms out, then creeps back up once s h^2
  // effects dominate, so C0 is read off the flat window only; the rising
  // large-s branch is a discretization artifact and would not refine stably.
  rep.s0_index = -1;
  const int win = 5;
  const int npts = int(rep.ratio.size());
  for (int i = 0; i + win <= npts; ++i) {
    bool usable = true;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (int j = i; j < i + win; ++j) {
      if (!(std::isfinite(rep.ratio[j]) && rep.ratio[j] > 0.0)) {
        usable = false;
        break;
      }
      const double x = std::log(sgrid[j]), y = std::log(rep.ratio[j]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    if (!usable) continue;
    const double den = win * sxx - sx * sx;
    if (den == 0.0) continue;
    const double slope = (win * sxy - sx * sy) / den;
    if (std::abs(slope) <= 0.35) {
      rep.s0_index = i;
      break;
    }
  }
  if (rep.s0_index >= 0) {
    rep.s0 = sgrid[rep.s0_index];
    rep.C0 = 0.0;
    for (int i = rep.s0_index; i < rep.s0_index + win; ++i)
      rep.C0 = std::max(rep.C0, rep.ratio[i]);
  } else {
    rep.s0 = std::numeric_limits<double>::quiet_NaN();
    rep.C0 = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

AxialPoincareResult verify_axial_poincare(const std::function<double(double)>& alpha,
                                          const std::function<double(double)>& dalpha,
                                          const CutoffPair& chi, const WeightFields& wf,
                                          double s, int axial_points) {
  if (!(s > 0.0)) throw std::invalid_argument("verify_axial_poincare: need s > 0");
  const double ell = wf.wp.ell;
  double amax = 0.0;
  for (int i = 0; i <= 200; ++i)
    amax = std::max(amax, std::abs(alpha(-ell + 2.0 * ell * i / 200.0)));
  if (std::abs(alpha(-ell)) > 1e-12 * std::max(amax, 1e-300) ||
      std::abs(alpha(ell)) > 1e-12 * std::max(amax, 1e-300))
    throw std::invalid_argument("profile must vanish at the window ends");

  const Grid3D& grid = *wf.grid;
  const CrossSection& sec = grid.section;
  const double a1 = wf.wp.a[0], a2 = wf.wp.a[1], a3 = wf.wp.a[2];
  const double g = wf.wp.gamma;

  // Normalize the envelope by its minimum over the quadrature domain: the
  // weight profile peaks at the end of the window farthest from the anchor.
  const double zfar = a3 >= 0.0 ? -ell : ell;
  double c2 = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, double>> slices;  // (rho^2 * hx * hy, |x_tau - a_tau|^2)
  for (int id : sec.interior_nodes) {
    const double px = sec.x(id % (sec.nx + 1)), py = sec.y(id / (sec.nx + 1));
    const double rho = chi.rho(px, py);
    if (rho == 0.0) continue;
    const double dt2 = (px - a1) * (px - a1) + (py - a2) * (py - a2);
    slices.emplace_back(rho * rho * sec.hx * sec.hy, dt2);
    const double vt = dt2 + (zfar - a3) * (zfar - a3) + wf.wp.C;
    c2 = std::min(c2, (wf.K - std::exp(g * vt)) / (wf.T * wf.T));
  }
  if (slices.empty())
    throw std::invalid_argument("cutoff has no transverse support on the grid");

  double lhs2 = 0.0, rhs2 = 0.0;
  for (const auto& [wt, dt2] : slices) {
    auto envelope = [&](double z) {
      const double vt = dt2 + (z - a3) * (z - a3) + wf.wp.C;
      const double eta0 = (wf.K - std::exp(g * vt)) / (wf.T * wf.T);
      const double mu = chi.mu(z);
      return std::exp(-2.0 * s * (eta0 - c2)) * mu * mu;
    };
    lhs2 += wt * simpson([&](double z) { return envelope(z) * alpha(z) * alpha(z); },
                         -ell, ell, axial_points);
    rhs2 += wt * simpson([&](double z) { return envelope(z) * dalpha(z) * dalpha(z); },
                         -ell, ell, axial_points);
  }

  AxialPoincareResult res;
  res.lhs = std::sqrt(lhs2);
  res.rhs = std::sqrt(rhs2);
  res.factor = wf.T / std::sqrt(wf.wp.d3 * s);
  res.pass = res.lhs <= res.factor * res.rhs * (1.0 + 1e-3);
  return res;
}

WeightSeparationResult verify_weight_separation(const WeightFields& wf) {
  const Grid3D& grid = *wf.grid;
  const CrossSection& sec = grid.section;
  const double a1 = wf.wp.a[0], a2 = wf.wp.a[1];

  double dtau = std::numeric_limits<double>::infinity();
  for (int id : sec.interior_nodes) {
    const double px = sec.x(id % (sec.nx + 1)), py = sec.y(id / (sec.nx + 1));
    dtau = std::min(dtau, std::hypot(px - a1, py - a2));
  }
  if (!(dtau > 0.0))
    throw std::runtime_error("weight point too close: anchor touches the section");

  WeightSeparationResult res;
  res.eps_hat = 2.0 * wf.wp.L * (wf.wp.L + wf.wp.d3) / dtau;
  res.omega0 = complement_mask(sec, a1, a2, dtau + res.eps_hat);
  res.omega1 = complement_mask(sec, a1, a2, dtau + 2.0 * res.eps_hat);
  if (res.omega1.count == 0)
    throw std::runtime_error("weight point too close: the far region is empty");
  if (!(res.omega1.count < res.omega0.count && res.omega0.count < sec.nt()))
    throw std::runtime_error("weight separation regions failed strict nesting");

  const double ell = wf.wp.ell;
  double m1 = -std::numeric_limits<double>::infinity();
  double m0 = std::numeric_limits<double>::infinity();
  const int nt = grid.nt();
  for (int q = 0; q < grid.size(); ++q) {
    const int k = q / nt + 1, it = q % nt;
    if (std::abs(grid.z(k)) > ell + 1e-9 * grid.hz) continue;
    if (res.omega1.in[it]) m1 = std::max(m1, wf.eta0[q]);
    if (!res.omega0.in[it]) m0 = std::min(m0, wf.eta0[q]);
  }
  res.m1 = m1;
  res.m0 = m0;
  res.pass = m1 < m0;
  return res;
}

TimeZeroBoundReport verify_time_zero_bound(
    const WaveField& z, const CutoffPair& chi,
    const std::function<double(double)>& alpha,
    const std::function<double(double)>& dalpha, const DiscreteOperator& lap,
    const MetricField& metric, const WeightFields& wf,
    const std::vector<double>& sgrid) {
  check_field_matches_weights(z, wf);
  if (sgrid.empty()) throw std::invalid_argument("empty s grid");
  const Grid3D& grid = *wf.grid;
  const CrossSection& sec = grid.section;
  const int n = grid.size();
  const int nlev = int(z.levels.size());
  const int ic = (nlev - 1) / 2;
  if (std::abs(z.time(ic)) > 1e-9)
    throw std::invalid_argument("time axis does not contain t = 0");

  // Cutoff values per node and the cut field.
  Vec cvals(n);
  for (int q = 0; q < n; ++q) {
    const Eigen::Vector3d x = grid.coords(q);
    cvals[q] = wf.Mmask.in[q] ? chi.chi(x) : 0.0;
  }
  std::vector<CVec> cut(nlev);
  for (int l = 0; l < nlev; ++l) cut[l] = cvals.array() * z.levels[l].array();

  // Regions: source window (inner support x the profile window) and the
  // commutator collar (cutoff support x the wide window, minus the flat part).
  const auto& rg = chi.region;
  auto tmask = [&](double rad) {
    return rg.complement ? complement_mask(sec, rg.cx, rg.cy, rad)
                         : disk_mask(sec, rg.cx, rg.cy, rad);
  };
  const RegionMask om0 = tmask(rg.r_zero);
  const RegionMask om1 = tmask(rg.r_one);
  const Region3D src = make_region(grid, om0, -wf.wp.ell, wf.wp.ell);
  const Region3D wide = make_region(grid, om0, -wf.r, wf.r);
  const Region3D flat = make_region(grid, om1, -wf.wp.ell, wf.wp.ell);
  const Region3D collar = region_and_not(wide, flat);

  const int NS = int(sgrid.size());
  const double vol = grid.cell_volume();
  const int nt = grid.nt();

  TimeZeroBoundReport rep;
  rep.s = sgrid;
  rep.lhs.assign(NS, 0.0);
  rep.bracket.assign(NS, 0.0);
  rep.ratio.assign(NS, 0.0);

  for (int is = 0; is < NS; ++is) {
    const double s = sgrid[is];
    double lhs = 0.0;
    for (int p = 0; p < n; ++p) {
      if (!wf.Mmask.in[p]) continue;
      const double W = wf.weight_at(p, 0.0, s);
      lhs += W * W * std::norm(cut[ic][p]);
    }
    rep.lhs[is] = lhs * vol;

    double bracket = 0.0;
    for (int m = 0; m < wf.mid_count(); ++m) {
      const double tm = wf.tmid(m);
      const CVec zmid = 0.5 * (z.levels[m] + z.levels[m + 1]);
      const Vec grads = euclid_grad_sq(zmid, grid);
      double acc = 0.0;
      for (int p = 0; p < n; ++p) {
        const bool in_src = src.in[p] != 0;
        const bool in_col = collar.in[p] != 0;
        if (!in_src && !in_col) continue;
        const double W = wf.weight_at(p, tm, s);
        const double W2 = W * W;
        if (in_src) {
          const double zp = grid.z(p / nt + 1);
          const double av = alpha(zp), dv = dalpha(zp);
          acc += W2 * cvals[p] * cvals[p] * (av * av + dv * dv);
        }
        if (in_col) acc += W2 * (std::norm(zmid[p]) + grads[p]);
      }
      bracket += acc;
    }
    rep.bracket[is] = bracket * vol * wf.dt;
    rep.ratio[is] = rep.bracket[is] > 0.0
                        ? rep.lhs[is] / rep.bracket[is]
                        : std::numeric_limits<double>::quiet_NaN();
  }

  // Log-log slope of the ratio against s.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int is = 0; is < NS; ++is) {
    if (!(rep.ratio[is] > 0.0) || !std::isfinite(rep.ratio[is])) continue;
    const double lx = std::log(sgrid[is]), ly = std::log(rep.ratio[is]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++cnt;
  }
  rep.slope = cnt >= 2 ? (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx)
                       : std::numeric_limits<double>::quiet_NaN();

  // Telescoping check of the time part: with endpoint weights vanishing, twice
  // the imaginary part of the accumulated first-split pairing recovers the
  // weighted t = 0 norm exactly (the symmetric spatial part drops out).
  {
    const double s = sgrid[NS / 2];
    const ConjugatedOperators ops = conjugated_operators(lap, metric, wf, s);
    std::vector<CVec> zeta(ic + 1);
    for (int l = 0; l <= ic; ++l) {
      zeta[l] = CVec::Zero(n);
      const double t = z.time(l);
      for (int p = 0; p < n; ++p) {
        if (!wf.Mmask.in[p]) continue;
        zeta[l][p] = wf.weight_at(p, t, s) * cut[l][p];
      }
    }
    double acc = 0.0;
    for (int m = 0; m < ic; ++m) {
      const CVec m1 = ops.apply_M1(zeta[m], zeta[m + 1], m);
      const CVec zm = 0.5 * (zeta[m] + zeta[m + 1]);
      Complex ip(0.0, 0.0);
      for (int p = 0; p < n; ++p) ip += m1[p] * std::conj(zm[p]);
      acc += 2.0 * ip.imag() * vol * wf.dt;
    }
    const double i0 = zeta[ic].squaredNorm() * vol;
    rep.identity_defect = i0 > 0.0 ? std::abs(acc - i0) / i0
                                   : std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

}  // namespace twistlab
