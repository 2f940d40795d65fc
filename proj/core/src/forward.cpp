#include "twistlab/forward.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace twistlab {
namespace {

using CSp = Eigen::SparseMatrix<Complex>;

void check_pair(const WaveField& a, const WaveField& b) {
  if (a.grid != b.grid || a.levels.size() != b.levels.size() ||
      std::abs(a.dt - b.dt) > 1e-15 || std::abs(a.t0 - b.t0) > 1e-12)
    throw std::invalid_argument("wave fields live on different grids or time axes");
}

}  // namespace

WaveField crank_nicolson_solve(const DiscreteOperator& H, const CVec& q0,
                               const BoundaryData& h, double T, double dt) {
  const Grid3D& g = *H.grid;
  if (q0.size() != g.size())
    throw std::invalid_argument("initial state does not match grid");
  if (!(T > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("time horizon and step must be positive");
  if (dt > T / 64.0 * (1.0 + 1e-12))
    throw std::invalid_argument("time step too large: need dt <= T/64");
  const int N = int(std::llround(T / dt));
  if (std::abs(N * dt - T) > 1e-9 * T)
    throw std::invalid_argument("time step must divide the horizon");

  const int n = g.size();
  CSp eye(n, n);
  eye.setIdentity();
  const Complex ihalf(0.0, 0.5 * dt);
  const CSp Ac = H.A.cast<Complex>();
  const CSp Mp = eye + ihalf * Ac;
  const CSp Mm = eye - ihalf * Ac;

  Eigen::SparseLU<CSp> lu;
  lu.compute(Mp);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("time stepper factorization failed");

  WaveField out;
  out.grid = &g;
  out.t0 = 0.0;
  out.dt = dt;
  out.levels.reserve(N + 1);
  out.levels.push_back(q0);

  const double n0 = q0.norm();
  CVec q = q0;
  for (int step = 0; step < N; ++step) {
    CVec rhs = Mm * q;
    if (h) {
      const CVec bl = h(step * dt);
      const CVec br = h((step + 1) * dt);
      if (bl.size() != H.lift.cols() || br.size() != H.lift.cols())
        throw std::invalid_argument("boundary data does not match the lift sites");
      rhs -= ihalf * spmv(H.lift, CVec(bl + br));
    }
    CVec x = lu.solve(rhs);
    const double rhsn = rhs.norm();
    double rel = 0.0;
    for (int it = 0; it < 8; ++it) {
      const CVec r = rhs - Mp * x;
      rel = rhsn > 0.0 ? r.norm() / rhsn : r.norm();
      if (rel <= 1e-13) break;
      x += lu.solve(r);
    }
    if (rel > 1e-10)
      throw std::runtime_error(
          "time stepper linear solve stalled at relative residual " +
          std::to_string(rel));
    q = std::move(x);
    out.levels.push_back(q);
    if (!h && n0 > 0.0)
      out.norm_drift = std::max(out.norm_drift, std::abs(q.norm() / n0 - 1.0));
  }
  return out;
}

WaveField symmetrize_time(const WaveField& q) {
  if (q.levels.empty()) throw std::invalid_argument("empty field");
  if (std::abs(q.t0) > 1e-12 * std::max(1.0, std::abs(q.dt)))
    throw std::invalid_argument("symmetrization expects a field starting at t = 0");
  const CVec& q0 = q.levels.front();
  const double scale = q0.size() ? q0.cwiseAbs().maxCoeff() : 0.0;
  const double imax = q0.size() ? q0.imag().cwiseAbs().maxCoeff() : 0.0;
  if (imax > 1e-12 * std::max(scale, 1e-300))
    throw std::invalid_argument("time symmetrization needs a real initial state");

  const int N = q.steps();
  WaveField out;
  out.grid = q.grid;
  out.dt = q.dt;
  out.t0 = -N * q.dt;
  out.norm_drift = q.norm_drift;
  out.levels.resize(2 * N + 1);
  for (int m = 1; m <= N; ++m) out.levels[N - m] = q.levels[m].conjugate();
  for (int m = 0; m <= N; ++m) out.levels[N + m] = q.levels[m];
  return out;
}

WaveField difference(const WaveField& a, const WaveField& b) {
  check_pair(a, b);
  WaveField out;
  out.grid = a.grid;
  out.t0 = a.t0;
  out.dt = a.dt;
  out.levels.reserve(a.levels.size());
  for (std::size_t i = 0; i < a.levels.size(); ++i)
    out.levels.push_back(a.levels[i] - b.levels[i]);
  return out;
}

WaveField linearized_source(const TwistProfile& th, const TwistProfile& th_ref,
                            const WaveField& q_ref) {
  const Grid3D& g = *q_ref.grid;
  Vec al(g.nz + 1), sm(g.nz + 1), ad(g.nz + 1);
  for (int k = 0; k <= g.nz; ++k) {
    const double z = g.z(k);
    al[k] = th.dtheta(z) - th_ref.dtheta(z);
    sm[k] = th.dtheta(z) + th_ref.dtheta(z);
    ad[k] = th.ddtheta(z) - th_ref.ddtheta(z);
  }

  WaveField out;
  out.grid = &g;
  out.t0 = q_ref.t0;
  out.dt = q_ref.dt;
  out.levels.reserve(q_ref.levels.size());
  const int nt = g.nt();
  for (const CVec& u : q_ref.levels) {
    const CVec v = angular_derivative(g, u);
    const CVec vphi = angular_derivative(g, v);
    const CVec v3 = axial_derivative(g, v);
    CVec r(g.size());
    for (int k = 1; k <= g.nz - 1; ++k)
      for (int t = 0; t < nt; ++t) {
        const int p = g.index(t, k);
        r[p] = al[k] * (sm[k] * vphi[p] + 2.0 * v3[p]) + ad[k] * v[p];
      }
    out.levels.push_back(std::move(r));
  }
  return out;
}

WaveField time_derivative(const WaveField& y) {
  const int N = y.steps();
  if (N < 2) throw std::invalid_argument("need at least 3 time levels");
  WaveField z;
  z.grid = y.grid;
  z.t0 = y.t0;
  z.dt = y.dt;
  z.levels.resize(y.levels.size());
  const double d = 2.0 * y.dt;
  z.levels[0] = (-3.0 * y.levels[0] + 4.0 * y.levels[1] - y.levels[2]) / d;
  for (int n = 1; n < N; ++n)
    z.levels[n] = (y.levels[n + 1] - y.levels[n - 1]) / d;
  z.levels[N] = (3.0 * y.levels[N] - 4.0 * y.levels[N - 1] + y.levels[N - 2]) / d;
  return z;
}

double cn_residual(const DiscreteOperator& H, const WaveField& y, const WaveField& R) {
  check_pair(y, R);
  const Grid3D& g = *y.grid;
  const double w = std::sqrt(g.cell_volume());
  const Complex mi(0.0, -1.0);
  double worst = 0.0;
  for (int n = 0; n < y.steps(); ++n) {
    const CVec dy = (y.levels[n + 1] - y.levels[n]) / y.dt;
    const CVec mid = 0.5 * (y.levels[n + 1] + y.levels[n]);
    const CVec rmid = 0.5 * (R.levels[n + 1] + R.levels[n]);
    const CVec res = mi * dy + spmv(H.A, mid) - rmid;
    worst = std::max(worst, w * res.norm());
  }
  return worst;
}

std::vector<CVec> boundary_flux(const WaveField& u, const MetricField& m,
                                const std::vector<BoundaryFace>& faces) {
  const Grid3D& g = *u.grid;
  const CrossSection& s = g.section;
  const int nf = int(faces.size());
  const int nxp = s.nx + 1;
  static const int di[4] = {-1, 1, 0, 0};
  static const int dj[4] = {0, 0, -1, 1};

  std::vector<CVec> out;
  out.reserve(u.levels.size());
  for (const CVec& lev : u.levels) {
    CVec vals = CVec::Zero(std::size_t(nf) * g.n_axial());
    for (int k = 1; k <= g.nz - 1; ++k)
      for (int f = 0; f < nf; ++f) {
        const BoundaryFace& fc = faces[f];
        const int idI = s.interior_nodes[fc.it];
        const int i = idI % nxp, j = idI / nxp;
        const int idB = s.node_id(i + di[fc.dir], j + dj[fc.dir]);
        const Complex uI = lev[g.index(fc.it, k)];
        const auto& nb = s.nbr[fc.it];

        auto interior_at = [&](int tc) -> Complex {
          return tc >= 0 ? lev[g.index(tc, k)] : Complex(0);
        };
        Complex ux, uy;
        if (fc.dir <= 1) {
          ux = fc.nrm_x * (-uI) / s.hx;
          uy = (interior_at(nb[3]) - interior_at(nb[2])) / (2.0 * s.hy);
        } else {
          uy = fc.nrm_y * (-uI) / s.hy;
          ux = (interior_at(nb[1]) - interior_at(nb[0])) / (2.0 * s.hx);
        }
        const Complex up = k + 1 <= g.nz - 1 ? lev[g.index(fc.it, k + 1)] : Complex(0);
        const Complex um = k - 1 >= 1 ? lev[g.index(fc.it, k - 1)] : Complex(0);
        const Complex uz = (up - um) / (2.0 * g.hz);

        const auto& eI = m.g[m.slot(k, idI)];
        const auto& eB = m.g[m.slot(k, idB)];
        double e[6];
        for (int c = 0; c < 6; ++c) e[c] = 0.5 * (eI[c] + eB[c]);
        const Complex gx = e[0] * ux + e[3] * uy + e[4] * uz;
        const Complex gy = e[3] * ux + e[1] * uy + e[5] * uz;
        vals[std::size_t(k - 1) * nf + f] = fc.nrm_x * gx + fc.nrm_y * gy;
      }
    out.push_back(std::move(vals));
  }
  return out;
}

ObservationSet extract_observations(const WaveField& q, const WaveField& q_ref,
                                    ObsKind kind, const ObsRegions& regions,
                                    const MetricField& metric) {
  check_pair(q, q_ref);
  const Grid3D& g = *q.grid;
  const WaveField y = difference(q, q_ref);
  const WaveField z = time_derivative(y);

  ObservationSet o;
  o.kind = kind;
  o.t0 = y.t0;
  o.dt = y.dt;

  const int i0 = int(std::llround(-y.t0 / y.dt));
  if (i0 < 0 || i0 >= int(y.levels.size()))
    throw std::invalid_argument("time axis does not contain t = 0");
  o.initial_gap = y.levels[i0];
  o.init_norm_sq = h2_sq(g, o.initial_gap, regions.init);

  std::vector<double> per_level;
  per_level.reserve(z.levels.size());
  if (kind == ObsKind::interior) {
    o.rate_levels = z.levels;
    for (const CVec& lev : z.levels) per_level.push_back(h1_sq(g, lev, regions.volume));
  } else {
    o.flux_levels = boundary_flux(z, metric, regions.faces);
    const int nf = int(regions.faces.size());
    const double tol = 1e-9 * g.hz;
    for (const CVec& lev : o.flux_levels) {
      double acc = 0.0;
      for (int k = 1; k <= g.nz - 1; ++k) {
        if (std::abs(g.z(k)) > regions.flux_z_bound + tol) continue;
        for (int f = 0; f < nf; ++f)
          acc += std::norm(lev[std::size_t(k - 1) * nf + f]) *
                 regions.faces[f].perp * g.hz;
      }
      per_level.push_back(acc);
    }
  }
  o.obs_norm_sq = trapezoid(per_level, y.dt);
  return o;
}

CVec make_initial_state(const Grid3D& g, const InitialStateSpec& spec) {
  const CrossSection& s = g.section;
  CVec q = CVec::Zero(g.size());

  auto plateau = [](double d, double lo, double hi) {
    if (d <= lo) return 1.0;
    if (d >= hi) return 0.0;
    return smoothstep5((hi - d) / (hi - lo));
  };

  if (spec.kind == "plateau" || spec.kind == "angular_plateau") {
    if (spec.params.size() != 5)
      throw std::invalid_argument(
          "plateau state needs params {R_in, R_out, z_in, z_out, amp}");
    const double ri = spec.params[0], ro = spec.params[1];
    const double zi = spec.params[2], zo = spec.params[3], amp = spec.params[4];
    if (!(0 < ri && ri < ro) || !(0 < zi && zi < zo))
      throw std::invalid_argument("plateau radii must be ordered and positive");
    for (int k = 1; k <= g.nz - 1; ++k) {
      const double bz = plateau(std::abs(g.z(k)), zi, zo);
      if (bz == 0.0) continue;
      for (int t = 0; t < g.nt(); ++t) {
        const int id = s.interior_nodes[t];
        const double x = s.x(id % (s.nx + 1)), y = s.y(id / (s.nx + 1));
        const double b = amp * bz * plateau(std::hypot(x, y), ri, ro);
        q[g.index(t, k)] = spec.kind == "plateau" ? Complex(x * b, 0.0)
                                                  : Complex(x * b, y * b);
      }
    }
    return q;
  }

  if (spec.kind == "eigenmode") {
    if (s.kind != SectionKind::rectangle)
      throw std::invalid_argument("eigenmode states need a rectangle section");
    if (spec.params.size() != 3)
      throw std::invalid_argument("eigenmode state needs params {mx, my, mz}");
    const double pi = std::acos(-1.0);
    const int mx = int(spec.params[0]), my = int(spec.params[1]),
              mz = int(spec.params[2]);
    for (int k = 1; k <= g.nz - 1; ++k)
      for (int t = 0; t < g.nt(); ++t) {
        const int id = s.interior_nodes[t];
        const int i = id % (s.nx + 1), j = id / (s.nx + 1);
        q[g.index(t, k)] = std::sin(mx * pi * i / double(s.nx)) *
                           std::sin(my * pi * j / double(s.ny)) *
                           std::sin(mz * pi * k / double(g.nz));
      }
    return q;
  }

  throw std::invalid_argument("unknown initial state kind: " + spec.kind);
}

void export_wavefield(const WaveField& f, const std::string& path_base) {
  const Grid3D& g = *f.grid;
  {
    std::ofstream hdr(path_base + ".hdr");
    if (!hdr) throw std::runtime_error("cannot write " + path_base + ".hdr");
    hdr.precision(17);
    hdr << g.section.nx << ' ' << g.section.ny << ' ' << g.nz << ' ' << g.nt()
        << ' ' << f.levels.size() << ' ' << f.t0 << ' ' << f.dt << '\n';
  }
  std::ofstream bin(path_base + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write " + path_base + ".bin");
  for (const CVec& lev : f.levels)
    for (int p = 0; p < lev.size(); ++p) {
      const double re = lev[p].real(), im = lev[p].imag();
      bin.write(reinterpret_cast<const char*>(&re), sizeof re);
      bin.write(reinterpret_cast<const char*>(&im), sizeof im);
    }
}

}  // namespace twistlab
