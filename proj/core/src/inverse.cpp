#include "twistlab/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "twistlab/experiments.hpp"
#include "twistlab/rng.hpp"

namespace twistlab {

namespace {

// Uniform cubic spline on [0,4], one coefficient row per unit piece.
constexpr double kB[4][4] = {
    {0.0, 0.0, 0.0, 1.0 / 6.0},
    {2.0 / 3.0, -2.0, 2.0, -0.5},
    {-22.0 / 3.0, 10.0, -4.0, 0.5},
    {32.0 / 3.0, -8.0, 2.0, -1.0 / 6.0},
};

double bspline(double t) {
  if (t <= 0.0 || t >= 4.0) return 0.0;
  const int i = std::min(3, int(t));
  const double* c = kB[i];
  return ((c[3] * t + c[2]) * t + c[1]) * t + c[0];
}

// integral of bspline over (0, t); the full mass is 1
double bspline_int(double t) {
  static const double cum[4] = {0.0, 1.0 / 24.0, 0.5, 23.0 / 24.0};
  if (t <= 0.0) return 0.0;
  if (t >= 4.0) return 1.0;
  const int i = std::min(3, int(t));
  const double* c = kB[i];
  auto P = [&](double u) {
    return ((c[3] / 4.0 * u + c[2] / 3.0) * u + c[1] / 2.0) * u * u + c[0] * u;
  };
  return cum[i] + P(t) - P(double(i));
}

double sup_sampled(const std::function<double(double)>& f, double lo, double hi,
                   int n) {
  double m = 0.0;
  for (int i = 0; i <= n; ++i)
    m = std::max(m, std::abs(f(lo + (hi - lo) * i / n)));
  return m;
}

}  // namespace

double RateBasis::beta(int j, double z) const {
  const double t = (z + ell) / hk;
  return bspline(t - j + 2.0);
}

double RateBasis::alpha(int j, double z) const {
  const double t = std::min((z + ell) / hk, double(nseg));
  if (t <= 0.0) return 0.0;
  return hk * (bspline_int(t - j + 2.0) - bspline_int(2.0 - j));
}

double RateBasis::rate(const Eigen::VectorXd& w, double z) const {
  if (std::abs(z) > ell) return 0.0;  // profiles are windowed
  const Eigen::VectorXd c = raw(w);
  double acc = 0.0;
  for (int j = 0; j < raw_size(); ++j) acc += c[j] * beta(j, z);
  return acc;
}

double RateBasis::accum(const Eigen::VectorXd& w, double z) const {
  if (z <= -ell) return 0.0;
  const Eigen::VectorXd c = raw(w);
  double acc = 0.0;
  for (int j = 0; j < raw_size(); ++j) acc += c[j] * alpha(j, std::min(z, ell));
  return acc;
}

RateBasis make_rate_basis(double ell, int nseg) {
  if (!(ell > 0.0)) throw std::invalid_argument("rate basis needs ell > 0");
  if (nseg < 2) throw std::invalid_argument("rate basis needs at least two segments");
  RateBasis b;
  b.ell = ell;
  b.nseg = nseg;
  b.hk = 2.0 * ell / nseg;

  // Zero-integral constraint via a Householder reflection: the columns of H
  // past the first span the orthogonal complement of the constraint vector.
  const int nb = b.raw_size();
  Eigen::VectorXd v(nb);
  for (int j = 0; j < nb; ++j) v[j] = b.alpha(j, ell);
  Eigen::VectorXd u = v;
  u[0] += std::copysign(v.norm(), v[0]);
  const Eigen::MatrixXd H =
      Eigen::MatrixXd::Identity(nb, nb) - (2.0 / u.squaredNorm()) * u * u.transpose();
  b.nullspace = H.rightCols(nb - 1);
  return b;
}

InitialStateCheck validate_initial_state(const CVec& q0, const Grid3D& grid,
                                         const Region3D& window, double floor) {
  if (q0.size() != grid.size())
    throw std::invalid_argument("initial state size does not match the grid");
  if (window.count == 0)
    throw std::invalid_argument("empty fit window");
  const CVec a = angular_derivative(grid, q0);

  InitialStateCheck chk;
  chk.margin = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, int>> vals;
  for (int p = 0; p < grid.size(); ++p) {
    if (!window.in[p]) continue;
    const double m = std::abs(a[p]);
    vals.emplace_back(m, p);
    chk.scale = std::max(chk.scale, m);
    if (m < chk.margin) {
      chk.margin = m;
      chk.worst_node = p;
    }
  }
  if (chk.margin < floor) {
    std::sort(vals.begin(), vals.end());
    std::ostringstream msg;
    msg << "initial state lacks angular richness on the fit window: |dphi q0| "
           "down to "
        << chk.margin << " against floor " << floor << "; worst nodes:";
    const int show = std::min<std::size_t>(5, vals.size());
    for (int i = 0; i < show; ++i) {
      const auto x = grid.coords(vals[i].second);
      msg << " " << vals[i].second << " (" << x[0] << ", " << x[1] << ", " << x[2]
          << ") -> " << vals[i].first;
    }
    throw std::invalid_argument(msg.str());
  }
  return chk;
}

InteriorFitData prepare_interior_fit(const CVec& q0_ref, const TwistProfile& ref,
                                     const Grid3D& grid, const Region3D& window) {
  if (q0_ref.size() != grid.size())
    throw std::invalid_argument("initial state size does not match the grid");
  InteriorFitData fit;
  fit.grid = &grid;
  fit.v = angular_derivative(grid, q0_ref);
  fit.vphi = angular_derivative(grid, fit.v);
  fit.v3 = axial_derivative(grid, fit.v);
  for (int p = 0; p < grid.size(); ++p)
    if (window.in[p]) fit.nodes.push_back(p);
  if (fit.nodes.empty()) throw std::invalid_argument("empty fit window");
  fit.znode.resize(int(fit.nodes.size()));
  fit.td_ref.resize(int(fit.nodes.size()));
  for (std::size_t i = 0; i < fit.nodes.size(); ++i) {
    const double z = grid.coords(fit.nodes[i])[2];
    fit.znode[int(i)] = z;
    fit.td_ref[int(i)] = ref.dtheta(z);
  }
  return fit;
}

CVec interior_model(const InteriorFitData& fit, const RateBasis& basis,
                    const Eigen::VectorXd& w) {
  const int m = int(fit.nodes.size());
  CVec out(m);
  for (int i = 0; i < m; ++i) {
    const int p = fit.nodes[i];
    const double z = fit.znode[i];
    const double a = basis.accum(w, z);
    const double ad = basis.rate(w, z);
    out[i] = a * ((2.0 * fit.td_ref[i] + a) * fit.vphi[p] + 2.0 * fit.v3[p]) +
             ad * fit.v[p];
  }
  return out;
}

namespace {

void fill_profile_outputs(ReconstructionResult& res, const RateBasis& basis,
                          const Grid3D& grid,
                          const std::function<double(double)>& truth) {
  res.raw_coeff = basis.raw(res.coeff);
  const int na = grid.n_axial();
  res.z_axial.resize(na);
  res.rate_est.resize(na);
  for (int k = 1; k < grid.nz; ++k) {
    res.z_axial[k - 1] = grid.z(k);
    res.rate_est[k - 1] = basis.rate(res.coeff, grid.z(k));
  }
  if (!truth) return;
  res.rate_true.resize(na);
  for (int k = 1; k < grid.nz; ++k) res.rate_true[k - 1] = truth(grid.z(k));
  const double ell = basis.ell;
  auto diff2 = [&](double z) {
    const double d = basis.rate(res.coeff, z) - truth(z);
    return d * d;
  };
  res.err_l2 = std::sqrt(simpson(diff2, -ell, ell, 4000));
  res.err_sup = sup_sampled(
      [&](double z) { return basis.rate(res.coeff, z) - truth(z); }, -ell, ell, 2000);
}

}  // namespace

ReconstructionResult reconstruct_interior(const InteriorFitData& fit, const CVec& z0,
                                          const RateBasis& basis, double lambda,
                                          int max_iter,
                                          const std::function<double(double)>& truth) {
  if (z0.size() != fit.grid->size())
    throw std::invalid_argument("rate-gap field size does not match the grid");
  const int m = int(fit.nodes.size());
  const int nf = basis.size();
  const int nb = basis.raw_size();
  if (2 * m < nf)
    throw std::invalid_argument("fit window too small for the requested basis");

  const Complex iu(0.0, 1.0);
  CVec d(m);
  for (int i = 0; i < m; ++i) d[i] = -iu * z0[fit.nodes[i]];

  ReconstructionResult res;
  res.lambda = lambda;
  res.data_norm = d.norm();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(nf);

  // per-node raw spline samples, reused across iterations
  Eigen::MatrixXd Bv(m, nb), Av(m, nb);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < nb; ++j) {
      Bv(i, j) = basis.beta(j, fit.znode[i]);
      Av(i, j) = basis.alpha(j, fit.znode[i]);
    }

  double prev = std::numeric_limits<double>::infinity();
  int bad = 0;
  for (int it = 0; it < max_iter; ++it) {
    const CVec model = interior_model(fit, basis, w);
    const CVec r = d - model;
    const double resid = r.norm();
    res.residuals.push_back(resid);
    if (it > 0) {
      if (resid > prev * (1.0 + 1e-12)) {
        if (++bad >= 2) break;
      } else {
        bad = 0;
      }
      if (prev - resid <= 1e-12 * std::max(prev, 1e-300)) {
        res.converged = resid <= prev * (1.0 + 1e-9);
        break;
      }
    }
    if (resid <= 1e-14 * std::max(res.data_norm, 1e-300)) {
      res.converged = true;
      break;
    }

    const Eigen::VectorXd raw = basis.raw(w);
    Eigen::VectorXd aval(m);
    for (int i = 0; i < m; ++i) aval[i] = Av.row(i).dot(raw);
    // complex Jacobian in the raw basis, then the nullspace chain
    Eigen::MatrixXcd Jraw(m, nb);
    for (int i = 0; i < m; ++i) {
      const int p = fit.nodes[i];
      const Complex da =
          (2.0 * fit.td_ref[i] + 2.0 * aval[i]) * fit.vphi[p] + 2.0 * fit.v3[p];
      for (int j = 0; j < nb; ++j)
        Jraw(i, j) = Av(i, j) * da + Bv(i, j) * fit.v[p];
    }
    const Eigen::MatrixXcd Jc = Jraw * basis.nullspace;
    Eigen::MatrixXd A(2 * m, nf);
    A.topRows(m) = Jc.real();
    A.bottomRows(m) = Jc.imag();
    Eigen::VectorXd rhs(2 * m);
    rhs.head(m) = r.real();
    rhs.tail(m) = r.imag();

    Eigen::MatrixXd N = A.transpose() * A;
    const double reg = lambda * std::max(N.trace() / nf, 1e-300);
    N.diagonal().array() += reg;
    const Eigen::VectorXd step = N.ldlt().solve(A.transpose() * rhs);
    w += step;
    prev = resid;
    ++res.iterations;
  }
  if (!res.converged && !res.residuals.empty())
    res.converged = res.residuals.back() <= 1e-10 * std::max(res.data_norm, 1e-300);

  res.coeff = w;
  fill_profile_outputs(res, basis, *fit.grid, truth);
  return res;
}

namespace {

TwistProfile offset_profile(const TwistProfile& ref, const RateBasis& basis,
                            const Eigen::VectorXd& w) {
  TwistProfile pr;
  pr.ell = ref.ell;
  pr.theta = [](double) { return 0.0; };
  pr.dtheta = [&ref, &basis, w](double z) {
    return ref.dtheta(z) + basis.accum(w, z);
  };
  pr.ddtheta = [&ref, &basis, w](double z) {
    return ref.ddtheta(z) + basis.rate(w, z);
  };
  return pr;
}

}  // namespace

OperatorFitData prepare_operator_fit(const CVec& q0, const TwistProfile& ref,
                                     const Grid3D& grid, const Region3D& window) {
  if (q0.size() != grid.size())
    throw std::invalid_argument("initial state size does not match the grid");
  OperatorFitData fit;
  fit.grid = &grid;
  fit.ref = ref;
  fit.q0 = q0;
  fit.href_q0 = spmv(assemble_H(ref, grid).A, q0);
  for (int p = 0; p < grid.size(); ++p)
    if (window.in[p]) fit.nodes.push_back(p);
  if (fit.nodes.empty()) throw std::invalid_argument("empty fit window");
  return fit;
}

CVec operator_model(const OperatorFitData& fit, const RateBasis& basis,
                    const Eigen::VectorXd& w) {
  const TwistProfile pr = offset_profile(fit.ref, basis, w);
  const CVec hw = spmv(assemble_H(pr, *fit.grid).A, fit.q0);
  const int m = int(fit.nodes.size());
  CVec out(m);
  for (int i = 0; i < m; ++i) {
    const int p = fit.nodes[i];
    out[i] = fit.href_q0[p] - hw[p];
  }
  return out;
}

ReconstructionResult reconstruct_interior_operator(
    const OperatorFitData& fit, const CVec& z0, const RateBasis& basis,
    double lambda, int max_iter, const std::function<double(double)>& truth) {
  if (z0.size() != fit.grid->size())
    throw std::invalid_argument("rate-gap field size does not match the grid");
  const int m = int(fit.nodes.size());
  const int nf = basis.size();
  if (2 * m < nf)
    throw std::invalid_argument("fit window too small for the requested basis");

  const Complex iu(0.0, 1.0);
  CVec d(m);
  for (int i = 0; i < m; ++i) d[i] = -iu * z0[fit.nodes[i]];

  ReconstructionResult res;
  res.lambda = lambda;
  res.data_norm = d.norm();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(nf);

  CVec model = operator_model(fit, basis, w);
  double prev = std::numeric_limits<double>::infinity();
  int bad = 0;
  for (int it = 0; it < max_iter; ++it) {
    const CVec r = d - model;
    const double resid = r.norm();
    res.residuals.push_back(resid);
    if (it > 0) {
      if (resid > prev * (1.0 + 1e-12)) {
        if (++bad >= 2) break;
      } else {
        bad = 0;
      }
      if (prev - resid <= 1e-12 * std::max(prev, 1e-300)) {
        res.converged = resid <= prev * (1.0 + 1e-9);
        break;
      }
    }
    if (resid <= 1e-14 * std::max(res.data_norm, 1e-300)) {
      res.converged = true;
      break;
    }

    const double h = 0.01 * std::max(1.0, w.cwiseAbs().maxCoeff());
    Eigen::MatrixXcd Jc(m, nf);
    for (int j = 0; j < nf; ++j) {
      Eigen::VectorXd wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      Jc.col(j) =
          (operator_model(fit, basis, wp) - operator_model(fit, basis, wm)) /
          (2.0 * h);
    }
    Eigen::MatrixXd A(2 * m, nf);
    A.topRows(m) = Jc.real();
    A.bottomRows(m) = Jc.imag();
    Eigen::VectorXd rhs(2 * m);
    rhs.head(m) = r.real();
    rhs.tail(m) = r.imag();

    Eigen::MatrixXd N = A.transpose() * A;
    const double reg = lambda * std::max(N.trace() / nf, 1e-300);
    N.diagonal().array() += reg;
    const Eigen::VectorXd step = N.ldlt().solve(A.transpose() * rhs);
    w += step;
    prev = resid;
    ++res.iterations;
    model = operator_model(fit, basis, w);
  }
  if (!res.converged && !res.residuals.empty())
    res.converged = res.residuals.back() <= 1e-10 * std::max(res.data_norm, 1e-300);

  res.coeff = w;
  fill_profile_outputs(res, basis, *fit.grid, truth);
  return res;
}

ReconstructionResult reconstruct_boundary(const ObservationSet& obs, const CVec& q0,
                                          const TwistProfile& ref, const Grid3D& grid,
                                          const ObsRegions& regions,
                                          const MetricField& metric_ref,
                                          const RateBasis& basis,
                                          const BoundaryFitConfig& cfg,
                                          const std::function<double(double)>& truth) {
  if (obs.kind != ObsKind::boundary)
    throw std::invalid_argument("boundary reconstruction needs wall observations");
  if (obs.flux_levels.empty())
    throw std::invalid_argument("observation set carries no flux data");
  if (std::abs(obs.dt - cfg.dt) > 1e-12 || std::abs(obs.t0) > 1e-12)
    throw std::invalid_argument("observation time axis does not match the solver");
  if (std::abs(basis.ell - ref.ell) > 1e-12)
    throw std::invalid_argument("basis window does not match the profile window");
  const double T = cfg.dt * double(obs.flux_levels.size() - 1);
  if (std::abs(T - cfg.T) > 1e-9)
    throw std::invalid_argument("observation span does not match the solver horizon");

  // masked flux entries and their quadrature weights
  const int nfc = int(regions.faces.size());
  std::vector<int> keep;
  std::vector<double> area;
  for (int k = 1; k < grid.nz; ++k) {
    if (std::abs(grid.z(k)) > regions.flux_z_bound + 1e-9 * grid.hz) continue;
    for (int f = 0; f < nfc; ++f) {
      keep.push_back((k - 1) * nfc + f);
      area.push_back(regions.faces[f].perp * grid.hz);
    }
  }
  if (keep.empty()) throw std::invalid_argument("empty wall observation section");
  const int nl = int(obs.flux_levels.size());
  const int rows = nl * int(keep.size());

  const DiscreteOperator Href = assemble_H(ref, grid);
  const WaveField qr = crank_nicolson_solve(Href, q0, {}, cfg.T, cfg.dt);

  auto misfit = [&](const Eigen::VectorXd& w) {
    const TwistProfile pr = offset_profile(ref, basis, w);
    const DiscreteOperator H = assemble_H(pr, grid);
    const WaveField q = crank_nicolson_solve(H, q0, {}, cfg.T, cfg.dt);
    const ObservationSet pred =
        extract_observations(q, qr, ObsKind::boundary, regions, metric_ref);
    Eigen::VectorXd out(2 * rows);
    int at = 0;
    for (int l = 0; l < nl; ++l) {
      const double tw = cfg.dt * ((l == 0 || l == nl - 1) ? 0.5 : 1.0);
      const CVec& pf = pred.flux_levels[l];
      const CVec& of = obs.flux_levels[l];
      for (std::size_t e = 0; e < keep.size(); ++e) {
        const Complex diff = pf[keep[e]] - of[keep[e]];
        const double wt = std::sqrt(area[e] * tw);
        out[at] = wt * diff.real();
        out[rows + at] = wt * diff.imag();
        ++at;
      }
    }
    return out;
  };

  const int nf = basis.size();
  ReconstructionResult res;
  res.lambda = cfg.lambda;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(nf);
  {
    double dn = 0.0;
    for (int l = 0; l < nl; ++l) {
      const double tw = cfg.dt * ((l == 0 || l == nl - 1) ? 0.5 : 1.0);
      for (std::size_t e = 0; e < keep.size(); ++e)
        dn += tw * area[e] * std::norm(obs.flux_levels[l][keep[e]]);
    }
    res.data_norm = std::sqrt(dn);
  }

  Eigen::VectorXd mis = misfit(w);
  double prev = std::numeric_limits<double>::infinity();
  int bad = 0;
  for (int it = 0; it < cfg.max_iter; ++it) {
    const double resid = mis.norm();
    res.residuals.push_back(resid);
    if (it > 0) {
      if (resid > prev * (1.0 + 1e-12)) {
        if (++bad >= 2) break;
      } else {
        bad = 0;
      }
      if (prev - resid <= cfg.tol * std::max(prev, 1e-300)) {
        res.converged = resid <= prev * (1.0 + 1e-9);
        break;
      }
    }
    if (resid <= 1e-13 * std::max(res.data_norm, 1e-300)) {
      res.converged = true;
      break;
    }

    Eigen::MatrixXd J(2 * rows, nf);
    const double h = cfg.fd_step * std::max(1.0, w.cwiseAbs().maxCoeff());
    for (int j = 0; j < nf; ++j) {
      Eigen::VectorXd wj = w;
      wj[j] += h;
      J.col(j) = (misfit(wj) - mis) / h;
    }
    Eigen::MatrixXd N = J.transpose() * J;
    const double reg = cfg.lambda * std::max(N.trace() / nf, 1e-300);
    N.diagonal().array() += reg;
    const Eigen::VectorXd step = N.ldlt().solve(-J.transpose() * mis);
    w += step;
    prev = resid;
    ++res.iterations;
    mis = misfit(w);
  }
  if (!res.converged && !res.residuals.empty())
    res.converged = res.residuals.back() <= 1e-6 * std::max(res.data_norm, 1e-300);

  res.coeff = w;
  fill_profile_outputs(res, basis, grid, truth);
  return res;
}

StabilityReport stability_experiment(const Grid3D& grid, const TwistProfile& ref,
                                     const CVec& q0, const ObsRegions& regions,
                                     const MetricField& metric_ref, double T,
                                     double dt, const std::vector<double>& scales,
                                     const std::vector<double>& shape, int ensemble,
                                     std::uint64_t seed, int threads) {
  if (scales.empty() && ensemble <= 0)
    throw std::invalid_argument("stability run needs at least one pair");
  if (shape.empty())
    throw std::invalid_argument("stability run needs a perturbation shape");

  const double ell = ref.ell;
  const DiscreteOperator Href = assemble_H(ref, grid);
  const WaveField qr = crank_nicolson_solve(Href, q0, {}, T, dt);

  StabilityReport rep;
  rep.dyadic_count = int(scales.size());
  const CounterRng rng(seed);

  // Coefficients first, so the pair list is fixed before any solve runs.
  std::vector<std::vector<double>> coeffs;
  for (const double c : scales) {
    std::vector<double> coeff(shape.size());
    for (std::size_t j = 0; j < shape.size(); ++j) coeff[j] = c * shape[j];
    coeffs.push_back(std::move(coeff));
  }
  // Ensemble pairs randomize the gap magnitude across the dyadic span, its
  // sign, and a bounded relative reshaping of the base direction. The ratio
  // tracks the axial frequency content of the gap (higher modes weigh the
  // rate norm up faster than the measured response), so unconstrained
  // coefficient draws scatter it by design; the reshape bound keeps draws in
  // the regime whose flatness the dyadic family certifies.
  for (int e = 0; e < std::max(0, ensemble); ++e) {
    const CounterRng st = rng.stream(std::uint64_t(e) + 1);
    const double mag = st.uniform(0, 0.125, 1.0);
    const double sgn = st.uniform(1, -1.0, 1.0) < 0.0 ? -1.0 : 1.0;
    std::vector<double> coeff(shape.size());
    for (std::size_t j = 0; j < shape.size(); ++j)
      coeff[j] = sgn * mag * shape[j] * (1.0 + st.uniform(2 + j, -0.08, 0.08));
    coeffs.push_back(std::move(coeff));
  }

  rep.pairs.resize(coeffs.size());
  parallel_slots(int(coeffs.size()), threads, [&](int id) {
    const TwistProfile delta = fourier_twist(coeffs[id], ell);
    TwistProfile pert;
    pert.ell = ell;
    pert.theta = [](double) { return 0.0; };
    pert.dtheta = [&ref, delta](double z) { return ref.dtheta(z) + delta.dtheta(z); };
    pert.ddtheta = [&ref, delta](double z) {
      return ref.ddtheta(z) + delta.ddtheta(z);
    };
    const DiscreteOperator H = assemble_H(pert, grid);
    const WaveField q = crank_nicolson_solve(H, q0, {}, T, dt);
    const ObservationSet ob =
        extract_observations(q, qr, ObsKind::interior, regions, metric_ref);
    StabilityPair pr;
    pr.id = id;
    pr.lhs = simpson(
        [&](double z) {
          const double d = pert.ddtheta(z) - ref.ddtheta(z);
          return d * d;
        },
        -ell, ell, 10000);
    pr.rhs_obs = ob.obs_norm_sq;
    pr.rhs_init = ob.init_norm_sq;
    const double rhs = pr.rhs_obs + pr.rhs_init;
    pr.ratio = rhs > 0.0 ? pr.lhs / rhs : std::numeric_limits<double>::quiet_NaN();
    rep.pairs[id] = pr;
  });

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int i = 0; i < rep.dyadic_count; ++i) {
    lo = std::min(lo, rep.pairs[i].ratio);
    hi = std::max(hi, rep.pairs[i].ratio);
  }
  rep.dyadic_spread = rep.dyadic_count > 0 ? hi / lo : 0.0;
  rep.dyadic_ok = rep.dyadic_count > 0 && std::isfinite(rep.dyadic_spread) &&
                  rep.dyadic_spread <= 1.3;

  std::vector<double> ens;
  for (std::size_t i = rep.dyadic_count; i < rep.pairs.size(); ++i)
    ens.push_back(rep.pairs[i].ratio);
  if (!ens.empty()) {
    std::vector<double> srt = ens;
    std::sort(srt.begin(), srt.end());
    rep.ensemble_median = srt[srt.size() / 2];
    rep.ensemble_max = srt.back();
    rep.ensemble_ok = rep.ensemble_max < 2.0 * rep.ensemble_median;
  }
  return rep;
}

}  // namespace twistlab
