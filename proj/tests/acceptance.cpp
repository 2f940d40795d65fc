// End-to-end acceptance checks for the twisted-waveguide laboratory. Each
// criterion prints one verdict line; the exit code is the number of failures.
// Run a single criterion with --criterion N (1..11), everything with no
// arguments.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "twistlab/carleman.hpp"
#include "twistlab/config.hpp"
#include "twistlab/experiments.hpp"
#include "twistlab/forward.hpp"
#include "twistlab/geometry.hpp"
#include "twistlab/inverse.hpp"
#include "twistlab/metric.hpp"
#include "twistlab/norms.hpp"
#include "twistlab/operators.hpp"
#include "twistlab/results.hpp"
#include "twistlab/rng.hpp"

using namespace twistlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return std::string(buf);
}

const ResultTable& find_table(const ResultsBundle& b, const std::string& name) {
  for (const auto& t : b.tables)
    if (t.name == name) return t;
  throw std::out_of_range("bundle has no table named " + name);
}

// --- 1. volume preservation of the straightened metric ----------------------
// Random admissible profiles on the production grid; the tabulated metric
// determinant must sit on 1 to 1e-10 at every node.
Outcome criterion1(int) {
  const Grid3D grid = make_grid(make_disk_section(1.0, 16, 16), 2.0, 64);
  const CounterRng rng(2026);
  double worst = 0.0;
  for (int draw = 0; draw < 5; ++draw) {
    const CounterRng st = rng.stream(std::uint64_t(draw));
    const std::vector<double> coeff{st.uniform(0, -0.05, 0.05),
                                    st.uniform(1, -0.05, 0.05),
                                    st.uniform(2, -0.05, 0.05)};
    const TwistProfile p = make_twist_profile(ProfileKind::fourier, coeff, 0.5, 1.0);
    const MetricField m = assemble_metric(p, grid);
    worst = std::max(worst, max_unimodular_defect(m));
  }
  return {worst <= 1e-10,
          fmt("max |det g - 1| = %.3g over 5 random profiles (tol 1e-10)", worst)};
}

// --- 2. stencil consistency of the two operator assemblies ------------------
// A smooth compactly supported field is pushed through the analytic
// divergence-form assembly and the tabulated-metric assembly; the mismatch
// must shrink at second order under grid halving, and the two stencils must
// cancel exactly at zero twist.
Outcome criterion2(int) {
  const auto plateau = [](double t) {
    const double supp = 0.6;
    if (std::abs(t) >= supp) return 0.0;
    const double c = std::cos(M_PI * t / (2.0 * supp));
    return c * c * c * c * c * c;
  };
  const TwistProfile tw = bump_twist(0.3, 0.5);

  double errs[3] = {0, 0, 0};
  const int sizes[3] = {8, 16, 32};
  for (int lev = 0; lev < 3; ++lev) {
    const int n = sizes[lev];
    const Grid3D g = make_grid(make_disk_section(1.0, n, n), 1.0, n);
    Vec u(g.size());
    for (int p = 0; p < g.size(); ++p) {
      const Eigen::Vector3d x = g.coords(p);
      u[p] = plateau(x[0]) * plateau(x[1]) * plateau(x[2]);
    }
    const DiscreteOperator H = assemble_H(tw, g);
    const DiscreteOperator L = assemble_laplace_beltrami(assemble_metric(tw, g), g);
    const Vec r = H.A * u + L.A * u;
    errs[lev] = r.cwiseAbs().maxCoeff();
  }
  const double o1 = std::log2(errs[0] / errs[1]);
  const double o2 = std::log2(errs[1] / errs[2]);

  const Grid3D g0 = make_grid(make_disk_section(1.0, 8, 8), 1.0, 8);
  const DiscreteOperator Hz = assemble_H(zero_twist(), g0);
  const DiscreteOperator Lz =
      assemble_laplace_beltrami(assemble_metric(zero_twist(), g0), g0);
  double anchor = 0.0;
  const SpMat S = Hz.A + Lz.A;
  for (int k = 0; k < S.outerSize(); ++k)
    for (SpMat::InnerIterator it(S, k); it; ++it)
      anchor = std::max(anchor, std::abs(it.value()));

  const bool pass = o1 >= 1.8 && o2 >= 1.8 && anchor <= 1e-12;
  return {pass, fmt("orders %.2f, %.2f (need >= 1.8); untwisted stencil gap %.3g",
                    o1, o2, anchor)};
}

// --- 3. unitarity of the homogeneous time stepper ---------------------------
Outcome criterion3(int) {
  const Grid3D grid = make_grid(make_disk_section(1.0, 12, 12), 1.0, 32);
  const CVec q0 = make_initial_state(grid, {"plateau", {0.5, 0.8, 0.4, 0.8, 1.0}});
  double worst = 0.0;
  for (const TwistProfile& tw : {zero_twist(), bump_twist(0.1, 0.5)}) {
    const DiscreteOperator H = assemble_H(tw, grid);
    const WaveField wf =
        crank_nicolson_solve(H, q0, BoundaryData{}, 1.0, 1.0 / 256.0);
    worst = std::max(worst, wf.norm_drift);
  }
  return {worst <= 1e-12,
          fmt("norm drift %.3g over 256 steps, zero and bump twists (tol 1e-12)",
              worst)};
}

// --- 4. the twin gap satisfies its exact difference system ------------------
// The residual of the gap field in the trapezoidal scheme, driven by the
// closed-form source, must converge at second order under joint space-time
// refinement.
Outcome criterion4(int) {
  const TwistProfile ref = bump_twist(0.05, 0.5);
  const TwistProfile pert = fourier_twist({0.02, -0.01}, 0.5);
  const TwistProfile twin = combine_profiles(ref, pert);
  const double T = 0.5;

  double resid[3] = {0, 0, 0};
  for (int lev = 0; lev < 3; ++lev) {
    const int n = 8 << lev;
    const double dt = 1.0 / (16 << lev);
    const Grid3D g = make_grid(make_disk_section(1.0, n, n), 1.0, 2 * n);
    const CVec q0 = make_initial_state(g, {"plateau", {0.5, 0.8, 0.4, 0.8, 1.0}});
    const DiscreteOperator Hr = assemble_H(ref, g);
    const DiscreteOperator Ht = assemble_H(twin, g);
    const WaveField qr = crank_nicolson_solve(Hr, q0, BoundaryData{}, T, dt);
    const WaveField qt = crank_nicolson_solve(Ht, q0, BoundaryData{}, T, dt);
    const WaveField y = difference(qt, qr);
    const WaveField R = linearized_source(twin, ref, qr);
    resid[lev] = cn_residual(Ht, y, R);
  }
  const double o1 = std::log2(resid[0] / resid[1]);
  const double o2 = std::log2(resid[1] / resid[2]);
  return {o1 >= 1.8 && o2 >= 1.8,
          fmt("residuals %.3g -> %.3g -> %.3g, orders %.2f, %.2f (need >= 1.8)",
              resid[0], resid[1], resid[2], o1, o2)};
}

// --- 5. weighted axial comparison of a profile against its derivative -------
Outcome criterion5(int) {
  const ExperimentConfig c = default_config("lemmas");
  const Scene sc = build_scene(c);
  const WeightPoint wp =
      select_weight_point(sc.grid, c.weight_L, c.profile_ell, WeightMode::interior,
                          c.weight_d3, c.weight_gamma);
  const WeightFields wf = build_weights(wp, sc.grid, c.time_T, c.time_dt, sc.ref);
  const CutoffPair chi = build_cutoffs(
      {c.cutoff_complement, c.cutoff_cx, c.cutoff_cy, c.cutoff_r_one, c.cutoff_r_zero},
      c.profile_ell, c.weight_L, sc.grid);

  bool all = true;
  double worst = 0.0;
  for (double amp : {0.05, 0.02, -0.03})
    for (double s : {1.0, 4.0, 16.0, 64.0}) {
      const TwistProfile p = bump_twist(amp, c.profile_ell);
      const AxialPoincareResult r =
          verify_axial_poincare(p.dtheta, p.ddtheta, chi, wf, s);
      all = all && r.pass;
      if (r.rhs > 0.0) worst = std::max(worst, r.lhs / r.rhs);
    }
  return {all, fmt("12/12 profile-derivative comparisons hold, worst ratio %.3g",
                   worst)};
}

// --- 6. nested level sets of the boundary-mode weight -----------------------
Outcome criterion6(int) {
  const ExperimentConfig c = default_config("lemmas");
  const Scene sc = build_scene(c);
  const WeightPoint wp0 =
      select_weight_point(sc.grid, c.weight_L, c.profile_ell, WeightMode::boundary,
                          c.weight_d3, c.weight_gamma, c.weight_dtau);

  double gaps[3] = {0, 0, 0};
  bool ok = true;
  for (int j = 0; j < 3; ++j) {
    const WeightPoint wp =
        select_weight_point(sc.grid, c.weight_L, c.profile_ell, WeightMode::boundary,
                            c.weight_d3, c.weight_gamma, wp0.d_tau + double(j));
    const WeightFields wf = build_weights(wp, sc.grid, c.time_T, c.time_dt, sc.ref);
    const WeightSeparationResult ws = verify_weight_separation(wf);
    bool nested = ws.omega1.count > 0 && ws.omega1.count < ws.omega0.count &&
                  ws.omega0.count < sc.grid.nt();
    for (int it = 0; it < sc.grid.nt() && nested; ++it)
      if (ws.omega1.in[it] && !ws.omega0.in[it]) nested = false;
    ok = ok && ws.pass && nested && ws.m1 < ws.m0;
    gaps[j] = ws.m0 - ws.m1;
  }
  ok = ok && gaps[0] < gaps[1] && gaps[1] < gaps[2];
  return {ok, fmt("separation gaps %.4g < %.4g < %.4g over the anchor sweep",
                  gaps[0], gaps[1], gaps[2])};
}

// --- 7. weighted energy estimate: finite ratios, plateau, stable constant ---
Outcome criterion7(int threads) {
  ExperimentConfig c = default_config("carleman");
  c.refine = true;
  c.threads = threads;
  const ResultsBundle b = run_experiment(c);

  const ResultTable& t = find_table(b, "functional");
  bool finite = t.rows.size() == 20;
  for (const auto& row : t.rows) finite = finite && std::isfinite(row.back());
  const double s0 = get_scalar(b, "s0");
  const double C0 = get_scalar(b, "C0");
  const double drift = get_scalar(b, "C0_drift");
  const bool pass = finite && s0 > 0.0 && drift < 0.25;
  return {pass, fmt("20 finite ratios, plateau at s0 = %.3g, C0 = %.4g, "
                    "refined drift %.1f%% (tol 25%%)",
                    s0, C0, 100.0 * drift)};
}

// --- 8. decay of the weighted time-zero norm in the large parameter ---------
Outcome criterion8(int threads) {
  ExperimentConfig c = default_config("carleman");
  c.threads = threads;
  const ResultsBundle b = run_experiment(c);
  const double slope = get_scalar(b, "slope");
  return {slope <= -1.2,
          fmt("log-log decay slope %.2f (need <= -1.2)", slope)};
}

// --- 9. interior recovery: exact on representable gaps, bounded off them ----
Outcome criterion9(int threads) {
  // (a) a gap inside the recovery span comes back at the solver floor
  const ExperimentConfig c = default_config("inverse_interior");
  const Scene sc = build_scene(c);
  const RateBasis basis = make_rate_basis(c.profile_ell, c.inverse_segments);

  const CounterRng rng(11);
  Eigen::VectorXd wstar(basis.size());
  for (int j = 0; j < basis.size(); ++j) wstar[j] = rng.uniform(j, -0.03, 0.03);

  TwistProfile span;
  span.ell = basis.ell;
  span.theta = [](double) { return 0.0; };
  span.dtheta = [&](double z) { return basis.accum(wstar, z); };
  span.ddtheta = [&](double z) { return basis.rate(wstar, z); };
  const TwistProfile twin = combine_profiles(sc.ref, span);

  const Complex iu(0.0, 1.0);
  const CVec hr = spmv(assemble_H(sc.ref, sc.grid).A, sc.q0);
  const CVec ht = spmv(assemble_H(twin, sc.grid).A, sc.q0);
  const CVec z0 = iu * (hr - ht);

  const RegionMask wmask = disk_mask(sc.grid.section, c.window_cx, c.window_cy,
                                     c.window_r);
  const Region3D window = make_region(sc.grid, wmask, -c.weight_L, c.weight_L);
  const OperatorFitData fit = prepare_operator_fit(sc.q0, sc.ref, sc.grid, window);
  const ReconstructionResult in_span = reconstruct_interior_operator(
      fit, z0, basis, c.inverse_lambda, c.inverse_max_iter,
      [&](double z) { return basis.rate(wstar, z); });

  const double coeff_err = (in_span.coeff - wstar).norm() / wstar.norm();
  const double resid_rel =
      in_span.residuals.empty()
          ? std::numeric_limits<double>::infinity()
          : in_span.residuals.back() / std::max(in_span.data_norm, 1e-300);
  const bool pass_a = in_span.converged && coeff_err <= 1e-6 && resid_rel <= 1e-8;

  // (b) a bump gap outside the span stays within the frozen error budget
  ExperimentConfig cb = default_config("inverse_interior");
  cb.threads = threads;
  const ResultsBundle b = run_experiment(cb);
  const double rel_err = get_scalar(b, "rel_err_l2");
  const bool pass_b = get_scalar(b, "converged") == 1.0 && rel_err <= 0.15;

  return {pass_a && pass_b,
          fmt("in-span coeff error %.2g (tol 1e-6), data residual %.2g; "
              "out-of-span profile error %.3f (tol 0.15)",
              coeff_err, resid_rel, rel_err)};
}

// --- 10. stability of the gap-to-data ratio across amplitudes and draws -----
Outcome criterion10(int threads) {
  ExperimentConfig c = default_config("stability");
  c.threads = threads;
  const ResultsBundle b = run_experiment(c);
  const double spread = get_scalar(b, "dyadic_spread");
  const double med = get_scalar(b, "ensemble_median");
  const double mx = get_scalar(b, "ensemble_max");
  const bool pass = get_scalar(b, "dyadic_ok") == 1.0 &&
                    get_scalar(b, "ensemble_ok") == 1.0;
  return {pass, fmt("amplitude-family spread %.3f (tol 1.30); ensemble max/median "
                    "%.2f (tol 2.00)",
                    spread, med > 0 ? mx / med : -1.0)};
}

// --- 11. byte-identical outputs for identical configuration and seed --------
Outcome criterion11(int) {
  namespace fs = std::filesystem;
  ExperimentConfig c = default_config("forward");
  c.seed = 424242;

  const ResultsBundle b1 = run_experiment(c);
  const ResultsBundle b2 = run_experiment(c);

  const fs::path base = fs::temp_directory_path() / "twistlab_acceptance_rerun";
  fs::remove_all(base);
  const std::string m1 = export_bundle(b1, (base / "first").string());
  const std::string m2 = export_bundle(b2, (base / "second").string());
  fs::remove_all(base);

  return {m1 == m2, m1 == m2 ? "manifests of both runs are byte-identical"
                             : "manifests differ between identical runs"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks for the twisted-waveguide laboratory"};
  int which = 0;
  int threads = 1;
  app.add_option("--criterion", which, "run one criterion (1..11); 0 runs all")
      ->check(CLI::Range(0, 11));
  app.add_option("--threads", threads, "worker threads for the experiment runs")
      ->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome(int)>> checks = {
      criterion1, criterion2, criterion3, criterion4, criterion5, criterion6,
      criterion7, criterion8, criterion9, criterion10, criterion11};

  int failures = 0;
  for (int i = 1; i <= int(checks.size()); ++i) {
    if (which != 0 && i != which) continue;
    const auto tic = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = checks[std::size_t(i - 1)](threads);
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tic)
            .count();
    std::printf("criterion %2d: %s  %s  [%.1fs]\n", i, out.pass ? "PASS" : "FAIL",
                out.detail.c_str(), sec);
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  if (which == 0)
    std::printf("%d of %zu criteria failed\n", failures, checks.size());
  return failures;
}
