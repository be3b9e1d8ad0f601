// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// The water-quality criteria share one full 48 h run (minutes at N=500).

#include <unsupported/Eigen/KroneckerProduct>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "adrmor/campaign.hpp"
#include "adrmor/config.hpp"

using namespace adrmor;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Verdict()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!v.pass) ++failures;
  std::printf("%s [%d] %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), v.detail.c_str(), s);
  std::fflush(stdout);
}

std::string fmt(double x, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << x;
  return os.str();
}

MatrixXd gaussian(std::mt19937_64& rng, Index r, Index c) {
  std::normal_distribution<double> d;
  MatrixXd m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = d(rng);
  return m;
}

MatrixXd random_stable(std::mt19937_64& rng, Index n, double margin) {
  const MatrixXd R = gaussian(rng, n, n) / std::sqrt(static_cast<double>(n));
  return R - (R.eigenvalues().real().maxCoeff() + margin) * MatrixXd::Identity(n, n);
}

Verdict projection_identity() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double worst = 0.0;
  for (Index n = 1; n <= 30; ++n) {
    BilinearSystem s;
    s.A = random_stable(rng, n, 1.5);
    for (int i = 0; i < 3; ++i) {
      const MatrixXd Q = gaussian(rng, n, n);
      s.slices.push_back(MatrixXd(0.3 * Q / Q.operatorNorm()).sparseView());
    }
    s.B = gaussian(rng, n, 3);
    s.C = gaussian(rng, 2, n);
    InputSchedule in{0.0, 5e-3, MatrixXd(3, 400)};
    for (Index k = 0; k < in.u.size(); ++k) in.u.data()[k] = unif(rng);
    const VectorXd q0 = gaussian(rng, n, 1);
    const MatrixXd I = MatrixXd::Identity(n, n);
    const Trajectory a = integrate(s, in, q0), b = integrate(project(s, I, I), in, q0);
    worst = std::max(worst, (a.outputs - b.outputs).cwiseAbs().maxCoeff());
  }
  CoefficientSignals sig;
  sig.velocity = Signal::function([](double t) { return 1.0 + 0.3 * std::sin(4.0 * t); });
  sig.diffusivity = Signal::constant(0.05);
  sig.reaction = Signal::constant(-0.1);
  sig.source = Signal::constant(0.2);
  sig.boundary = Signal::constant(1.0);
  sig.t0 = 0.0;
  sig.t_end = 1.0;
  const BilinearSystem fom = assemble_fom(GridSpec::uniform(1.0, 50));
  const MatrixXd I = MatrixXd::Identity(50, 50);
  const Trajectory a = integrate(fom, sig, 0.0, 1.0, 1e-3, VectorXd::Zero(50));
  const Trajectory b = integrate(project(fom, I, I), sig, 0.0, 1.0, 1e-3, VectorXd::Zero(50));
  const double fom_dev = (a.outputs - b.outputs).cwiseAbs().maxCoeff();
  return {worst < 1e-10 && fom_dev < 1e-10,
          "random n=1..30 max dev " + fmt(worst) + ", FOM N=50 max dev " + fmt(fom_dev)};
}

MatrixXd kron_oracle(const MatrixXd& A, const std::vector<MatrixXd>& N, const MatrixXd& Ah,
                     const std::vector<MatrixXd>& Nh, const MatrixXd& F) {
  const Index n = A.rows(), r = Ah.rows();
  MatrixXd L = Eigen::kroneckerProduct(MatrixXd::Identity(r, r), A).eval() +
               Eigen::kroneckerProduct(Ah, MatrixXd::Identity(n, n)).eval();
  for (std::size_t i = 0; i < N.size(); ++i) L += Eigen::kroneckerProduct(Nh[i], N[i]).eval();
  const VectorXd f = Eigen::Map<const VectorXd>(F.data(), F.size());
  const VectorXd x = L.partialPivLu().solve(-f);
  return Eigen::Map<const MatrixXd>(x.data(), n, r);
}

BilinearSystem scalar_system(double a, double n, double b, double c) {
  BilinearSystem s;
  s.A = MatrixXd::Constant(1, 1, a);
  s.slices = {MatrixXd::Constant(1, 1, n).sparseView()};
  s.B = MatrixXd::Constant(1, 1, b);
  s.C = MatrixXd::Constant(1, 1, c);
  return s;
}

Verdict matrix_equations() {
  std::mt19937_64 rng(20240);
  std::uniform_int_distribution<int> dim(2, 20), cols(1, 6), nslices(1, 3);
  const SolveOptions tight{1e-13, 500};
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = dim(rng);
    const MatrixXd A = random_stable(rng, n, 1.0);
    std::vector<MatrixXd> N;
    const int m = nslices(rng);
    for (int i = 0; i < m; ++i) N.push_back(0.5 * gaussian(rng, n, n) / std::sqrt(static_cast<double>(n)));
    MatrixXd X, ref;
    if (trial % 2 == 0) {
      const MatrixXd G = gaussian(rng, n, 2);
      const MatrixXd F = G * G.transpose();
      X = solve_generalized_lyapunov(A, N, F, tight);
      ref = kron_oracle(A, N, A, N, F);
    } else {
      const Index r = std::min<Index>(cols(rng), n);
      const MatrixXd Ah = random_stable(rng, r, 1.0);
      std::vector<MatrixXd> Nh;
      for (int i = 0; i < m; ++i) Nh.push_back(0.5 * gaussian(rng, r, r) / std::sqrt(static_cast<double>(r)));
      const MatrixXd F = gaussian(rng, n, r);
      X = solve_generalized_sylvester(A, N, Ah, Nh, F, tight);
      ref = kron_oracle(A, N, Ah, Nh, F);
    }
    worst = std::max(worst, (X - ref).norm() / ref.norm());
  }
  const double p1 = gramians(scalar_system(-1, 0, 1, 1)).P(0, 0);
  const double p2 = gramians(scalar_system(-1, 0.5, 1, 1), {1e-15, 500}).P(0, 0);
  const std::vector<MatrixXd> none{MatrixXd::Zero(1, 1)};
  const double x = solve_generalized_sylvester(MatrixXd::Constant(1, 1, -1), none, MatrixXd::Constant(1, 1, -2), none,
                                               MatrixXd::Ones(1, 1))(0, 0);
  const double closed = std::max({std::abs(p1 - 0.5), std::abs(p2 - 4.0 / 7.0), std::abs(x - 1.0 / 3.0)});
  return {worst < 1e-8 && closed < 1e-12,
          "200 instances worst rel " + fmt(worst) + ", closed forms worst abs " + fmt(closed)};
}

Verdict reduction_sanity() {
  SweepSettings s;
  s.nodes = 100;
  const SweepModel m = sweep_model(s, 10.0);
  H2Options o;
  o.order = 8;
  o.statistics = InputStatistics::from_samples(sweep_schedule(s, m, make_sweep_signals(s.base)).u);
  const ReductionResult r = reduce_h2(m.fom, o);
  // Explicit error systems in the reduction frame, initial ROM rebuilt independently.
  const ReductionFrame f = make_reduction_frame(m.fom, o.statistics, o.frame);
  BilinearSystem fs;
  fs.A = f.A;
  fs.slices = f.slices;
  fs.B = f.B;
  fs.C = f.C;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gramians(fs).P);
  const MatrixXd V0 = detail::orthonormalize(es.eigenvectors().rightCols(8).rowwise().reverse());
  const double e0 = h2_error(fs, project(fs, V0, V0));
  const double e1 = h2_error(fs, project(fs, r.V, r.W));
  const double abscissa = r.rom.spectral_abscissa();
  return {r.converged && r.iterations <= 100 && e1 <= e0 && abscissa < 0.0,
          std::to_string(r.iterations) + " iterations, converged=" + (r.converged ? "yes" : "no") +
              ", H2 error " + fmt(e0) + " -> " + fmt(e1) + ", ROM spectral abscissa " + fmt(abscissa)};
}

Verdict sweep_trend() {
  SweepSettings s;
  s.nodes = 200;
  s.h2.order = 8;
  s.kinds = {ScenarioKind::Step};
  std::vector<SweepRow> rows = run_sweep(s, {1.0, 10.0, 100.0});
  double h2[3] = {0, 0, 0}, pod[3] = {0, 0, 0};
  bool ok = true;
  for (const auto& r : rows) {
    ok = ok && r.ok;
    const int d = static_cast<int>(std::lround(std::log10(r.Pe)));
    (r.method == "H2" ? h2 : pod)[d] = r.ok ? r.report.nmse_percent : INFINITY;
  }
  const bool thresholds = h2[0] <= 1.0 && h2[1] <= 1.0 && h2[2] <= 5.0;
  const bool monotone = h2[0] <= h2[1] && h2[1] <= h2[2];
  const bool pod_worse = pod[0] > h2[0] && pod[1] > h2[1] && pod[2] > h2[2];
  std::string detail = "H2 nmse %";
  for (double e : h2) detail += " " + fmt(e);
  detail += ", POD nmse %";
  for (double e : pod) detail += " " + fmt(e);
  return {ok && thresholds && monotone && pod_worse, detail};
}

std::optional<WqRun> wq_run;
std::string wq_error;

const WqRun& water_quality() {
  if (!wq_run && wq_error.empty()) {
    try {
      const RunConfig cfg = parse_config("", "<defaults>");
      wq_run = run_wq(cfg.scenario, wq_options(cfg));
    } catch (const std::exception& e) {
      wq_error = e.what();
    }
  }
  if (!wq_run) throw std::runtime_error("water-quality run failed: " + wq_error);
  return *wq_run;
}

Verdict wq_accuracy() {
  const WqRun& r = water_quality();
  if (!r.rom_vs_oracle) return {false, "oracle disabled"};
  const double e = r.rom_vs_oracle->nmse_percent;
  const bool regimes = r.scenario.laminar_fraction > 0.0 && r.scenario.turbulent_fraction > 0.0;
  return {e <= 5.0 && regimes, "ROM vs oracle nmse " + fmt(e) + " % (vs FOM " + fmt(r.rom_vs_fom.nmse_percent) +
                                   " %), laminar fraction " + fmt(r.scenario.laminar_fraction) +
                                   ", turbulent fraction " + fmt(r.scenario.turbulent_fraction)};
}

Verdict wq_speedup() {
  const WqRun& r = water_quality();
  const double sp = r.rom_vs_fom.speedup;
  return {sp >= 50.0, "FOM " + fmt(r.rom_vs_fom.wall_time_fom) + " s, ROM " + fmt(r.rom_vs_fom.wall_time_rom) +
                          " s, speedup " + fmt(sp) + "x over " + std::to_string(r.fom_traj.times.size()) +
                          " recorded samples"};
}

Verdict integrator_order() {
  // q' = -(1 - 0.5 u) q + u, u = 0.8, q(0) = 0.3, error at t = 2.
  auto err = [](double dt) {
    const BilinearSystem s = scalar_system(-1.0, 0.5, 1.0, 1.0);
    const InputSchedule in = InputSchedule::from_function(1, 0.0, dt, step_count(0.0, 2.0, dt),
                                                          [](double) { return VectorXd::Constant(1, 0.8); });
    const Trajectory tr = integrate(s, in, VectorXd::Constant(1, 0.3));
    const double lam = 0.6, qss = 0.8 / lam;
    return std::abs(tr.states(tr.states.rows() - 1, 0) - (qss + (0.3 - qss) * std::exp(-lam * 2.0)));
  };
  const double e1 = err(0.1), e2 = err(0.05), e3 = err(0.025);
  const double p1 = std::log2(e1 / e2), p2 = std::log2(e2 / e3);
  return {std::min(p1, p2) >= 1.9, "observed orders " + fmt(p1) + ", " + fmt(p2)};
}

Verdict coefficient_fixtures() {
  const WaterQualityParams p;
  struct Fixture {
    const char* what;
    double got;
    double want;
  };
  const Fixture fx[] = {
      {"Re laminar", reynolds(1.2e-3, p), 1195.2191235059761},
      {"Re turbulent", reynolds(0.01, p), 9960.1593625498008},
      {"D laminar", dispersion(1.2e-3, p.L / 1.2e-3, p), 0.30303227413956763},
      {"D turbulent", dispersion(0.01, 1e4, p), 3.3836808},
      {"D still", dispersion(0.0, 1.0, p), 1.2e-9},
      {"r laminar", reaction(1.2e-3, p), 6.3618337259228218e-5},
      {"r turbulent", reaction(0.01, p), 6.4673746978144722e-5},
      {"r still", reaction(0.0, p), 6.3608759539414374e-5},
  };
  double worst = 0.0;
  std::string bad;
  for (const auto& f : fx) {
    const double rel = std::abs(f.got - f.want) / std::abs(f.want);
    if (rel > 1e-9) bad += std::string(" ") + f.what;
    worst = std::max(worst, rel);
  }
  // The switch must follow Re < threshold at the floating-point neighbours of the critical velocity.
  bool switch_ok = true;
  double v = p.critical_velocity();
  for (int k = 0; k < 4; ++k) v = std::nextafter(v, 0.0);
  for (int k = 0; k < 8; ++k, v = std::nextafter(v, 1.0)) {
    switch_ok = switch_ok && is_laminar(v, p) == (reynolds(v, p) < p.Re_threshold);
  }
  switch_ok = switch_ok && is_laminar(p.critical_velocity() * (1 - 1e-12), p) &&
              !is_laminar(p.critical_velocity() * (1 + 1e-12), p);
  return {bad.empty() && switch_ok,
          "worst rel " + fmt(worst) + (bad.empty() ? "" : ", off:" + bad) +
              ", regime switch at Re=2400 " + (switch_ok ? "exact" : "wrong")};
}

}  // namespace

int main() {
  report(1, "projection identity", projection_identity);
  report(2, "matrix-equation oracle equivalence", matrix_equations);
  report(3, "reduction sanity (N=100, n=8)", reduction_sanity);
  report(4, "Peclet trend, step input (N=200, n=8)", sweep_trend);
  report(5, "water-quality accuracy vs fine-grid oracle (N=500, n=8)", wq_accuracy);
  report(6, "water-quality speedup", wq_speedup);
  report(7, "integrator order", integrator_order);
  report(8, "coefficient fixtures and regime switch", coefficient_fixtures);
  std::printf("%d of 8 criteria passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}
