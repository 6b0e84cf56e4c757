// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Pass criterion numbers as arguments to run a subset.

#include "hessbound/alignment.hpp"
#include "hessbound/analysis.hpp"
#include "hessbound/curvature.hpp"
#include "hessbound/experiment.hpp"
#include "hessbound/loss.hpp"
#include "hessbound/serialize.hpp"
#include "hessbound/training.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

using namespace hessbound;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double max_relative_error(const Vector& a, const Vector& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

// 1. Analytic gradient against central differences.
Outcome gradient_oracle() {
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const NetworkSpec spec{{2, 16, 16, 3}, Activation::relu};
    const Vector theta = init_params(spec, seed);
    const LabeledDataset d = gen_synthetic(SyntheticKind::gaussian, 4, 100 + seed);
    const Vector g = grad_loss(spec, theta, d);
    const Vector fd = oracle::fd_gradient([&](const Vector& t) { return batch_loss(spec, t, d); }, theta);
    worst = std::max(worst, max_relative_error(g, fd));
  }
  return {worst < 1e-6, fmt("max relative error %.2e (< 1e-6)", worst)};
}

// 2. Dense Hessian against second differences of the loss.
Outcome hessian_oracle() {
  double worst_dev = 0, worst_asym = 0;
  bool ok = true;
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    const NetworkSpec spec{{2, 10, 10, 3}, Activation::relu};
    if (spec.param_count() > 200) return {false, "model too large for the oracle"};
    const LabeledDataset d = gen_synthetic(SyntheticKind::gaussian, 6, seed);
    const Vector theta = init_params(spec, seed);
    const HessianAssembly H = dense_hessian(spec, theta, d);
    const Matrix ref = oracle::fd_hessian([&](const Vector& t) { return batch_loss(spec, t, d); }, theta);
    const double scale = 1 + oracle::max_abs(H.hessian.matrix());
    const double dev = oracle::max_abs(H.hessian.matrix() - ref) / scale;
    const double asym = H.raw_asymmetry / (1 + H.max_abs);
    ok = ok && dev <= 1e-4 && asym <= 1e-5;
    worst_dev = std::max(worst_dev, dev);
    worst_asym = std::max(worst_asym, asym);
  }
  return {ok, fmt("deviation %.2e (<= 1e-4), raw asymmetry %.2e (<= 1e-5), both relative to 1+max|H|", worst_dev,
                  worst_asym)};
}

// 3. Softmax regression against its closed form.
Outcome closed_form_oracle() {
  const NetworkSpec spec{{3, 4}, Activation::relu};
  LabeledDataset d = gen_synthetic(SyntheticKind::gaussian, 5, 2);
  d.X.conservativeResize(Eigen::NoChange, 3);
  d.X.col(2).setConstant(0.7);
  d.num_classes = 4;
  d.y[0] = 3;
  const Vector theta = init_params(spec, 9);
  const Matrix W = Eigen::Map<const Matrix>(theta.data(), 4, 3);
  const Matrix ref = oracle::softmax_regression_hessian(W, theta.tail(4), d.X);
  const double dev = oracle::max_abs(dense_hessian(spec, theta, d).hessian.matrix() - ref);
  return {dev <= 1e-8, fmt("max deviation %.2e (<= 1e-8)", dev)};
}

// 4. Eigensolver reconstruction, residuals and trace.
Outcome eigensolver() {
  const NetworkSpec spec{{2, 16, 16, 3}, Activation::relu};
  const LabeledDataset d = gen_synthetic(SyntheticKind::gaussian, 20, 1);
  const Matrix H = dense_hessian(spec, init_params(spec, 0), d).hessian.matrix();
  bool ok = true;
  double rec = 0, res = 0, tr = 0;
  for (const Matrix& m : {H, oracle::random_symmetric(150, 4)}) {
    const SpectralDecomposition s = eigh_symmetric(SymmetricMatrix(m));
    const Matrix& V = s.eigenvectors;
    const double r = (m - V * s.eigenvalues.asDiagonal() * V.transpose()).norm() / (1 + m.norm());
    double pair = 0;
    for (Index i = 0; i < s.dim(); ++i) {
      pair = std::max(pair, (m * V.col(i) - s.eigenvalues(i) * V.col(i)).norm() / (1 + std::abs(s.eigenvalues(0))));
    }
    const double t = std::abs(m.trace() - s.eigenvalues.sum()) / (1 + std::abs(m.trace()));
    ok = ok && r <= 1e-8 && pair <= 1e-8 && t <= 1e-8;
    rec = std::max(rec, r);
    res = std::max(res, pair);
    tr = std::max(tr, t);
  }
  return {ok, fmt("reconstruction %.2e, eigenpair residual %.2e, trace %.2e (each <= 1e-8 relative)", rec, res, tr)};
}

// 5. One-dimensional toy with five points.
struct ToyRun {
  Outcome outcome;
  std::string report;
};

// A sign flip is a change of sign between neighbouring scan points that both
// carry |A| >= 0.5; near-zero wiggles are not flips.
struct FlipScan {
  Index flips = 0;
  double location = 0;
  double left = 0;
  double right = 0;
  bool at_prediction_change = false;
};

FlipScan scan_flips(const std::vector<double>& xs, const std::vector<double>& a, const std::vector<int>& pred) {
  FlipScan f;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    if (std::abs(a[i]) < 0.5 || std::abs(a[i + 1]) < 0.5 || (a[i] > 0) == (a[i + 1] > 0)) continue;
    ++f.flips;
    f.location = 0.5 * (xs[i] + xs[i + 1]);
    f.left = a[i];
    f.right = a[i + 1];
    f.at_prediction_change = pred[i] != pred[i + 1];
  }
  return f;
}

ToyRun toy_run() {
  LabeledDataset d;
  d.X.resize(5, 1);
  d.X << -2, -1, 0, 1, 2;
  d.y = {0, 1, 1, 1, 0};
  d.num_classes = 2;
  d.name = "toy";
  const NetworkSpec spec{{1, 16, 2}, Activation::relu};
  OptimizerConfig opt;
  opt.learning_rate = 0.1;
  opt.batch_size = 5;
  opt.shuffle_seed = 1;
  StopCriteria stop;
  stop.max_epochs = 20000;
  const TrainResult tr = train(spec, init_params(spec, 1), d, opt, stop);
  const SpectralDecomposition s = eigh_symmetric(dense_hessian(spec, tr.theta, d).hessian);
  const Index outliers = spectrum_outliers(s.eigenvalues, 2);

  std::vector<double> xs, a1, a2;
  std::vector<int> pred;
  for (int i = 0; i <= 600; ++i) {
    const Vector x{{-3.0 + 0.01 * i}};
    xs.push_back(x(0));
    a1.push_back(alignment(spec, tr.theta, x, s.eigenvectors.col(0)).value);
    a2.push_back(alignment(spec, tr.theta, x, s.eigenvectors.col(1)).value);
    pred.push_back(predict(spec, tr.theta, x));
  }
  const FlipScan f1 = scan_flips(xs, a1, pred);
  const FlipScan f2 = scan_flips(xs, a2, pred);
  auto sharp = [](const FlipScan& f) { return std::abs(f.left) > 0.9 && std::abs(f.right) > 0.9; };
  const bool ok = tr.report.final_train_accuracy == 1.0 && outliers == 2 && f1.flips == 1 && f2.flips == 1 &&
                  sharp(f1) && sharp(f2) && f1.at_prediction_change && f2.at_prediction_change &&
                  std::abs(f1.location - f2.location) > 0.02;

  Json report = generalization_report_json(generalization_report(spec, tr.theta, d, s));
  report["theta"] = param_vector_json(spec, tr.theta);
  report["A1"] = a1;
  report["A2"] = a2;
  return {{ok, fmt("accuracy %.2f, outliers %ld (want 2); A1 %ld flip at x=%.3f (%+.3f -> %+.3f), "
                   "A2 %ld flip at x=%.3f (%+.3f -> %+.3f)",
                   tr.report.final_train_accuracy, static_cast<long>(outliers), static_cast<long>(f1.flips),
                   f1.location, f1.left, f1.right, static_cast<long>(f2.flips), f2.location, f2.left, f2.right)},
          report.dump()};
}

// 6 and 7. Scheme comparisons.
struct CompareRun {
  Outcome outcome;
  std::string report;
};

std::map<std::string, const ComparisonRow*> by_scheme(const Comparison& c) {
  std::map<std::string, const ComparisonRow*> m;
  for (const ComparisonRow& r : c.rows) m[r.scheme] = &r;
  return m;
}

ExperimentConfig gaussian_comparison_config() {
  ExperimentConfig cfg;
  cfg.dataset.kind = SyntheticKind::gaussian;
  cfg.dataset.n_per_class = 30;
  cfg.dataset.seed = 7;
  cfg.model = NetworkSpec{{2, 32, 32, 3}, Activation::relu};
  cfg.training.schemes = {InitScheme::normal, InitScheme::adversarial, InitScheme::large_norm};
  cfg.training.seeds = {0, 1, 2, 3, 4};
  cfg.training.optimizer.kind = OptimizerKind::adam;
  cfg.training.optimizer.learning_rate = 1e-3;
  cfg.training.optimizer.shuffle_seed = 100;
  cfg.training.init.aux_optimizer = OptimizerConfig{.kind = OptimizerKind::adam, .learning_rate = 0.01};
  cfg.analysis.report.epsilon_seed = 11;
  return cfg;
}

CompareRun gaussian_ordering() {
  const ExperimentConfig cfg = gaussian_comparison_config();
  const Comparison c = run_comparison(cfg, load_dataset(cfg.dataset));
  auto rows = by_scheme(c);
  const double gn = rows["normal"]->G.mean, ga = rows["adversarial"]->G.mean, gl = rows["large_norm"]->G.mean;
  const double tn = rows["normal"]->trace.mean, ta = rows["adversarial"]->trace.mean,
               tl = rows["large_norm"]->trace.mean;

  // Rank of each scheme under G and under the trace; the trace clause passes
  // when the two rankings differ.
  auto ranking = [](std::vector<std::pair<double, std::string>> v) {
    std::sort(v.begin(), v.end());
    std::vector<std::string> names;
    for (auto& e : v) names.push_back(e.second);
    return names;
  };
  const auto g_rank = ranking({{gn, "normal"}, {ga, "adversarial"}, {gl, "large_norm"}});
  const auto t_rank = ranking({{tn, "normal"}, {ta, "adversarial"}, {tl, "large_norm"}});

  const bool strict = gn < ga;
  const bool large = gn <= gl;
  const bool trace_differs = g_rank != t_rank;
  return {{strict && large && trace_differs,
           fmt("mean G normal %.4f, adversarial %.4f, large_norm %.4f; normal<adversarial %s, normal<=large_norm %s; "
               "mean trace normal %.4g, adversarial %.4g, large_norm %.4g; trace ranking differs from G %s",
               gn, ga, gl, strict ? "yes" : "NO", large ? "yes" : "NO", tn, ta, tl, trace_differs ? "yes" : "NO")},
          comparison_json(c).dump()};
}

ExperimentConfig mnist_comparison_config() {
  ExperimentConfig cfg;
  cfg.dataset.source = DatasetSource::mnist;
  cfg.dataset.images_path = HESSBOUND_TEST_DATA "/mnist017-images-idx3-ubyte";
  cfg.dataset.labels_path = HESSBOUND_TEST_DATA "/mnist017-labels-idx1-ubyte";
  cfg.dataset.digits = {0, 1, 7};
  cfg.dataset.n_per_class = 100;
  cfg.dataset.seed = 3;
  cfg.dataset.downsample = 4;
  cfg.model = NetworkSpec{{49, 16, 3}, Activation::relu};
  cfg.training.schemes = {InitScheme::normal, InitScheme::adversarial};
  cfg.training.seeds = {0, 1, 2};
  cfg.training.optimizer.kind = OptimizerKind::adam;
  cfg.training.optimizer.learning_rate = 1e-3;
  cfg.training.optimizer.shuffle_seed = 100;
  cfg.training.init.aux_optimizer = OptimizerConfig{.kind = OptimizerKind::adam, .learning_rate = 0.01};
  cfg.training.init.aux_stop.max_epochs = 60000;
  cfg.analysis.report.epsilon_seed = 11;
  return cfg;
}

CompareRun mnist_ordering() {
  const ExperimentConfig cfg = mnist_comparison_config();
  const Comparison c = run_comparison(cfg, load_dataset(cfg.dataset));
  auto rows = by_scheme(c);
  const double gn = rows["normal"]->G.mean, ga = rows["adversarial"]->G.mean;
  std::string runs;
  for (const RunRecord& r : c.runs) runs += fmt(" %s/%llu=%.4f", std::string(to_string(r.scheme)).c_str(),
                                                static_cast<unsigned long long>(r.seed), r.report.G);
  return {{gn < ga, fmt("mean G normal %.4f, adversarial %.4f (want normal < adversarial); runs:%s", gn, ga,
                        runs.c_str())},
          comparison_json(c).dump()};
}

// 8. Top Hessian and gradient covariance eigenvectors.
Outcome covariance_overlap() {
  const LabeledDataset d = gen_synthetic(SyntheticKind::gaussian, 100, 7);
  const NetworkSpec spec{{2, 32, 32, 3}, Activation::relu};
  const TrainResult tr = train(spec, init_params(spec, 0), d, OptimizerConfig{}, StopCriteria{});
  const SpectralDecomposition h = eigh_symmetric(dense_hessian(spec, tr.theta, d).hessian);
  const SpectralDecomposition s = eigh_symmetric(gradient_covariance(spec, tr.theta, d));
  const double beta = subspace_overlap(h, s, 1).front();
  return {tr.report.converged && beta >= 0.9,
          fmt("beta_1 %.4f (>= 0.9) after %ld epochs, loss %.2e", beta, tr.report.epochs_run, tr.report.final_loss)};
}

// 9. Function-preserving rescaling.
Outcome reparametrization() {
  ExperimentConfig cfg;
  cfg.dataset.n_per_class = 30;
  cfg.model = NetworkSpec{{2, 32, 3}, Activation::relu};
  cfg.analysis.alpha = 2.0;
  cfg.analysis.reparam_inputs = 1000;
  const LabeledDataset d = load_dataset(cfg.dataset);
  const Vector theta = run_training(cfg, d, InitScheme::normal, 0).theta;
  const ReparamCheck r = run_reparam_check(cfg, cfg.model, theta, d);
  const double bound = 2.0 / static_cast<double>(r.param_count);
  const bool ok = r.max_logit_deviation <= 1e-9 && r.trace_relative_change >= 0.1 && r.delta_G <= bound;
  return {ok, fmt("max logit deviation %.2e (<= 1e-9), trace %.4g -> %.4g (%.1f%%, >= 10%%), |dG| %.4f (<= 2/p = "
                  "%.4f)",
                  r.max_logit_deviation, r.trace_before, r.trace_after, 100 * r.trace_relative_change, r.delta_G,
                  bound)};
}

// 10. Second-order expansion.
Outcome taylor_identity() {
  const Index p = 12;
  const Matrix A = oracle::random_symmetric(p, 21);
  const Vector b = oracle::random_vector(p, 22);
  const Objective q{[&](const Vector& t) { return 0.5 * t.dot(A * t) + b.dot(t); },
                    [&](const Vector& t) -> Vector { return A * t + b; }};
  const SpectralDecomposition qs = eigh_symmetric(SymmetricMatrix(A));
  double quad = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    quad = std::max(quad, taylor_residual(q, oracle::random_vector(p, 40 + seed), oracle::random_vector(p, 60 + seed),
                                          qs));
  }

  const LabeledDataset d = gen_synthetic(SyntheticKind::gaussian, 30, 7);
  const NetworkSpec spec{{2, 32, 32, 3}, Activation::relu};
  std::vector<long> at;
  for (long e = 0; e <= StopCriteria{}.max_epochs; e += 50) at.push_back(e);
  const TrainResult tr = train(spec, init_params(spec, 0), d, OptimizerConfig{}, StopCriteria{}, at);
  const std::size_t n = tr.report.checkpoint_epochs.size();
  if (n < 3) return {false, "fewer than 3 checkpoints"};
  std::vector<double> grad_norm, residual;
  std::string trail;
  for (std::size_t c = n - 3; c < n; ++c) {
    const Vector& theta = tr.report.checkpoint_params[c];
    const SpectralDecomposition s = eigh_symmetric(dense_hessian(spec, theta, d).hessian);
    double sum = 0;
    Index used = 0;
    for (Index i = 0; i < d.size(); ++i) {
      // Samples whose reinforcing gradient vanishes have no step direction.
      if (reinforcing_gradient(spec, theta, d.sample(i)).norm() < 1e-12) continue;
      sum += taylor_residual(spec, theta, d, d.sample(i), s);
      ++used;
    }
    grad_norm.push_back(grad_loss(spec, theta, d).norm());
    residual.push_back(used > 0 ? sum / static_cast<double>(used) : 0.0);
    trail += fmt(" epoch %ld |g| %.3e residual %.4e;", tr.report.checkpoint_epochs[c], grad_norm.back(),
                 residual.back());
  }
  const bool grad_down = grad_norm[0] > grad_norm[1] && grad_norm[1] > grad_norm[2];
  const bool res_down = residual[0] > residual[1] && residual[1] > residual[2];
  return {quad <= 1e-10 && grad_down && res_down,
          fmt("quadratic residual %.2e (<= 1e-10); gradient norm decreasing %s, residual decreasing %s;%s", quad,
              grad_down ? "yes" : "NO", res_down ? "yes" : "NO", trail.c_str())};
}

// 11. Margin estimates on the checkerboard.
Outcome margin_pipeline() {
  const LabeledDataset d = gen_synthetic(SyntheticKind::checkerboard, 150, 7);
  const NetworkSpec spec{{2, 32, 32, 2}, Activation::relu};
  OptimizerConfig opt;
  InitParams ip;
  ip.aux_optimizer = opt;
  ip.aux_stop = StopCriteria{};
  const auto [lo, hi] = bounding_box(d, 0.1);
  const GridSpec grid{lo(0), hi(0), lo(1), hi(1), 400};

  std::map<InitScheme, double> mean;
  bool within = true;
  std::string trail;
  for (InitScheme scheme : {InitScheme::normal, InitScheme::wide_margin}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const Vector theta0 = make_init(scheme, spec, d, seed, ip);
      opt.shuffle_seed = 100 + seed;
      const TrainResult tr = train(spec, theta0, d, opt, StopCriteria{});
      const SpectralDecomposition s = eigh_symmetric(dense_hessian(spec, tr.theta, d).hessian);
      const MarginEstimate m = estimate_margin(spec, tr.theta, s, d);
      const double ref = boundary_scan_2d(spec, tr.theta, grid).nearest_distance(m.nearest_extreme());
      const double rel = std::abs(m.margin - ref) / ref;
      within = within && rel <= 0.2;
      mean[scheme] += m.margin / 3.0;
      trail += fmt(" %s/%llu %.4f vs grid %.4f (%.0f%%%s);", std::string(to_string(scheme)).c_str(),
                   static_cast<unsigned long long>(seed), m.margin, ref, 100 * rel, m.low_confidence ? ", low" : "");
    }
  }
  const bool wider = mean[InitScheme::wide_margin] > mean[InitScheme::normal];
  return {wider && within, fmt("mean margin wide_margin %.4f vs normal %.4f (%s); all within 20%% of grid %s;%s",
                               mean[InitScheme::wide_margin], mean[InitScheme::normal], wider ? "wider" : "NOT wider",
                               within ? "yes" : "NO", trail.c_str())};
}

struct Criterion {
  int id;
  double max_seconds;  // 0: no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  std::map<int, std::string> reports;  // first-run reports of 5, 6 and 7
  const std::vector<Criterion> criteria{
      {1, 5, gradient_oracle},
      {2, 30, hessian_oracle},
      {3, 1, closed_form_oracle},
      {4, 0, eigensolver},
      {5, 60,
       [&] {
         ToyRun r = toy_run();
         reports[5] = r.report;
         return r.outcome;
       }},
      {6, 600,
       [&] {
         CompareRun r = gaussian_ordering();
         reports[6] = r.report;
         return r.outcome;
       }},
      {7, 900,
       [&] {
         CompareRun r = mnist_ordering();
         reports[7] = r.report;
         return r.outcome;
       }},
      {8, 0, covariance_overlap},
      {9, 0, reparametrization},
      {10, 0, taylor_identity},
      {11, 600, margin_pipeline},
      {12, 0,
       [&]() -> Outcome {
         std::string detail;
         bool ok = true;
         const std::map<int, std::function<std::string()>> rerun{{5, [] { return toy_run().report; }},
                                                                 {6, [] { return gaussian_ordering().report; }},
                                                                 {7, [] { return mnist_ordering().report; }}};
         for (const auto& [id, again] : rerun) {
           if (!reports.contains(id)) reports[id] = again();
           const bool same = again() == reports[id];
           ok = ok && same;
           detail += fmt("criterion %d report %s; ", id, same ? "identical" : "DIFFERS");
         }
         return {ok, detail};
       }},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.contains(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt("%.1f s", secs);
    if (c.max_seconds > 0) {
      timing += fmt(", limit %.0f s", c.max_seconds);
      if (secs >= c.max_seconds) {
        o.pass = false;
        timing += " EXCEEDED";
      }
    }
    failed += !o.pass;
    std::printf("criterion %d: %s  %s [%s]\n", c.id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), timing.c_str());
  }
  return failed == 0 ? 0 : 1;
}
