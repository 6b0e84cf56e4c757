#include "hessbound/experiment.hpp"

#include "hessbound/error.hpp"
#include "hessbound/loss.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <string_view>

namespace hessbound {

namespace {

// Strict reader for one JSON object: every key must be consumed, and each
// value must have the expected type.
class Block {
 public:
  Block(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(Errc::Config, path_ + " must be an object");
  }

  const Json* find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  // Parsed documents tag non-negative integers as unsigned, built ones may not.
  static bool is_non_negative_integer(const Json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<long>() >= 0);
  }

  void integer(const char* key, long& out, long min_value = std::numeric_limits<long>::min()) {
    if (const Json* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "an integer");
      out = v->get<long>();
      if (out < min_value) fail(key, "an integer >= " + std::to_string(min_value));
    }
  }

  void unsigned_integer(const char* key, std::uint64_t& out) {
    if (const Json* v = find(key)) {
      if (!is_non_negative_integer(*v)) fail(key, "a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  // null stands for +infinity, which JSON cannot spell.
  void real(const char* key, double& out) {
    if (const Json* v = find(key)) {
      if (v->is_null()) {
        out = std::numeric_limits<double>::infinity();
        return;
      }
      if (!v->is_number()) fail(key, "a number");
      out = v->get<double>();
    }
  }

  void boolean(const char* key, bool& out) {
    if (const Json* v = find(key)) {
      if (!v->is_boolean()) fail(key, "true or false");
      out = v->get<bool>();
    }
  }

  bool string(const char* key, std::string& out) {
    if (const Json* v = find(key)) {
      if (!v->is_string()) fail(key, "a string");
      out = v->get<std::string>();
      return true;
    }
    return false;
  }

  template <class T>
  void integer_list(const char* key, std::vector<T>& out) {
    if (const Json* v = find(key)) {
      if (!v->is_array()) fail(key, "an array of integers");
      out.clear();
      for (const Json& e : *v) {
        if (!e.is_number_integer()) fail(key, "an array of integers");
        if constexpr (std::is_unsigned_v<T>) {
          if (!is_non_negative_integer(e)) fail(key, "an array of non-negative integers");
        }
        out.push_back(e.get<T>());
      }
    }
  }

  std::string path(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw Error(Errc::Config, "unknown key " + path_ + "." + item.key());
    }
  }

  [[noreturn]] void fail(const char* key, const std::string& expected) const {
    throw Error(Errc::Config, path_ + "." + key + " must be " + expected);
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

DatasetSource parse_source(std::string_view name) {
  if (name == "synthetic") return DatasetSource::synthetic;
  if (name == "iris") return DatasetSource::iris;
  if (name == "mnist") return DatasetSource::mnist;
  if (name == "csv") return DatasetSource::csv;
  throw Error(Errc::Config, "unknown dataset source '" + std::string(name) + "' (valid: synthetic, iris, mnist, csv)");
}

std::string_view to_string(DatasetSource s) {
  switch (s) {
    case DatasetSource::synthetic: return "synthetic";
    case DatasetSource::iris: return "iris";
    case DatasetSource::mnist: return "mnist";
    case DatasetSource::csv: return "csv";
  }
  return "unknown";
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

Json real_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

void read_synthetic(const Json& j, SyntheticParams& p) {
  Block b(j, "dataset.params");
  if (const Json* means = b.find("gaussian_means")) {
    if (!means->is_array()) b.fail("gaussian_means", "an array of [x, y] pairs");
    p.gaussian_means.clear();
    for (const Json& m : *means) {
      if (!m.is_array() || m.size() != 2 || !m[0].is_number() || !m[1].is_number()) {
        b.fail("gaussian_means", "an array of [x, y] pairs");
      }
      p.gaussian_means.emplace_back(m[0].get<double>(), m[1].get<double>());
    }
  }
  b.real("gaussian_sigma", p.gaussian_sigma);
  b.real("circle_inner_radius", p.circle_inner_radius);
  b.real("circle_outer_radius", p.circle_outer_radius);
  b.real("circle_noise", p.circle_noise);
  b.real("moon_noise", p.moon_noise);
  b.real("hier_super_separation", p.hier_super_separation);
  b.real("hier_intra_separation", p.hier_intra_separation);
  b.real("hier_sigma", p.hier_sigma);
  long clusters = p.checker_clusters_per_class;
  b.integer("checker_clusters_per_class", clusters, 1);
  p.checker_clusters_per_class = static_cast<int>(clusters);
  b.real("checker_spacing", p.checker_spacing);
  b.real("checker_offset", p.checker_offset);
  b.real("checker_sigma", p.checker_sigma);
  b.real("checker_pull_factor", p.checker_pull_factor);
  b.finish();
}

Json synthetic_json(const SyntheticParams& p) {
  Json j;
  Json means = Json::array();
  for (const auto& [x, y] : p.gaussian_means) means.push_back({x, y});
  j["gaussian_means"] = means;
  j["gaussian_sigma"] = p.gaussian_sigma;
  j["circle_inner_radius"] = p.circle_inner_radius;
  j["circle_outer_radius"] = p.circle_outer_radius;
  j["circle_noise"] = p.circle_noise;
  j["moon_noise"] = p.moon_noise;
  j["hier_super_separation"] = p.hier_super_separation;
  j["hier_intra_separation"] = p.hier_intra_separation;
  j["hier_sigma"] = p.hier_sigma;
  j["checker_clusters_per_class"] = p.checker_clusters_per_class;
  j["checker_spacing"] = p.checker_spacing;
  j["checker_offset"] = p.checker_offset;
  j["checker_sigma"] = p.checker_sigma;
  j["checker_pull_factor"] = p.checker_pull_factor;
  return j;
}

void read_optimizer(const Json& j, const std::string& path, OptimizerConfig& o) {
  Block b(j, path);
  std::string kind;
  if (b.string("kind", kind)) o.kind = parse_optimizer_kind(kind);
  b.real("learning_rate", o.learning_rate);
  long batch = o.batch_size;
  b.integer("batch_size", batch, 1);
  o.batch_size = batch;
  b.real("beta1", o.beta1);
  b.real("beta2", o.beta2);
  b.real("eps", o.eps);
  b.real("weight_decay", o.weight_decay);
  b.real("rms_alpha", o.rms_alpha);
  b.unsigned_integer("shuffle_seed", o.shuffle_seed);
  b.finish();
  o.validate();
}

Json optimizer_json(const OptimizerConfig& o) {
  Json j;
  j["kind"] = std::string(to_string(o.kind));
  j["learning_rate"] = o.learning_rate;
  j["batch_size"] = o.batch_size;
  j["beta1"] = o.beta1;
  j["beta2"] = o.beta2;
  j["eps"] = o.eps;
  j["weight_decay"] = o.weight_decay;
  j["rms_alpha"] = o.rms_alpha;
  j["shuffle_seed"] = o.shuffle_seed;
  return j;
}

void read_stop(const Json& j, const std::string& path, StopCriteria& s) {
  Block b(j, path);
  b.integer("max_epochs", s.max_epochs, 1);
  b.integer("loss_window", s.loss_window, 1);
  b.real("loss_tol", s.loss_tol);
  b.boolean("require_full_train_accuracy", s.require_full_train_accuracy);
  b.finish();
}

Json stop_json(const StopCriteria& s) {
  Json j;
  j["max_epochs"] = s.max_epochs;
  j["loss_window"] = s.loss_window;
  j["loss_tol"] = real_json(s.loss_tol);
  j["require_full_train_accuracy"] = s.require_full_train_accuracy;
  return j;
}

void read_dataset(const Json& j, const std::filesystem::path& base, DatasetConfig& d) {
  Block b(j, "dataset");
  std::string s;
  if (b.string("source", s)) d.source = parse_source(s);
  if (b.string("kind", s)) d.kind = parse_synthetic_kind(s);
  long n = d.n_per_class;
  b.integer("n_per_class", n, 1);
  d.n_per_class = n;
  b.unsigned_integer("seed", d.seed);
  if (const Json* p = b.find("params")) read_synthetic(*p, d.synthetic);
  if (b.string("path", s)) d.path = resolve(base, s);
  if (b.string("images", s)) d.images_path = resolve(base, s);
  if (b.string("labels", s)) d.labels_path = resolve(base, s);
  b.integer_list("digits", d.digits);
  long factor = d.downsample;
  b.integer("downsample", factor, 1);
  d.downsample = static_cast<int>(factor);
  long classes = d.num_classes;
  b.integer("num_classes", classes, 0);
  d.num_classes = static_cast<int>(classes);
  b.finish();
}

Json dataset_json(const DatasetConfig& d) {
  Json j;
  j["source"] = std::string(to_string(d.source));
  j["kind"] = std::string(to_string(d.kind));
  j["n_per_class"] = d.n_per_class;
  j["seed"] = d.seed;
  j["params"] = synthetic_json(d.synthetic);
  j["path"] = d.path.generic_string();
  j["images"] = d.images_path.generic_string();
  j["labels"] = d.labels_path.generic_string();
  j["digits"] = d.digits;
  j["downsample"] = d.downsample;
  j["num_classes"] = d.num_classes;
  return j;
}

void read_model(const Json& j, NetworkSpec& spec) {
  Block b(j, "model");
  b.integer_list("layer_widths", spec.layer_widths);
  std::string act;
  if (b.string("activation", act)) spec.activation = parse_activation(act);
  b.finish();
}

void read_training(const Json& j, TrainingConfig& t) {
  Block b(j, "training");
  std::string s;
  if (b.string("scheme", s)) t.scheme = parse_init_scheme(s);
  if (const Json* list = b.find("schemes")) {
    if (!list->is_array()) b.fail("schemes", "an array of scheme names");
    t.schemes.clear();
    for (const Json& e : *list) {
      if (!e.is_string()) b.fail("schemes", "an array of scheme names");
      t.schemes.push_back(parse_init_scheme(e.get<std::string>()));
    }
  }
  b.integer_list("seeds", t.seeds);
  if (const Json* o = b.find("optimizer")) read_optimizer(*o, b.path("optimizer"), t.optimizer);
  if (const Json* st = b.find("stop")) read_stop(*st, b.path("stop"), t.stop);
  if (const Json* l = b.find("loss")) {
    Block lb(*l, b.path("loss"));
    if (lb.string("kind", s)) t.loss.kind = parse_loss_kind(s);
    if (lb.string("reduction", s)) t.loss.reduction = parse_reduction(s);
    lb.finish();
  }
  if (const Json* in = b.find("init")) {
    Block ib(*in, b.path("init"));
    ib.real("target_norm", t.init.target_norm);
    if (const Json* o = ib.find("aux_optimizer")) read_optimizer(*o, ib.path("aux_optimizer"), t.init.aux_optimizer);
    if (const Json* st = ib.find("aux_stop")) read_stop(*st, ib.path("aux_stop"), t.init.aux_stop);
    ib.unsigned_integer("pretrain_data_seed", t.init.pretrain_data_seed);
    ib.finish();
  }
  b.integer_list("checkpoint_at", t.checkpoint_at);
  b.finish();
}

Json training_json(const TrainingConfig& t) {
  Json j;
  j["scheme"] = std::string(to_string(t.scheme));
  Json schemes = Json::array();
  for (InitScheme s : t.schemes) schemes.push_back(std::string(to_string(s)));
  j["schemes"] = schemes;
  j["seeds"] = t.seeds;
  j["optimizer"] = optimizer_json(t.optimizer);
  j["stop"] = stop_json(t.stop);
  j["loss"] = {{"kind", std::string(to_string(t.loss.kind))}, {"reduction", std::string(to_string(t.loss.reduction))}};
  Json init;
  init["target_norm"] = t.init.target_norm;
  init["aux_optimizer"] = optimizer_json(t.init.aux_optimizer);
  init["aux_stop"] = stop_json(t.init.aux_stop);
  init["pretrain_data_seed"] = t.init.pretrain_data_seed;
  j["init"] = init;
  j["checkpoint_at"] = t.checkpoint_at;
  return j;
}

void read_analysis(const Json& j, AnalysisConfig& a) {
  Block b(j, "analysis");
  b.integer("k", a.k, 1);
  if (const Json* g = b.find("grid"); g && !g->is_null()) {
    Block gb(*g, b.path("grid"));
    GridSpec grid;
    gb.real("x_min", grid.x_min);
    gb.real("x_max", grid.x_max);
    gb.real("y_min", grid.y_min);
    gb.real("y_max", grid.y_max);
    gb.integer("resolution", grid.resolution, 2);
    gb.finish();
    grid.validate();
    a.grid = grid;
  }
  b.integer("grid_resolution", a.grid_resolution, 2);
  if (const Json* e = b.find("epsilon")) {
    Block eb(*e, b.path("epsilon"));
    eb.integer("repeats", a.report.epsilon_repeats, 1);
    eb.unsigned_integer("seed", a.report.epsilon_seed);
    std::string agg;
    if (eb.string("aggregation", agg)) a.report.epsilon_aggregation = parse_epsilon_aggregation(agg);
    eb.finish();
  }
  if (const Json* m = b.find("margin")) {
    Block mb(*m, b.path("margin"));
    mb.real("fd_step", a.margin.fd_step);
    mb.real("step_size", a.margin.step_size);
    mb.integer("max_iter", a.margin.max_iter, 0);
    mb.real("target", a.margin.target);
    mb.finish();
  }
  b.integer("histogram_bins", a.histogram_bins, 1);
  b.integer("p_max", a.curvature.p_max, 1);
  b.boolean("symmetrize", a.curvature.symmetrize);
  b.real("alpha", a.alpha);
  b.integer("reparam_inputs", a.reparam_inputs, 1);
  b.unsigned_integer("reparam_seed", a.reparam_seed);
  b.finish();
}

Json analysis_json(const AnalysisConfig& a) {
  Json j;
  j["k"] = a.k;
  if (a.grid) {
    j["grid"] = {{"x_min", a.grid->x_min},
                 {"x_max", a.grid->x_max},
                 {"y_min", a.grid->y_min},
                 {"y_max", a.grid->y_max},
                 {"resolution", a.grid->resolution}};
  } else {
    j["grid"] = nullptr;
  }
  j["grid_resolution"] = a.grid_resolution;
  j["epsilon"] = {{"repeats", a.report.epsilon_repeats},
                  {"seed", a.report.epsilon_seed},
                  {"aggregation", std::string(to_string(a.report.epsilon_aggregation))}};
  j["margin"] = {{"fd_step", a.margin.fd_step},
                 {"step_size", a.margin.step_size},
                 {"max_iter", a.margin.max_iter},
                 {"target", a.margin.target}};
  j["histogram_bins"] = a.histogram_bins;
  j["p_max"] = a.curvature.p_max;
  j["symmetrize"] = a.curvature.symmetrize;
  j["alpha"] = a.alpha;
  j["reparam_inputs"] = a.reparam_inputs;
  j["reparam_seed"] = a.reparam_seed;
  return j;
}

void require_compatible(const NetworkSpec& spec, const LabeledDataset& d) {
  if (spec.input_dim() != d.dim()) {
    throw Error(Errc::Config, "model input width " + std::to_string(spec.input_dim()) + " does not match data dimension " +
                                  std::to_string(d.dim()));
  }
  if (spec.num_classes() != d.num_classes) {
    throw Error(Errc::Config, "model output width " + std::to_string(spec.num_classes()) +
                                  " does not match class count " + std::to_string(d.num_classes));
  }
}

struct Minimum {
  HessianAssembly hessian;
  SpectralDecomposition decomp;
};

Minimum decompose(const ExperimentConfig& cfg, const NetworkSpec& spec, const Vector& theta,
                  const LabeledDataset& d) {
  Minimum m{dense_hessian(spec, theta, d, cfg.training.loss, cfg.analysis.curvature), {}};
  m.decomp = eigh_symmetric(m.hessian.hessian, cfg.analysis.curvature.p_max);
  return m;
}

ReportOptions report_options(const ExperimentConfig& cfg) {
  ReportOptions ro = cfg.analysis.report;
  ro.loss_kind = cfg.training.loss.kind;
  return ro;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (training.seeds.empty()) throw Error(Errc::Config, "training.seeds must not be empty");
  if (training.schemes.empty()) throw Error(Errc::Config, "training.schemes must not be empty");
  try {
    model.validate();
  } catch (const Error& e) {
    throw Error(Errc::Config, std::string("model: ") + e.what());
  }
  training.optimizer.validate();
  training.stop.validate();
  if (dataset.source == DatasetSource::synthetic && model.num_classes() != num_classes(dataset.kind)) {
    throw Error(Errc::Config, "model output width " + std::to_string(model.num_classes()) + " does not match the " +
                                  std::to_string(num_classes(dataset.kind)) + " classes of " +
                                  std::string(to_string(dataset.kind)));
  }
  if (dataset.source == DatasetSource::synthetic && model.input_dim() != 2) {
    throw Error(Errc::Config, "synthetic datasets have 2 input features, the model expects " +
                                  std::to_string(model.input_dim()));
  }
  if (dataset.source == DatasetSource::mnist && model.num_classes() != static_cast<Index>(dataset.digits.size())) {
    throw Error(Errc::Config, "model output width does not match the number of digits");
  }
  if (!(training.init.target_norm > 0)) throw Error(Errc::Config, "training.init.target_norm must be positive");
  if (!(analysis.alpha > 0)) throw Error(Errc::Config, "analysis.alpha must be positive");
}

ExperimentConfig config_from_json(const Json& doc, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  Block b(doc, "config");
  if (const Json* j = b.find("dataset")) read_dataset(*j, base_dir, cfg.dataset);
  if (const Json* j = b.find("model")) read_model(*j, cfg.model);
  if (const Json* j = b.find("training")) read_training(*j, cfg.training);
  if (const Json* j = b.find("analysis")) read_analysis(*j, cfg.analysis);
  if (const Json* j = b.find("output")) {
    Block ob(*j, "output");
    std::string dir;
    if (ob.string("directory", dir)) cfg.output_dir = resolve(base_dir, dir);
    ob.finish();
  }
  b.finish();
  cfg.validate();
  return cfg;
}

Json config_json(const ExperimentConfig& cfg) {
  Json j;
  j["dataset"] = dataset_json(cfg.dataset);
  j["model"] = {{"layer_widths", cfg.model.layer_widths}, {"activation", std::string(to_string(cfg.model.activation))}};
  j["training"] = training_json(cfg.training);
  j["analysis"] = analysis_json(cfg.analysis);
  j["output"] = {{"directory", cfg.output_dir.generic_string()}};
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  Json doc;
  {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(Errc::Config, "cannot open config " + path.string());
    try {
      doc = Json::parse(is);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::Config, path.string() + ": " + e.what());
    }
  }
  return config_from_json(doc, path.parent_path());
}

LabeledDataset load_dataset(const DatasetConfig& cfg) {
  switch (cfg.source) {
    case DatasetSource::synthetic:
      return gen_synthetic(cfg.kind, cfg.n_per_class, cfg.seed, cfg.synthetic);
    case DatasetSource::iris:
      return load_iris(cfg.path);
    case DatasetSource::mnist: {
      LabeledDataset d = load_mnist_subset(cfg.images_path, cfg.labels_path, cfg.digits, cfg.n_per_class, cfg.seed);
      return cfg.downsample > 1 ? downsample_images(d, cfg.downsample) : d;
    }
    case DatasetSource::csv: {
      std::ifstream is(cfg.path, std::ios::binary);
      if (!is) throw Error(Errc::Io, "cannot open dataset " + cfg.path.string());
      LabeledDataset d = read_dataset_csv(is, cfg.path.stem().string());
      if (cfg.num_classes > 0) {
        if (*std::max_element(d.y.begin(), d.y.end()) >= cfg.num_classes) {
          throw Error(Errc::InvalidLabel, "label outside the configured class count");
        }
        d.num_classes = cfg.num_classes;
      }
      return d;
    }
  }
  throw Error(Errc::Config, "unknown dataset source");
}

TrainResult run_training(const ExperimentConfig& cfg, const LabeledDataset& d, InitScheme scheme,
                         std::uint64_t seed) {
  require_compatible(cfg.model, d);
  InitParams ip = cfg.training.init;
  ip.synthetic = cfg.dataset.synthetic;
  ip.loss = cfg.training.loss;
  const Vector theta0 = make_init(scheme, cfg.model, d, seed, ip);
  OptimizerConfig opt = cfg.training.optimizer;
  opt.shuffle_seed += seed;
  return train(cfg.model, theta0, d, opt, cfg.training.stop, cfg.training.checkpoint_at, cfg.training.loss);
}

GridSpec resolve_grid(const ExperimentConfig& cfg, const LabeledDataset& d) {
  if (cfg.analysis.grid) return *cfg.analysis.grid;
  if (d.dim() != 2) throw Error(Errc::WrongDim, "grid needs 2-D inputs");
  const auto [lo, hi] = bounding_box(d, 0.1);
  GridSpec g{lo(0), hi(0), lo(1), hi(1), cfg.analysis.grid_resolution};
  g.validate();
  return g;
}

AnalysisResult run_analysis(const ExperimentConfig& cfg, const NetworkSpec& spec, const Vector& theta,
                            const LabeledDataset& d) {
  require_compatible(spec, d);
  Minimum m = decompose(cfg, spec, theta, d);
  AnalysisResult out{std::move(m.hessian), std::move(m.decomp), {}, {}, {}};
  const ReportOptions ro = report_options(cfg);
  out.report = generalization_report(spec, theta, d, out.decomp, ro);
  const Index k = std::min(cfg.analysis.k, out.decomp.dim());
  out.alignments = alignment_matrix(spec, theta, d, out.decomp, k, ro.loss_kind);
  if (d.dim() == 2) out.field = grid_alignment_field(spec, theta, out.decomp, k, resolve_grid(cfg, d), ro.loss_kind);
  return out;
}

PerClassResult run_per_class(const ExperimentConfig& cfg, const NetworkSpec& spec, const Vector& theta,
                             const LabeledDataset& d, int cls) {
  require_compatible(spec, d);
  if (cls < 0 || cls >= d.num_classes) {
    throw Error(Errc::Config, "class " + std::to_string(cls) + " outside [0, " + std::to_string(d.num_classes) + ")");
  }
  const LabeledDataset restricted = class_restriction(d, cls);
  Minimum m = decompose(cfg, spec, theta, restricted);
  PerClassResult out{cls, std::move(m.hessian), std::move(m.decomp), {}};
  if (d.dim() == 2) {
    const Index k = std::min(cfg.analysis.k, out.decomp.dim());
    out.field = grid_alignment_field(spec, theta, out.decomp, k, resolve_grid(cfg, d), cfg.training.loss.kind);
  }
  return out;
}

MarginEstimate run_margin(const ExperimentConfig& cfg, const NetworkSpec& spec, const Vector& theta,
                          const LabeledDataset& d) {
  require_compatible(spec, d);
  const Minimum m = decompose(cfg, spec, theta, d);
  return estimate_margin(spec, theta, m.decomp, d, cfg.analysis.margin);
}

Comparison run_comparison(const ExperimentConfig& cfg, const LabeledDataset& d) {
  require_compatible(cfg.model, d);
  Comparison out;
  const ReportOptions ro = report_options(cfg);
  for (InitScheme scheme : cfg.training.schemes) {
    std::vector<double> g, tr, lm, pn;
    for (std::uint64_t seed : cfg.training.seeds) {
      TrainResult r = run_training(cfg, d, scheme, seed);
      const Minimum m = decompose(cfg, cfg.model, r.theta, d);
      RunRecord rec{scheme, seed, std::move(r.report), generalization_report(cfg.model, r.theta, d, m.decomp, ro), -1};
      if (d.dim() == 2) rec.boundary_cells = boundary_scan_2d(cfg.model, r.theta, resolve_grid(cfg, d)).cell_count;
      g.push_back(rec.report.G);
      tr.push_back(rec.report.trace);
      lm.push_back(rec.report.lambda_max);
      pn.push_back(rec.report.param_norm);
      out.runs.push_back(std::move(rec));
    }
    out.rows.push_back({std::string(to_string(scheme)), static_cast<Index>(g.size()), summarize(g), summarize(tr),
                        summarize(lm), summarize(pn)});
  }
  return out;
}

ReparamCheck run_reparam_check(const ExperimentConfig& cfg, const NetworkSpec& spec, const Vector& theta,
                               const LabeledDataset& d) {
  require_compatible(spec, d);
  ReparamCheck out;
  out.alpha = cfg.analysis.alpha;
  out.param_count = spec.param_count();
  const Vector scaled = alpha_scale(theta, cfg.analysis.alpha, spec);

  const auto [lo, hi] = bounding_box(d, 0.1);
  std::mt19937_64 rng(cfg.analysis.reparam_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix X(cfg.analysis.reparam_inputs, d.dim());
  for (Index i = 0; i < X.rows(); ++i)
    for (Index j = 0; j < X.cols(); ++j) X(i, j) = lo(j) + (hi(j) - lo(j)) * unit(rng);
  out.max_logit_deviation = (forward_batch(spec, theta, X) - forward_batch(spec, scaled, X)).cwiseAbs().maxCoeff();

  const ReportOptions ro = report_options(cfg);
  const Minimum before = decompose(cfg, spec, theta, d);
  const Minimum after = decompose(cfg, spec, scaled, d);
  const GeneralizationReport rb = generalization_report(spec, theta, d, before.decomp, ro);
  const GeneralizationReport ra = generalization_report(spec, scaled, d, after.decomp, ro);
  out.trace_before = rb.trace;
  out.trace_after = ra.trace;
  out.trace_relative_change = std::abs(ra.trace - rb.trace) / std::max(std::abs(rb.trace), 1e-300);
  out.G_before = rb.G;
  out.G_after = ra.G;
  out.delta_G = std::abs(ra.G - rb.G);
  return out;
}

Json reparam_check_json(const ReparamCheck& r) {
  Json j;
  j["alpha"] = r.alpha;
  j["max_logit_deviation"] = r.max_logit_deviation;
  j["trace_before"] = r.trace_before;
  j["trace_after"] = r.trace_after;
  j["trace_relative_change"] = r.trace_relative_change;
  j["G_before"] = r.G_before;
  j["G_after"] = r.G_after;
  j["delta_G"] = r.delta_G;
  j["param_count"] = r.param_count;
  return j;
}

Json comparison_json(const Comparison& c) {
  Json runs = Json::array();
  for (const RunRecord& r : c.runs) {
    Json j;
    j["scheme"] = std::string(to_string(r.scheme));
    j["seed"] = r.seed;
    j["epochs_run"] = r.train.epochs_run;
    j["final_loss"] = r.train.final_loss;
    j["final_train_accuracy"] = r.train.final_train_accuracy;
    j["converged"] = r.train.converged;
    j["boundary_cells"] = r.boundary_cells;
    j["report"] = generalization_report_json(r.report);
    runs.push_back(std::move(j));
  }
  Json rows = Json::array();
  for (const ComparisonRow& r : c.rows) {
    auto stats = [](const MeasureStats& m) { return Json{{"mean", m.mean}, {"std", m.stddev}}; };
    rows.push_back({{"scheme", r.scheme},
                    {"runs", r.runs},
                    {"G", stats(r.G)},
                    {"trace", stats(r.trace)},
                    {"lambda_max", stats(r.lambda_max)},
                    {"param_norm", stats(r.param_norm)}});
  }
  return {{"rows", rows}, {"runs", runs}};
}

Json with_provenance(const ExperimentConfig& cfg, const std::string& kind, Json body) {
  const Json resolved = config_json(cfg);
  Json doc;
  doc["kind"] = kind;
  doc["config_fingerprint"] = config_fingerprint(resolved);
  doc["config"] = resolved;
  doc["result"] = std::move(body);
  return doc;
}

}  // namespace hessbound
