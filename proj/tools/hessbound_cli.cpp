#include "hessbound/error.hpp"
#include "hessbound/experiment.hpp"
#include "hessbound/linalg.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace hessbound;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kData = 3, kNumeric = 4 };

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::Config:
    case Errc::UnknownKind:
    case Errc::ShapeMismatch:
    case Errc::UnsupportedArchitecture:
      return kConfig;
    case Errc::Io:
    case Errc::ParseError:
    case Errc::WrongColumnCount:
    case Errc::BadMagic:
    case Errc::TruncatedFile:
    case Errc::NotEnoughSamples:
    case Errc::WrongDim:
    case Errc::ClassTooSmall:
    case Errc::InvalidLabel:
    case Errc::EmptyClass:
      return kData;
    case Errc::ZeroVector:
    case Errc::DimMismatch:
    case Errc::TooLarge:
    case Errc::NotSymmetric:
    case Errc::Diverged:
    case Errc::AuxTrainingFailed:
    case Errc::NoProgress:
      return kNumeric;
  }
  return kNumeric;
}

fs::path prepare_out(const std::string& flag, const ExperimentConfig* cfg) {
  fs::path out = flag.empty() && cfg ? cfg->output_dir : fs::path(flag);
  if (out.empty()) throw Error(Errc::Config, "--out is required");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(Errc::Io, "cannot create " + out.string() + ": " + ec.message());
  return out;
}

template <class Writer>
void write_text(const fs::path& path, Writer&& writer) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::Io, "cannot write " + path.string());
  writer(os);
  if (!os) throw Error(Errc::Io, "failed writing " + path.string());
}

// Accepts a bare parameter document or one wrapped with provenance. Every
// failure is a usage error: the caller pointed at the wrong file.
ParamDocument load_theta(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw Error(Errc::Config, "parameter file not found: " + path.string());
  try {
    const Json doc = read_json_file(path);
    return param_document_from_json(doc.contains("result") ? doc.at("result") : doc);
  } catch (const Error& e) {
    throw Error(Errc::Config, e.what());
  }
}

void write_field(const fs::path& out, const std::string& prefix, const GridField& field) {
  const GridSpec& g = field.grid;
  write_json_file(out / (prefix + "grid.json"), Json{{"x_min", g.x_min},
                                                     {"x_max", g.x_max},
                                                     {"y_min", g.y_min},
                                                     {"y_max", g.y_max},
                                                     {"resolution", g.resolution}});
  write_text(out / (prefix + "grid_predictions.csv"), [&](std::ostream& os) { write_grid_csv(os, field.predictions); });
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    write_text(out / (prefix + "grid_A" + std::to_string(i + 1) + ".csv"),
               [&](std::ostream& os) { write_csv(os, field.values[i]); });
  }
}

struct GenDataArgs {
  std::string kind;
  Index n_per_class = 100;
  std::uint64_t seed = 7;
  std::string out;
};

int cmd_gen_data(const GenDataArgs& a) {
  const SyntheticKind kind = parse_synthetic_kind(a.kind);
  const LabeledDataset d = gen_synthetic(kind, a.n_per_class, a.seed);
  const fs::path out = prepare_out(a.out, nullptr);
  const fs::path file = out / (std::string(to_string(kind)) + ".csv");
  write_text(file, [&](std::ostream& os) { write_dataset_csv(os, d); });
  std::cout << file.string() << ": " << d.size() << " samples\n";
  return kOk;
}

struct TrainArgs {
  std::string config;
  std::string out;
  std::string scheme;
  std::optional<std::uint64_t> seed;
  std::vector<long> checkpoint_at;
};

int cmd_train(const TrainArgs& a) {
  ExperimentConfig cfg = load_config(a.config);
  if (!a.scheme.empty()) cfg.training.scheme = parse_init_scheme(a.scheme);
  if (a.seed) cfg.training.seeds = {*a.seed};
  if (!a.checkpoint_at.empty()) cfg.training.checkpoint_at = a.checkpoint_at;
  const fs::path out = prepare_out(a.out, &cfg);
  const LabeledDataset d = load_dataset(cfg.dataset);
  const std::uint64_t seed = cfg.training.seeds.front();
  const TrainResult r = run_training(cfg, d, cfg.training.scheme, seed);

  write_json_file(out / "theta.json", with_provenance(cfg, "theta", param_vector_json(cfg.model, r.theta)));
  Json report = train_report_json(r.report);
  report["scheme"] = std::string(to_string(cfg.training.scheme));
  report["seed"] = seed;
  write_json_file(out / "train_report.json", with_provenance(cfg, "train_report", report));
  for (std::size_t i = 0; i < r.report.checkpoint_epochs.size(); ++i) {
    const long epoch = r.report.checkpoint_epochs[i];
    write_json_file(out / ("checkpoint_epoch_" + std::to_string(epoch) + ".json"),
                    with_provenance(cfg, "checkpoint", param_vector_json(cfg.model, r.report.checkpoint_params[i])));
  }
  std::cout << "epochs " << r.report.epochs_run << ", loss " << format_real(r.report.final_loss) << ", accuracy "
            << format_real(r.report.final_train_accuracy) << '\n';
  return kOk;
}

struct AnalyzeArgs {
  std::string config;
  std::string theta;
  std::string out;
  std::optional<int> per_class;
};

NetworkSpec checked_spec(const ExperimentConfig& cfg, const ParamDocument& doc) {
  if (doc.spec.layer_widths != cfg.model.layer_widths || doc.spec.activation != cfg.model.activation) {
    throw Error(Errc::Config, "parameter file was written for a different model");
  }
  return doc.spec;
}

int cmd_analyze(const AnalyzeArgs& a) {
  const ExperimentConfig cfg = load_config(a.config);
  const ParamDocument doc = load_theta(a.theta);
  const NetworkSpec spec = checked_spec(cfg, doc);
  const fs::path out = prepare_out(a.out, &cfg);
  const LabeledDataset d = load_dataset(cfg.dataset);

  const AnalysisResult r = run_analysis(cfg, spec, doc.theta, d);
  Json spectrum = spectrum_json(r.decomp, d.num_classes, cfg.analysis.histogram_bins);
  spectrum["raw_asymmetry"] = r.hessian.raw_asymmetry;
  spectrum["asymmetry_within_tolerance"] = r.hessian.asymmetry_within_tolerance();
  write_json_file(out / "spectrum.json", with_provenance(cfg, "spectrum", spectrum));
  write_text(out / "alignment.csv", [&](std::ostream& os) { write_alignment_csv(os, r.alignments); });
  if (r.field) write_field(out, "", *r.field);
  write_json_file(out / "report.json", with_provenance(cfg, "generalization_report", generalization_report_json(r.report)));

  if (a.per_class) {
    const PerClassResult pc = run_per_class(cfg, spec, doc.theta, d, *a.per_class);
    const std::string prefix = "class" + std::to_string(pc.cls) + "_";
    Json body = spectrum_json(pc.decomp, d.num_classes, cfg.analysis.histogram_bins);
    body["class"] = pc.cls;
    write_json_file(out / (prefix + "spectrum.json"), with_provenance(cfg, "class_spectrum", body));
    if (pc.field) write_field(out, prefix, *pc.field);
  }
  std::cout << "G " << format_real(r.report.G) << ", outliers " << r.report.outlier_count << ", trace "
            << format_real(r.report.trace) << '\n';
  return kOk;
}

struct MarginArgs {
  std::string config;
  std::string theta;
  std::string out;
};

int cmd_margin(const MarginArgs& a) {
  const ExperimentConfig cfg = load_config(a.config);
  const ParamDocument doc = load_theta(a.theta);
  const NetworkSpec spec = checked_spec(cfg, doc);
  const fs::path out = prepare_out(a.out, &cfg);
  const LabeledDataset d = load_dataset(cfg.dataset);
  const MarginEstimate m = run_margin(cfg, spec, doc.theta, d);
  write_json_file(out / "margin.json", with_provenance(cfg, "margin", margin_estimate_json(m)));
  std::cout << "margin " << format_real(m.margin) << ", alignment " << format_real(m.achieved_alignment)
            << (m.low_confidence ? " (low confidence)" : "") << '\n';
  return kOk;
}

struct CompareArgs {
  std::string config;
  std::string out;
  bool reparam_check = false;
  std::string theta;
};

int cmd_compare(const CompareArgs& a) {
  const ExperimentConfig cfg = load_config(a.config);
  const fs::path out = prepare_out(a.out, &cfg);
  const LabeledDataset d = load_dataset(cfg.dataset);

  if (a.reparam_check) {
    Vector theta;
    NetworkSpec spec = cfg.model;
    if (!a.theta.empty()) {
      const ParamDocument doc = load_theta(a.theta);
      spec = checked_spec(cfg, doc);
      theta = doc.theta;
    } else {
      theta = run_training(cfg, d, cfg.training.scheme, cfg.training.seeds.front()).theta;
    }
    const ReparamCheck r = run_reparam_check(cfg, spec, theta, d);
    write_json_file(out / "reparam.json", with_provenance(cfg, "reparam_check", reparam_check_json(r)));
    std::cout << "max logit deviation " << format_real(r.max_logit_deviation) << ", trace change "
              << format_real(r.trace_relative_change) << ", delta G " << format_real(r.delta_G) << '\n';
    return kOk;
  }

  const Comparison c = run_comparison(cfg, d);
  write_text(out / "comparison.csv", [&](std::ostream& os) { write_comparison_csv(os, c.rows); });
  write_json_file(out / "comparison.json", with_provenance(cfg, "comparison", comparison_json(c)));
  write_comparison_csv(std::cout, c.rows);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hessian alignment analysis of small classifiers"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic dataset as CSV");
  gen_cmd->add_option("--kind", gen.kind, "gaussian, circle, half_moon, hierarchical, checkerboard or "
                                          "checkerboard_pulled_in")
      ->required();
  gen_cmd->add_option("--n-per-class", gen.n_per_class, "Samples per class")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train one network and write its parameters");
  train_cmd->add_option("--config", tr.config, "Experiment config (JSON)")->required();
  train_cmd->add_option("--out", tr.out, "Output directory (default: output.directory)");
  train_cmd->add_option("--scheme", tr.scheme, "normal, adversarial, large_norm or wide_margin");
  train_cmd->add_option("--seed", tr.seed, "Run seed (default: first configured seed)");
  train_cmd->add_option("--checkpoint-at", tr.checkpoint_at, "Epochs to snapshot, comma separated")->delimiter(',');

  AnalyzeArgs an;
  auto* analyze_cmd = app.add_subcommand("analyze", "Hessian spectrum, alignments and the generalization report");
  analyze_cmd->add_option("--config", an.config, "Experiment config (JSON)")->required();
  analyze_cmd->add_option("--theta", an.theta, "Parameter file written by train")->required();
  analyze_cmd->add_option("--out", an.out, "Output directory (default: output.directory)");
  analyze_cmd->add_option("--per-class", an.per_class, "Also analyze the Hessian restricted to this class");

  MarginArgs mg;
  auto* margin_cmd = app.add_subcommand("margin", "Estimate the decision-boundary margin");
  margin_cmd->add_option("--config", mg.config, "Experiment config (JSON)")->required();
  margin_cmd->add_option("--theta", mg.theta, "Parameter file written by train")->required();
  margin_cmd->add_option("--out", mg.out, "Output directory (default: output.directory)");

  CompareArgs cp;
  auto* compare_cmd = app.add_subcommand("compare", "Train every scheme under every seed and tabulate measures");
  compare_cmd->add_option("--config", cp.config, "Experiment config (JSON)")->required();
  compare_cmd->add_option("--out", cp.out, "Output directory (default: output.directory)");
  compare_cmd->add_flag("--reparam-check", cp.reparam_check, "Compare a minimum with its alpha-rescaled twin instead");
  compare_cmd->add_option("--theta", cp.theta, "Parameter file for --reparam-check (default: train one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen);
    if (*train_cmd) return cmd_train(tr);
    if (*analyze_cmd) return cmd_analyze(an);
    if (*margin_cmd) return cmd_margin(mg);
    if (*compare_cmd) return cmd_compare(cp);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  }
  return kConfig;
}
