#pragma once

#include "hessbound/alignment.hpp"
#include "hessbound/analysis.hpp"
#include "hessbound/curvature.hpp"
#include "hessbound/data.hpp"
#include "hessbound/network.hpp"
#include "hessbound/serialize.hpp"
#include "hessbound/training.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hessbound {

enum class DatasetSource { synthetic, iris, mnist, csv };

struct DatasetConfig {
  DatasetSource source = DatasetSource::synthetic;
  SyntheticKind kind = SyntheticKind::gaussian;  // synthetic only
  Index n_per_class = 100;                       // synthetic and mnist
  std::uint64_t seed = 7;
  SyntheticParams synthetic{};
  std::filesystem::path path;         // iris or csv
  std::filesystem::path images_path;  // mnist
  std::filesystem::path labels_path;  // mnist
  std::vector<int> digits{0, 1, 7};
  int downsample = 4;  // mnist pooling factor, 1 keeps 784 features
  int num_classes = 0;  // csv only; 0 infers max label + 1
};

struct TrainingConfig {
  InitScheme scheme = InitScheme::normal;
  std::vector<InitScheme> schemes{InitScheme::normal, InitScheme::adversarial};  // compare
  std::vector<std::uint64_t> seeds{0};
  OptimizerConfig optimizer{};
  StopCriteria stop{};
  LossConfig loss{};
  InitParams init{};
  std::vector<long> checkpoint_at;
};

struct AnalysisConfig {
  Index k = 5;                      // eigenvectors exported per alignment matrix / grid
  std::optional<GridSpec> grid;     // absent: data bounding box widened 10%
  Index grid_resolution = 100;      // used when grid is absent
  ReportOptions report{};
  BoundarySearchOptions margin{};
  Index histogram_bins = 50;
  CurvatureConfig curvature{};
  double alpha = 2.0;
  Index reparam_inputs = 1000;
  std::uint64_t reparam_seed = 0;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  NetworkSpec model{{2, 32, 32, 3}, Activation::relu};
  TrainingConfig training;
  AnalysisConfig analysis;
  std::filesystem::path output_dir = "out";

  /// Throws Errc::Config on a broken invariant (empty seed list, bad widths,
  /// model/data mismatch that can be detected without loading data).
  void validate() const;
};

/// Parses an experiment document with blocks dataset, model, training,
/// analysis and output. Missing keys take their defaults; unknown keys and
/// wrongly typed values throw Errc::Config. Relative paths resolve against
/// `base_dir`.
ExperimentConfig config_from_json(const Json& doc, const std::filesystem::path& base_dir = {});

/// Fully resolved config, every default spelled out.
Json config_json(const ExperimentConfig& cfg);

ExperimentConfig load_config(const std::filesystem::path& path);

LabeledDataset load_dataset(const DatasetConfig& cfg);

/// Init and shuffle seeds for run `seed`: the init uses `seed`, the optimizer
/// shuffles with optimizer.shuffle_seed + seed.
TrainResult run_training(const ExperimentConfig& cfg, const LabeledDataset& d, InitScheme scheme,
                         std::uint64_t seed);

struct AnalysisResult {
  HessianAssembly hessian;
  SpectralDecomposition decomp;
  GeneralizationReport report;
  AlignmentMatrix alignments;  // top-k columns
  std::optional<GridField> field;
};

AnalysisResult run_analysis(const ExperimentConfig& cfg, const NetworkSpec& spec, const Vector& theta,
                            const LabeledDataset& d);

struct PerClassResult {
  int cls = 0;
  HessianAssembly hessian;
  SpectralDecomposition decomp;
  std::optional<GridField> field;
};

/// Hessian of the loss restricted to the samples of class `cls`.
PerClassResult run_per_class(const ExperimentConfig& cfg, const NetworkSpec& spec, const Vector& theta,
                             const LabeledDataset& d, int cls);

MarginEstimate run_margin(const ExperimentConfig& cfg, const NetworkSpec& spec, const Vector& theta,
                          const LabeledDataset& d);

struct RunRecord {
  InitScheme scheme = InitScheme::normal;
  std::uint64_t seed = 0;
  TrainReport train;
  GeneralizationReport report;
  Index boundary_cells = -1;  // 2-D inputs only
};

struct Comparison {
  std::vector<RunRecord> runs;
  std::vector<ComparisonRow> rows;  // one per scheme, in config order
};

/// Every scheme crossed with every seed.
Comparison run_comparison(const ExperimentConfig& cfg, const LabeledDataset& d);

struct ReparamCheck {
  double alpha = 0;
  double max_logit_deviation = 0;
  double trace_before = 0;
  double trace_after = 0;
  double trace_relative_change = 0;
  double G_before = 0;
  double G_after = 0;
  double delta_G = 0;  // |G_after - G_before|
  Index param_count = 0;
};

/// alpha-scales a one-hidden-layer ReLU net and compares logits on random
/// inputs drawn from the data bounding box, the Hessian trace and G.
ReparamCheck run_reparam_check(const ExperimentConfig& cfg, const NetworkSpec& spec, const Vector& theta,
                               const LabeledDataset& d);

Json reparam_check_json(const ReparamCheck& r);
Json comparison_json(const Comparison& c);

/// Wraps a result document with the resolved config and its fingerprint.
Json with_provenance(const ExperimentConfig& cfg, const std::string& kind, Json body);

/// Grid used for fields and boundary scans.
GridSpec resolve_grid(const ExperimentConfig& cfg, const LabeledDataset& d);

}  // namespace hessbound
