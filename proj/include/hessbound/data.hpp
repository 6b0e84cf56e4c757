#pragma once

#include "hessbound/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hessbound {

/// Inputs X (one sample per row), labels in [0, num_classes).
struct LabeledDataset {
  Matrix X;
  std::vector<int> y;
  int num_classes = 0;
  std::string name;

  Index size() const { return X.rows(); }
  Index dim() const { return X.cols(); }
  Vector sample(Index i) const { return X.row(i).transpose(); }

  /// Throws Errc::ShapeMismatch / Errc::InvalidLabel / Errc::ParseError when
  /// the invariants (n >= 1, labels in range, finite features) do not hold.
  void validate() const;

  LabeledDataset subset(const std::vector<Index>& rows) const;
  std::vector<Index> indices_of_class(int c) const;
};

struct GridSpec {
  double x_min = -1, x_max = 1, y_min = -1, y_max = 1;
  Index resolution = 2;

  void validate() const;
  double x_at(Index i) const;
  double y_at(Index j) const;
  double cell_width() const { return (x_max - x_min) / static_cast<double>(resolution - 1); }
  double cell_height() const { return (y_max - y_min) / static_cast<double>(resolution - 1); }
};

enum class SyntheticKind { gaussian, circle, half_moon, hierarchical, checkerboard, checkerboard_pulled_in };

SyntheticKind parse_synthetic_kind(std::string_view name);
std::string_view to_string(SyntheticKind kind);
int num_classes(SyntheticKind kind);

/// Generator constants. The defaults are the documented reference values; every
/// field can be overridden from an experiment config.
struct SyntheticParams {
  // gaussian
  std::vector<std::pair<double, double>> gaussian_means{{0, 2}, {-2, -1}, {2, -1}};
  double gaussian_sigma = 0.4;
  // circle
  double circle_inner_radius = 1.0;
  double circle_outer_radius = 2.0;
  double circle_noise = 0.12;
  // half_moon
  double moon_noise = 0.1;
  // hierarchical
  double hier_super_separation = 4.0;
  double hier_intra_separation = 1.2;
  double hier_sigma = 0.25;
  // checkerboard: the classes sit at -/+ checker_offset in phi1 (one threshold
  // separates them) and their clusters alternate along phi2 at checker_spacing.
  // The pulled-in variant scales the phi1 offset by checker_pull_factor.
  int checker_clusters_per_class = 3;
  double checker_spacing = 2.0;
  double checker_offset = 0.75;
  double checker_sigma = 0.25;
  double checker_pull_factor = 0.5;
};

/// Deterministic per (kind, n_per_class, seed, params). Samples are emitted
/// class by class.
LabeledDataset gen_synthetic(SyntheticKind kind, Index n_per_class, std::uint64_t seed,
                             const SyntheticParams& params = {});

/// Iris CSV: four numeric feature columns followed by a class-name column.
/// A non-numeric first line is treated as a header. Class names map to
/// indices in order of first appearance.
LabeledDataset load_iris(const std::filesystem::path& path);
LabeledDataset parse_iris(std::istream& is, std::string name = "iris");

/// Reads an IDX image/label pair, keeps the listed digits (relabelled 0..C-1 in
/// the listed order), draws per_class samples of each without replacement and
/// scales pixels to [0, 1].
LabeledDataset load_mnist_subset(const std::filesystem::path& images_path,
                                 const std::filesystem::path& labels_path,
                                 const std::vector<int>& digits, Index per_class,
                                 std::uint64_t seed);

/// 4x4 average pooling of 28x28 images, 784 -> 49 features.
LabeledDataset downsample_images(const LabeledDataset& d, int factor = 4);

/// Stratified, seeded split. Throws Errc::ClassTooSmall if a class would end up
/// with no training samples.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& d, double train_fraction,
                                                std::uint64_t seed);

/// Dataset CSV with header f0,...,f{d-1},label.
void write_dataset_csv(std::ostream& os, const LabeledDataset& d);
LabeledDataset read_dataset_csv(std::istream& is, std::string name = "csv");

/// Axis-aligned bounding box of the inputs, widened by `expand` of the extent
/// on every side.
std::pair<Vector, Vector> bounding_box(const LabeledDataset& d, double expand = 0.0);

}  // namespace hessbound
