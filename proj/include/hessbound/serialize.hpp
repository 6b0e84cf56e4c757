#pragma once

#include "hessbound/alignment.hpp"
#include "hessbound/analysis.hpp"
#include "hessbound/curvature.hpp"
#include "hessbound/network.hpp"
#include "hessbound/training.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace hessbound {

// Keys keep insertion order so emitted documents are stable byte for byte.
using Json = nlohmann::ordered_json;

struct ParamDocument {
  NetworkSpec spec;
  Vector theta;
};

/// {layer_widths, activation, values} with values in layout order.
Json param_vector_json(const NetworkSpec& spec, const Vector& theta);

/// Inverse of param_vector_json. Throws Errc::ParseError on malformed input and
/// Errc::ShapeMismatch when the value count does not match the widths.
ParamDocument param_document_from_json(const Json& doc);

/// Scalar fields, loss history and checkpoint epochs. Checkpoint parameters are
/// written as separate ParamVector documents.
Json train_report_json(const TrainReport& report);

Json generalization_report_json(const GeneralizationReport& report);
Json margin_estimate_json(const MarginEstimate& estimate);
Json spectrum_histogram_json(const SpectrumHistogram& histogram);

/// Eigenvalues plus their histogram.
Json spectrum_json(const SpectralDecomposition& decomp, int num_classes, Index bins);

/// Header sample_id,label,A1,...,Ak then one row per sample.
void write_alignment_csv(std::ostream& os, const AlignmentMatrix& am);

/// resolution x resolution grids, row index = y node, column index = x node.
void write_grid_csv(std::ostream& os, const Eigen::MatrixXi& grid);

struct MeasureStats {
  double mean = 0;
  double stddev = 0;  // population standard deviation over runs
};

MeasureStats summarize(const std::vector<double>& values);

struct ComparisonRow {
  std::string scheme;
  Index runs = 0;
  MeasureStats G;
  MeasureStats trace;
  MeasureStats lambda_max;
  MeasureStats param_norm;
};

/// One row per scheme with mean and std columns for every measure.
void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows);

/// 64-bit FNV-1a of the bytes, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Fingerprint of a resolved config: FNV-1a of its compact dump.
std::string config_fingerprint(const Json& config);

/// Writes `doc` with two-space indentation and a trailing newline. Throws
/// Errc::Io when the file cannot be written.
void write_json_file(const std::filesystem::path& path, const Json& doc);

/// Throws Errc::Io when the file is missing and Errc::ParseError when it is not
/// valid JSON.
Json read_json_file(const std::filesystem::path& path);

}  // namespace hessbound
