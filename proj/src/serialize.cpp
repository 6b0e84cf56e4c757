#include "hessbound/serialize.hpp"

#include "hessbound/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace hessbound {

namespace {

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json point_json(const Vector& v) { return vector_json(v); }

}  // namespace

Json param_vector_json(const NetworkSpec& spec, const Vector& theta) {
  if (theta.size() != spec.param_count()) throw Error(Errc::ShapeMismatch, "parameters do not match the network");
  Json doc;
  doc["layer_widths"] = spec.layer_widths;
  doc["activation"] = std::string(to_string(spec.activation));
  doc["values"] = vector_json(theta);
  return doc;
}

ParamDocument param_document_from_json(const Json& doc) {
  ParamDocument out;
  try {
    out.spec.layer_widths = doc.at("layer_widths").get<std::vector<Index>>();
    out.spec.activation = parse_activation(doc.at("activation").get<std::string>());
    const auto values = doc.at("values").get<std::vector<double>>();
    out.theta = Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("parameter document: ") + e.what());
  }
  out.spec.validate();
  if (out.theta.size() != out.spec.param_count()) {
    throw Error(Errc::ShapeMismatch, "parameter document holds " + std::to_string(out.theta.size()) +
                                         " values, widths need " + std::to_string(out.spec.param_count()));
  }
  return out;
}

Json train_report_json(const TrainReport& report) {
  Json doc;
  doc["epochs_run"] = report.epochs_run;
  doc["final_loss"] = report.final_loss;
  doc["final_train_accuracy"] = report.final_train_accuracy;
  doc["converged"] = report.converged;
  doc["loss_history"] = report.loss_history;
  doc["checkpoint_epochs"] = report.checkpoint_epochs;
  return doc;
}

Json generalization_report_json(const GeneralizationReport& report) {
  Json doc;
  doc["G"] = report.G;
  doc["epsilon"] = report.epsilon;
  doc["trace"] = report.trace;
  doc["lambda_max"] = report.lambda_max;
  doc["param_norm"] = report.param_norm;
  doc["outlier_count"] = report.outlier_count;
  doc["param_count"] = report.param_count;
  doc["epsilon_repeats"] = report.epsilon_repeats;
  doc["epsilon_seed"] = report.epsilon_seed;
  doc["epsilon_aggregation"] = std::string(to_string(report.epsilon_aggregation));
  doc["m"] = vector_json(report.m);
  return doc;
}

Json margin_estimate_json(const MarginEstimate& e) {
  Json doc;
  doc["margin"] = e.margin;
  doc["d_min"] = e.d_min;
  doc["d_max"] = e.d_max;
  doc["x_b"] = point_json(e.x_b);
  doc["x_t_min"] = point_json(e.x_t_min);
  doc["x_t_max"] = point_json(e.x_t_max);
  doc["t_min_index"] = e.t_min_index;
  doc["t_max_index"] = e.t_max_index;
  doc["achieved_alignment"] = e.achieved_alignment;
  doc["iterations"] = e.iterations;
  doc["no_progress"] = e.no_progress;
  doc["low_confidence"] = e.low_confidence;
  return doc;
}

Json spectrum_histogram_json(const SpectrumHistogram& h) {
  Json doc;
  doc["bin_edges"] = h.bin_edges;
  doc["counts"] = h.counts;
  doc["outlier_count"] = h.outlier_count;
  return doc;
}

Json spectrum_json(const SpectralDecomposition& decomp, int num_classes, Index bins) {
  Json doc;
  doc["eigenvalues"] = vector_json(decomp.eigenvalues);
  doc["residual"] = decomp.residual;
  doc["histogram"] = spectrum_histogram_json(spectrum_histogram(decomp.eigenvalues, num_classes, bins));
  return doc;
}

void write_alignment_csv(std::ostream& os, const AlignmentMatrix& am) {
  os << "sample_id,label";
  for (Index i : am.eigen_indices) os << ",A" << (i + 1);
  os << '\n';
  for (Index s = 0; s < am.samples(); ++s) {
    os << am.sample_ids[static_cast<std::size_t>(s)] << ',' << am.labels[static_cast<std::size_t>(s)];
    for (Index i = 0; i < am.columns(); ++i) os << ',' << format_real(am.values(s, i));
    os << '\n';
  }
}

void write_grid_csv(std::ostream& os, const Eigen::MatrixXi& grid) {
  for (Index r = 0; r < grid.rows(); ++r) {
    for (Index c = 0; c < grid.cols(); ++c) {
      if (c) os << ',';
      os << grid(r, c);
    }
    os << '\n';
  }
}

MeasureStats summarize(const std::vector<double>& values) {
  MeasureStats s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double var = 0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows) {
  os << "scheme,runs,G_mean,G_std,trace_mean,trace_std,lambda_max_mean,lambda_max_std,param_norm_mean,param_norm_std\n";
  for (const ComparisonRow& r : rows) {
    os << r.scheme << ',' << r.runs;
    for (const MeasureStats* m : {&r.G, &r.trace, &r.lambda_max, &r.param_norm}) {
      os << ',' << format_real(m->mean) << ',' << format_real(m->stddev);
    }
    os << '\n';
  }
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_fingerprint(const Json& config) { return fnv1a_hex(config.dump()); }

void write_json_file(const std::filesystem::path& path, const Json& doc) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::Io, "cannot write " + path.string());
  os << doc.dump(2) << '\n';
  if (!os) throw Error(Errc::Io, "failed writing " + path.string());
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::Io, "cannot open " + path.string());
  try {
    return Json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace hessbound
