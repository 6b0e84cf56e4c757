#include "hessbound/data.hpp"

#include "hessbound/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace hessbound {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  return ec == std::errc{} && ptr == t.data() + t.size();
}

std::uint32_t read_be32(std::istream& is, const std::string& what) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) throw Error(Errc::TruncatedFile, what + ": header too short");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

std::ifstream open_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::Io, "cannot open " + path.string());
  return is;
}

// Splits n samples across k clusters, the first clusters taking the remainder.
Index cluster_share(Index n, Index k, Index cluster) { return n / k + (cluster < n % k ? 1 : 0); }

}  // namespace

void LabeledDataset::validate() const {
  if (X.rows() < 1) throw Error(Errc::ShapeMismatch, "dataset '" + name + "' is empty");
  if (static_cast<Index>(y.size()) != X.rows()) throw Error(Errc::ShapeMismatch, "label count does not match inputs");
  if (num_classes < 1) throw Error(Errc::ShapeMismatch, "dataset needs at least one class");
  for (int label : y)
    if (label < 0 || label >= num_classes) throw Error(Errc::InvalidLabel, "label " + std::to_string(label) + " out of range");
  if (!X.allFinite()) throw Error(Errc::ParseError, "dataset '" + name + "' has non-finite features");
}

LabeledDataset LabeledDataset::subset(const std::vector<Index>& rows) const {
  LabeledDataset out;
  out.X.resize(static_cast<Index>(rows.size()), X.cols());
  out.y.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.X.row(static_cast<Index>(i)) = X.row(rows[i]);
    out.y.push_back(y[static_cast<std::size_t>(rows[i])]);
  }
  out.num_classes = num_classes;
  out.name = name;
  return out;
}

std::vector<Index> LabeledDataset::indices_of_class(int c) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] == c) out.push_back(static_cast<Index>(i));
  return out;
}

void GridSpec::validate() const {
  if (!(x_min < x_max) || !(y_min < y_max)) throw Error(Errc::Config, "grid bounds must satisfy min < max");
  if (resolution < 2) throw Error(Errc::Config, "grid resolution must be >= 2");
}

double GridSpec::x_at(Index i) const { return x_min + cell_width() * static_cast<double>(i); }
double GridSpec::y_at(Index j) const { return y_min + cell_height() * static_cast<double>(j); }

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "gaussian") return SyntheticKind::gaussian;
  if (name == "circle") return SyntheticKind::circle;
  if (name == "half_moon") return SyntheticKind::half_moon;
  if (name == "hierarchical") return SyntheticKind::hierarchical;
  if (name == "checkerboard") return SyntheticKind::checkerboard;
  if (name == "checkerboard_pulled_in") return SyntheticKind::checkerboard_pulled_in;
  throw Error(Errc::UnknownKind,
              "unknown dataset kind '" + std::string(name) +
                  "' (valid: gaussian, circle, half_moon, hierarchical, checkerboard, checkerboard_pulled_in)");
}

std::string_view to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::gaussian: return "gaussian";
    case SyntheticKind::circle: return "circle";
    case SyntheticKind::half_moon: return "half_moon";
    case SyntheticKind::hierarchical: return "hierarchical";
    case SyntheticKind::checkerboard: return "checkerboard";
    case SyntheticKind::checkerboard_pulled_in: return "checkerboard_pulled_in";
  }
  return "unknown";
}

int num_classes(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::gaussian: return 3;
    case SyntheticKind::hierarchical: return 4;
    default: return 2;
  }
}

LabeledDataset gen_synthetic(SyntheticKind kind, Index n_per_class, std::uint64_t seed,
                             const SyntheticParams& params) {
  if (n_per_class < 1) throw Error(Errc::Config, "n_per_class must be >= 1");
  const int C = num_classes(kind);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  LabeledDataset d;
  d.num_classes = C;
  d.name = std::string(to_string(kind));
  d.X.resize(n_per_class * C, 2);
  d.y.resize(static_cast<std::size_t>(n_per_class * C));

  Index row = 0;
  auto emit = [&](double a, double b, int label) {
    d.X(row, 0) = a;
    d.X(row, 1) = b;
    d.y[static_cast<std::size_t>(row)] = label;
    ++row;
  };

  switch (kind) {
    case SyntheticKind::gaussian: {
      if (static_cast<int>(params.gaussian_means.size()) != C) throw Error(Errc::Config, "gaussian needs 3 means");
      for (int c = 0; c < C; ++c) {
        const auto [mx, my] = params.gaussian_means[static_cast<std::size_t>(c)];
        for (Index i = 0; i < n_per_class; ++i) {
          const double a = mx + params.gaussian_sigma * normal(rng);
          const double b = my + params.gaussian_sigma * normal(rng);
          emit(a, b, c);
        }
      }
      break;
    }
    case SyntheticKind::circle: {
      const double radii[2] = {params.circle_inner_radius, params.circle_outer_radius};
      for (int c = 0; c < 2; ++c) {
        for (Index i = 0; i < n_per_class; ++i) {
          const double angle = 2.0 * std::numbers::pi * unit(rng);
          const double r = radii[c] + params.circle_noise * normal(rng);
          emit(r * std::cos(angle), r * std::sin(angle), c);
        }
      }
      break;
    }
    case SyntheticKind::half_moon: {
      for (int c = 0; c < 2; ++c) {
        for (Index i = 0; i < n_per_class; ++i) {
          const double t = std::numbers::pi * unit(rng);
          double a = c == 0 ? std::cos(t) : 1.0 - std::cos(t);
          double b = c == 0 ? std::sin(t) : 0.5 - std::sin(t);
          a += params.moon_noise * normal(rng);
          b += params.moon_noise * normal(rng);
          emit(a, b, c);
        }
      }
      break;
    }
    case SyntheticKind::hierarchical: {
      const double sx = params.hier_super_separation / 2.0;
      const double iy = params.hier_intra_separation / 2.0;
      const std::array<std::pair<double, double>, 4> centers{{{-sx, iy}, {-sx, -iy}, {sx, iy}, {sx, -iy}}};
      for (int c = 0; c < 4; ++c) {
        for (Index i = 0; i < n_per_class; ++i) {
          const double a = centers[static_cast<std::size_t>(c)].first + params.hier_sigma * normal(rng);
          const double b = centers[static_cast<std::size_t>(c)].second + params.hier_sigma * normal(rng);
          emit(a, b, c);
        }
      }
      break;
    }
    case SyntheticKind::checkerboard:
    case SyntheticKind::checkerboard_pulled_in: {
      const Index k = params.checker_clusters_per_class;
      if (k < 1) throw Error(Errc::Config, "checkerboard needs at least one cluster per class");
      const double offset = params.checker_offset *
                            (kind == SyntheticKind::checkerboard_pulled_in ? params.checker_pull_factor : 1.0);
      const double center = static_cast<double>(2 * k - 1) / 2.0;
      for (int c = 0; c < 2; ++c) {
        const double phi1 = c == 0 ? -offset : offset;
        for (Index cluster = 0; cluster < k; ++cluster) {
          // Cluster slot 2*cluster + c along phi2, so classes alternate.
          const double phi2 = (static_cast<double>(2 * cluster + c) - center) * params.checker_spacing;
          for (Index i = 0; i < cluster_share(n_per_class, k, cluster); ++i) {
            const double a = phi1 + params.checker_sigma * normal(rng);
            const double b = phi2 + params.checker_sigma * normal(rng);
            emit(a, b, c);
          }
        }
      }
      break;
    }
  }
  return d;
}

LabeledDataset parse_iris(std::istream& is, std::string name) {
  LabeledDataset d;
  d.name = std::move(name);
  std::map<std::string, int> classes;
  std::vector<std::array<double, 4>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    double first = 0;
    if (rows.empty() && classes.empty() && !parse_double(fields.front(), first)) continue;  // header
    if (fields.size() != 5) {
      throw Error(Errc::WrongColumnCount,
                  "line " + std::to_string(lineno) + ": expected 5 columns, got " + std::to_string(fields.size()));
    }
    std::array<double, 4> features{};
    for (std::size_t j = 0; j < 4; ++j) {
      if (!parse_double(fields[j], features[j])) {
        throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": column " + std::to_string(j) +
                                          " is not a number: '" + fields[j] + "'");
      }
    }
    const std::string cls = trim(fields[4]);
    if (cls.empty()) throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": empty class name");
    const auto [it, inserted] = classes.try_emplace(cls, static_cast<int>(classes.size()));
    rows.push_back(features);
    d.y.push_back(it->second);
  }
  d.X.resize(static_cast<Index>(rows.size()), 4);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < 4; ++j) d.X(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  d.num_classes = static_cast<int>(classes.size());
  d.validate();
  return d;
}

LabeledDataset load_iris(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(Errc::Io, "cannot open " + path.string());
  return parse_iris(is, "iris");
}

LabeledDataset load_mnist_subset(const std::filesystem::path& images_path,
                                 const std::filesystem::path& labels_path,
                                 const std::vector<int>& digits, Index per_class, std::uint64_t seed) {
  if (digits.empty()) throw Error(Errc::Config, "no digits requested");
  for (int dgt : digits)
    if (dgt < 0 || dgt > 9) throw Error(Errc::Config, "digit " + std::to_string(dgt) + " outside 0..9");

  std::ifstream images = open_binary(images_path);
  if (const std::uint32_t magic = read_be32(images, "images"); magic != 0x00000803) {
    throw Error(Errc::BadMagic, images_path.string() + ": image magic " + std::to_string(magic));
  }
  const std::uint32_t n_images = read_be32(images, "images");
  const std::uint32_t rows = read_be32(images, "images");
  const std::uint32_t cols = read_be32(images, "images");
  if (rows != 28 || cols != 28) throw Error(Errc::ShapeMismatch, "expected 28x28 images");

  std::ifstream labels = open_binary(labels_path);
  if (const std::uint32_t magic = read_be32(labels, "labels"); magic != 0x00000801) {
    throw Error(Errc::BadMagic, labels_path.string() + ": label magic " + std::to_string(magic));
  }
  const std::uint32_t n_labels = read_be32(labels, "labels");
  if (n_labels != n_images) throw Error(Errc::ShapeMismatch, "image and label counts differ");

  std::vector<unsigned char> label_bytes(n_labels);
  if (!labels.read(reinterpret_cast<char*>(label_bytes.data()), static_cast<std::streamsize>(n_labels))) {
    throw Error(Errc::TruncatedFile, labels_path.string() + ": fewer labels than declared");
  }
  constexpr std::size_t kPixels = 28 * 28;
  std::vector<unsigned char> pixels(static_cast<std::size_t>(n_images) * kPixels);
  if (!images.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()))) {
    throw Error(Errc::TruncatedFile, images_path.string() + ": fewer pixels than declared");
  }

  std::mt19937_64 rng(seed);
  LabeledDataset d;
  d.num_classes = static_cast<int>(digits.size());
  d.name = "mnist";
  for (int dgt : digits) d.name += std::to_string(dgt);
  d.X.resize(per_class * d.num_classes, static_cast<Index>(kPixels));
  Index row = 0;
  for (std::size_t c = 0; c < digits.size(); ++c) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < label_bytes.size(); ++i)
      if (label_bytes[i] == digits[c]) pool.push_back(i);
    if (static_cast<Index>(pool.size()) < per_class) {
      throw Error(Errc::NotEnoughSamples, "digit " + std::to_string(digits[c]) + " has " +
                                              std::to_string(pool.size()) + " samples, need " +
                                              std::to_string(per_class));
    }
    // Partial Fisher-Yates: the first per_class entries are the draw.
    for (Index k = 0; k < per_class; ++k) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), pool.size() - 1);
      std::swap(pool[static_cast<std::size_t>(k)], pool[pick(rng)]);
      const unsigned char* img = pixels.data() + pool[static_cast<std::size_t>(k)] * kPixels;
      for (std::size_t j = 0; j < kPixels; ++j) d.X(row, static_cast<Index>(j)) = img[j] / 255.0;
      d.y.push_back(static_cast<int>(c));
      ++row;
    }
  }
  return d;
}

LabeledDataset downsample_images(const LabeledDataset& d, int factor) {
  if (d.dim() != 784) throw Error(Errc::WrongDim, "downsampling expects 784 features, got " + std::to_string(d.dim()));
  if (factor < 1 || 28 % factor != 0) throw Error(Errc::Config, "pooling factor must divide 28");
  const int side = 28 / factor;
  LabeledDataset out;
  out.y = d.y;
  out.num_classes = d.num_classes;
  out.name = d.name + "_pool" + std::to_string(factor);
  out.X.setZero(d.size(), side * side);
  const double inv = 1.0 / (factor * factor);
  for (Index i = 0; i < d.size(); ++i) {
    for (int r = 0; r < 28; ++r)
      for (int c = 0; c < 28; ++c) out.X(i, (r / factor) * side + c / factor) += d.X(i, r * 28 + c) * inv;
  }
  return out;
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& d, double train_fraction,
                                                std::uint64_t seed) {
  if (!(train_fraction > 0 && train_fraction < 1)) throw Error(Errc::Config, "train_fraction must lie in (0, 1)");
  std::mt19937_64 rng(seed);
  std::vector<Index> train_rows, test_rows;
  for (int c = 0; c < d.num_classes; ++c) {
    std::vector<Index> rows = d.indices_of_class(c);
    if (rows.empty()) continue;
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(rows.size())));
    if (n_train == 0) throw Error(Errc::ClassTooSmall, "class " + std::to_string(c) + " gets no training samples");
    train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
    test_rows.insert(test_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  LabeledDataset train = d.subset(train_rows);
  LabeledDataset test = d.subset(test_rows);
  train.name = d.name + "_train";
  test.name = d.name + "_test";
  return {std::move(train), std::move(test)};
}

void write_dataset_csv(std::ostream& os, const LabeledDataset& d) {
  for (Index j = 0; j < d.dim(); ++j) os << 'f' << j << ',';
  os << "label\n";
  for (Index i = 0; i < d.size(); ++i) {
    for (Index j = 0; j < d.dim(); ++j) os << format_real(d.X(i, j)) << ',';
    os << d.y[static_cast<std::size_t>(i)] << '\n';
  }
}

LabeledDataset read_dataset_csv(std::istream& is, std::string name) {
  std::string line;
  if (!std::getline(is, line)) throw Error(Errc::ParseError, "empty dataset file");
  const std::vector<std::string> header = split_fields(line);
  if (header.size() < 2 || trim(header.back()) != "label") throw Error(Errc::ParseError, "line 1: bad header");
  const std::size_t d = header.size() - 1;
  std::vector<double> values;
  LabeledDataset out;
  out.name = std::move(name);
  std::size_t lineno = 1;
  int max_label = -1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != d + 1) throw Error(Errc::WrongColumnCount, "line " + std::to_string(lineno));
    for (std::size_t j = 0; j < d; ++j) {
      double v = 0;
      if (!parse_double(fields[j], v)) throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": bad number");
      values.push_back(v);
    }
    double label = 0;
    if (!parse_double(fields[d], label) || label < 0 || label != std::floor(label)) {
      throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": bad label");
    }
    out.y.push_back(static_cast<int>(label));
    max_label = std::max(max_label, static_cast<int>(label));
  }
  const auto n = static_cast<Index>(out.y.size());
  out.X = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, static_cast<Index>(d));
  out.num_classes = max_label + 1;
  out.validate();
  return out;
}

std::pair<Vector, Vector> bounding_box(const LabeledDataset& d, double expand) {
  Vector lo = d.X.colwise().minCoeff().transpose();
  Vector hi = d.X.colwise().maxCoeff().transpose();
  const Vector pad = (hi - lo) * expand;
  return {lo - pad, hi + pad};
}

}  // namespace hessbound
