// Copyright 2026 The memaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "memaudit/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "memaudit/error.hpp"
#include "memaudit/random.hpp"

namespace memaudit {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t at) {
  return (std::uint32_t{bytes[at]} << 24) | (std::uint32_t{bytes[at + 1]} << 16) |
         (std::uint32_t{bytes[at + 2]} << 8) | std::uint32_t{bytes[at + 3]};
}

std::string hex_magic(std::uint32_t magic) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08X", magic);
  return buf;
}

struct IdxHeader {
  std::vector<std::size_t> dims;
  std::size_t payload_offset = 0;
  std::size_t payload_size = 1;
};

IdxHeader parse_idx_header(std::span<const std::uint8_t> bytes, std::uint32_t expected,
                           std::size_t expected_dims) {
  require(bytes.size() >= 4, ErrorCode::format,
          "IDX file is too short for a magic number (" + std::to_string(bytes.size()) +
              " bytes)");
  const std::uint32_t magic = read_be32(bytes, 0);
  require(magic == expected, ErrorCode::format,
          "IDX magic " + hex_magic(magic) + " does not match the expected " +
              hex_magic(expected));
  IdxHeader h;
  h.payload_offset = 4 + 4 * expected_dims;
  require(bytes.size() >= h.payload_offset, ErrorCode::format,
          "IDX header truncated: expected " + std::to_string(expected_dims) + " dimension sizes");
  for (std::size_t d = 0; d < expected_dims; ++d) {
    h.dims.push_back(read_be32(bytes, 4 + 4 * d));
    h.payload_size *= h.dims.back();
  }
  const std::size_t available = bytes.size() - h.payload_offset;
  require(available >= h.payload_size, ErrorCode::format,
          "IDX payload length " + std::to_string(available) + " is shorter than the " +
              std::to_string(h.payload_size) + " bytes the header declares");
  return h;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::vector<double> default_center(std::size_t dim, double first) {
  std::vector<double> c(dim, 0.0);
  c[0] = first;
  return c;
}

}  // namespace

// --- IDX -----------------------------------------------------------------------

Dataset parse_idx_images(std::span<const std::uint8_t> bytes, std::string name) {
  const IdxHeader h = parse_idx_header(bytes, kIdxImageMagic, 3);
  const std::size_t n = h.dims[0];
  const std::size_t rows = h.dims[1];
  const std::size_t cols = h.dims[2];
  require(rows * cols >= 1, ErrorCode::invalid_dataset, "IDX images have zero pixels");
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rows * cols));
  for (std::size_t k = 0; k < h.payload_size; ++k)
    x.data()[k] = static_cast<double>(bytes[h.payload_offset + k]) / 255.0;
  return Dataset(std::move(x), std::move(name), ImageShape{rows, cols, 1});
}

std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  const IdxHeader h = parse_idx_header(bytes, kIdxLabelMagic, 1);
  std::vector<int> labels(h.payload_size);
  for (std::size_t k = 0; k < h.payload_size; ++k) labels[k] = bytes[h.payload_offset + k];
  return labels;
}

Dataset load_idx(const std::filesystem::path& path) {
  return parse_idx_images(read_binary_file(path), path.filename().string());
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
  return parse_idx_labels(read_binary_file(path));
}

// --- CSV and files -----------------------------------------------------------

Dataset parse_csv(const std::string& text, bool has_header, std::string name) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_commas(line);
    if (has_header && header.empty() && rows.empty()) {
      header = std::move(cells);
      width = header.size();
      continue;
    }
    if (width == 0) width = cells.size();
    require(cells.size() == width, ErrorCode::format,
            "ragged CSV: row " + std::to_string(line_no) + " has " +
                std::to_string(cells.size()) + " fields, expected " + std::to_string(width));
    std::vector<double> row(width);
    for (std::size_t c = 0; c < width; ++c) {
      const std::string& cell = cells[c];
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, row[c]);
      require(!cell.empty() && ec == std::errc() && ptr == last, ErrorCode::format,
              "non-numeric CSV cell '" + cell + "' at row " + std::to_string(line_no) +
                  ", column " + std::to_string(c + 1));
    }
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), ErrorCode::invalid_dataset, "CSV has no data rows");
  require(width >= 1, ErrorCode::invalid_dataset, "CSV has no columns");
  Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c)
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  Dataset data(std::move(x), std::move(name));
  if (!header.empty()) data.set_column_names(std::move(header));
  return data;
}

Dataset load_csv(const std::filesystem::path& path, bool has_header) {
  return parse_csv(read_text_file(path), has_header, path.filename().string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  return {text.begin(), text.end()};
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::io, "cannot write " + path.string());
  out << content;
  require(out.good(), ErrorCode::io, "write failed for " + path.string());
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string dataset_to_csv(const Dataset& data) {
  std::string out;
  const auto& names = data.column_names();
  for (std::size_t c = 0; c < names.size(); ++c) out += (c ? "," : "") + names[c];
  if (!names.empty()) out += "\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + format_double(row[c]);
    out += "\n";
  }
  return out;
}

// --- synthetic -----------------------------------------------------------------

const char* to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::gaussian_clusters: return "gaussian-clusters";
    case SynthKind::two_moons: return "two-moons";
    case SynthKind::image_prototypes: return "image-prototypes";
  }
  return "?";
}

SynthKind synth_kind_from_string(const std::string& name) {
  for (SynthKind k : {SynthKind::gaussian_clusters, SynthKind::two_moons,
                      SynthKind::image_prototypes})
    if (name == to_string(k)) return k;
  fail(ErrorCode::config, "unknown synthetic generator '" + name + "'");
}

namespace {

class InlierSource {
 public:
  // Prototype images are drawn from `rng` at construction.
  InlierSource(const SynthSpec& spec, Rng& rng) : spec_(spec) {
    if (spec.kind == SynthKind::gaussian_clusters) {
      centers_ = spec.centers;
      if (centers_.empty())
        centers_ = {default_center(spec.dim, -3.0), default_center(spec.dim, 3.0)};
    } else if (spec.kind == SynthKind::image_prototypes) {
      const std::size_t pixels = spec.image_side * spec.image_side;
      for (std::size_t p = 0; p < spec.prototypes; ++p) {
        std::vector<double> proto(pixels);
        for (double& v : proto) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
        centers_.push_back(std::move(proto));
      }
    }
  }

  std::size_t dim() const {
    switch (spec_.kind) {
      case SynthKind::gaussian_clusters: return centers_.front().size();
      case SynthKind::two_moons: return 2;
      case SynthKind::image_prototypes: return spec_.image_side * spec_.image_side;
    }
    return 0;
  }

  // Draws one inlier; writes its component into *label.
  std::vector<double> draw(Rng& rng, int* label) {
    switch (spec_.kind) {
      case SynthKind::gaussian_clusters: {
        const std::size_t c = rng.below(centers_.size());
        *label = static_cast<int>(c);
        std::vector<double> x = centers_[c];
        for (double& v : x) v += spec_.cluster_sd * rng.normal();
        return x;
      }
      case SynthKind::two_moons: {
        const bool upper = rng.bernoulli(0.5);
        *label = upper ? 0 : 1;
        const double t = std::numbers::pi * rng.uniform();
        std::vector<double> x = upper ? std::vector<double>{std::cos(t), std::sin(t)}
                                      : std::vector<double>{1.0 - std::cos(t), 0.5 - std::sin(t)};
        for (double& v : x) v += spec_.moon_noise * rng.normal();
        return x;
      }
      case SynthKind::image_prototypes: {
        const std::size_t c = rng.below(centers_.size());
        *label = static_cast<int>(c);
        std::vector<double> x = centers_[c];
        for (double& v : x)
          if (rng.bernoulli(spec_.flip_probability)) v = 1.0 - v;
        return x;
      }
    }
    return {};
  }

 private:
  const SynthSpec& spec_;
  std::vector<std::vector<double>> centers_;
};

void validate(const SynthSpec& spec) {
  require(spec.n >= 2, ErrorCode::config, "synthetic n must be >= 2");
  require(spec.dim >= 1, ErrorCode::config, "synthetic dim must be >= 1");
  require(spec.cluster_sd > 0.0, ErrorCode::config, "cluster_sd must be positive");
  require(spec.outlier_displacement >= 0.0, ErrorCode::config,
          "outlier displacement must be nonnegative");
  require(spec.duplicate_groups == 0 || spec.duplicate_multiplicity >= 2, ErrorCode::config,
          "duplicate multiplicity must be >= 2");
  require(spec.flip_probability >= 0.0 && spec.flip_probability <= 1.0, ErrorCode::config,
          "flip probability must lie in [0, 1]");
  for (const auto& c : spec.centers)
    require(c.size() == spec.centers.front().size(), ErrorCode::config,
            "cluster centers must share one dimension");
  if (spec.kind == SynthKind::image_prototypes)
    require(spec.image_side >= 2 && spec.prototypes >= 1, ErrorCode::config,
            "image generator needs side >= 2 and >= 1 prototype");
  const std::size_t planted =
      spec.outliers + spec.duplicate_groups * (spec.duplicate_multiplicity - 1);
  require(planted + spec.duplicate_groups + 1 <= spec.n, ErrorCode::config,
          "planted rows leave too few inliers");
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows, std::size_t dim) {
  Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < dim; ++c)
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return x;
}

}  // namespace

SynthData generate_synth(const SynthSpec& spec) {
  validate(spec);
  Rng rng(derive_seed(spec.seed, SeedStream::synthetic, 0));
  InlierSource source(spec, rng);
  const std::size_t dim = source.dim();
  const std::size_t copies = spec.duplicate_groups * (spec.duplicate_multiplicity - 1);
  const std::size_t inliers = spec.n - spec.outliers - copies;

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < inliers; ++i) {
    int label = 0;
    rows.push_back(source.draw(rng, &label));
    labels.push_back(label);
  }

  SynthData out{Dataset(Matrix(1, 1)), std::nullopt, {}, {}};

  // Duplicate groups: distinct inlier sources, copies appended.
  std::vector<std::size_t> pool(inliers);
  for (std::size_t i = 0; i < inliers; ++i) pool[i] = i;
  rng.shuffle(std::span<std::size_t>(pool));
  for (std::size_t g = 0; g < spec.duplicate_groups; ++g) {
    const std::size_t src = pool[g];
    std::vector<std::int64_t> group{static_cast<std::int64_t>(src)};
    for (std::size_t c = 1; c < spec.duplicate_multiplicity; ++c) {
      group.push_back(static_cast<std::int64_t>(rows.size()));
      rows.push_back(rows[src]);
      labels.push_back(labels[src]);
    }
    std::sort(group.begin(), group.end());
    out.duplicate_groups.push_back(std::move(group));
  }

  // Outliers.
  std::vector<double> center(dim, 0.0);
  for (std::size_t i = 0; i < inliers; ++i)
    for (std::size_t c = 0; c < dim; ++c) center[c] += rows[i][c] / static_cast<double>(inliers);
  double radius = 0.0;
  for (std::size_t i = 0; i < inliers; ++i) {
    double sq = 0.0;
    for (std::size_t c = 0; c < dim; ++c) sq += (rows[i][c] - center[c]) * (rows[i][c] - center[c]);
    radius = std::max(radius, std::sqrt(sq));
  }
  const double sd = spec.kind == SynthKind::two_moons ? spec.moon_noise : spec.cluster_sd;
  for (std::size_t o = 0; o < spec.outliers; ++o) {
    std::vector<double> x(dim);
    if (spec.kind == SynthKind::image_prototypes) {
      for (double& v : x) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    } else if (dim == 1) {
      const double sign = o % 2 == 0 ? 1.0 : -1.0;
      const double step = static_cast<double>(o / 2 + 1);
      x[0] = center[0] + sign * (radius + spec.outlier_displacement * sd * step);
    } else {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(o) /
                           static_cast<double>(spec.outliers);
      x = center;
      const double r = radius + spec.outlier_displacement * sd;
      x[0] += r * std::cos(angle);
      x[1] += r * std::sin(angle);
    }
    out.outlier_ids.push_back(static_cast<std::int64_t>(rows.size()));
    rows.push_back(std::move(x));
    labels.push_back(-1);
  }

  const ShapeTag shape = spec.kind == SynthKind::image_prototypes
                             ? ShapeTag(ImageShape{spec.image_side, spec.image_side, 1})
                             : ShapeTag(FlatShape{});
  out.data = Dataset(to_matrix(rows, dim), std::string("synth-") + to_string(spec.kind), shape);
  out.data.set_labels(labels);

  if (spec.validation > 0) {
    // Same prototypes as the training rows, fresh draws from a separate stream.
    Rng proto_rng(derive_seed(spec.seed, SeedStream::synthetic, 0));
    InlierSource vsource(spec, proto_rng);
    Rng vrng(derive_seed(spec.seed, SeedStream::synthetic, 1));
    std::vector<std::vector<double>> vrows;
    std::vector<int> vlabels;
    for (std::size_t i = 0; i < spec.validation; ++i) {
      int label = 0;
      vrows.push_back(vsource.draw(vrng, &label));
      vlabels.push_back(label);
    }
    Dataset v(to_matrix(vrows, dim), out.data.name() + "-validation", shape);
    v.set_labels(vlabels);
    out.validation = std::move(v);
  }
  return out;
}

nlohmann::json to_json(const SynthSpec& s) {
  nlohmann::json j{{"kind", to_string(s.kind)},
                   {"n", s.n},
                   {"outliers", s.outliers},
                   {"outlier_displacement", s.outlier_displacement},
                   {"duplicate_groups", s.duplicate_groups},
                   {"duplicate_multiplicity", s.duplicate_multiplicity},
                   {"validation", s.validation},
                   {"seed", s.seed}};
  switch (s.kind) {
    case SynthKind::gaussian_clusters:
      j["dim"] = s.dim;
      j["centers"] = s.centers;
      j["cluster_sd"] = s.cluster_sd;
      break;
    case SynthKind::two_moons:
      j["moon_noise"] = s.moon_noise;
      break;
    case SynthKind::image_prototypes:
      j["image_side"] = s.image_side;
      j["prototypes"] = s.prototypes;
      j["flip_probability"] = s.flip_probability;
      break;
  }
  return j;
}

SynthSpec synth_spec_from_json(const nlohmann::json& doc) {
  require(doc.is_object(), ErrorCode::config, "synthetic spec must be an object");
  static const std::set<std::string> known{
      "kind",     "n",          "dim",        "centers",          "cluster_sd",
      "moon_noise", "image_side", "prototypes", "flip_probability", "outliers",
      "outlier_displacement", "duplicate_groups", "duplicate_multiplicity", "validation", "seed"};
  for (const auto& [key, value] : doc.items())
    require(known.count(key) > 0, ErrorCode::config, "unknown synthetic spec key '" + key + "'");
  SynthSpec s;
  try {
    if (doc.contains("kind")) s.kind = synth_kind_from_string(doc["kind"].get<std::string>());
    auto get = [&](const char* key, auto& field) {
      if (doc.contains(key)) doc.at(key).get_to(field);
    };
    get("n", s.n);
    get("dim", s.dim);
    get("centers", s.centers);
    get("cluster_sd", s.cluster_sd);
    get("moon_noise", s.moon_noise);
    get("image_side", s.image_side);
    get("prototypes", s.prototypes);
    get("flip_probability", s.flip_probability);
    get("outliers", s.outliers);
    get("outlier_displacement", s.outlier_displacement);
    get("duplicate_groups", s.duplicate_groups);
    get("duplicate_multiplicity", s.duplicate_multiplicity);
    get("validation", s.validation);
    get("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("bad synthetic spec: ") + e.what());
  }
  if (!s.centers.empty()) s.dim = s.centers.front().size();
  validate(s);
  return s;
}

// --- histogram bins ------------------------------------------------------------

std::vector<HistBin> hist_bins(std::span<const double> log_probs,
                               std::span<const std::int64_t> ids,
                               std::span<const std::int64_t> memorized, double bin_width) {
  require(!log_probs.empty(), ErrorCode::invalid_argument, "hist_bins needs values");
  require(log_probs.size() == ids.size(), ErrorCode::invalid_argument,
          "log-probabilities and ids are not aligned");
  require(bin_width > 0.0, ErrorCode::invalid_argument, "bin width must be positive");
  const std::set<std::int64_t> flagged(memorized.begin(), memorized.end());
  std::map<std::int64_t, HistBin> bins;
  for (std::size_t i = 0; i < log_probs.size(); ++i) {
    require(std::isfinite(log_probs[i]), ErrorCode::invalid_argument,
            "hist_bins needs finite log-probabilities");
    const auto key = static_cast<std::int64_t>(std::floor(log_probs[i] / bin_width));
    HistBin& bin = bins[key];
    bin.lo = static_cast<double>(key) * bin_width;
    bin.hi = static_cast<double>(key + 1) * bin_width;
    (flagged.count(ids[i]) ? bin.memorized : bin.regular) += 1;
  }
  std::vector<HistBin> out;
  for (const auto& [key, bin] : bins) out.push_back(bin);
  return out;
}

}  // namespace memaudit
