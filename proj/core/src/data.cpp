#include "fare/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fare/rng.hpp"

namespace fare {

void SynthConfig::validate() const {
  if (n_train < 1 || n_test < 1) throw std::invalid_argument("SynthConfig: counts must be >= 1");
  if (d_features < 1 || n_classes < 1 || d_protected < 1) {
    throw std::invalid_argument("SynthConfig: dimensions must be >= 1");
  }
  if (noise_sd <= 0.0) throw std::invalid_argument("SynthConfig: noise_sd must be positive");
  if (correlation < -1.0 || correlation > 1.0) {
    throw std::invalid_argument("SynthConfig: correlation must lie in [-1, 1]");
  }
}

namespace {

Record make_record(const SynthConfig& cfg, const Matrix& prototypes, const Matrix& z_embed,
                   Rng& rng) {
  Record rec;
  rec.label = rng.below(cfg.n_classes);

  const double label_frac =
      cfg.n_classes > 1 ? static_cast<double>(rec.label) / static_cast<double>(cfg.n_classes - 1)
                        : 0.5;
  const double mix = std::abs(cfg.correlation);
  const double target = cfg.correlation >= 0.0 ? label_frac : 1.0 - label_frac;

  rec.protected_attr.resize(cfg.d_protected);
  if (cfg.one_hot_protected) {
    // Group follows the label's parity with probability (1+mix)/2, keeping
    // the group/label dependence controlled by `correlation`.
    const std::size_t aligned = rec.label % cfg.d_protected;
    std::size_t group = aligned;
    if (rng.uniform() >= (1.0 + mix) / 2.0) group = rng.below(cfg.d_protected);
    for (std::size_t k = 0; k < cfg.d_protected; ++k)
      rec.protected_attr[k] = k == group ? 1.0 : 0.0;
  } else {
    // The label/protected dependence lives in component 0: a convex mix
    // toward a label-derived point (stays in [0,1]). The remaining
    // components are label-independent continuous attributes.
    for (std::size_t k = 0; k < cfg.d_protected; ++k) {
      const double u = rng.uniform();
      rec.protected_attr[k] = k == 0 ? (1.0 - mix) * u + mix * target : u;
    }
  }

  rec.features.resize(cfg.d_features);
  for (std::size_t j = 0; j < cfg.d_features; ++j) {
    double v = cfg.label_scale * prototypes(rec.label, j);
    for (std::size_t k = 0; k < cfg.d_protected; ++k)
      v += cfg.protected_scale * rec.protected_attr[k] * z_embed(k, j);
    rec.features[j] = v + rng.normal(0.0, cfg.noise_sd);
  }
  return rec;
}

}  // namespace

Dataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();

  Rng structure_rng(Rng::mix(cfg.seed, 0x5354525543ull));
  const Matrix prototypes = structure_rng.normal_matrix(cfg.n_classes, cfg.d_features);
  const Matrix z_embed = structure_rng.normal_matrix(
      cfg.d_protected, cfg.d_features, 1.0 / std::sqrt(static_cast<double>(cfg.d_protected)));

  Rng sample_rng(Rng::mix(cfg.seed, 0x53414d504cull));
  Dataset ds;
  ds.train.reserve(cfg.n_train);
  ds.test.reserve(cfg.n_test);
  for (std::size_t i = 0; i < cfg.n_train; ++i)
    ds.train.push_back(make_record(cfg, prototypes, z_embed, sample_rng));
  for (std::size_t i = 0; i < cfg.n_test; ++i)
    ds.test.push_back(make_record(cfg, prototypes, z_embed, sample_rng));
  return ds;
}

SynthConfig binary_protected_preset(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.d_protected = 2;
  cfg.one_hot_protected = true;
  cfg.n_classes = 2;
  cfg.correlation = 0.6;
  cfg.seed = seed;
  return cfg;
}

Record augment(const Record& record, double noise_sd, double dropout_rate, std::uint64_t seed) {
  Rng rng(seed);
  Record out = record;  // label and protected vector copied exactly
  for (double& v : out.features) {
    if (noise_sd > 0.0) v += rng.normal(0.0, noise_sd);
    if (dropout_rate > 0.0 && rng.uniform() < dropout_rate) v = 0.0;
  }
  return out;
}

namespace {

std::string expected_header(std::size_t d_features, std::size_t d_protected) {
  std::ostringstream h;
  for (std::size_t j = 0; j < d_features; ++j) h << 'f' << j << ',';
  h << "label";
  for (std::size_t k = 0; k < d_protected; ++k) h << ",z" << k;
  return h.str();
}

void append_double(std::string& line, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  line += buf;
}

}  // namespace

void save_csv(const std::vector<Record>& records, const std::string& path) {
  if (records.empty()) throw std::invalid_argument("save_csv: no records");
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!out) throw std::runtime_error("save_csv: cannot open " + path);

  const std::size_t d = records.front().features.size();
  const std::size_t k = records.front().protected_attr.size();
  out << expected_header(d, k) << '\n';
  std::string line;
  for (const Record& rec : records) {
    line.clear();
    for (double v : rec.features) {
      append_double(line, v);
      line += ',';
    }
    line += std::to_string(rec.label);
    for (double v : rec.protected_attr) {
      line += ',';
      append_double(line, v);
    }
    out << line << '\n';
  }
  if (!out) throw std::runtime_error("save_csv: write failed for " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

double parse_value(const std::string& text, std::size_t line_no) {
  std::size_t consumed = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &consumed);
  } catch (const std::exception&) {
    throw std::runtime_error("load_csv: line " + std::to_string(line_no) +
                             ": malformed value '" + text + "'");
  }
  if (consumed != text.size()) {
    throw std::runtime_error("load_csv: line " + std::to_string(line_no) +
                             ": malformed value '" + text + "'");
  }
  if (!std::isfinite(v)) {
    throw std::runtime_error("load_csv: line " + std::to_string(line_no) +
                             ": non-finite value '" + text + "'");
  }
  return v;
}

}  // namespace

std::vector<Record> load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);

  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("load_csv: " + path + " is empty");
  if (!header.empty() && header.back() == '\r') header.pop_back();

  // Recover d_features/d_protected from the header, then demand an exact match.
  std::size_t d = 0, k = 0;
  for (const std::string& name : split_csv_line(header)) {
    if (name.size() > 1 && name[0] == 'f') ++d;
    else if (name.size() > 1 && name[0] == 'z') ++k;
  }
  const std::string expected = expected_header(d, k);
  if (header != expected) {
    throw std::runtime_error("load_csv: header mismatch, expected '" + expected + "'");
  }
  const std::size_t n_cols = d + 1 + k;

  std::vector<Record> records;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != n_cols) {
      throw std::runtime_error("load_csv: line " + std::to_string(line_no) + ": expected " +
                               std::to_string(n_cols) + " columns, got " +
                               std::to_string(fields.size()));
    }
    Record rec;
    rec.features.reserve(d);
    for (std::size_t j = 0; j < d; ++j) rec.features.push_back(parse_value(fields[j], line_no));
    const double label = parse_value(fields[d], line_no);
    if (label < 0.0 || label != std::floor(label)) {
      throw std::runtime_error("load_csv: line " + std::to_string(line_no) +
                               ": label must be a nonnegative integer");
    }
    rec.label = static_cast<std::size_t>(label);
    rec.protected_attr.reserve(k);
    for (std::size_t j = 0; j < k; ++j)
      rec.protected_attr.push_back(parse_value(fields[d + 1 + j], line_no));
    records.push_back(std::move(rec));
  }
  return records;
}

Matrix features_matrix(const std::vector<Record>& records) {
  if (records.empty()) throw std::invalid_argument("features_matrix: no records");
  Matrix m(records.size(), records.front().features.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = records[i].features[j];
  return m;
}

Matrix protected_matrix(const std::vector<Record>& records) {
  if (records.empty()) throw std::invalid_argument("protected_matrix: no records");
  Matrix m(records.size(), records.front().protected_attr.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = records[i].protected_attr[j];
  return m;
}

std::vector<std::size_t> labels_vector(const std::vector<Record>& records) {
  std::vector<std::size_t> labels;
  labels.reserve(records.size());
  for (const Record& rec : records) labels.push_back(rec.label);
  return labels;
}

bool protected_is_one_hot(const std::vector<Record>& records) {
  for (const Record& rec : records) {
    std::size_t ones = 0;
    for (double v : rec.protected_attr) {
      if (v == 1.0) ++ones;
      else if (v != 0.0) return false;
    }
    if (ones != 1) return false;
  }
  return !records.empty();
}

std::vector<std::size_t> protected_group_ids(const std::vector<Record>& records) {
  std::vector<std::size_t> groups;
  groups.reserve(records.size());
  for (const Record& rec : records) {
    std::size_t g = 0;
    for (std::size_t k = 0; k < rec.protected_attr.size(); ++k)
      if (rec.protected_attr[k] > rec.protected_attr[g]) g = k;
    groups.push_back(g);
  }
  return groups;
}

}  // namespace fare
