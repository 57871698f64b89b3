#include "evadex/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "evadex/error.hpp"
#include "evadex/rng.hpp"

namespace evadex {

std::string_view to_string(FeatureKind kind) {
  return kind == FeatureKind::Binary ? "binary" : "continuous";
}

FeatureKind feature_kind_from_string(std::string_view name) {
  if (name == "binary") return FeatureKind::Binary;
  if (name == "continuous") return FeatureKind::Continuous;
  throw Error(ErrorCode::InvalidConfig,
              "unknown feature kind '" + std::string(name) + "'");
}

LabeledDataset::LabeledDataset(std::vector<Sample> samples,
                               std::vector<int> labels,
                               std::size_t num_classes, FeatureSpace space,
                               std::vector<std::string> feature_names)
    : samples_(std::move(samples)),
      labels_(std::move(labels)),
      num_classes_(num_classes),
      space_(std::move(space)),
      feature_names_(std::move(feature_names)) {
  const std::size_t d = space_.dim();
  if (d == 0) throw Error(ErrorCode::ShapeMismatch, "dimension must be >= 1");
  if (samples_.size() != labels_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "sample and label counts differ");
  }
  if (feature_names_.empty()) {
    feature_names_.reserve(d);
    for (std::size_t j = 0; j < d; ++j) {
      feature_names_.push_back("f" + std::to_string(j));
    }
  } else if (feature_names_.size() != d) {
    throw Error(ErrorCode::ShapeMismatch, "feature name count differs from d");
  }
  if (space_.kind == FeatureKind::Binary) {
    for (auto& b : space_.bounds) b = FeatureBounds{0.0, 1.0};
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const Sample& s = samples_[i];
    if (s.dim() != d) {
      throw Error(ErrorCode::ShapeMismatch,
                  "sample " + std::to_string(s.id) + " has wrong dimension");
    }
    if (labels_[i] < 0 || static_cast<std::size_t>(labels_[i]) >= num_classes_) {
      throw Error(ErrorCode::InvalidLabel,
                  "label " + std::to_string(labels_[i]) + " outside [0, k)");
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double v = s.features[j];
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::NonNumericCell, "non-finite feature value", i, j);
      }
      if (space_.kind == FeatureKind::Binary && v != 0.0 && v != 1.0) {
        throw Error(ErrorCode::InvalidConfig,
                    "binary dataset holds a non-binary value", i, j);
      }
      if (v < space_.bounds[j].lo || v > space_.bounds[j].hi) {
        throw Error(ErrorCode::InvalidConfig, "value outside feature bounds",
                    i, j);
      }
    }
  }
}

LabeledDataset LabeledDataset::subset(
    std::span<const std::size_t> positions) const {
  std::vector<Sample> samples;
  std::vector<int> labels;
  samples.reserve(positions.size());
  labels.reserve(positions.size());
  for (std::size_t p : positions) {
    if (p >= samples_.size()) {
      throw Error(ErrorCode::IndexOutOfRange, "subset position out of range");
    }
    samples.push_back(samples_[p]);
    labels.push_back(labels_[p]);
  }
  return LabeledDataset(std::move(samples), std::move(labels), num_classes_,
                        space_, feature_names_);
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes_, 0);
  for (int y : labels_) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

namespace {

// Splits RFC-4180 style text into records of fields.
std::vector<std::vector<std::string>> parse_csv_records(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // Blank lines carry no data.
    if (!(record.size() == 1 && record[0].empty())) {
      records.push_back(std::move(record));
    }
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started || field.empty()) in_quotes = true;
        else field.push_back(c);
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view cell) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

LabeledDataset parse_dataset_csv(std::string_view text,
                                 const CsvOptions& options) {
  const auto records = parse_csv_records(text);
  if (records.empty()) throw Error(ErrorCode::EmptyDataset, "no header row");
  const auto& header = records.front();
  const auto label_it =
      std::find(header.begin(), header.end(), options.label_column);
  if (label_it == header.end()) {
    throw Error(ErrorCode::UnknownLabelColumn,
                "label column '" + options.label_column + "' not in header");
  }
  const std::size_t label_col =
      static_cast<std::size_t>(label_it - header.begin());
  const std::size_t width = header.size();
  if (width < 2) {
    throw Error(ErrorCode::ShapeMismatch, "need at least one feature column");
  }

  std::vector<std::string> names;
  for (std::size_t c = 0; c < width; ++c) {
    if (c != label_col) names.push_back(header[c]);
  }
  const std::size_t d = names.size();

  std::vector<Sample> samples;
  std::vector<int> labels;
  samples.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::size_t row = r - 1;
    if (rec.size() != width) {
      throw Error(ErrorCode::RaggedRow,
                  "expected " + std::to_string(width) + " fields, got " +
                      std::to_string(rec.size()),
                  row, rec.size());
    }
    Sample s;
    s.id = row;
    s.features.reserve(d);
    for (std::size_t c = 0; c < width; ++c) {
      const auto v = parse_number(rec[c]);
      if (!v) {
        throw Error(ErrorCode::NonNumericCell,
                    "cell '" + rec[c] + "' is not a finite number", row, c);
      }
      if (c == label_col) {
        if (*v < 0.0 || *v != std::floor(*v) || *v > 1e9) {
          throw Error(ErrorCode::InvalidLabel,
                      "label '" + rec[c] + "' is not a class index", row, c);
        }
        labels.push_back(static_cast<int>(*v));
      } else {
        s.features.push_back(*v);
      }
    }
    samples.push_back(std::move(s));
  }

  int max_label = -1;
  for (int y : labels) max_label = std::max(max_label, y);
  const std::size_t k = static_cast<std::size_t>(max_label + 1);

  FeatureSpace space;
  space.bounds.resize(d);
  bool all_binary = true;
  for (std::size_t j = 0; j < d; ++j) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double v = samples[i].features[j];
      if (i == 0 || v < lo) lo = v;
      if (i == 0 || v > hi) hi = v;
      if (v != 0.0 && v != 1.0) all_binary = false;
    }
    space.bounds[j] = FeatureBounds{lo, hi};
  }
  space.kind = options.feature_kind.value_or(all_binary ? FeatureKind::Binary
                                                        : FeatureKind::Continuous);
  return LabeledDataset(std::move(samples), std::move(labels), k,
                        std::move(space), std::move(names));
}

LabeledDataset load_dataset_csv(const std::filesystem::path& path,
                                const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::MissingFile, "cannot open '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset_csv(buffer.str(), options);
}

std::string format_dataset_csv(const LabeledDataset& data,
                               std::string_view label_column) {
  std::string out;
  for (const auto& name : data.feature_names()) {
    out += name;
    out += ',';
  }
  out += label_column;
  out += '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.sample(i).features) {
      out += format_double(v);
      out += ',';
    }
    out += std::to_string(data.label(i));
    out += '\n';
  }
  return out;
}

void write_dataset_csv(const LabeledDataset& data,
                       const std::filesystem::path& path,
                       std::string_view label_column) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::MissingFile,
                "cannot write '" + path.string() + "'");
  }
  out << format_dataset_csv(data, label_column);
}

namespace {

// Largest-remainder allocation of `total` units proportionally to `weights`,
// never exceeding `caps`. Ties go to the lower class index.
std::vector<std::size_t> allocate(std::size_t total,
                                  const std::vector<double>& quotas,
                                  const std::vector<std::size_t>& caps) {
  const std::size_t k = quotas.size();
  std::vector<std::size_t> out(k, 0);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < k; ++c) {
    out[c] = std::min(caps[c], static_cast<std::size_t>(std::floor(quotas[c])));
    assigned += out[c];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quotas[a] - std::floor(quotas[a]) > quotas[b] - std::floor(quotas[b]);
  });
  while (assigned < total) {
    bool progressed = false;
    for (std::size_t c : order) {
      if (assigned == total) break;
      if (out[c] < caps[c]) {
        ++out[c];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  return out;
}

}  // namespace

std::pair<LabeledDataset, LabeledDataset> split_dataset(
    const LabeledDataset& data, SplitFractions fractions, std::uint64_t seed) {
  if (!(fractions.train > 0.0) || !(fractions.evasion > 0.0) ||
      fractions.train + fractions.evasion > 1.0 + 1e-12) {
    throw Error(ErrorCode::InvalidFraction,
                "fractions must be positive and sum to at most 1");
  }
  const std::size_t n = data.size();
  const std::size_t k = data.num_classes();
  const std::size_t n_train = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::llround(n * fractions.train)));
  const std::size_t n_evasion = std::min<std::size_t>(
      n - n_train, static_cast<std::size_t>(std::llround(n * fractions.evasion)));

  std::vector<std::vector<std::size_t>> by_class(k);
  for (std::size_t i = 0; i < n; ++i) {
    by_class[static_cast<std::size_t>(data.label(i))].push_back(i);
  }
  std::vector<std::size_t> caps(k);
  std::vector<double> train_quota(k), evasion_quota(k);
  for (std::size_t c = 0; c < k; ++c) {
    caps[c] = by_class[c].size();
    const double share = n == 0 ? 0.0 : static_cast<double>(caps[c]) / n;
    train_quota[c] = share * n_train;
    evasion_quota[c] = share * n_evasion;
  }
  const auto train_counts = allocate(n_train, train_quota, caps);
  std::vector<std::size_t> remaining(k);
  for (std::size_t c = 0; c < k; ++c) remaining[c] = caps[c] - train_counts[c];
  const auto evasion_counts = allocate(n_evasion, evasion_quota, remaining);

  std::vector<std::size_t> train_pos, evasion_pos;
  for (std::size_t c = 0; c < k; ++c) {
    auto& members = by_class[c];
    Rng rng(derive_seed(seed, c));
    rng.shuffle(std::span<std::size_t>(members));
    train_pos.insert(train_pos.end(), members.begin(),
                     members.begin() + train_counts[c]);
    evasion_pos.insert(evasion_pos.end(), members.begin() + train_counts[c],
                       members.begin() + train_counts[c] + evasion_counts[c]);
  }
  std::sort(train_pos.begin(), train_pos.end());
  std::sort(evasion_pos.begin(), evasion_pos.end());
  return {data.subset(train_pos), data.subset(evasion_pos)};
}

}  // namespace evadex
