#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "acosvm/error.hpp"
#include "acosvm/rng.hpp"

namespace acosvm {

using Label = int;

struct Sample {
  std::vector<double> features;
  Label label = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Dense, immutable collection of equal-length samples. `classes()` is the
/// sorted set of labels actually present.
class Dataset {
 public:
  explicit Dataset(std::vector<Sample> samples) : samples_(std::move(samples)) {
    if (samples_.empty()) throw DataError("dataset has no samples");
    dimension_ = samples_.front().features.size();
    if (dimension_ == 0) throw DataError("samples have no features");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const auto& s = samples_[i];
      if (s.features.size() != dimension_)
        throw DataError("sample " + std::to_string(i) + " has " +
                        std::to_string(s.features.size()) + " features, expected " +
                        std::to_string(dimension_));
      for (double v : s.features)
        if (!std::isfinite(v))
          throw DataError("sample " + std::to_string(i) + " has a non-finite feature");
      classes_.push_back(s.label);
    }
    std::sort(classes_.begin(), classes_.end());
    classes_.erase(std::unique(classes_.begin(), classes_.end()), classes_.end());
  }

  std::size_t size() const noexcept { return samples_.size(); }
  std::size_t dimension() const noexcept { return dimension_; }
  const std::vector<Label>& classes() const noexcept { return classes_; }
  const std::vector<Sample>& samples() const noexcept { return samples_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }

  std::size_t count(Label label) const {
    return static_cast<std::size_t>(std::count_if(
        samples_.begin(), samples_.end(), [&](const Sample& s) { return s.label == label; }));
  }

  /// Samples at `indices`, in that order.
  Dataset subset(std::span<const std::size_t> indices) const {
    std::vector<Sample> picked;
    picked.reserve(indices.size());
    for (std::size_t i : indices) picked.push_back(samples_.at(i));
    return Dataset(std::move(picked));
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.samples_ == b.samples_;
  }

 private:
  std::vector<Sample> samples_;
  std::size_t dimension_ = 0;
  std::vector<Label> classes_;
};

/// Two-class view over a dataset: only samples of the two classes are
/// exposed, relabelled +1 (positive_class) and -1 (negative_class).
class BinaryView {
 public:
  BinaryView(const Dataset& base, Label positive_class, Label negative_class)
      : base_(&base), positive_(positive_class), negative_(negative_class) {
    if (positive_ == negative_) throw DataError("binary view needs two distinct classes");
    const auto& cls = base.classes();
    for (Label c : {positive_, negative_})
      if (!std::binary_search(cls.begin(), cls.end(), c))
        throw DataError("class " + std::to_string(c) + " is not present in the dataset");
    for (std::size_t i = 0; i < base.size(); ++i) {
      const Label l = base[i].label;
      if (l == positive_ || l == negative_) {
        index_.push_back(i);
        labels_.push_back(l == positive_ ? +1.0 : -1.0);
      }
    }
  }

  std::size_t size() const noexcept { return index_.size(); }
  std::size_t dimension() const noexcept { return base_->dimension(); }
  std::span<const double> features(std::size_t i) const {
    return (*base_)[index_[i]].features;
  }
  /// +1 or -1.
  double label(std::size_t i) const { return labels_[i]; }
  const std::vector<double>& labels() const noexcept { return labels_; }
  Label positive_class() const noexcept { return positive_; }
  Label negative_class() const noexcept { return negative_; }
  const Dataset& base() const noexcept { return *base_; }

 private:
  const Dataset* base_;
  Label positive_;
  Label negative_;
  std::vector<std::size_t> index_;
  std::vector<double> labels_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line, line_no);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
}

inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

inline bool parse_label(std::string_view s, Label& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec == std::errc() && ptr == s.data() + s.size()) return true;
  // "1.0"-style integral labels are accepted.
  double d = 0.0;
  if (!parse_double(s, d) || d != std::floor(d) || std::abs(d) > 1e9) return false;
  out = static_cast<Label>(d);
  return true;
}

inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Parses LIBSVM sparse text: `<label> <index>:<value> ...` per line with
/// strictly increasing 1-based indices. Dimension is the largest index in
/// the whole input; absent entries are 0.
inline Dataset parse_libsvm(std::string_view text) {
  struct Row {
    Label label;
    std::vector<std::pair<std::size_t, double>> cells;
  };
  std::vector<Row> rows;
  std::size_t dimension = 0;

  detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') return;
    Row row{};
    std::size_t token_no = 0;
    std::size_t last_index = 0;
    while (!line.empty()) {
      const auto end = line.find_first_of(" \t");
      const std::string_view tok = line.substr(0, end);
      ++token_no;
      if (token_no == 1) {
        if (!detail::parse_label(tok, row.label))
          throw ParseError("invalid label '" + std::string(tok) + "'", line_no);
      } else {
        const auto colon = tok.find(':');
        if (colon == std::string_view::npos)
          throw ParseError("expected <index>:<value>, got '" + std::string(tok) + "'", line_no);
        std::size_t index = 0;
        const auto idx = tok.substr(0, colon);
        const auto [p, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), index);
        if (ec != std::errc() || p != idx.data() + idx.size() || index == 0)
          throw ParseError("invalid feature index '" + std::string(idx) + "'", line_no);
        if (index <= last_index)
          throw ParseError("feature indices must be strictly increasing", line_no);
        double value = 0.0;
        if (!detail::parse_double(tok.substr(colon + 1), value))
          throw ParseError("invalid feature value '" + std::string(tok.substr(colon + 1)) + "'",
                           line_no);
        last_index = index;
        row.cells.emplace_back(index, value);
      }
      if (end == std::string_view::npos) break;
      line = detail::trim(line.substr(end));
    }
    dimension = std::max(dimension, last_index);
    rows.push_back(std::move(row));
  });

  if (rows.empty()) throw DataError("empty input");
  if (dimension == 0) throw DataError("input has no features");

  std::vector<Sample> samples;
  samples.reserve(rows.size());
  for (auto& row : rows) {
    Sample s{std::vector<double>(dimension, 0.0), row.label};
    for (auto [index, value] : row.cells) s.features[index - 1] = value;
    samples.push_back(std::move(s));
  }
  return Dataset(std::move(samples));
}

/// Parses a rectangular numeric CSV; `label_column` (0-based) holds integer
/// labels and every other column becomes a feature, in order.
inline Dataset parse_csv(std::string_view text, std::size_t label_column, bool skip_header = false) {
  std::vector<Sample> samples;
  std::size_t columns = 0;

  detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (skip_header && line_no == 1) return;
    if (detail::trim(line).empty()) return;
    std::vector<std::string_view> cells;
    for (;;) {
      const auto comma = line.find(',');
      cells.push_back(detail::trim(line.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (columns == 0) {
      columns = cells.size();
      if (columns < 2) throw ParseError("need a label column and at least one feature", line_no);
      if (label_column >= columns)
        throw ParseError("label column " + std::to_string(label_column) + " out of range",
                         line_no);
    } else if (cells.size() != columns) {
      throw ParseError("row has " + std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(columns),
                       line_no, std::min(cells.size(), columns) + 1);
    }
    Sample s;
    s.features.reserve(columns - 1);
    for (std::size_t c = 0; c < columns; ++c) {
      if (c == label_column) {
        if (!detail::parse_label(cells[c], s.label))
          throw ParseError("invalid label '" + std::string(cells[c]) + "'", line_no, c + 1);
      } else {
        double v = 0.0;
        if (!detail::parse_double(cells[c], v))
          throw ParseError("non-numeric cell '" + std::string(cells[c]) + "'", line_no, c + 1);
        s.features.push_back(v);
      }
    }
    samples.push_back(std::move(s));
  });

  if (samples.empty()) throw DataError("empty input");
  return Dataset(std::move(samples));
}

/// LIBSVM text that parse_libsvm reads back to an identical Dataset. Zero
/// entries are omitted except the last column, which pins the dimension.
inline std::string to_libsvm(const Dataset& ds) {
  std::string out;
  for (const auto& s : ds.samples()) {
    out += std::to_string(s.label);
    for (std::size_t j = 0; j < s.features.size(); ++j) {
      if (s.features[j] == 0.0 && j + 1 != s.features.size()) continue;
      out += ' ';
      out += std::to_string(j + 1);
      out += ':';
      out += detail::format_double(s.features[j]);
    }
    out += '\n';
  }
  return out;
}

/// Seeded permutation; the first `train_count` samples form the training set.
inline std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, std::size_t train_count,
                                                    std::uint64_t seed) {
  if (train_count == 0 || train_count >= ds.size())
    throw ConfigError("train_count must be in [1, " + std::to_string(ds.size() - 1) + "], got " +
                      std::to_string(train_count));
  CounterRng rng{seed, 0x73706c6974ULL /* "split" */};
  const auto order = seeded_permutation(ds.size(), rng);
  const std::span<const std::size_t> all(order);
  return {ds.subset(all.first(train_count)), ds.subset(all.subspan(train_count))};
}

}  // namespace acosvm
