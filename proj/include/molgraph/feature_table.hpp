// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "molgraph/error.hpp"

namespace molgraph {

/// Row-per-graph numeric matrix with named columns, row-major.
class FeatureTable {
 public:
  FeatureTable() = default;
  FeatureTable(std::size_t rows, std::vector<std::string> names)
      : rows_(rows), names_(std::move(names)), data_(rows * names_.size(), 0.0) {}

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return names_.size(); }
  [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }

  double& at(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
  [[nodiscard]] double at(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }

  [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols(), cols()};
  }
  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols(), cols()}; }

  [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

  /// Appends a row; `values.size()` must equal cols().
  void push_row(std::span<const double> values) {
    if (values.size() != cols()) throw ShapeError("row width mismatch");
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }

  [[nodiscard]] FeatureTable select_rows(std::span<const std::size_t> idx) const {
    FeatureTable t(0, names_);
    t.data_.reserve(idx.size() * cols());
    for (auto r : idx) t.push_row(row(r));
    return t;
  }

  [[nodiscard]] FeatureTable select_columns(const std::vector<bool>& keep) const {
    if (keep.size() != cols()) throw ShapeError("column mask width mismatch");
    std::vector<std::string> names;
    std::vector<std::size_t> src;
    for (std::size_t c = 0; c < cols(); ++c)
      if (keep[c]) {
        names.push_back(names_[c]);
        src.push_back(c);
      }
    FeatureTable t(rows_, std::move(names));
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t j = 0; j < src.size(); ++j) t.at(r, j) = at(r, src[j]);
    return t;
  }

  /// Column-wise concatenation; both tables need the same row count.
  [[nodiscard]] static FeatureTable hconcat(const std::vector<const FeatureTable*>& parts) {
    std::vector<std::string> names;
    std::size_t rows = parts.empty() ? 0 : parts.front()->rows();
    for (const auto* p : parts) {
      if (p->rows() != rows) throw ShapeError("row count mismatch in concatenation");
      names.insert(names.end(), p->names().begin(), p->names().end());
    }
    FeatureTable t(rows, std::move(names));
    for (std::size_t r = 0; r < rows; ++r) {
      std::size_t off = 0;
      for (const auto* p : parts) {
        auto src = p->row(r);
        std::copy(src.begin(), src.end(), t.row(r).begin() + static_cast<std::ptrdiff_t>(off));
        off += src.size();
      }
    }
    return t;
  }

  friend bool operator==(const FeatureTable&, const FeatureTable&) = default;

  /// Header row of column names, then one line per row. Values print with
  /// round-trip precision so a reload is bit-exact.
  void write_csv(std::ostream& out) const {
    for (std::size_t c = 0; c < cols(); ++c) out << (c ? "," : "") << names_[c];
    out << '\n';
    char buf[32];
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t c = 0; c < cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", at(r, c));
        if (c) out << ',';
        out << buf;
      }
      out << '\n';
    }
  }

  void write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    write_csv(out);
  }

  static FeatureTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string(), 0);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty CSV", 1);
    std::vector<std::string> names;
    {
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) names.push_back(cell);
    }
    FeatureTable t(0, names);
    std::vector<double> values;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      values.clear();
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) {
        try {
          values.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw ParseError("bad number '" + cell + "'", lineno);
        }
      }
      if (values.size() != names.size()) throw ParseError("row width mismatch", lineno);
      t.push_row(values);
    }
    return t;
  }

 private:
  std::size_t rows_ = 0;
  std::vector<std::string> names_;
  std::vector<double> data_;
};

}  // namespace molgraph
