// Copyright 2026 The mia Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Text formats: datasets and score tables as comma-separated tables with a
// header row, documents as JSON.

#pragma once

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mia/attacks.hpp"
#include "mia/core.hpp"
#include "mia/error.hpp"

namespace mia {

/// 17 significant digits; parses back to the same double.
inline std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string_view> SplitCommas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

inline double ParseDouble(std::string_view s, std::size_t line_no) {
  s = Trim(s);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError("line " + std::to_string(line_no) + ": cannot parse number '" +
                    std::string(s) + "'");
  }
  return v;
}

inline long long ParseInt(std::string_view s, std::size_t line_no) {
  s = Trim(s);
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError("line " + std::to_string(line_no) + ": cannot parse integer '" +
                    std::string(s) + "'");
  }
  return v;
}

}  // namespace detail

inline void WriteDatasetCsv(std::ostream& out, const Dataset& data) {
  const Eigen::Index d = data.dim();
  for (Eigen::Index j = 0; j < d; ++j) out << 'f' << j << ',';
  out << "label\n";
  for (const Sample& s : data) {
    for (Eigen::Index j = 0; j < d; ++j) out << FormatDouble(s.features[j]) << ',';
    out << s.label << '\n';
  }
}

/// Reads the dataset table. `num_classes` is one more than the largest label
/// unless given explicitly.
inline Dataset ReadDatasetCsv(std::istream& in, int num_classes = 0) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("dataset: missing header row");
  const auto header = detail::SplitCommas(line);
  const std::size_t d = header.size() - 1;
  if (header.size() < 2 || detail::Trim(header.back()) != "label") {
    throw DataError("dataset: header must be f0,...,f{d-1},label");
  }
  for (std::size_t j = 0; j < d; ++j) {
    if (detail::Trim(header[j]) != "f" + std::to_string(j)) {
      throw DataError("dataset: header column " + std::to_string(j) + " must be f" +
                      std::to_string(j));
    }
  }
  std::vector<Sample> samples;
  int max_label = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::Trim(line).empty()) continue;
    const auto cells = detail::SplitCommas(line);
    if (cells.size() != d + 1) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(d + 1) + " columns, got " +
                      std::to_string(cells.size()));
    }
    Sample s;
    s.features.resize(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) {
      s.features[static_cast<Eigen::Index>(j)] = detail::ParseDouble(cells[j], line_no);
    }
    const long long label = detail::ParseInt(cells[d], line_no);
    if (label < 0) throw DataError("line " + std::to_string(line_no) + ": negative label");
    s.label = static_cast<int>(label);
    max_label = std::max(max_label, s.label);
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw DataError("dataset: no rows");
  return Dataset(std::move(samples), num_classes > 0 ? num_classes : max_label + 1);
}

inline void WriteScoresCsv(std::ostream& out, std::string_view attack,
                           std::span<const ScoreRecord> records) {
  out << "index,attack,score,truth\n";
  for (const auto& r : records) {
    out << r.index << ',' << attack << ',' << FormatDouble(r.score) << ','
        << (r.truth ? 1 : 0) << '\n';
  }
}

struct ScoreTable {
  std::string attack;
  std::vector<ScoreRecord> records;
};

inline ScoreTable ReadScoresCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::Trim(line) != "index,attack,score,truth") {
    throw DataError("score table: header must be index,attack,score,truth");
  }
  ScoreTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::Trim(line).empty()) continue;
    const auto cells = detail::SplitCommas(line);
    if (cells.size() != 4) {
      throw DataError("score table line " + std::to_string(line_no) + ": expected 4 columns");
    }
    const std::string attack(detail::Trim(cells[1]));
    if (table.attack.empty()) table.attack = attack;
    if (attack != table.attack) throw DataError("score table mixes attacks");
    ScoreRecord r;
    r.index = static_cast<std::size_t>(detail::ParseInt(cells[0], line_no));
    r.score = detail::ParseDouble(cells[2], line_no);
    const long long truth = detail::ParseInt(cells[3], line_no);
    if (truth != 0 && truth != 1) throw DataError("score table: truth must be 0 or 1");
    r.truth = truth == 1;
    table.records.push_back(r);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Files

inline std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void WriteFile(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

inline nlohmann::json ReadJsonFile(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(ReadFile(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline void WriteJsonFile(const std::filesystem::path& path, const nlohmann::json& doc) {
  WriteFile(path, doc.dump(2) + "\n");
}

inline Dataset LoadDataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  return ReadDatasetCsv(in);
}

inline void SaveDataset(const std::filesystem::path& path, const Dataset& data) {
  std::ostringstream out;
  WriteDatasetCsv(out, data);
  WriteFile(path, out.str());
}

}  // namespace mia
