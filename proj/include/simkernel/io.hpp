/*
 * Copyright 2026 The simkernel Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Persistence: plain CSV tables, session CSV, sparse term lines and JSON
// model files. Numbers are written with 17 significant digits so files
// round-trip exactly and compare byte for byte across runs.

#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "simkernel/bicluster.hpp"
#include "simkernel/common.hpp"
#include "simkernel/distances.hpp"
#include "simkernel/gmm.hpp"
#include "simkernel/learners.hpp"
#include "simkernel/sessions.hpp"

namespace simkernel::io {

using nlohmann::json;

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double parse_number(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw DataError(where + ": cannot parse number '" + text + "'");
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << content;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

// Numeric table with a header row.
struct Table {
  std::vector<std::string> header;
  Matrix values;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw DataError("missing column '" + name + "'");
  }
};

inline Table read_table(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw DataError(path + ": empty file");
  Table t;
  t.header = split(lines[0]);
  std::vector<Vector> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i]);
    if (cells.size() != t.header.size())
      throw DataError(path + ":" + std::to_string(i + 1) + ": expected " +
                      std::to_string(t.header.size()) + " cells");
    Vector row;
    for (const auto& c : cells) row.push_back(parse_number(c, path + ":" + std::to_string(i + 1)));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");
  t.values = Matrix::from_rows(rows);
  return t;
}

inline std::string table_csv(const std::vector<std::string>& header, const Matrix& values) {
  require(header.size() == values.cols(), "table_csv: header width differs from matrix");
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + header[c];
  out += '\n';
  for (std::size_t r = 0; r < values.rows(); ++r) {
    for (std::size_t c = 0; c < values.cols(); ++c)
      out += (c ? "," : "") + format_number(values(r, c));
    out += '\n';
  }
  return out;
}

inline void write_table(const std::string& path, const std::vector<std::string>& header,
                        const Matrix& values) {
  write_file(path, table_csv(header, values));
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Session CSV: one row per report.

inline std::string sessions_csv(const std::vector<sessions::SessionRecord>& records) {
  std::string out = "session_id,t_index";
  for (const char* name : sessions::kSeriesNames) out += std::string(",") + name;
  out += ",label\n";
  for (const auto& s : records)
    for (std::size_t t = 0; t < s.length(); ++t) {
      out += s.id + "," + std::to_string(t);
      for (std::size_t k = 0; k < sessions::kSeriesCount; ++k)
        out += "," + format_number(s.series[k][t]);
      out += "," + std::to_string(s.label) + "\n";
    }
  return out;
}

// Sessions appear in first-occurrence order; rows of one session must be
// contiguous with t_index 0, 1, ... and a constant label.
inline std::vector<sessions::SessionRecord> read_sessions(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw DataError(path + ": empty file");
  const auto header = split(lines[0]);
  std::vector<std::string> expected = {"session_id", "t_index"};
  for (const char* name : sessions::kSeriesNames) expected.push_back(name);
  expected.push_back("label");
  if (header != expected) throw DataError(path + ": unexpected session CSV header");

  std::vector<sessions::SessionRecord> out;
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string where = path + ":" + std::to_string(i + 1);
    const auto cells = split(lines[i]);
    if (cells.size() != expected.size()) throw DataError(where + ": wrong cell count");
    const std::string& id = cells[0];
    const double t = parse_number(cells[1], where);
    const double label = parse_number(cells.back(), where);
    if (label != 0.0 && label != 1.0) throw DataError(where + ": label must be 0 or 1");
    if (out.empty() || out.back().id != id) {
      if (seen.count(id)) throw DataError(where + ": rows of session '" + id + "' are not contiguous");
      seen[id] = out.size();
      out.push_back({id, {}, static_cast<int>(label)});
    }
    auto& s = out.back();
    if (t != static_cast<double>(s.length())) throw DataError(where + ": t_index out of sequence");
    if (static_cast<int>(label) != s.label) throw DataError(where + ": label changes within session");
    for (std::size_t k = 0; k < sessions::kSeriesCount; ++k)
      s.series[k].push_back(parse_number(cells[2 + k], where));
  }
  for (const auto& s : out) {
    try {
      s.validate();
    } catch (const std::invalid_argument& e) {
      throw DataError(path + ": session '" + s.id + "': " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sparse term vectors, one document per line: "term:count term:count ...".
// The document length is the sum of counts.

inline distances::SparseTermVector parse_term_line(const std::string& line,
                                                   const std::string& where) {
  distances::SparseTermVector doc;
  std::istringstream in(line);
  std::string token;
  std::map<int, double> terms;
  while (in >> token) {
    const auto colon = token.find(':');
    if (colon == std::string::npos) throw DataError(where + ": expected term:count");
    const double term = parse_number(token.substr(0, colon), where);
    const double count = parse_number(token.substr(colon + 1), where);
    if (count <= 0.0 || term < 0.0 || term != std::floor(term))
      throw DataError(where + ": invalid term or count");
    terms[static_cast<int>(term)] += count;
  }
  for (const auto& [term, count] : terms) {
    doc.terms.emplace_back(term, count);
    doc.length += count;
  }
  return doc;
}

inline std::vector<distances::SparseTermVector> read_term_vectors(const std::string& path) {
  std::vector<distances::SparseTermVector> docs;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i)
    docs.push_back(parse_term_line(lines[i], path + ":" + std::to_string(i + 1)));
  return docs;
}

// ---------------------------------------------------------------------------
// Models.

inline json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(m.row_vector(r));
  return rows;
}

inline Matrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw DataError(std::string(what) + ": expected an array of rows");
  std::vector<Vector> rows;
  for (const auto& r : j) rows.push_back(r.get<Vector>());
  try {
    return Matrix::from_rows(rows);
  } catch (const std::invalid_argument&) {
    throw DataError(std::string(what) + ": ragged rows");
  }
}

inline json gmm_json(const gmm::GaussianMixture& model, const json& meta) {
  return {{"n", model.components()},
          {"d", model.dim()},
          {"weights", model.weights()},
          {"means", matrix_json(model.means())},
          {"stdevs", matrix_json(model.stdevs())},
          {"meta", meta}};
}

inline gmm::GaussianMixture gmm_from_json(const json& j) {
  try {
    gmm::GaussianMixture model(j.at("weights").get<Vector>(), matrix_from_json(j.at("means"), "means"),
                               matrix_from_json(j.at("stdevs"), "stdevs"));
    if (model.components() != j.at("n").get<std::size_t>() || model.dim() != j.at("d").get<std::size_t>())
      throw DataError("gmm model: n/d fields disagree with parameters");
    return model;
  } catch (const json::exception& e) {
    throw DataError(std::string("gmm model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("gmm model: ") + e.what());
  }
}

inline json svm_json(const learners::SvmModel& model, const json& meta) {
  return {{"alphas", model.alphas},
          {"labels", model.labels},
          {"support_indices", model.support_indices},
          {"C", model.C},
          {"bias_offset", model.bias_offset},
          {"bias", model.bias},
          {"meta", meta}};
}

inline learners::SvmModel svm_from_json(const json& j) {
  try {
    learners::SvmModel m;
    m.alphas = j.at("alphas").get<Vector>();
    m.labels = j.at("labels").get<std::vector<int>>();
    m.support_indices = j.at("support_indices").get<std::vector<std::size_t>>();
    m.C = j.at("C").get<double>();
    m.bias_offset = j.value("bias_offset", 0.0);
    m.bias = j.value("bias", 0.0);
    if (m.labels.size() != m.alphas.size()) throw DataError("svm model: labels and alphas differ in size");
    for (std::size_t i : m.support_indices)
      if (i >= m.alphas.size()) throw DataError("svm model: support index out of range");
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("svm model: ") + e.what());
  }
}

inline json coclustering_meta(const bicluster::Coclustering& c) {
  return {{"k", c.row_clusters},
          {"l", c.col_clusters},
          {"w", c.weight},
          {"iterations", c.iterations},
          {"converged", c.converged},
          {"final_mi", c.final_mi()},
          {"mi_trace", c.mi_trace},
          {"dropped_columns", c.dropped_columns}};
}

inline std::string assignment_csv(const char* id_name, const std::vector<std::size_t>& labels) {
  std::string out = std::string(id_name) + ",cluster_id\n";
  for (std::size_t i = 0; i < labels.size(); ++i)
    out += std::to_string(i) + "," + std::to_string(labels[i]) + "\n";
  return out;
}

}  // namespace simkernel::io
