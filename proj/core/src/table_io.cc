// Copyright 2026 The o2il Authors
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

#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "o2il/error.h"
#include "o2il/tables.h"

namespace o2il {

double kl_divergence(const Table& p, const Table& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) {
    throw ValidationError("kl_divergence: shape mismatch");
  }
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double pi = p.data()[i];
    if (pi <= 0.0) continue;
    const double qi = q.data()[i];
    if (qi <= 0.0) return std::numeric_limits<double>::infinity();
    kl += pi * std::log(pi / qi);
  }
  return kl;
}

double max_row_tv(const Table& p, const Table& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) {
    throw ValidationError("max_row_tv: shape mismatch");
  }
  return 0.5 * (p - q).cwiseAbs().rowwise().sum().maxCoeff();
}

Table normalize_rows(const Table& weights) {
  Table out(weights.rows(), weights.cols());
  for (Eigen::Index s = 0; s < weights.rows(); ++s) {
    const double z = weights.row(s).sum();
    if (z > 0.0) {
      out.row(s) = weights.row(s) / z;
    } else {
      out.row(s).setConstant(1.0 / static_cast<double>(weights.cols()));
    }
  }
  return out;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j,
                                 const std::string& what) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw ValidationError(fmt::format("{}: expected a nested array", what));
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ValidationError(fmt::format("{}: ragged row {}", what, i));
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      const auto& v = row[static_cast<std::size_t>(k)];
      if (!v.is_number()) {
        throw ValidationError(
            fmt::format("{}: non-numeric entry at ({}, {})", what, i, k));
      }
      m(i, k) = v.get<double>();
    }
  }
  return m;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j,
                                 const std::string& what) {
  if (!j.is_array()) {
    throw ValidationError(fmt::format("{}: expected an array", what));
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw ValidationError(fmt::format("{}: non-numeric entry {}", what, i));
    }
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open '{}'", path));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("{}: {}", path, e.what()));
  }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError(fmt::format("cannot write '{}'", path));
  out << j.dump(2) << '\n';
}

void write_table_csv(const std::string& path, const Table& t,
                     const std::string& value_name) {
  std::ofstream out(path);
  if (!out) throw ValidationError(fmt::format("cannot write '{}'", path));
  out << "s,a," << value_name << '\n';
  for (Eigen::Index s = 0; s < t.rows(); ++s) {
    for (Eigen::Index a = 0; a < t.cols(); ++a) {
      out << fmt::format("{},{},{:.17g}\n", s, a, t(s, a));
    }
  }
}

}  // namespace o2il
