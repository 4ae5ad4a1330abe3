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

#ifndef O2IL_TABLES_H_
#define O2IL_TABLES_H_

// Dense per-(state, action) tables and the small helpers shared by every
// tabular module: divergences, row normalization and JSON/CSV conversion.

#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace o2il {

// Rows index states, columns index actions.
using Table = Eigen::MatrixXd;
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// KL(p || q) summed over all entries. Returns +infinity when p puts mass
// where q has none. Entries with p == 0 contribute nothing.
double kl_divergence(const Table& p, const Table& q);

// Largest per-row total-variation distance between two row-stochastic tables.
double max_row_tv(const Table& p, const Table& q);

// Normalizes each row to sum to one. Rows summing to zero become uniform.
Table normalize_rows(const Table& weights);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& what);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j, const std::string& what);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

// Writes "s,a,<value_name>" rows.
void write_table_csv(const std::string& path, const Table& t,
                     const std::string& value_name);

}  // namespace o2il

#endif  // O2IL_TABLES_H_
