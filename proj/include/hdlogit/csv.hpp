#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace hdlogit {

// Numeric CSV with an optional auto-detected header row; missing or
// non-numeric cells are rejected with row/column diagnostics.
struct Dataset {
  Eigen::MatrixXd x;                      // covariates (label column removed)
  Eigen::VectorXd y;                      // labels mapped to {-1,+1}
  std::vector<std::string> column_names;  // names of x columns
  std::string label_name;
};

// label_col: column name (when a header is present) or 0-based index as text.
// center subtracts the column means from x.
Dataset load_dataset_csv(const std::string& path, const std::string& label_col, bool center);

Eigen::MatrixXd load_matrix_csv(const std::string& path);
Eigen::VectorXd load_vector_csv(const std::string& path);

}  // namespace hdlogit
