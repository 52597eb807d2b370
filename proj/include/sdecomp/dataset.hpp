#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sdecomp/errors.hpp"

namespace sdecomp {

using Index = Eigen::Index;

enum class ColumnType { continuous, binary, categorical };

const char* to_string(ColumnType type);

/// A named column. Categorical values are stored as level codes 0..k-1 into
/// `levels`; level 0 is the reference level.
struct Column {
  std::string name;
  ColumnType type = ColumnType::continuous;
  Eigen::VectorXd values;
  std::vector<std::string> levels;

  [[nodiscard]] Index size() const { return values.size(); }
  [[nodiscard]] int level_code(const std::string& level) const;  // -1 when absent
};

/// Immutable column table. Copies share column storage.
class Dataset {
 public:
  Dataset() = default;

  void add_column(Column column);

  [[nodiscard]] Index rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return columns_.size(); }
  [[nodiscard]] bool has(const std::string& name) const;
  [[nodiscard]] const Column& column(const std::string& name) const;
  [[nodiscard]] const Column& column(std::size_t i) const { return *columns_[i]; }
  [[nodiscard]] const Eigen::VectorXd& values(const std::string& name) const {
    return column(name).values;
  }
  [[nodiscard]] std::vector<std::string> names() const;

  /// Same table with one column's values replaced (type and levels kept).
  [[nodiscard]] Dataset with_values(const std::string& name, Eigen::VectorXd values) const;
  /// Rows in the given order; indices may repeat.
  [[nodiscard]] Dataset subset(const std::vector<Index>& rows) const;

 private:
  std::vector<std::shared_ptr<const Column>> columns_;
  Index rows_ = 0;
};

/// The comparison/reference coding of the social-group column.
struct GroupRole {
  std::string column;
  std::string reference;
  std::vector<std::string> comparisons;
};

/// Causal role of each column.
struct RoleMap {
  GroupRole group;
  std::vector<std::string> baseline;
  std::vector<std::string> pre_confounders;
  std::string system_factor;
  std::vector<std::string> intermediate_confounders;
  std::string individual_factor;
  std::string outcome;
  std::vector<std::string> allowable_A;
  std::vector<std::string> allowable_M;
  std::optional<std::string> cluster;

  /// Checks the structural invariants that do not need data.
  void validate() const;
  /// Checks the role map against a loaded dataset.
  void validate(const Dataset& ds) const;
};

enum class MissingPolicy { reject, drop_rows };

struct LoadReport {
  struct ColumnInfo {
    std::string name;
    std::string role;
    ColumnType type;
  };
  Index rows_read = 0;
  Index rows_kept = 0;
  std::vector<Index> dropped;  // 1-based data row numbers
  std::vector<ColumnInfo> columns;
};

struct LoadResult {
  Dataset data;
  LoadReport report;
};

/// Reads a comma-separated file with a header row. Empty cells and "NA" are missing.
LoadResult load_csv(const std::string& path, const RoleMap& roles, MissingPolicy policy);
LoadResult parse_csv(std::istream& in, const RoleMap& roles, MissingPolicy policy);

/// Writes every column, numbers at 17 significant digits, categoricals as level labels.
void write_csv(const Dataset& ds, const std::string& path);
void write_csv(const Dataset& ds, std::ostream& out);

/// Role name of a column ("group", "baseline", ...) or "none".
std::string role_of(const RoleMap& roles, const std::string& column);

/// Indices of rows whose group equals `level`.
std::vector<Index> rows_in_group(const Dataset& ds, const RoleMap& roles, const std::string& level);

/// Group-level code for the reference group (always 0 after loading).
int reference_code(const Dataset& ds, const RoleMap& roles);

}  // namespace sdecomp
