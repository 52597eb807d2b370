#include "sdecomp/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace sdecomp {

const char* to_string(ColumnType type) {
  switch (type) {
    case ColumnType::continuous: return "continuous";
    case ColumnType::binary: return "binary";
    case ColumnType::categorical: return "categorical";
  }
  return "?";
}

int Column::level_code(const std::string& level) const {
  auto it = std::find(levels.begin(), levels.end(), level);
  return it == levels.end() ? -1 : static_cast<int>(it - levels.begin());
}

void Dataset::add_column(Column column) {
  if (has(column.name)) throw SchemaError("duplicate column '" + column.name + "'");
  if (!columns_.empty() && column.size() != rows_)
    throw SchemaError("column '" + column.name + "' has " + std::to_string(column.size()) +
                      " rows, expected " + std::to_string(rows_));
  rows_ = column.size();
  columns_.push_back(std::make_shared<const Column>(std::move(column)));
}

bool Dataset::has(const std::string& name) const {
  return std::any_of(columns_.begin(), columns_.end(),
                     [&](const auto& c) { return c->name == name; });
}

const Column& Dataset::column(const std::string& name) const {
  for (const auto& c : columns_)
    if (c->name == name) return *c;
  throw SchemaError("unknown column '" + name + "'");
}

std::vector<std::string> Dataset::names() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c->name);
  return out;
}

Dataset Dataset::with_values(const std::string& name, Eigen::VectorXd values) const {
  if (values.size() != rows_) throw SchemaError("replacement for '" + name + "' has wrong length");
  Dataset out = *this;
  for (auto& c : out.columns_) {
    if (c->name == name) {
      Column copy;
      copy.name = c->name;
      copy.type = c->type;
      copy.levels = c->levels;
      copy.values = std::move(values);
      c = std::make_shared<const Column>(std::move(copy));
      return out;
    }
  }
  throw SchemaError("unknown column '" + name + "'");
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  Dataset out;
  for (const auto& c : columns_) {
    Column copy;
    copy.name = c->name;
    copy.type = c->type;
    copy.levels = c->levels;
    copy.values.resize(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) copy.values[static_cast<Index>(i)] = c->values[rows[i]];
    out.columns_.push_back(std::make_shared<const Column>(std::move(copy)));
  }
  out.rows_ = static_cast<Index>(rows.size());
  return out;
}

namespace {

void require_disjoint(const std::vector<std::pair<std::string, std::string>>& named) {
  std::map<std::string, std::string> seen;
  for (const auto& [col, role] : named) {
    auto [it, inserted] = seen.emplace(col, role);
    if (!inserted)
      throw SchemaError("column '" + col + "' assigned to both " + it->second + " and " + role);
  }
}

std::vector<std::pair<std::string, std::string>> role_pairs(const RoleMap& r) {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back(r.group.column, "group");
  for (const auto& c : r.baseline) out.emplace_back(c, "baseline");
  for (const auto& c : r.pre_confounders) out.emplace_back(c, "pre_confounder");
  out.emplace_back(r.system_factor, "system_factor");
  for (const auto& c : r.intermediate_confounders) out.emplace_back(c, "intermediate_confounder");
  out.emplace_back(r.individual_factor, "individual_factor");
  out.emplace_back(r.outcome, "outcome");
  if (r.cluster) out.emplace_back(*r.cluster, "cluster");
  return out;
}

}  // namespace

void RoleMap::validate() const {
  if (group.column.empty()) throw SchemaError("group column not set");
  if (system_factor.empty()) throw SchemaError("system_factor (A) not set");
  if (individual_factor.empty()) throw SchemaError("individual_factor (M) not set");
  if (outcome.empty()) throw SchemaError("outcome (Y) not set");
  if (group.reference.empty()) throw SchemaError("group reference level not set");
  if (group.comparisons.empty()) throw SchemaError("group needs at least one comparison level");
  for (const auto& lvl : group.comparisons)
    if (lvl == group.reference) throw SchemaError("comparison level equals reference level");
  require_disjoint(role_pairs(*this));
  auto in_baseline = [&](const std::string& c) {
    return std::find(baseline.begin(), baseline.end(), c) != baseline.end();
  };
  for (const auto& c : allowable_A)
    if (!in_baseline(c)) throw SchemaError("allowable_A column '" + c + "' is not a baseline covariate");
  for (const auto& c : allowable_M)
    if (!in_baseline(c)) throw SchemaError("allowable_M column '" + c + "' is not a baseline covariate");
}

void RoleMap::validate(const Dataset& ds) const {
  validate();
  for (const auto& [col, role] : role_pairs(*this))
    if (!ds.has(col)) throw SchemaError("missing " + role + " column '" + col + "'");
  const auto& g = ds.column(group.column);
  if (g.type != ColumnType::categorical || g.levels.empty() || g.levels[0] != group.reference)
    throw SchemaError("group column '" + group.column + "' must be categorical with reference level first");
  if (g.levels.size() < 2) throw SchemaError("group column needs at least two levels");
  for (const auto* f : {&system_factor, &individual_factor})
    if (ds.column(*f).type != ColumnType::binary)
      throw DomainError("target factor '" + *f + "' must be binary");
  if (ds.column(outcome).type == ColumnType::categorical)
    throw DomainError("outcome '" + outcome + "' must be numeric");
}

std::string role_of(const RoleMap& roles, const std::string& column) {
  for (const auto& [col, role] : role_pairs(roles))
    if (col == column) return role;
  return "none";
}

std::vector<Index> rows_in_group(const Dataset& ds, const RoleMap& roles, const std::string& level) {
  const auto& g = ds.column(roles.group.column);
  const int code = g.level_code(level);
  std::vector<Index> rows;
  if (code < 0) return rows;
  for (Index i = 0; i < g.size(); ++i)
    if (static_cast<int>(g.values[i]) == code) rows.push_back(i);
  return rows;
}

int reference_code(const Dataset& ds, const RoleMap& roles) {
  return ds.column(roles.group.column).level_code(roles.group.reference);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool is_missing(const std::string& s) { return s.empty() || s == "NA"; }

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

LoadResult parse_csv(std::istream& in, const RoleMap& roles, MissingPolicy policy) {
  roles.validate();
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty file: header row required");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);  // BOM
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  for (const auto& [col, role] : role_pairs(roles))
    if (std::find(header.begin(), header.end(), col) == header.end())
      throw SchemaError("missing " + role + " column '" + col + "'");

  std::vector<std::vector<std::string>> cells(header.size());
  LoadReport report;
  Index data_row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++data_row;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ParseError("row " + std::to_string(data_row) + ": expected " + std::to_string(header.size()) +
                       " fields, found " + std::to_string(fields.size()));
    bool missing = false;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      fields[j] = trim(fields[j]);
      if (is_missing(fields[j])) {
        if (policy == MissingPolicy::reject)
          throw DataError("missing value at row " + std::to_string(data_row) + ", column '" + header[j] + "'");
        missing = true;
      }
    }
    if (missing) {
      report.dropped.push_back(data_row);
      continue;
    }
    for (std::size_t j = 0; j < fields.size(); ++j) cells[j].push_back(std::move(fields[j]));
  }
  report.rows_read = data_row;
  const Index n = data_row - static_cast<Index>(report.dropped.size());
  report.rows_kept = n;

  // Row numbers of kept rows, for error messages.
  std::vector<Index> row_number;
  row_number.reserve(static_cast<std::size_t>(n));
  {
    std::size_t d = 0;
    for (Index r = 1; r <= data_row; ++r) {
      if (d < report.dropped.size() && report.dropped[d] == r) {
        ++d;
        continue;
      }
      row_number.push_back(r);
    }
  }

  Dataset ds;
  for (std::size_t j = 0; j < header.size(); ++j) {
    const std::string& name = header[j];
    const std::string role = role_of(roles, name);
    const auto& raw = cells[j];
    Column col;
    col.name = name;
    col.values.resize(n);

    auto parse_all = [&](bool strict) -> bool {
      for (Index i = 0; i < n; ++i) {
        auto v = parse_number(raw[static_cast<std::size_t>(i)]);
        if (!v) {
          if (strict)
            throw ParseError("cannot parse '" + raw[static_cast<std::size_t>(i)] + "' as a number at row " +
                             std::to_string(row_number[static_cast<std::size_t>(i)]) + ", column '" + name + "'");
          return false;
        }
        col.values[i] = *v;
      }
      return true;
    };
    auto make_categorical = [&](std::vector<std::string> levels) {
      col.type = ColumnType::categorical;
      col.levels = std::move(levels);
      for (Index i = 0; i < n; ++i) {
        const int code = col.level_code(raw[static_cast<std::size_t>(i)]);
        if (code < 0)
          throw DomainError("undeclared level '" + raw[static_cast<std::size_t>(i)] + "' at row " +
                            std::to_string(row_number[static_cast<std::size_t>(i)]) + ", column '" + name + "'");
        col.values[i] = code;
      }
    };
    auto sorted_levels = [&] {
      std::set<std::string> s(raw.begin(), raw.end());
      return std::vector<std::string>(s.begin(), s.end());
    };
    auto all_binary = [&] {
      return (col.values.array() == 0.0 || col.values.array() == 1.0).all();
    };

    if (role == "group") {
      std::vector<std::string> levels{roles.group.reference};
      levels.insert(levels.end(), roles.group.comparisons.begin(), roles.group.comparisons.end());
      make_categorical(std::move(levels));
    } else if (role == "cluster") {
      make_categorical(sorted_levels());
    } else if (role == "system_factor" || role == "individual_factor") {
      parse_all(true);
      for (Index i = 0; i < n; ++i)
        if (col.values[i] != 0.0 && col.values[i] != 1.0)
          throw DomainError("column '" + name + "' is binary but has value " + raw[static_cast<std::size_t>(i)] +
                            " at row " + std::to_string(row_number[static_cast<std::size_t>(i)]));
      col.type = ColumnType::binary;
    } else if (role == "outcome") {
      parse_all(true);
      col.type = ColumnType::continuous;
    } else if (parse_all(false)) {
      col.type = all_binary() ? ColumnType::binary : ColumnType::continuous;
    } else {
      make_categorical(sorted_levels());
    }
    report.columns.push_back({name, role, col.type});
    ds.add_column(std::move(col));
  }
  if (n == 0) throw DataError("no rows left after loading");
  roles.validate(ds);
  return {std::move(ds), std::move(report)};
}

LoadResult load_csv(const std::string& path, const RoleMap& roles, MissingPolicy policy) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_csv(in, roles, policy);
}

void write_csv(const Dataset& ds, std::ostream& out) {
  const auto names = ds.names();
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  out << '\n';
  char buf[64];
  for (Index i = 0; i < ds.rows(); ++i) {
    for (std::size_t j = 0; j < ds.cols(); ++j) {
      const auto& c = ds.column(j);
      if (j) out << ',';
      if (c.type == ColumnType::categorical) {
        out << c.levels[static_cast<std::size_t>(c.values[i])];
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", c.values[i]);
        out << buf;
      }
    }
    out << '\n';
  }
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_csv(ds, out);
}

}  // namespace sdecomp
