#include "sdecomp/formula.hpp"

#include <algorithm>
#include <cmath>

namespace sdecomp {

namespace {

struct Basis {
  std::string name;
  Eigen::VectorXd values;
};

std::vector<Basis> column_basis(const Dataset& ds, const std::string& name) {
  const Column& c = ds.column(name);
  if (c.type != ColumnType::categorical) return {{name, c.values}};
  std::vector<Basis> out;
  for (std::size_t l = 1; l < c.levels.size(); ++l) {
    const double code = static_cast<double>(l);
    out.push_back({name + "[" + c.levels[l] + "]", (c.values.array() == code).cast<double>().matrix()});
  }
  return out;
}

std::vector<Basis> product(const std::vector<Basis>& a, const std::vector<Basis>& b) {
  std::vector<Basis> out;
  for (const auto& x : a)
    for (const auto& y : b) out.push_back({x.name + ":" + y.name, x.values.cwiseProduct(y.values)});
  return out;
}

std::vector<Basis> product_of(const Dataset& ds, const std::vector<std::string>& cols) {
  std::vector<Basis> acc = column_basis(ds, cols.front());
  for (std::size_t i = 1; i < cols.size(); ++i) acc = product(acc, column_basis(ds, cols[i]));
  return acc;
}

std::vector<Basis> expand(const Dataset& ds, const Term& t) {
  switch (t.kind) {
    case Term::Kind::intercept:
      return {{"(intercept)", Eigen::VectorXd::Ones(ds.rows())}};
    case Term::Kind::raw:
    case Term::Kind::centered:
    case Term::Kind::interaction:
      return product_of(ds, t.columns);
    case Term::Kind::factorial: {
      std::vector<Basis> out;
      const std::size_t k = t.columns.size();
      // subsets by size, then in lexicographic order of positions
      for (std::size_t size = 1; size <= k; ++size) {
        std::vector<bool> pick(k, false);
        std::fill(pick.begin(), pick.begin() + static_cast<long>(size), true);
        do {
          std::vector<std::string> cols;
          for (std::size_t i = 0; i < k; ++i)
            if (pick[i]) cols.push_back(t.columns[i]);
          auto part = product_of(ds, cols);
          out.insert(out.end(), part.begin(), part.end());
        } while (std::prev_permutation(pick.begin(), pick.end()));
      }
      return out;
    }
    case Term::Kind::transform: {
      std::vector<const Eigen::VectorXd*> args;
      for (const auto& c : t.columns) {
        const Column& col = ds.column(c);
        if (col.type == ColumnType::categorical)
          throw DomainError("transform " + t.transform + " needs numeric column, '" + c + "' is categorical");
        args.push_back(&col.values);
      }
      return {{t.str(), apply_transform(t.transform, args)}};
    }
  }
  return {};
}

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

}  // namespace

Term Term::interaction(std::vector<std::string> cs) {
  if (cs.size() < 2 || cs.size() > 3) throw ConfigError("interaction terms take 2 or 3 columns");
  return {Kind::interaction, std::move(cs), {}};
}

Term Term::apply(std::string fn, std::vector<std::string> cs) {
  static const std::map<std::string, std::size_t> arity{{"xm1", 1}, {"xm2", 2}, {"xm3", 2}, {"exp", 1},
                                                       {"log", 1}, {"inv", 1}, {"square", 1}};
  auto it = arity.find(fn);
  if (it == arity.end()) throw ConfigError("unknown transform '" + fn + "'");
  if (it->second != cs.size())
    throw ConfigError("transform '" + fn + "' takes " + std::to_string(it->second) + " argument(s)");
  return {Kind::transform, std::move(cs), std::move(fn)};
}

Term Term::parse(const std::string& raw_text) {
  std::string text;
  for (char ch : raw_text)
    if (ch != ' ') text.push_back(ch);
  if (text.empty()) throw ConfigError("empty formula term");
  if (text == "1" || text == "intercept") return intercept();
  const auto open = text.find('(');
  if (open != std::string::npos) {
    if (text.back() != ')') throw ConfigError("malformed term '" + raw_text + "'");
    const std::string fn = text.substr(0, open);
    std::vector<std::string> args;
    std::string cur;
    for (std::size_t i = open + 1; i + 1 < text.size(); ++i) {
      if (text[i] == ',') {
        args.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(text[i]);
      }
    }
    args.push_back(cur);
    for (const auto& a : args)
      if (a.empty()) throw ConfigError("malformed term '" + raw_text + "'");
    if (fn == "center") {
      if (args.size() != 1) throw ConfigError("center() takes one column");
      return centered(args[0]);
    }
    if (fn == "factorial") return factorial(args);
    return apply(fn, args);
  }
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> cols;
    std::string cur;
    for (char ch : text) {
      if (ch == ':') {
        cols.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    cols.push_back(cur);
    return interaction(cols);
  }
  return raw(text);
}

std::string Term::str() const {
  switch (kind) {
    case Kind::intercept: return "1";
    case Kind::raw: return columns[0];
    case Kind::centered: return "center(" + columns[0] + ")";
    case Kind::interaction: return join(columns, ":");
    case Kind::factorial: return "factorial(" + join(columns, ",") + ")";
    case Kind::transform: return transform + "(" + join(columns, ",") + ")";
  }
  return {};
}

FeatureFormula FeatureFormula::parse(const std::vector<std::string>& texts) {
  FeatureFormula f;
  for (const auto& t : texts) f.terms.push_back(Term::parse(t));
  return f;
}

bool FeatureFormula::has_intercept() const {
  return std::any_of(terms.begin(), terms.end(), [](const Term& t) { return t.kind == Term::Kind::intercept; });
}

FeatureFormula FeatureFormula::without_intercept() const {
  FeatureFormula f;
  for (const auto& t : terms)
    if (t.kind != Term::Kind::intercept) f.terms.push_back(t);
  return f;
}

std::vector<std::string> FeatureFormula::columns() const {
  std::vector<std::string> out;
  for (const auto& t : terms)
    for (const auto& c : t.columns)
      if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  return out;
}

std::vector<std::string> FeatureFormula::str() const {
  std::vector<std::string> out;
  for (const auto& t : terms) out.push_back(t.str());
  return out;
}

Design build_design(const Dataset& ds, const FeatureFormula& formula) {
  std::vector<Basis> all;
  DesignInfo info;
  for (const auto& t : formula.terms) {
    auto part = expand(ds, t);
    if (t.kind == Term::Kind::centered) {
      for (auto& b : part) {
        b.name = "center(" + b.name + ")";
        const double mean = b.values.mean();
        info.centers[b.name] = mean;
        b.values.array() -= mean;
      }
    }
    all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  Design d;
  d.X.resize(ds.rows(), static_cast<Index>(all.size()));
  for (std::size_t j = 0; j < all.size(); ++j) {
    d.X.col(static_cast<Index>(j)) = all[j].values;
    info.names.push_back(all[j].name);
  }
  d.info = std::move(info);
  return d;
}

Eigen::MatrixXd build_design(const Dataset& ds, const FeatureFormula& formula, const DesignInfo& frozen) {
  std::vector<Basis> all;
  for (const auto& t : formula.terms) {
    auto part = expand(ds, t);
    if (t.kind == Term::Kind::centered) {
      for (auto& b : part) {
        b.name = "center(" + b.name + ")";
        auto it = frozen.centers.find(b.name);
        if (it == frozen.centers.end()) throw SchemaError("no frozen center for '" + b.name + "'");
        b.values.array() -= it->second;
      }
    }
    all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  if (all.size() != frozen.names.size())
    throw SchemaError("design expands to " + std::to_string(all.size()) + " columns, model expects " +
                      std::to_string(frozen.names.size()));
  Eigen::MatrixXd X(ds.rows(), static_cast<Index>(all.size()));
  for (std::size_t j = 0; j < all.size(); ++j) X.col(static_cast<Index>(j)) = all[j].values;
  return X;
}

Eigen::VectorXd apply_transform(const std::string& name, const std::vector<const Eigen::VectorXd*>& args) {
  const auto& a = *args.at(0);
  // scalar exp keeps each element independent of vector length and alignment
  const auto ex = [&a] { return a.unaryExpr([](double v) { return std::exp(v); }).array(); };
  if (name == "xm1") return ex() / 2.0;
  if (name == "xm2") return (args.at(1)->array() / (1.0 + ex()) + 10.0).matrix();
  if (name == "xm3") return (a.array() * args.at(1)->array() / 25.0 + 0.6).cube().matrix();
  if (name == "exp") return ex();
  if (name == "square") return a.array().square();
  if (name == "log") {
    if ((a.array() <= 0.0).any()) throw DomainError("log() of a non-positive value");
    return a.array().log();
  }
  if (name == "inv") {
    if ((a.array() == 0.0).any()) throw DomainError("inv() division by zero");
    return a.array().inverse();
  }
  throw ConfigError("unknown transform '" + name + "'");
}

}  // namespace sdecomp
