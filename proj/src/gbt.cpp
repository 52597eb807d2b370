#include "sdecomp/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sdecomp/errors.hpp"
#include "sdecomp/glm.hpp"

namespace sdecomp {

using Index = Eigen::Index;

void GbtParams::validate() const {
  if (n_trees < 0) throw ConfigError("gbt n_trees must be >= 0");
  if (!(learning_rate > 0)) throw ConfigError("gbt learning_rate must be positive");
  if (max_depth < 0) throw ConfigError("gbt max_depth must be >= 0");
  if (!(min_child_weight >= 0)) throw ConfigError("gbt min_child_weight must be >= 0");
  if (!(l2_lambda >= 0)) throw ConfigError("gbt l2_lambda must be >= 0");
  if (!(subsample > 0 && subsample <= 1)) throw ConfigError("gbt subsample must lie in (0, 1]");
}

namespace {

using Order = std::vector<std::vector<Index>>;

Order presort(const Eigen::MatrixXd& X) {
  Order order(static_cast<std::size_t>(X.cols()));
  for (Index f = 0; f < X.cols(); ++f) {
    auto& o = order[static_cast<std::size_t>(f)];
    o.resize(static_cast<std::size_t>(X.rows()));
    std::iota(o.begin(), o.end(), Index{0});
    const auto col = X.col(f);
    std::stable_sort(o.begin(), o.end(), [&](Index a, Index b) { return col[a] < col[b]; });
  }
  return order;
}

double score(double g, double h, double lambda) { return g * g / (h + lambda); }

struct NodeSums {
  double g = 0;
  double h = 0;
};

/// For every node flagged in `active`, finds the best split among rows with node_of == node.
std::vector<SplitChoice> find_splits(const Eigen::MatrixXd& X, const Order& order, const Eigen::VectorXd& grad,
                                     const Eigen::VectorXd& hess, const std::vector<int>& node_of,
                                     const std::vector<NodeSums>& totals, const std::vector<char>& active,
                                     const GbtParams& params) {
  const std::size_t n_nodes = totals.size();
  std::vector<SplitChoice> best(n_nodes);
  struct Sweep {
    double gl = 0, hl = 0, last = 0;
    bool seen = false;
  };
  std::vector<Sweep> st(n_nodes);
  const double lambda = params.l2_lambda;
  for (Index f = 0; f < X.cols(); ++f) {
    std::fill(st.begin(), st.end(), Sweep{});
    const auto col = X.col(f);
    for (Index i : order[static_cast<std::size_t>(f)]) {
      const int nd = node_of[static_cast<std::size_t>(i)];
      if (nd < 0 || !active[static_cast<std::size_t>(nd)]) continue;
      auto& s = st[static_cast<std::size_t>(nd)];
      const double v = col[i];
      if (s.seen && v > s.last) {
        const auto& tot = totals[static_cast<std::size_t>(nd)];
        const double gr = tot.g - s.gl;
        const double hr = tot.h - s.hl;
        if (s.hl >= params.min_child_weight && hr >= params.min_child_weight) {
          const double gain =
              0.5 * (score(s.gl, s.hl, lambda) + score(gr, hr, lambda) - score(tot.g, tot.h, lambda));
          auto& b = best[static_cast<std::size_t>(nd)];
          if (gain > b.gain) {
            double thr = s.last + (v - s.last) / 2;
            if (!(thr > s.last)) thr = v;
            b = {static_cast<int>(f), thr, gain};
          }
        }
      }
      s.gl += grad[i];
      s.hl += hess[i];
      s.last = v;
      s.seen = true;
    }
  }
  return best;
}

Tree grow_tree(const Eigen::MatrixXd& X, const Order& order, const Eigen::VectorXd& grad,
               const Eigen::VectorXd& hess, std::vector<int> node_of, const GbtParams& params) {
  Tree tree;
  NodeSums root;
  for (std::size_t i = 0; i < node_of.size(); ++i) {
    if (node_of[i] < 0) continue;
    root.g += grad[static_cast<Index>(i)];
    root.h += hess[static_cast<Index>(i)];
  }
  tree.nodes.push_back({});
  std::vector<NodeSums> totals{root};
  std::vector<int> frontier{0};

  for (int depth = 0; depth < params.max_depth && !frontier.empty(); ++depth) {
    std::vector<char> active(totals.size(), 0);
    for (int k : frontier) active[static_cast<std::size_t>(k)] = 1;
    const auto best = find_splits(X, order, grad, hess, node_of, totals, active, params);

    std::vector<int> next;
    for (int k : frontier) {
      const auto& b = best[static_cast<std::size_t>(k)];
      if (b.feature < 0) continue;
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({});
      tree.nodes.push_back({});
      totals.push_back({});
      totals.push_back({});
      auto& nd = tree.nodes[static_cast<std::size_t>(k)];
      nd.feature = b.feature;
      nd.threshold = b.threshold;
      nd.left = left;
      nd.right = left + 1;
      next.push_back(left);
      next.push_back(left + 1);
    }
    if (next.empty()) break;
    for (std::size_t i = 0; i < node_of.size(); ++i) {
      const int k = node_of[i];
      if (k < 0) continue;
      const auto& nd = tree.nodes[static_cast<std::size_t>(k)];
      if (nd.is_leaf() || k >= static_cast<int>(active.size()) || !active[static_cast<std::size_t>(k)]) continue;
      const int child = X(static_cast<Index>(i), nd.feature) < nd.threshold ? nd.left : nd.right;
      node_of[i] = child;
      totals[static_cast<std::size_t>(child)].g += grad[static_cast<Index>(i)];
      totals[static_cast<std::size_t>(child)].h += hess[static_cast<Index>(i)];
    }
    frontier = std::move(next);
  }
  for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
    auto& nd = tree.nodes[k];
    if (nd.is_leaf()) nd.leaf_value = -totals[k].g / (totals[k].h + params.l2_lambda);
  }
  return tree;
}

double mean_loss(GbtLoss loss, const Eigen::VectorXd& y, const Eigen::VectorXd& margin) {
  double total = 0;
  if (loss == GbtLoss::squared) {
    total = 0.5 * (y - margin).squaredNorm();
  } else {
    for (Index i = 0; i < y.size(); ++i) {
      const double e = margin[i];
      const double sp = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
      total += sp - y[i] * e;
    }
  }
  return total / static_cast<double>(y.size());
}

void gradients(GbtLoss loss, const Eigen::VectorXd& y, const Eigen::VectorXd& margin, Eigen::VectorXd& g,
               Eigen::VectorXd& h) {
  if (loss == GbtLoss::squared) {
    g = margin - y;
    h.setOnes(y.size());
  } else {
    const Eigen::VectorXd p = inverse_logit(margin);
    g = p - y;
    h = (p.array() * (1 - p.array())).matrix();
  }
}

}  // namespace

Eigen::VectorXd GbtEnsemble::predict_margin(const Eigen::MatrixXd& X) const {
  if (X.cols() != n_features)
    throw SchemaError("predict: design has " + std::to_string(X.cols()) + " columns, ensemble expects " +
                      std::to_string(n_features));
  Eigen::VectorXd out = Eigen::VectorXd::Constant(X.rows(), base_score);
  for (Index i = 0; i < X.rows(); ++i) {
    const auto row = X.row(i);
    double s = 0;
    for (const auto& t : trees) s += t.predict(row);
    out[i] += learning_rate * s;
  }
  return out;
}

Eigen::VectorXd GbtEnsemble::predict(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd m = predict_margin(X);
  if (loss == GbtLoss::squared) return m;
  return inverse_logit(m).unaryExpr([](double p) { return clip_probability(p); });
}

GbtEnsemble fit_gbt(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, GbtLoss loss, const GbtParams& params,
                    std::uint64_t seed) {
  params.validate();
  const Index n = X.rows();
  if (n == 0) throw EstimationError("fit_gbt: zero rows");
  if (y.size() != n) throw EstimationError("fit_gbt: row count mismatch");
  if (!X.allFinite() || !y.allFinite()) throw EstimationError("fit_gbt: non-finite input");

  GbtEnsemble model;
  model.loss = loss;
  model.learning_rate = params.learning_rate;
  model.n_features = X.cols();
  if (loss == GbtLoss::squared) {
    model.base_score = y.mean();
  } else {
    for (Index i = 0; i < n; ++i)
      if (y[i] != 0 && y[i] != 1) throw DomainError("fit_gbt: binary response must be 0/1");
    const double q = clip_probability(y.mean());
    model.base_score = std::log(q / (1 - q));
  }

  const Order order = presort(X);
  Eigen::VectorXd margin = Eigen::VectorXd::Constant(n, model.base_score);
  Eigen::VectorXd g, h;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(params.subsample);
  model.loss_trace.push_back(mean_loss(loss, y, margin));

  std::vector<int> node_of(static_cast<std::size_t>(n));
  for (int round = 0; round < params.n_trees; ++round) {
    gradients(loss, y, margin, g, h);
    if (params.subsample < 1.0) {
      bool any = false;
      for (auto& k : node_of) {
        k = keep(rng) ? 0 : -1;
        any = any || k == 0;
      }
      if (!any) node_of[0] = 0;
    } else {
      std::fill(node_of.begin(), node_of.end(), 0);
    }
    Tree tree = grow_tree(X, order, g, h, node_of, params);
    for (Index i = 0; i < n; ++i) margin[i] += params.learning_rate * tree.predict(X.row(i));
    model.trees.push_back(std::move(tree));
    const double l = mean_loss(loss, y, margin);
    if (!std::isfinite(l))
      throw EstimationError("fit_gbt: non-finite training loss at round " + std::to_string(round + 1));
    model.loss_trace.push_back(l);
  }
  return model;
}

SplitChoice best_root_split(const Eigen::MatrixXd& X, const Eigen::VectorXd& grad, const Eigen::VectorXd& hess,
                            const GbtParams& params) {
  const Order order = presort(X);
  std::vector<int> node_of(static_cast<std::size_t>(X.rows()), 0);
  std::vector<NodeSums> totals{{grad.sum(), hess.sum()}};
  return find_splits(X, order, grad, hess, node_of, totals, {1}, params).front();
}

}  // namespace sdecomp
