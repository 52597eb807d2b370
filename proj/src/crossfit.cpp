#include "sdecomp/crossfit.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

namespace sdecomp {

std::vector<Index> CrossFitPlan::fold_sizes() const {
  std::vector<Index> sizes(static_cast<std::size_t>(K), 0);
  for (int k : assignment) ++sizes[static_cast<std::size_t>(k)];
  return sizes;
}

CrossFitPlan make_folds(Index n, int K, std::uint64_t seed, const Eigen::VectorXd* clusters) {
  if (K < 2) throw ConfigError("cross-fitting needs K >= 2, got " + std::to_string(K));
  if (K > n) throw ConfigError("K = " + std::to_string(K) + " exceeds the row count " + std::to_string(n));
  CrossFitPlan plan;
  plan.K = K;
  plan.seed = seed;
  plan.assignment.assign(static_cast<std::size_t>(n), 0);
  std::mt19937_64 rng(seed);

  if (!clusters) {
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t pos = 0; pos < perm.size(); ++pos)
      plan.assignment[static_cast<std::size_t>(perm[pos])] = static_cast<int>(pos % static_cast<std::size_t>(K));
    return plan;
  }

  if (clusters->size() != n) throw ConfigError("cluster vector length does not match the row count");
  plan.cluster_respecting = true;
  std::map<double, std::vector<Index>> members;
  for (Index i = 0; i < n; ++i) members[(*clusters)[i]].push_back(i);
  if (static_cast<Index>(members.size()) < K)
    throw ConfigError("K = " + std::to_string(K) + " exceeds the number of clusters " +
                      std::to_string(members.size()));
  std::vector<const std::vector<Index>*> order;
  for (const auto& [id, rows] : members) order.push_back(&rows);
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->size() > b->size(); });
  std::vector<Index> load(static_cast<std::size_t>(K), 0);
  for (const auto* rows : order) {
    const auto k = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
    for (Index i : *rows) plan.assignment[static_cast<std::size_t>(i)] = static_cast<int>(k);
    load[k] += static_cast<Index>(rows->size());
  }
  return plan;
}

bool audit_no_leakage(const NuisanceSet& nuis) {
  const auto& f = nuis.folds;
  for (std::size_t k = 0; k < f.training_rows.size(); ++k)
    for (Index i : f.training_rows[k])
      if (f.fold_of_row[static_cast<std::size_t>(i)] == static_cast<int>(k)) return false;
  return !f.training_rows.empty();
}

}  // namespace sdecomp
