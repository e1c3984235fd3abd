#include "mmc/strassen.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <utility>

namespace mmc {

DiscreteDistribution DiscreteDistribution::make(std::vector<double> atoms,
                                                std::vector<double> weights) {
  if (atoms.size() != weights.size() || atoms.empty())
    throw DomainError("atoms and weights must be non-empty and of equal length");
  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
  DiscreteDistribution out;
  double total = 0.0;
  for (std::size_t k : order) {
    if (!std::isfinite(atoms[k]) || !(weights[k] >= 0.0))
      throw DomainError("atoms must be finite and weights nonnegative");
    total += weights[k];
    if (weights[k] == 0.0) continue;
    if (!out.atoms.empty() && out.atoms.back() == atoms[k])
      out.weights.back() += weights[k];
    else {
      out.atoms.push_back(atoms[k]);
      out.weights.push_back(weights[k]);
    }
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("weights must sum to 1");
  return out;
}

namespace {

using Cell = std::pair<Eigen::Index, Eigen::Index>;

// Path of basic cells from row node `row` to column node `col` in the basis
// tree, ordered starting at the row end.
std::vector<std::size_t> tree_path(const std::vector<Cell>& basis, Eigen::Index rows,
                                   Eigen::Index cols, Eigen::Index row, Eigen::Index col) {
  const Eigen::Index nodes = rows + cols;
  std::vector<std::vector<std::size_t>> adj(static_cast<std::size_t>(nodes));
  for (std::size_t e = 0; e < basis.size(); ++e) {
    adj[static_cast<std::size_t>(basis[e].first)].push_back(e);
    adj[static_cast<std::size_t>(rows + basis[e].second)].push_back(e);
  }
  const std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> via(static_cast<std::size_t>(nodes), none);
  std::vector<bool> seen(static_cast<std::size_t>(nodes), false);
  std::queue<Eigen::Index> frontier;
  frontier.push(row);
  seen[static_cast<std::size_t>(row)] = true;
  const Eigen::Index target = rows + col;
  while (!frontier.empty()) {
    const Eigen::Index u = frontier.front();
    frontier.pop();
    if (u == target) break;
    for (std::size_t e : adj[static_cast<std::size_t>(u)]) {
      const Eigen::Index w =
          u < rows ? rows + basis[e].second : basis[e].first;
      if (seen[static_cast<std::size_t>(w)]) continue;
      seen[static_cast<std::size_t>(w)] = true;
      via[static_cast<std::size_t>(w)] = e;
      frontier.push(w);
    }
  }
  if (!seen[static_cast<std::size_t>(target)])
    throw EstimationError("transportation basis is not a spanning tree");
  std::vector<std::size_t> path;
  for (Eigen::Index u = target; u != row;) {
    const std::size_t e = via[static_cast<std::size_t>(u)];
    path.push_back(e);
    u = u < rows ? rows + basis[e].second : basis[e].first;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

void check_balanced(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                    const Eigen::MatrixXd& cost) {
  if (supply.size() == 0 || demand.size() == 0)
    throw DomainError("transportation problem needs at least one row and column");
  if (cost.rows() != supply.size() || cost.cols() != demand.size())
    throw DomainError("cost matrix shape mismatch");
  if ((supply.array() < 0).any() || (demand.array() < 0).any())
    throw DomainError("supplies and demands must be nonnegative");
  const double scale = std::max(1.0, supply.sum());
  if (std::abs(supply.sum() - demand.sum()) > 1e-12 * scale)
    throw DomainError("transportation problem is unbalanced");
}

}  // namespace

TransportPlan transport_simplex(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                                const Eigen::MatrixXd& cost) {
  check_balanced(supply, demand, cost);
  const Eigen::Index R = supply.size(), K = demand.size();

  Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(R, K);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> in_basis =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(R, K, false);
  std::vector<Cell> basis;

  // Northwest corner; advances exactly one index per step, giving R+K-1
  // basic cells that span the bipartite graph.
  {
    Eigen::VectorXd rs = supply, cd = demand;
    Eigen::Index i = 0, j = 0;
    while (true) {
      const double q = std::min(rs(i), cd(j));
      flow(i, j) = q;
      in_basis(i, j) = true;
      basis.emplace_back(i, j);
      rs(i) -= q;
      cd(j) -= q;
      if (i == R - 1 && j == K - 1) break;
      if (i == R - 1)
        ++j;
      else if (j == K - 1)
        ++i;
      else if (rs(i) <= cd(j))
        ++i;
      else
        ++j;
    }
  }

  TransportPlan plan;
  Eigen::VectorXd u(R), v(K);
  for (std::size_t iter = 0;; ++iter) {
    if (iter > 100000) throw EstimationError("transportation simplex did not terminate");
    // potentials: u_i + v_j = c_ij on basic cells
    {
      std::vector<bool> ur(static_cast<std::size_t>(R), false), vc(static_cast<std::size_t>(K), false);
      u(0) = 0.0;
      ur[0] = true;
      for (bool progress = true; progress;) {
        progress = false;
        for (const auto& [i, j] : basis) {
          const auto si = static_cast<std::size_t>(i), sj = static_cast<std::size_t>(j);
          if (ur[si] && !vc[sj]) {
            v(j) = cost(i, j) - u(i);
            vc[sj] = true;
            progress = true;
          } else if (!ur[si] && vc[sj]) {
            u(i) = cost(i, j) - v(j);
            ur[si] = true;
            progress = true;
          }
        }
      }
    }
    // Bland: first improving cell in row-major order
    Eigen::Index ei = -1, ej = -1;
    for (Eigen::Index i = 0; i < R && ei < 0; ++i)
      for (Eigen::Index j = 0; j < K; ++j)
        if (!in_basis(i, j) && cost(i, j) - u(i) - v(j) < -1e-12) {
          ei = i;
          ej = j;
          break;
        }
    if (ei < 0) break;

    const auto path = tree_path(basis, R, K, ei, ej);
    // path cells alternate -, +, -, ... starting next to the entering row
    double theta = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < path.size(); k += 2)
      theta = std::min(theta, flow(basis[path[k]].first, basis[path[k]].second));
    std::size_t leave = path.size();
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const auto [i, j] = basis[path[k]];
      if (flow(i, j) != theta) continue;
      if (leave == path.size() ||
          i * K + j < basis[path[leave]].first * K + basis[path[leave]].second)
        leave = k;
    }
    for (std::size_t k = 0; k < path.size(); ++k) {
      const auto [i, j] = basis[path[k]];
      flow(i, j) += (k % 2 == 0) ? -theta : theta;
    }
    const std::size_t out = path[leave];
    const auto [li, lj] = basis[out];
    flow(li, lj) = 0.0;
    in_basis(li, lj) = false;
    flow(ei, ej) = theta;
    in_basis(ei, ej) = true;
    basis[out] = {ei, ej};
    ++plan.pivots;
  }
  plan.flow = flow;
  plan.cost = (flow.array() * cost.array()).sum();
  return plan;
}

TransportPlan transport_exhaustive(const Eigen::VectorXd& supply,
                                   const Eigen::VectorXd& demand,
                                   const Eigen::MatrixXd& cost) {
  check_balanced(supply, demand, cost);
  const Eigen::Index R = supply.size(), K = demand.size();
  const int cells = static_cast<int>(R * K);
  if (cells > 16) throw CapacityError("exhaustive transport limited to 16 cells");
  const int need = static_cast<int>(R + K - 1);

  TransportPlan best;
  best.cost = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << cells); ++mask) {
    if (std::popcount(mask) != need) continue;
    std::vector<Cell> edges;
    for (int c = 0; c < cells; ++c)
      if (mask & (1u << c)) edges.emplace_back(c / K, c % K);
    // leaf elimination solves the tree system, failing on cycles
    Eigen::VectorXd rem(R + K);
    rem << supply, demand;
    std::vector<bool> used(edges.size(), false);
    Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(R, K);
    bool ok = true;
    for (std::size_t solved = 0; solved < edges.size() && ok;) {
      bool found = false;
      for (Eigen::Index node = 0; node < R + K && !found; ++node) {
        std::size_t deg = 0, last = 0;
        for (std::size_t e = 0; e < edges.size(); ++e) {
          if (used[e]) continue;
          const bool touches = node < R ? edges[e].first == node : edges[e].second == node - R;
          if (touches) {
            ++deg;
            last = e;
          }
        }
        if (deg != 1) continue;
        found = true;
        const auto [i, j] = edges[last];
        const double q = rem(node);
        flow(i, j) = q;
        rem(i) -= q;
        rem(R + j) -= q;
        used[last] = true;
        ++solved;
      }
      ok = found;
    }
    if (!ok) continue;
    if ((rem.array().abs() > 1e-12).any()) continue;
    if ((flow.array() < -1e-12).any()) continue;
    const double c = (flow.array() * cost.array()).sum();
    if (c < best.cost) {
      best.cost = c;
      best.flow = flow;
    }
  }
  return best;
}

namespace {

bool close(double a, double b, double d) { return std::abs(a - b) <= d; }

}  // namespace

double strassen_dual(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                     double d, std::vector<double>* argmax) {
  const std::size_t k = mu.size();
  auto window_mass = [&](std::size_t j, std::size_t prev, bool has_prev) {
    double mass = 0.0;
    for (std::size_t b = 0; b < nu.size(); ++b)
      if (close(mu.atoms[j], nu.atoms[b], d) &&
          !(has_prev && close(mu.atoms[prev], nu.atoms[b], d)))
        mass += nu.weights[b];
    return mass;
  };
  std::vector<double> dp(k);
  std::vector<std::ptrdiff_t> from(k, -1);
  double best = 0.0;
  std::ptrdiff_t best_end = -1;
  for (std::size_t j = 0; j < k; ++j) {
    dp[j] = mu.weights[j] - window_mass(j, 0, false);
    for (std::size_t i = 0; i < j; ++i) {
      const double cand = dp[i] + mu.weights[j] - window_mass(j, i, true);
      if (cand > dp[j]) {
        dp[j] = cand;
        from[j] = static_cast<std::ptrdiff_t>(i);
      }
    }
    if (dp[j] > best) {
      best = dp[j];
      best_end = static_cast<std::ptrdiff_t>(j);
    }
  }
  if (argmax) {
    argmax->clear();
    for (std::ptrdiff_t j = best_end; j >= 0; j = from[static_cast<std::size_t>(j)])
      argmax->push_back(mu.atoms[static_cast<std::size_t>(j)]);
    std::reverse(argmax->begin(), argmax->end());
  }
  return best;
}

double strassen_dual_exhaustive(const DiscreteDistribution& mu,
                                const DiscreteDistribution& nu, double d) {
  const std::size_t k = mu.size();
  if (k > 20) throw CapacityError("exhaustive dual limited to 20 atoms");
  double best = 0.0;
  for (unsigned long mask = 1; mask < (1ul << k); ++mask) {
    double in = 0.0, hit = 0.0;
    for (std::size_t a = 0; a < k; ++a)
      if (mask & (1ul << a)) in += mu.weights[a];
    for (std::size_t b = 0; b < nu.size(); ++b)
      for (std::size_t a = 0; a < k; ++a)
        if ((mask & (1ul << a)) && close(mu.atoms[a], nu.atoms[b], d)) {
          hit += nu.weights[b];
          break;
        }
    best = std::max(best, in - hit);
  }
  return best;
}

CouplingResult strassen_min_coupling(const DiscreteDistribution& mu,
                                     const DiscreteDistribution& nu, double d) {
  if (!(d >= 0.0)) throw DomainError("distance must be nonnegative");
  const Eigen::Index R = static_cast<Eigen::Index>(mu.size());
  const Eigen::Index K = static_cast<Eigen::Index>(nu.size());
  Eigen::MatrixXd cost(R, K);
  for (Eigen::Index i = 0; i < R; ++i)
    for (Eigen::Index j = 0; j < K; ++j)
      cost(i, j) = close(mu.atoms[static_cast<std::size_t>(i)],
                         nu.atoms[static_cast<std::size_t>(j)], d)
                       ? 0.0
                       : 1.0;
  const Eigen::VectorXd supply =
      Eigen::Map<const Eigen::VectorXd>(mu.weights.data(), R);
  const Eigen::VectorXd demand =
      Eigen::Map<const Eigen::VectorXd>(nu.weights.data(), K);

  CouplingResult r;
  const bool tiny = R <= 3 && K <= 3;
  const TransportPlan plan =
      tiny ? transport_exhaustive(supply, demand, cost) : transport_simplex(supply, demand, cost);
  r.method = tiny ? "exhaustive" : "transport-simplex";
  r.primal = plan.cost;
  r.plan = plan.flow;
  r.dual = strassen_dual(mu, nu, d, &r.dual_set);
  r.primal_equals_dual = std::abs(r.primal - r.dual) <= 1e-12;
  return r;
}

}  // namespace mmc
