#pragma once

#include <string>
#include <vector>

#include "mmc/types.hpp"

namespace mmc {

/// Finitely supported law on the real line; atoms strictly increasing.
struct DiscreteDistribution {
  std::vector<double> atoms;
  std::vector<double> weights;

  /// Sorts, merges repeated atoms, drops zero weights; weights must sum to 1
  /// within 1e-12.
  static DiscreteDistribution make(std::vector<double> atoms, std::vector<double> weights);
  static DiscreteDistribution point_mass(double at) { return make({at}, {1.0}); }
  std::size_t size() const { return atoms.size(); }
};

/// Balanced transportation problem: min sum c_ij x_ij, rows sum to supply,
/// columns to demand, x >= 0.
struct TransportPlan {
  Eigen::MatrixXd flow;
  double cost = 0.0;
  std::size_t pivots = 0;
};

/// Transportation simplex: northwest-corner start, potentials for pricing,
/// Bland's rule on entering and leaving cells.
TransportPlan transport_simplex(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                                const Eigen::MatrixXd& cost);

/// Enumerates every spanning-tree basis and keeps the cheapest feasible
/// one. Only for tiny problems (rows * cols <= 16).
TransportPlan transport_exhaustive(const Eigen::VectorXd& supply,
                                   const Eigen::VectorXd& demand,
                                   const Eigen::MatrixXd& cost);

struct CouplingResult {
  double primal = 0.0;  // min P(|V - W| > d) over couplings
  double dual = 0.0;    // max_A mu(A) - nu(A^d)
  bool primal_equals_dual = false;
  std::string method;  // "exhaustive" or "transport-simplex"
  Eigen::MatrixXd plan;
  std::vector<double> dual_set;  // mu atoms forming a maximizing A
};

CouplingResult strassen_min_coupling(const DiscreteDistribution& mu,
                                     const DiscreteDistribution& nu, double d);

/// max over unions of mu-atoms A of mu(A) - nu(A^d), by dynamic programming
/// over the sorted atoms (the last included atom is the state).
double strassen_dual(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                     double d, std::vector<double>* argmax = nullptr);

/// Same maximum by enumerating all 2^k subsets of mu's atoms (k <= 20).
double strassen_dual_exhaustive(const DiscreteDistribution& mu,
                                const DiscreteDistribution& nu, double d);

}  // namespace mmc
