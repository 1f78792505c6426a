#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nbp/alignment.hpp"

namespace nbp {

// Ordered letter pair (v_i, v_j) through which species i and j communicate.
using SymbolPair = std::pair<Symbol, Symbol>;

class PathMatrix {
 public:
  explicit PathMatrix(std::vector<Symbol> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  SymbolPair at(std::size_t i, std::size_t j) const { return {values_.at(i), values_.at(j)}; }

 private:
  std::vector<Symbol> values_;
};

// Pair-frequency rate matrix over the species of one site. Entries are held
// as exact integer numerators over the common denominator n(n-1); q() is the
// floating-point view, converted once at construction.
class RateMatrix {
 public:
  using Numerators = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

  RateMatrix(Numerators numerators, std::int64_t denominator);

  std::size_t size() const { return static_cast<std::size_t>(q_.rows()); }
  const Numerators& numerators() const { return numerators_; }
  std::int64_t denominator() const { return denominator_; }
  const Eigen::MatrixXd& q() const { return q_; }
  double operator()(std::size_t i, std::size_t j) const {
    return q_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  // Total exit rate of species i, as an integer numerator.
  std::int64_t exit_numerator(std::size_t i) const;

 private:
  Numerators numerators_;
  std::int64_t denominator_;
  Eigen::MatrixXd q_;
};

enum class TransitionKind { embedded, exponential };

struct TransitionMatrix {
  Eigen::MatrixXd p;
  TransitionKind kind = TransitionKind::embedded;
  double time = 0.0;  // only meaningful for kind == exponential

  std::size_t size() const { return static_cast<std::size_t>(p.rows()); }
};

struct StationaryDistribution {
  Eigen::VectorXd pi;
};

enum class EntropyBase { nats, bits };

PathMatrix path_matrix(const SiteColumn& col);

// q_ij = f_i f_j / n(n-1) for distinct letters, f(f-1) / n(n-1) for equal
// letters, with the diagonal closing each row to zero.
RateMatrix rate_matrix(const SiteColumn& col);

// Jump chain of q: off-diagonal rows normalized by the exit rate, zero diagonal.
TransitionMatrix embedded_matrix(const RateMatrix& q);

double site_entropy(const SiteColumn& col, EntropyBase base = EntropyBase::nats);

// exp(Q t) through the symmetric eigendecomposition of Q.
TransitionMatrix matrix_exponential(const RateMatrix& q, double t);

// Stationary law of the embedded chain: proportional to the exit rates of q.
// Throws NumericalError when the residual |pi P - pi| exceeds 1e-9 against `p`.
StationaryDistribution stationary_distribution(const RateMatrix& q, const TransitionMatrix& p);

// max_{i,j} |pi_i p_ij - pi_j p_ji|
double detailed_balance_violation(const TransitionMatrix& p, const StationaryDistribution& pi);

}  // namespace nbp
