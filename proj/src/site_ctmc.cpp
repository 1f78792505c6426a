#include "nbp/site_ctmc.hpp"

#include <cmath>
#include <map>
#include <string>

#include "nbp/error.hpp"

namespace nbp {
namespace {

void require_species(const SiteColumn& col) {
  if (col.size() < 2) throw DataError("a site needs at least 2 species");
  if (col.skip)
    throw DataError("site " + std::to_string(col.site_index) +
                    " contains a gap and the gap mode skips such sites");
}

std::map<Symbol, std::int64_t> letter_counts(const SiteColumn& col) {
  std::map<Symbol, std::int64_t> counts;
  for (Symbol s : col.values) ++counts[s];
  return counts;
}

}  // namespace

RateMatrix::RateMatrix(Numerators numerators, std::int64_t denominator)
    : numerators_(std::move(numerators)), denominator_(denominator) {
  if (denominator_ <= 0) throw NumericalError("rate matrix denominator must be positive");
  q_ = numerators_.cast<double>() / static_cast<double>(denominator_);
}

std::int64_t RateMatrix::exit_numerator(std::size_t i) const {
  return -numerators_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
}

PathMatrix path_matrix(const SiteColumn& col) {
  if (col.size() < 2) throw DataError("a site needs at least 2 species");
  return PathMatrix(col.values);
}

RateMatrix rate_matrix(const SiteColumn& col) {
  require_species(col);
  const auto n = static_cast<Eigen::Index>(col.size());
  const auto counts = letter_counts(col);
  RateMatrix::Numerators num = RateMatrix::Numerators::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::int64_t fi = counts.at(col.values[static_cast<std::size_t>(i)]);
    std::int64_t row = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const Symbol vi = col.values[static_cast<std::size_t>(i)];
      const Symbol vj = col.values[static_cast<std::size_t>(j)];
      const std::int64_t value = vi == vj ? fi * (fi - 1) : fi * counts.at(vj);
      num(i, j) = value;
      row += value;
    }
    num(i, i) = -row;
  }
  return RateMatrix(std::move(num), static_cast<std::int64_t>(n) * (n - 1));
}

TransitionMatrix embedded_matrix(const RateMatrix& q) {
  const auto n = static_cast<Eigen::Index>(q.size());
  TransitionMatrix out;
  out.kind = TransitionKind::embedded;
  out.p = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::int64_t exit = q.exit_numerator(static_cast<std::size_t>(i));
    if (exit <= 0)
      throw NumericalError("rate matrix row " + std::to_string(i) + " has no exit rate");
    // Dividing integer numerators keeps each entry correctly rounded.
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      out.p(i, j) = static_cast<double>(q.numerators()(i, j)) / static_cast<double>(exit);
    }
  }
  return out;
}

double site_entropy(const SiteColumn& col, EntropyBase base) {
  if (col.size() < 2) throw DataError("a site needs at least 2 species");
  const double n = static_cast<double>(col.size());
  double h = 0.0;
  for (const auto& [symbol, count] : letter_counts(col)) {
    const double freq = static_cast<double>(count) / n;
    h -= freq * std::log(freq);
  }
  if (base == EntropyBase::bits) h /= std::log(2.0);
  return h <= 0.0 ? 0.0 : h;
}

TransitionMatrix matrix_exponential(const RateMatrix& q, double t) {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw DataError("matrix exponential time must be finite and nonnegative");
  const auto n = static_cast<Eigen::Index>(q.size());
  TransitionMatrix out;
  out.kind = TransitionKind::exponential;
  out.time = t;
  if (t == 0.0) {
    out.p = Eigen::MatrixXd::Identity(n, n);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q.q());
  if (eig.info() != Eigen::Success)
    throw NumericalError("eigendecomposition of the rate matrix failed");
  // Rows of q sum to zero, so the top eigenvalue is exactly 0.
  Eigen::VectorXd lambda = eig.eigenvalues();
  lambda(n - 1) = 0.0;
  const Eigen::VectorXd growth = (lambda * t).array().exp();
  out.p = eig.eigenvectors() * growth.asDiagonal() * eig.eigenvectors().transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double& v = out.p(i, j);
      if (v < 0.0 && v > -1e-12) v = 0.0;
      if (v < 0.0 || v > 1.0 + 1e-12)
        throw NumericalError("matrix exponential produced entry " + std::to_string(v) +
                             " outside [0,1]");
      if (v > 1.0) v = 1.0;
    }
    const double sum = out.p.row(i).sum();
    if (std::abs(sum - 1.0) > 1e-10)
      throw NumericalError("matrix exponential row " + std::to_string(i) + " sums to " +
                           std::to_string(sum));
  }
  return out;
}

StationaryDistribution stationary_distribution(const RateMatrix& q, const TransitionMatrix& p) {
  const auto n = static_cast<Eigen::Index>(q.size());
  if (p.p.rows() != n || p.p.cols() != n)
    throw NumericalError("stationary distribution: matrix dimensions differ");
  std::int64_t total = 0;
  for (Eigen::Index i = 0; i < n; ++i) total += q.exit_numerator(static_cast<std::size_t>(i));
  StationaryDistribution out;
  out.pi.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    out.pi(i) = static_cast<double>(q.exit_numerator(static_cast<std::size_t>(i))) /
                static_cast<double>(total);
  const Eigen::RowVectorXd residual = out.pi.transpose() * p.p - out.pi.transpose();
  if (residual.cwiseAbs().maxCoeff() > 1e-9)
    throw NumericalError("stationary distribution residual " +
                         std::to_string(residual.cwiseAbs().maxCoeff()) + " exceeds 1e-9");
  return out;
}

double detailed_balance_violation(const TransitionMatrix& p, const StationaryDistribution& pi) {
  const auto n = p.p.rows();
  if (pi.pi.size() != n || p.p.cols() != n)
    throw NumericalError("detailed balance: dimensions differ");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      worst = std::max(worst, std::abs(pi.pi(i) * p.p(i, j) - pi.pi(j) * p.p(j, i)));
  return worst;
}

}  // namespace nbp
