#include "nbp/genome_combine.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "nbp/error.hpp"
#include "parallel.hpp"

namespace nbp {

TimeMode parse_time_mode(std::string_view text) {
  if (text == "embedded") return TimeMode::embedded();
  if (text == "entropy") return TimeMode::entropy();
  constexpr std::string_view prefix = "fixed:";
  if (text.substr(0, prefix.size()) == prefix) {
    auto value = text.substr(prefix.size());
    double t = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), t);
    if (ec != std::errc{} || ptr != value.data() + value.size() || !(t >= 0.0) || !std::isfinite(t))
      throw DataError("invalid fixed time '" + std::string(value) + "'");
    return TimeMode::fixed(t);
  }
  throw DataError("unknown mode '" + std::string(text) + "' (expected embedded, entropy or fixed:<t>)");
}

TransitionMatrix site_transition(const SiteColumn& col, const TimeMode& mode) {
  const RateMatrix q = rate_matrix(col);
  switch (mode.kind) {
    case TimeMode::Kind::embedded:
      return embedded_matrix(q);
    case TimeMode::Kind::entropy_time:
      return matrix_exponential(q, site_entropy(col, mode.entropy_base));
    case TimeMode::Kind::fixed_time:
      return matrix_exponential(q, mode.time);
  }
  throw NumericalError("unreachable time mode");
}

SiteMatrices alignment_site_matrices(const Alignment& alignment, const TimeMode& mode,
                                     unsigned threads) {
  const std::size_t m = alignment.site_count();
  std::vector<SiteColumn> columns;
  columns.reserve(m);
  SiteMatrices out;
  out.sequence.taxa = alignment.taxa();
  for (std::size_t s = 0; s < m; ++s) {
    auto col = column(alignment, s);
    if (col.skip) {
      ++out.skipped;
      continue;
    }
    columns.push_back(std::move(col));
  }
  out.sequence.matrices.resize(columns.size());
  detail::parallel_for(columns.size(), threads, [&](std::size_t i) {
    out.sequence.matrices[i] = site_transition(columns[i], mode);
  });
  return out;
}

TransitionMatrix chain_product(const SiteMatrixSequence& seq, unsigned threads) {
  if (seq.matrices.empty()) throw DataError("cannot combine an empty matrix sequence");
  const auto n = static_cast<Eigen::Index>(seq.taxa.size());
  bool all_embedded = true;
  double total_time = 0.0;
  for (std::size_t k = 0; k < seq.matrices.size(); ++k) {
    const auto& p = seq.matrices[k].p;
    if (p.rows() != n || p.cols() != n)
      throw DataError("site matrix " + std::to_string(k) + " is " + std::to_string(p.rows()) + "x" +
                      std::to_string(p.cols()) + ", expected " + std::to_string(n) + "x" +
                      std::to_string(n));
    all_embedded = all_embedded && seq.matrices[k].kind == TransitionKind::embedded;
    total_time += seq.matrices[k].time;
  }

  const std::size_t count = seq.matrices.size();
  const std::size_t blocks = (count + kProductBlock - 1) / kProductBlock;
  std::vector<Eigen::MatrixXd> level(blocks);
  detail::parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t begin = b * kProductBlock;
    const std::size_t end = std::min(count, begin + kProductBlock);
    Eigen::MatrixXd acc = seq.matrices[begin].p;
    for (std::size_t k = begin + 1; k < end; ++k) acc = acc * seq.matrices[k].p;
    level[b] = std::move(acc);
  });
  while (level.size() > 1) {
    std::vector<Eigen::MatrixXd> next((level.size() + 1) / 2);
    detail::parallel_for(level.size() / 2, threads, [&](std::size_t i) {
      next[i] = level[2 * i] * level[2 * i + 1];
    });
    if (level.size() % 2 == 1) next.back() = std::move(level.back());
    level = std::move(next);
  }

  TransitionMatrix out;
  out.p = std::move(level.front());
  out.kind = all_embedded ? TransitionKind::embedded : TransitionKind::exponential;
  out.time = total_time;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sum = out.p.row(i).sum();
    if (std::abs(sum - 1.0) > 1e-9)
      throw NumericalError("matrix product row " + std::to_string(i) + " sums to " +
                           std::to_string(sum));
  }
  return out;
}

Eigen::MatrixXd reciprocal_distances(const TransitionMatrix& p_total,
                                     const std::vector<std::string>& taxa) {
  const auto n = static_cast<Eigen::Index>(taxa.size());
  if (p_total.p.rows() != n || p_total.p.cols() != n)
    throw DataError("transition matrix does not match the taxa list");
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double p = p_total.p(i, j);
      if (!(p > 0.0))
        throw DataError("infinite distance between \"" + taxa[static_cast<std::size_t>(i)] +
                        "\" and \"" + taxa[static_cast<std::size_t>(j)] +
                        "\": transition probability is zero");
      raw(i, j) = 1.0 / p;
    }
  }
  return raw;
}

DistanceMatrix distance_matrix(const TransitionMatrix& p_total, const std::vector<std::string>& taxa) {
  if (taxa.size() < 3)
    throw DataError("distance matrix needs at least 3 taxa, got " + std::to_string(taxa.size()));
  const Eigen::MatrixXd raw = reciprocal_distances(p_total, taxa);
  const auto n = raw.rows();
  DistanceMatrix out{taxa, Eigen::MatrixXd::Zero(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (raw(i, j) + raw(j, i)) / 2.0;
      if (!std::isfinite(d))
        throw DataError("distance between \"" + taxa[static_cast<std::size_t>(i)] + "\" and \"" +
                        taxa[static_cast<std::size_t>(j)] + "\" is not finite");
      out.d(i, j) = d;
      out.d(j, i) = d;
    }
  }
  return out;
}

double product_flatness(const TransitionMatrix& p) {
  double spread = 0.0;
  for (Eigen::Index j = 0; j < p.p.cols(); ++j)
    spread = std::max(spread, p.p.col(j).maxCoeff() - p.p.col(j).minCoeff());
  return spread;
}

SiteMatrixSequence mix_sources(const std::vector<SiteMatrixSequence>& sources) {
  if (sources.empty()) throw DataError("no sources to mix");
  SiteMatrixSequence out;
  out.taxa = sources.front().taxa;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const auto& taxa = sources[s].taxa;
    if (taxa.size() != out.taxa.size())
      throw DataError("source " + std::to_string(s + 1) + " has " + std::to_string(taxa.size()) +
                      " taxa, expected " + std::to_string(out.taxa.size()));
    for (std::size_t i = 0; i < taxa.size(); ++i) {
      if (taxa[i] != out.taxa[i])
        throw DataError("taxa order mismatch in source " + std::to_string(s + 1) +
                        " at position " + std::to_string(i) + ": \"" + taxa[i] + "\" vs \"" +
                        out.taxa[i] + "\"");
    }
    out.matrices.insert(out.matrices.end(), sources[s].matrices.begin(), sources[s].matrices.end());
  }
  return out;
}

std::string write_phylip_distances(const std::vector<std::string>& taxa, const Eigen::MatrixXd& d) {
  const auto n = static_cast<Eigen::Index>(taxa.size());
  if (d.rows() != n || d.cols() != n) throw DataError("distance matrix does not match its taxa list");
  std::string out = std::to_string(n) + "\n";
  char buf[40];
  for (Eigen::Index i = 0; i < n; ++i) {
    out += taxa[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof buf, " %.10g", d(i, j));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

DistanceMatrix parse_phylip_distances(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::size_t n = 0;
  if (!(in >> n) || n == 0) throw DataError("distance matrix must start with the taxon count");
  DistanceMatrix out{{}, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))};
  for (std::size_t i = 0; i < n; ++i) {
    std::string label;
    if (!(in >> label)) throw DataError("distance matrix declares " + std::to_string(n) +
                                        " taxa, found " + std::to_string(i));
    out.taxa.push_back(label);
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      if (!(in >> v))
        throw DataError("distance row for \"" + label + "\" has fewer than " + std::to_string(n) +
                        " values");
      out.d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  std::string extra;
  if (in >> extra) throw DataError("unexpected trailing content in distance matrix: \"" + extra + "\"");
  for (Eigen::Index i = 0; i < out.d.rows(); ++i) {
    if (out.d(i, i) != 0.0) throw DataError("distance matrix diagonal must be zero");
    for (Eigen::Index j = 0; j < i; ++j)
      if (std::abs(out.d(i, j) - out.d(j, i)) > 1e-9 * std::max(1.0, std::abs(out.d(i, j))))
        throw DataError("distance matrix is not symmetric at (" + out.taxa[static_cast<std::size_t>(i)] +
                        ", " + out.taxa[static_cast<std::size_t>(j)] + ")");
  }
  return out;
}

}  // namespace nbp
