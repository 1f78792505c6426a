#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "nbp/site_ctmc.hpp"

namespace nbp {

// How a site's rate matrix becomes a transition matrix.
struct TimeMode {
  enum class Kind { embedded, entropy_time, fixed_time };
  Kind kind = Kind::embedded;
  double time = 0.0;  // fixed_time only
  EntropyBase entropy_base = EntropyBase::nats;

  static TimeMode embedded() { return {}; }
  static TimeMode entropy(EntropyBase base = EntropyBase::nats) {
    return {Kind::entropy_time, 0.0, base};
  }
  static TimeMode fixed(double t) { return {Kind::fixed_time, t, EntropyBase::nats}; }
};

// Parses "embedded", "entropy" or "fixed:<t>".
TimeMode parse_time_mode(std::string_view text);

struct SiteMatrixSequence {
  std::vector<std::string> taxa;
  std::vector<TransitionMatrix> matrices;
};

struct DistanceMatrix {
  std::vector<std::string> taxa;
  Eigen::MatrixXd d;

  std::size_t size() const { return taxa.size(); }
};

TransitionMatrix site_transition(const SiteColumn& col, const TimeMode& mode);

// Builds one transition matrix per included site, skipping columns flagged
// skip. Sites are processed on up to `threads` workers; the output order is
// always the site order.
struct SiteMatrices {
  SiteMatrixSequence sequence;
  std::size_t skipped = 0;
};
SiteMatrices alignment_site_matrices(const Alignment& alignment, const TimeMode& mode,
                                     unsigned threads = 1);

// P_1 P_2 ... P_m in sequence order. The reduction tree is fixed (blocks of
// kProductBlock folded left, then combined pairwise), so the result does not
// depend on `threads`.
inline constexpr std::size_t kProductBlock = 64;
TransitionMatrix chain_product(const SiteMatrixSequence& seq, unsigned threads = 1);

// Element-wise reciprocal of the off-diagonal entries, before symmetrization.
Eigen::MatrixXd reciprocal_distances(const TransitionMatrix& p_total,
                                     const std::vector<std::string>& taxa);

// d_ij = (1/p_ij + 1/p_ji) / 2, zero diagonal. Requires at least 3 taxa.
DistanceMatrix distance_matrix(const TransitionMatrix& p_total, const std::vector<std::string>& taxa);

// Largest spread of a column across rows. Near zero means the product has
// collapsed towards rank one and the distances carry little signal.
double product_flatness(const TransitionMatrix& p);
inline constexpr double kFlatnessWarning = 1e-6;

SiteMatrixSequence mix_sources(const std::vector<SiteMatrixSequence>& sources);

// Square PHYLIP distance format: taxon count, then one row per taxon with the
// label followed by n distances at 10 significant digits.
std::string write_phylip_distances(const std::vector<std::string>& taxa, const Eigen::MatrixXd& d);
inline std::string write_phylip_distances(const DistanceMatrix& d) {
  return write_phylip_distances(d.taxa, d.d);
}
DistanceMatrix parse_phylip_distances(std::string_view text);

}  // namespace nbp
