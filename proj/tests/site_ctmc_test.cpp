#include "nbp/site_ctmc.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "nbp/error.hpp"
#include "oracles.hpp"

namespace nbp {
namespace {

using testing::make_column;

const Alphabet kXyz = resolve_alphabet("custom", std::vector<std::string>{"x", "y", "z"},
                                       GapMode::skip_site);
const Alphabet kDna = resolve_alphabet("dna", std::nullopt, GapMode::as_character);

SiteColumn worked_example() { return make_column(kXyz, {"x", "x", "y", "z"}); }

TEST(PathMatrix, BottomRowOfTheWorkedExample) {
  const auto v = path_matrix(worked_example());
  const auto col = worked_example();
  auto pair = [&](const char* a, const char* b) { return SymbolPair{*kXyz.find(a), *kXyz.find(b)}; };
  EXPECT_EQ(v.at(3, 0), pair("z", "x"));
  EXPECT_EQ(v.at(3, 1), pair("z", "x"));
  EXPECT_EQ(v.at(3, 2), pair("z", "y"));
  EXPECT_EQ(v.at(3, 3), pair("z", "z"));
}

TEST(PathMatrix, TransposeRelation) {
  const auto v = path_matrix(make_column(kDna, {"A", "C", "G"}));
  EXPECT_EQ(v.at(0, 2), (SymbolPair{0, 2}));
  EXPECT_EQ(v.at(2, 0), (SymbolPair{2, 0}));
  const auto c = path_matrix(make_column(kDna, {"A", "A"}));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(c.at(i, j), (SymbolPair{0, 0}));
}

TEST(RateMatrix, WorkedExampleEntries) {
  const auto q = rate_matrix(worked_example());
  EXPECT_EQ(q.denominator(), 12);
  EXPECT_DOUBLE_EQ(q(0, 1), 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(q(0, 2), 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(q(2, 3), 1.0 / 12.0);
  EXPECT_DOUBLE_EQ(q(2, 2), -5.0 / 12.0);
  EXPECT_DOUBLE_EQ(q(0, 0), -0.5);
}

TEST(RateMatrix, ConstantAndAllDistinctColumns) {
  const auto c = rate_matrix(make_column(kDna, {"A", "A", "A", "A"}));
  const auto d = rate_matrix(make_column(kDna, {"A", "C", "G", "T"}));
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_DOUBLE_EQ(c(i, j), i == j ? -3.0 : 1.0);
      EXPECT_DOUBLE_EQ(d(i, j), i == j ? -0.25 : 1.0 / 12.0);
    }
  }
}

TEST(RateMatrix, SkippedColumnRejected) {
  auto col = worked_example();
  col.skip = true;
  EXPECT_THROW(rate_matrix(col), DataError);
}

// Property: exact agreement with ordered pair counting over the path matrix,
// zero row sums, exact symmetry, positive off-diagonals.
TEST(RateMatrix, MatchesPairCountingOracleOnRandomColumns) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 3 + rng() % 28;
    const auto col = testing::random_column(rng, n);
    const auto q = rate_matrix(col);
    ASSERT_EQ(q.denominator(), static_cast<std::int64_t>(n * (n - 1)));
    ASSERT_EQ(q.numerators(), testing::pair_count_numerators(col.values));
    for (Eigen::Index i = 0; i < q.q().rows(); ++i) {
      EXPECT_LE(std::abs(q.q().row(i).sum()), 1e-12);
      for (Eigen::Index j = 0; j < q.q().cols(); ++j) {
        EXPECT_EQ(q.q()(i, j), q.q()(j, i));
        if (i != j) EXPECT_GT(q.q()(i, j), 0.0);
      }
    }
  }
}

TEST(EmbeddedMatrix, WorkedExampleRows) {
  const auto p = embedded_matrix(rate_matrix(worked_example()));
  EXPECT_EQ(p.kind, TransitionKind::embedded);
  const Eigen::RowVector4d row0(0, 1.0 / 3, 1.0 / 3, 1.0 / 3), row2(0.4, 0.4, 0, 0.2);
  EXPECT_LE((p.p.row(0) - row0).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((p.p.row(2) - row2).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(EmbeddedMatrix, ConstantAndDistinctColumnsCoincide) {
  const auto c = embedded_matrix(rate_matrix(make_column(kDna, {"A", "A", "A", "A"})));
  const auto d = embedded_matrix(rate_matrix(make_column(kDna, {"A", "C", "G", "T"})));
  EXPECT_EQ(c.p, d.p);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(c.p(i, j), i == j ? 0.0 : 1.0 / 3.0);
}

TEST(EmbeddedMatrix, ZeroExitRateFailsLoudly) {
  RateMatrix::Numerators num = RateMatrix::Numerators::Zero(3, 3);
  EXPECT_THROW(embedded_matrix(RateMatrix(num, 6)), NumericalError);
}

TEST(Entropy, KnownColumns) {
  EXPECT_EQ(site_entropy(make_column(kDna, {"A", "A", "A", "A"})), 0.0);
  EXPECT_NEAR(site_entropy(worked_example()), 1.5 * std::log(2.0), 1e-15);
  EXPECT_NEAR(site_entropy(worked_example()), 1.039721, 1e-6);
  EXPECT_NEAR(site_entropy(make_column(kDna, {"A", "C", "G", "T"})), std::log(4.0), 1e-15);
  EXPECT_NEAR(site_entropy(make_column(kDna, {"A", "C", "G", "T"}), EntropyBase::bits), 2.0, 1e-15);
}

TEST(MatrixExponential, ZeroTimeIsExactIdentity) {
  const auto p = matrix_exponential(rate_matrix(worked_example()), 0.0);
  EXPECT_EQ(p.p, Eigen::MatrixXd::Identity(4, 4));
  EXPECT_THROW(matrix_exponential(rate_matrix(worked_example()), -1.0), DataError);
}

TEST(MatrixExponential, LongTimeLimitIsUniform) {
  const auto p = matrix_exponential(rate_matrix(worked_example()), 1e6);
  EXPECT_LE((p.p.array() - 0.25).abs().maxCoeff(), 1e-6);
}

TEST(MatrixExponential, EntropyTimeAgreesWithTaylorOracle) {
  const auto q = rate_matrix(worked_example());
  const double t = site_entropy(worked_example());
  const auto p = matrix_exponential(q, t);
  EXPECT_EQ(p.kind, TransitionKind::exponential);
  EXPECT_LE((p.p.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10);
  EXPECT_GT(p.p.minCoeff(), 0.0);
  EXPECT_LT(p.p.maxCoeff(), 1.0);
  EXPECT_LE((p.p - testing::taylor_expm(q.q() * t)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(MatrixExponential, SemigroupProperty) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> time(0.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto q = rate_matrix(testing::random_column(rng, 3 + rng() % 15));
    const double s = time(rng), t = time(rng);
    const Eigen::MatrixXd lhs = matrix_exponential(q, s).p * matrix_exponential(q, t).p;
    EXPECT_LE((lhs - matrix_exponential(q, s + t).p).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Stationary, WorkedExample) {
  const auto q = rate_matrix(worked_example());
  const auto pi = stationary_distribution(q, embedded_matrix(q));
  const Eigen::Vector4d expected(3.0 / 11, 3.0 / 11, 5.0 / 22, 5.0 / 22);
  EXPECT_LE((pi.pi - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((pi.pi - testing::power_iteration(embedded_matrix(q).p)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Stationary, SymmetricColumnsAreUniform) {
  for (auto tokens : {std::vector<std::string>{"A", "A", "A", "A"}, {"A", "C", "G", "T"}}) {
    const auto q = rate_matrix(make_column(kDna, tokens));
    const auto pi = stationary_distribution(q, embedded_matrix(q));
    EXPECT_LE((pi.pi.array() - 0.25).abs().maxCoeff(), 1e-15);
  }
}

TEST(Stationary, WrongMatrixIsReported) {
  const auto q = rate_matrix(worked_example());
  const auto other = embedded_matrix(rate_matrix(make_column(kXyz, {"x", "y", "y", "y"})));
  EXPECT_THROW(stationary_distribution(q, other), NumericalError);
}

TEST(DetailedBalance, WorkedExampleIsReversible) {
  const auto q = rate_matrix(worked_example());
  const auto p = embedded_matrix(q);
  const auto pi = stationary_distribution(q, p);
  EXPECT_NEAR(pi.pi(0) * p.p(0, 2), 1.0 / 11.0, 1e-16);
  EXPECT_NEAR(pi.pi(2) * p.p(2, 0), 1.0 / 11.0, 1e-16);
  EXPECT_LE(detailed_balance_violation(p, pi), 1e-15);
}

TEST(DetailedBalance, ExponentialWithUniformPi) {
  const auto q = rate_matrix(worked_example());
  StationaryDistribution uniform{Eigen::VectorXd::Constant(4, 0.25)};
  EXPECT_LE(detailed_balance_violation(matrix_exponential(q, 0.7), uniform), 1e-12);
}

TEST(DetailedBalance, PerturbationIsDetected) {
  const auto q = rate_matrix(worked_example());
  auto p = embedded_matrix(q);
  const auto pi = stationary_distribution(q, p);
  p.p(0, 1) += 0.1;
  p.p.row(0) /= p.p.row(0).sum();
  EXPECT_GT(detailed_balance_violation(p, pi), 0.01);
}

// Property: permuting the species permutes Q, P and pi identically.
TEST(SiteCtmc, PermutationEquivariance) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng() % 20;
    const auto col = testing::random_column(rng, n);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    SiteColumn permuted = col;
    for (std::size_t i = 0; i < n; ++i) permuted.values[i] = col.values[perm[i]];

    const auto q = rate_matrix(col), qp = rate_matrix(permuted);
    const auto p = embedded_matrix(q), pp = embedded_matrix(qp);
    const auto pi = stationary_distribution(q, p), pip = stationary_distribution(qp, pp);
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = static_cast<Eigen::Index>(i), pa = static_cast<Eigen::Index>(perm[i]);
      ASSERT_EQ(pip.pi(a), pi.pi(pa));
      for (std::size_t j = 0; j < n; ++j) {
        const auto b = static_cast<Eigen::Index>(j), pb = static_cast<Eigen::Index>(perm[j]);
        ASSERT_EQ(qp.q()(a, b), q.q()(pa, pb));
        ASSERT_EQ(pp.p(a, b), p.p(pa, pb));
      }
    }
  }
}

}  // namespace
}  // namespace nbp
