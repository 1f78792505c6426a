#include "nbp/alignment.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "nbp/error.hpp"

namespace nbp {
namespace {

const Alphabet kDna = resolve_alphabet("dna", std::nullopt, GapMode::as_character);
const Alphabet kXyz = resolve_alphabet("custom", std::vector<std::string>{"x", "y", "z"},
                                       GapMode::skip_site);

std::vector<std::string> tokens(const SiteColumn& col) {
  std::vector<std::string> out;
  for (Symbol s : col.values) out.push_back(col.alphabet->token(s));
  return out;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

TEST(Fasta, ReadsRecordsInFileOrder) {
  const auto aln = parse_fasta(">a\nAC\n>b\nAG\n>c\nAT", kDna);
  EXPECT_EQ(aln.taxa(), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(aln.site_count(), 2u);
  EXPECT_EQ(tokens(column(aln, 0)), (std::vector<std::string>{"A", "A", "A"}));
  EXPECT_EQ(tokens(column(aln, 1)), (std::vector<std::string>{"C", "G", "T"}));
  EXPECT_THROW(column(aln, 2), DataError);
}

TEST(Fasta, JoinsWrappedLines) {
  const auto aln = parse_fasta(">a\nAC\nGT\n\n>b\r\nACG\r\nT\r\n>c\nAAAA\n", kDna);
  EXPECT_EQ(aln.site_count(), 4u);
  EXPECT_EQ(kDna.token(aln.at(1, 3)), "T");
}

TEST(Fasta, UnequalLengthsNameTheTaxon) {
  const auto msg = error_of([] { parse_fasta(">a\nAC\n>b\nA", kDna); });
  EXPECT_NE(msg.find("\"b\""), std::string::npos) << msg;
  EXPECT_NE(msg.find("1 sites, expected 2"), std::string::npos) << msg;
}

TEST(Fasta, DuplicateTaxonRejected) {
  const auto msg = error_of([] { parse_fasta(">a\nACG\n>a\nACG\n>c\nACG", kDna); });
  EXPECT_NE(msg.find("duplicate taxon \"a\""), std::string::npos) << msg;
}

TEST(Fasta, EmptyInputRejected) { EXPECT_THROW(parse_fasta("\n\n", kDna), DataError); }

TEST(Fasta, InvalidCharacterNamesTaxonAndSite) {
  const auto msg = error_of([] { parse_fasta(">a\nACG\n>b\nAXG\n>c\nACG", kDna); });
  EXPECT_NE(msg.find("taxon \"b\", site 2"), std::string::npos) << msg;
}

TEST(Fasta, RnaReadAsDna) {
  const auto aln = parse_fasta(">a\nACGU\n>b\nacgt\n>c\nAAAA", kDna);
  EXPECT_EQ(aln.row(0), aln.row(1));
}

TEST(Phylip, ReadsRelaxedSequentialLayout) {
  const auto aln = parse_phylip("3 1\na x\nb x\nc y", kXyz);
  EXPECT_EQ(tokens(column(aln, 0)), (std::vector<std::string>{"x", "x", "y"}));
}

TEST(Phylip, FourSpeciesWorkedExample) {
  const auto aln = parse_phylip("4 1\na x\nb x\nc y\nd z", kXyz);
  EXPECT_EQ(tokens(column(aln, 0)), (std::vector<std::string>{"x", "x", "y", "z"}));
}

TEST(Phylip, HeaderMismatch) {
  const auto msg = error_of([] { parse_phylip("3 2\na xy\nb xy", kXyz); });
  EXPECT_NE(msg.find("declared 3 taxa, found 2"), std::string::npos) << msg;
  EXPECT_THROW(parse_phylip("2 3\na xy\nb xy", kXyz), DataError);
  EXPECT_THROW(parse_phylip("two 3\na xy\nb xy", kXyz), DataError);
}

TEST(Phylip, LongLabelsAndTokenAlphabets) {
  const auto morph = resolve_alphabet("morph", std::vector<std::string>{"1", "2", "12"},
                                      GapMode::as_character);
  const auto aln = parse_phylip("3 2\na_really_long_label 1 12\nb 2 -\nc 1 1\n", morph);
  EXPECT_EQ(aln.taxa()[0], "a_really_long_label");
  EXPECT_EQ(morph.token(aln.at(0, 1)), "12");
  EXPECT_TRUE(morph.is_gap(aln.at(1, 1)));
}

TEST(Codons, TokenizeTriplets) {
  const auto dna = parse_fasta(">a\nAAA\n>b\nAAC\n>c\nAAG", kDna);
  const auto codon = tokenize_codons(dna);
  ASSERT_EQ(codon.site_count(), 1u);
  EXPECT_EQ(tokens(column(codon, 0)), (std::vector<std::string>{"AAA", "AAC", "AAG"}));
}

TEST(Codons, LengthMustDivideByThree) {
  const auto dna = parse_fasta(">a\nAAAA\n>b\nAACA\n>c\nAAGA", kDna);
  EXPECT_THROW(tokenize_codons(dna), DataError);
}

TEST(Codons, GapRules) {
  EXPECT_THROW(tokenize_codons(parse_fasta(">a\nA-A\n>b\nAAC\n>c\nAAG", kDna)), DataError);
  const auto codon = tokenize_codons(parse_fasta(">a\n---CCC\n>b\nAACCCC\n>c\nAAGCCC", kDna));
  EXPECT_TRUE(codon.alphabet().is_gap(codon.at(0, 0)));
  EXPECT_EQ(codon.alphabet().token(codon.at(0, 0)), "---");
}

TEST(Codons, ParsedDirectlyWithCodonAlphabet) {
  const auto codon = resolve_alphabet("codon", std::nullopt, GapMode::as_character);
  const auto aln = parse_fasta(">a\nAAATTT\n>b\nAACTTT\n>c\nAAG---", codon);
  EXPECT_EQ(aln.site_count(), 2u);
  EXPECT_EQ(write_fasta(aln), ">a\nAAATTT\n>b\nAACTTT\n>c\nAAG---\n");
}

TEST(SkipMode, ColumnsWithGapsAreFlagged) {
  const auto skip = resolve_alphabet("dna", std::nullopt, GapMode::skip_site);
  const auto aln = parse_fasta(">a\nA-\n>b\nAC\n>c\nAC", skip);
  EXPECT_FALSE(column(aln, 0).skip);
  EXPECT_TRUE(column(aln, 1).skip);
  const auto chr = parse_fasta(">a\nA-\n>b\nAC\n>c\nAC", kDna);
  EXPECT_FALSE(column(chr, 1).skip);
}

TEST(TraitTable, BuildsAlphabetFromObservedStates) {
  const auto aln = parse_trait_table("taxon\tt1\tt2\na\t1\t3\nb\t2\t-\nc\t3\t1\n", GapMode::as_character);
  EXPECT_EQ(aln.alphabet().symbols(), (std::vector<std::string>{"1", "2", "3", "-"}));
  EXPECT_EQ(write_trait_table(aln), "taxon\ttrait_1\ttrait_2\na\t1\t3\nb\t2\t-\nc\t3\t1\n");
  EXPECT_THROW(parse_trait_table("taxon\tt1\na\t1\t2\n", GapMode::as_character), DataError);
}

TEST(Alignment, SortedByLabelKeepsRowsWithTheirTaxa) {
  const auto aln = parse_fasta(">c\nA\n>a\nC\n>b\nG", kDna).sorted_by_label();
  EXPECT_EQ(aln.taxa(), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(kDna.token(aln.at(0, 0)), "C");
}

// Property: writing then parsing reproduces taxa, order and cells, and
// column(i).values[j] is the j-th taxon's i-th character.
TEST(Alignment, RoundTripThroughBothFormats) {
  std::mt19937_64 rng(11);
  const std::vector<Alphabet> alphabets = {
      kDna, resolve_alphabet("protein", std::nullopt, GapMode::as_character),
      resolve_alphabet("codon", std::nullopt, GapMode::as_character),
      resolve_alphabet("morph", std::vector<std::string>{"1", "2", "3", "17"}, GapMode::as_character)};
  for (int trial = 0; trial < 200; ++trial) {
    const auto& alpha = alphabets[static_cast<std::size_t>(trial) % alphabets.size()];
    const std::size_t n = 3 + rng() % 6, m = 1 + rng() % 12;
    std::vector<std::string> taxa;
    std::vector<std::vector<Symbol>> rows(n);
    for (std::size_t t = 0; t < n; ++t) {
      taxa.push_back("taxon" + std::to_string(rng() % 1000) + "_" + std::to_string(t));
      for (std::size_t s = 0; s < m; ++s) rows[t].push_back(static_cast<Symbol>(rng() % alpha.size()));
    }
    const Alignment original(taxa, std::make_shared<const Alphabet>(alpha), rows);
    for (int fmt = 0; fmt < 2; ++fmt) {
      const auto text = fmt == 0 ? write_fasta(original) : write_phylip(original);
      const auto back = fmt == 0 ? parse_fasta(text, alpha) : parse_phylip(text, alpha);
      ASSERT_EQ(back.taxa(), original.taxa()) << text;
      ASSERT_EQ(back.site_count(), m);
      for (std::size_t t = 0; t < n; ++t) ASSERT_EQ(back.row(t), original.row(t)) << text;
      for (std::size_t s = 0; s < m; ++s)
        for (std::size_t t = 0; t < n; ++t) ASSERT_EQ(column(back, s).values[t], rows[t][s]);
    }
  }
}

}  // namespace
}  // namespace nbp
