#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nbp/alphabet.hpp"

namespace nbp {

// One aligned position across all taxa.
struct SiteColumn {
  std::size_t site_index = 0;
  std::vector<Symbol> values;
  std::shared_ptr<const Alphabet> alphabet;
  // Set when the alphabet is in skip_site mode and the column holds a gap.
  bool skip = false;

  std::size_t size() const { return values.size(); }
};

// A taxa-labelled character matrix over a single alphabet. Rows are taxa,
// columns are sites. Immutable once built.
class Alignment {
 public:
  Alignment(std::vector<std::string> taxa, std::shared_ptr<const Alphabet> alphabet,
            std::vector<std::vector<Symbol>> rows);

  std::size_t taxon_count() const { return taxa_.size(); }
  std::size_t site_count() const { return sites_; }
  const std::vector<std::string>& taxa() const { return taxa_; }
  const Alphabet& alphabet() const { return *alphabet_; }
  const std::shared_ptr<const Alphabet>& alphabet_ptr() const { return alphabet_; }

  Symbol at(std::size_t taxon, std::size_t site) const { return cells_[taxon * sites_ + site]; }
  std::vector<Symbol> row(std::size_t taxon) const;

  // Same alignment with taxa sorted by label (byte-wise).
  Alignment sorted_by_label() const;

 private:
  std::vector<std::string> taxa_;
  std::shared_ptr<const Alphabet> alphabet_;
  std::size_t sites_ = 0;
  std::vector<Symbol> cells_;
};

Alignment parse_fasta(std::string_view text, const Alphabet& alphabet);
Alignment parse_phylip(std::string_view text, const Alphabet& alphabet);

// Tab-separated trait table: a header row ("taxon" then trait names) followed
// by one row per taxon. Without an explicit alphabet the morph alphabet is
// built from the observed states.
Alignment parse_trait_table(std::string_view text, GapMode gap_mode,
                            const std::optional<Alphabet>& alphabet = std::nullopt);

// Chooses the reader from the file extension (.fa/.fasta/.fas, .phy/.phylip,
// .tsv), falling back to sniffing for a leading '>'. Trait tables ignore
// `alphabet` unless it is a morph alphabet.
Alignment read_alignment_file(const std::string& path, const Alphabet& alphabet);

// Morphological data in any of the three formats, with the alphabet taken from
// the observed whitespace-separated integer states.
Alignment read_morph_alignment_file(const std::string& path, GapMode gap_mode);

SiteColumn column(const Alignment& alignment, std::size_t site);

// Groups nucleotide triplets into codons. A triplet that is entirely gap
// becomes the codon gap; a partially gapped triplet is an error.
Alignment tokenize_codons(const Alignment& dna);

std::string write_fasta(const Alignment& alignment);
std::string write_phylip(const Alignment& alignment);
std::string write_trait_table(const Alignment& alignment);

}  // namespace nbp
