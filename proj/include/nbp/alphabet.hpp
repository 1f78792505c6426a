#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nbp {

using Symbol = std::uint32_t;

enum class GapMode {
  as_character,  // the gap token is an ordinary letter of the alphabet
  skip_site,     // columns holding a gap are dropped from the analysis
};

enum class AlphabetKind { dna, protein, codon, morph, custom };

// A closed, ordered set of character tokens. Symbol indices are positions in
// symbols(). In skip_site mode the gap is not a member of the alphabet and is
// encoded with the sentinel gap_index() == size().
//
// Immutable after construction.
class Alphabet {
 public:
  Alphabet(AlphabetKind kind, std::string name, std::vector<std::string> symbols,
           GapMode gap_mode, std::string gap_token = "-");

  AlphabetKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const std::vector<std::string>& symbols() const { return symbols_; }
  std::size_t size() const { return symbols_.size(); }
  GapMode gap_mode() const { return gap_mode_; }
  const std::string& gap_token() const { return gap_token_; }
  Symbol gap_index() const { return gap_index_; }
  bool is_gap(Symbol s) const { return s == gap_index_; }

  // Number of non-gap letters.
  std::size_t letter_count() const;

  // True when every token is a single character, so sequences can be read
  // character by character instead of as whitespace-separated tokens.
  bool single_char_tokens() const { return single_char_; }

  // Ambiguity codes (N, R, Y, X, ...) are rejected unless this is set, in which
  // case they encode to the gap.
  bool ambiguity_as_gap() const { return ambiguity_as_gap_; }
  Alphabet with_ambiguity_as_gap(bool on) const;

  const std::string& token(Symbol s) const;
  std::optional<Symbol> find(std::string_view token) const;

 private:
  AlphabetKind kind_;
  std::string name_;
  std::vector<std::string> symbols_;
  GapMode gap_mode_;
  std::string gap_token_;
  Symbol gap_index_ = 0;
  bool single_char_ = true;
  bool ambiguity_as_gap_ = false;
  std::unordered_map<std::string, Symbol> index_;
};

AlphabetKind parse_alphabet_kind(std::string_view name);

// Builds the canonical alphabet for `name` (dna, protein, codon, morph,
// custom). morph and custom take their tokens from `custom_symbols`; for morph
// those are the positive integers observed in the data.
Alphabet resolve_alphabet(std::string_view name,
                          const std::optional<std::vector<std::string>>& custom_symbols,
                          GapMode gap_mode);

// Maps an input token to its symbol index. dna and protein fold case, and dna
// reads U as T. Throws DataError for tokens outside the alphabet.
Symbol encode_symbol(const Alphabet& alphabet, std::string_view token);

// Reads a custom alphabet file: one token per line, blank lines ignored.
std::vector<std::string> read_symbol_file(const std::string& path);

}  // namespace nbp
