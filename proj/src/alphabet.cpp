#include "nbp/alphabet.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>

#include "nbp/error.hpp"

namespace nbp {
namespace {

constexpr std::string_view kDnaLetters = "ACGT";
constexpr std::string_view kProteinLetters = "ACDEFGHIKLMNPQRSTVWY";
constexpr std::string_view kDnaAmbiguity = "NRYKMSWBDHV?";
constexpr std::string_view kProteinAmbiguity = "BZJXUO?*";

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

bool is_positive_integer(std::string_view s) {
  if (s.empty() || s.front() == '0') return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::vector<std::string> letters_of(std::string_view chars) {
  std::vector<std::string> out;
  for (char c : chars) out.emplace_back(1, c);
  return out;
}

std::vector<std::string> all_codons() {
  std::vector<std::string> out;
  out.reserve(64);
  for (char a : kDnaLetters)
    for (char b : kDnaLetters)
      for (char c : kDnaLetters) out.push_back({a, b, c});
  return out;
}

}  // namespace

Alphabet::Alphabet(AlphabetKind kind, std::string name, std::vector<std::string> symbols,
                   GapMode gap_mode, std::string gap_token)
    : kind_(kind),
      name_(std::move(name)),
      symbols_(std::move(symbols)),
      gap_mode_(gap_mode),
      gap_token_(std::move(gap_token)) {
  if (gap_token_.empty()) throw DataError("alphabet " + name_ + ": empty gap token");
  for (const auto& s : symbols_) {
    if (s.empty()) throw DataError("alphabet " + name_ + ": empty symbol");
    if (s == gap_token_)
      throw DataError("alphabet " + name_ + ": gap token '" + gap_token_ +
                      "' must not be listed among the letters");
  }
  if (gap_mode_ == GapMode::as_character) symbols_.push_back(gap_token_);
  if (symbols_.size() < 2)
    throw DataError("alphabet " + name_ + " has fewer than 2 symbols");
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (!index_.emplace(symbols_[i], static_cast<Symbol>(i)).second)
      throw DataError("alphabet " + name_ + ": duplicate symbol '" + symbols_[i] + "'");
    if (symbols_[i].size() != 1) single_char_ = false;
  }
  gap_index_ = gap_mode_ == GapMode::as_character ? static_cast<Symbol>(symbols_.size() - 1)
                                                   : static_cast<Symbol>(symbols_.size());
}

std::size_t Alphabet::letter_count() const {
  return gap_mode_ == GapMode::as_character ? symbols_.size() - 1 : symbols_.size();
}

Alphabet Alphabet::with_ambiguity_as_gap(bool on) const {
  Alphabet copy = *this;
  copy.ambiguity_as_gap_ = on;
  return copy;
}

const std::string& Alphabet::token(Symbol s) const {
  if (s == gap_index_) return gap_token_;
  return symbols_.at(s);
}

std::optional<Symbol> Alphabet::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

AlphabetKind parse_alphabet_kind(std::string_view name) {
  if (name == "dna") return AlphabetKind::dna;
  if (name == "protein") return AlphabetKind::protein;
  if (name == "codon") return AlphabetKind::codon;
  if (name == "morph") return AlphabetKind::morph;
  if (name == "custom") return AlphabetKind::custom;
  throw DataError("unknown alphabet '" + std::string(name) +
                  "' (expected dna, protein, codon, morph or custom)");
}

Alphabet resolve_alphabet(std::string_view name,
                          const std::optional<std::vector<std::string>>& custom_symbols,
                          GapMode gap_mode) {
  switch (parse_alphabet_kind(name)) {
    case AlphabetKind::dna:
      return Alphabet(AlphabetKind::dna, "dna", letters_of(kDnaLetters), gap_mode);
    case AlphabetKind::protein:
      return Alphabet(AlphabetKind::protein, "protein", letters_of(kProteinLetters), gap_mode);
    case AlphabetKind::codon:
      return Alphabet(AlphabetKind::codon, "codon", all_codons(), gap_mode, "---");
    case AlphabetKind::morph: {
      if (!custom_symbols) throw DataError("morph alphabet requires the observed state tokens");
      std::set<long long> states;
      for (const auto& tok : *custom_symbols) {
        if (!is_positive_integer(tok))
          throw DataError("morph state '" + tok + "' is not a positive integer");
        long long v = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{}) throw DataError("morph state '" + tok + "' is out of range");
        states.insert(v);
      }
      if (states.size() < 2) throw DataError("morph alphabet has fewer than 2 observed states");
      std::vector<std::string> symbols;
      for (auto v : states) symbols.push_back(std::to_string(v));
      return Alphabet(AlphabetKind::morph, "morph", std::move(symbols), gap_mode);
    }
    case AlphabetKind::custom: {
      if (!custom_symbols) throw DataError("custom alphabet requires a symbol list");
      if (custom_symbols->size() < 2) throw DataError("custom alphabet has fewer than 2 symbols");
      return Alphabet(AlphabetKind::custom, "custom", *custom_symbols, gap_mode);
    }
  }
  throw DataError("unreachable alphabet kind");
}

Symbol encode_symbol(const Alphabet& alphabet, std::string_view token) {
  std::string key(token);
  const bool folds = alphabet.kind() == AlphabetKind::dna ||
                     alphabet.kind() == AlphabetKind::protein ||
                     alphabet.kind() == AlphabetKind::codon;
  if (folds) key = upper(key);
  if (alphabet.kind() == AlphabetKind::dna || alphabet.kind() == AlphabetKind::codon)
    std::replace(key.begin(), key.end(), 'U', 'T');

  if (key == alphabet.gap_token()) return alphabet.gap_index();
  if (auto idx = alphabet.find(key)) return *idx;

  if (alphabet.ambiguity_as_gap() && key.size() == 1) {
    const auto& codes =
        alphabet.kind() == AlphabetKind::protein ? kProteinAmbiguity : kDnaAmbiguity;
    if ((alphabet.kind() == AlphabetKind::dna || alphabet.kind() == AlphabetKind::protein) &&
        codes.find(key.front()) != std::string_view::npos)
      return alphabet.gap_index();
  }
  throw DataError("invalid character '" + std::string(token) + "' for alphabet " +
                  alphabet.name());
}

std::vector<std::string> read_symbol_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open alphabet file " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace nbp
