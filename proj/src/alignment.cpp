#include "nbp/alignment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "nbp/error.hpp"

namespace nbp {
namespace {

constexpr std::string_view kSpace = " \t\r\n";

std::string_view trim(std::string_view s) {
  auto b = s.find_first_not_of(kSpace);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(kSpace);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = nl + 1;
  }
  return lines;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    i = s.find_first_not_of(kSpace, i);
    if (i == std::string_view::npos) break;
    auto j = s.find_first_of(kSpace, i);
    if (j == std::string_view::npos) j = s.size();
    out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto tab = s.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, tab - start));
    start = tab + 1;
  }
}

// Splits raw sequence text into character tokens.
std::vector<std::string_view> tokenize(std::string_view seq, const Alphabet& alphabet) {
  if (!alphabet.single_char_tokens()) return split_ws(seq);
  std::vector<std::string_view> out;
  out.reserve(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (kSpace.find(seq[i]) != std::string_view::npos) continue;
    out.push_back(seq.substr(i, 1));
  }
  return out;
}

// Alphabet used to read the raw characters of a codon alignment.
Alphabet reading_alphabet(const Alphabet& alphabet) {
  if (alphabet.kind() != AlphabetKind::codon) return alphabet;
  return resolve_alphabet("dna", std::nullopt, alphabet.gap_mode())
      .with_ambiguity_as_gap(alphabet.ambiguity_as_gap());
}

struct RawRecord {
  std::string label;
  std::string sequence;
};

Alignment build(const std::vector<RawRecord>& records, const Alphabet& alphabet) {
  if (records.empty()) throw DataError("alignment contains no sequences");
  const Alphabet reader = reading_alphabet(alphabet);
  auto shared = std::make_shared<const Alphabet>(reader);

  std::vector<std::string> taxa;
  std::vector<std::vector<Symbol>> rows;
  std::unordered_set<std::string> seen;
  std::size_t expected = 0;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.label.empty()) throw DataError("record " + std::to_string(r + 1) + " has an empty label");
    if (!seen.insert(rec.label).second) throw DataError("duplicate taxon \"" + rec.label + "\"");
    auto tokens = tokenize(rec.sequence, reader);
    if (r == 0) {
      expected = tokens.size();
    } else if (tokens.size() != expected) {
      throw DataError("unequal sequence lengths: taxon \"" + rec.label + "\" has " +
                      std::to_string(tokens.size()) + " sites, expected " +
                      std::to_string(expected));
    }
    std::vector<Symbol> row;
    row.reserve(tokens.size());
    for (std::size_t c = 0; c < tokens.size(); ++c) {
      try {
        row.push_back(encode_symbol(reader, tokens[c]));
      } catch (const DataError& e) {
        throw DataError(std::string(e.what()) + " (taxon \"" + rec.label + "\", site " +
                        std::to_string(c + 1) + ")");
      }
    }
    taxa.push_back(rec.label);
    rows.push_back(std::move(row));
  }
  Alignment aln(std::move(taxa), std::move(shared), std::move(rows));
  if (alphabet.kind() == AlphabetKind::codon) return tokenize_codons(aln);
  return aln;
}

std::string extension_of(const std::string& path) {
  auto dot = path.find_last_of('.');
  auto slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return {};
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

void append_row(std::string& out, const Alignment& aln, std::size_t taxon) {
  const auto& alpha = aln.alphabet();
  const bool joined = alpha.single_char_tokens() || alpha.kind() == AlphabetKind::codon;
  for (std::size_t s = 0; s < aln.site_count(); ++s) {
    if (!joined && s > 0) out += ' ';
    out += alpha.token(aln.at(taxon, s));
  }
}

}  // namespace

Alignment::Alignment(std::vector<std::string> taxa, std::shared_ptr<const Alphabet> alphabet,
                     std::vector<std::vector<Symbol>> rows)
    : taxa_(std::move(taxa)), alphabet_(std::move(alphabet)) {
  if (!alphabet_) throw DataError("alignment without an alphabet");
  if (taxa_.empty()) throw DataError("alignment contains no taxa");
  if (rows.size() != taxa_.size()) throw DataError("alignment row count does not match taxa");
  sites_ = rows.front().size();
  if (sites_ == 0) throw DataError("alignment has no sites");
  std::unordered_set<std::string> seen;
  cells_.reserve(taxa_.size() * sites_);
  const Symbol limit = static_cast<Symbol>(alphabet_->size());
  for (std::size_t t = 0; t < taxa_.size(); ++t) {
    if (taxa_[t].empty()) throw DataError("empty taxon label");
    if (!seen.insert(taxa_[t]).second) throw DataError("duplicate taxon \"" + taxa_[t] + "\"");
    if (rows[t].size() != sites_)
      throw DataError("unequal sequence lengths: taxon \"" + taxa_[t] + "\" has " +
                      std::to_string(rows[t].size()) + " sites, expected " +
                      std::to_string(sites_));
    for (Symbol s : rows[t]) {
      if (s >= limit && !alphabet_->is_gap(s))
        throw DataError("symbol index out of range for taxon \"" + taxa_[t] + "\"");
    }
    cells_.insert(cells_.end(), rows[t].begin(), rows[t].end());
  }
}

std::vector<Symbol> Alignment::row(std::size_t taxon) const {
  auto first = cells_.begin() + static_cast<std::ptrdiff_t>(taxon * sites_);
  return {first, first + static_cast<std::ptrdiff_t>(sites_)};
}

Alignment Alignment::sorted_by_label() const {
  std::vector<std::size_t> order(taxa_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [this](std::size_t a, std::size_t b) { return taxa_[a] < taxa_[b]; });
  std::vector<std::string> taxa;
  std::vector<std::vector<Symbol>> rows;
  for (auto i : order) {
    taxa.push_back(taxa_[i]);
    rows.push_back(row(i));
  }
  return Alignment(std::move(taxa), alphabet_, std::move(rows));
}

namespace {

std::vector<RawRecord> fasta_records(std::string_view text, bool single_char) {
  std::vector<RawRecord> records;
  for (auto line : split_lines(text)) {
    auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '>') {
      records.push_back({std::string(trim(t.substr(1))), {}});
    } else {
      if (records.empty()) throw DataError("FASTA sequence data before the first '>' header");
      auto& seq = records.back().sequence;
      if (!single_char && !seq.empty()) seq += ' ';
      seq += t;
    }
  }
  if (records.empty()) throw DataError("empty FASTA input");
  return records;
}

struct PhylipInput {
  std::size_t taxa = 0;
  std::size_t sites = 0;
  std::vector<RawRecord> records;
};

PhylipInput phylip_records(std::string_view text) {
  auto lines = split_lines(text);
  std::size_t li = 0;
  while (li < lines.size() && trim(lines[li]).empty()) ++li;
  if (li == lines.size()) throw DataError("empty PHYLIP input");
  auto header = split_ws(lines[li++]);
  PhylipInput in;
  auto parse_count = [](std::string_view s, std::size_t& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
  };
  if (header.size() != 2 || !parse_count(header[0], in.taxa) || !parse_count(header[1], in.sites))
    throw DataError("PHYLIP header must be \"<taxa> <sites>\"");
  for (; li < lines.size(); ++li) {
    auto t = trim(lines[li]);
    if (t.empty()) continue;
    auto split = t.find_first_of(kSpace);
    if (split == std::string_view::npos)
      throw DataError("PHYLIP record \"" + std::string(t) + "\" has no sequence");
    in.records.push_back({std::string(t.substr(0, split)), std::string(trim(t.substr(split)))});
  }
  if (in.records.size() != in.taxa)
    throw DataError("PHYLIP header mismatch: declared " + std::to_string(in.taxa) + " taxa, found " +
                    std::to_string(in.records.size()));
  return in;
}

Alignment build_phylip(const PhylipInput& in, const Alphabet& alphabet) {
  const Alphabet reader = reading_alphabet(alphabet);
  for (const auto& rec : in.records) {
    auto len = tokenize(rec.sequence, reader).size();
    if (len != in.sites)
      throw DataError("PHYLIP header mismatch: declared " + std::to_string(in.sites) +
                      " sites, taxon \"" + rec.label + "\" has " + std::to_string(len));
  }
  return build(in.records, alphabet);
}

Alphabet observed_morph_alphabet(const std::vector<RawRecord>& records, GapMode gap_mode) {
  std::vector<std::string> observed;
  for (const auto& rec : records)
    for (auto tok : split_ws(rec.sequence))
      if (tok != "-") observed.emplace_back(tok);
  return resolve_alphabet("morph", observed, gap_mode);
}

}  // namespace

Alignment parse_fasta(std::string_view text, const Alphabet& alphabet) {
  return build(fasta_records(text, reading_alphabet(alphabet).single_char_tokens()), alphabet);
}

Alignment parse_phylip(std::string_view text, const Alphabet& alphabet) {
  return build_phylip(phylip_records(text), alphabet);
}

Alignment parse_trait_table(std::string_view text, GapMode gap_mode,
                            const std::optional<Alphabet>& alphabet) {
  std::vector<std::vector<std::string_view>> rows;
  bool header_seen = false;
  std::size_t traits = 0;
  for (auto line : split_lines(text)) {
    if (trim(line).empty()) continue;
    auto fields = split_tabs(line);
    for (auto& f : fields) f = trim(f);
    if (!header_seen) {
      if (fields.size() < 2) throw DataError("trait table header needs a taxon column and at least one trait");
      traits = fields.size() - 1;
      header_seen = true;
      continue;
    }
    if (fields.size() != traits + 1)
      throw DataError("trait table row for \"" + std::string(fields.front()) + "\" has " +
                      std::to_string(fields.size() - 1) + " traits, expected " +
                      std::to_string(traits));
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw DataError("trait table contains no taxa");

  Alphabet alpha = [&] {
    if (alphabet) return *alphabet;
    std::vector<std::string> observed;
    const std::string gap = "-";
    for (const auto& r : rows)
      for (std::size_t c = 1; c < r.size(); ++c)
        if (r[c] != gap) observed.emplace_back(r[c]);
    return resolve_alphabet("morph", observed, gap_mode);
  }();

  std::vector<RawRecord> records;
  for (const auto& r : rows) {
    RawRecord rec{std::string(r.front()), {}};
    for (std::size_t c = 1; c < r.size(); ++c) {
      if (c > 1) rec.sequence += ' ';
      rec.sequence += r[c];
    }
    records.push_back(std::move(rec));
  }
  return build(records, alpha);
}

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

enum class FileFormat { fasta, phylip, trait_table };

FileFormat detect_format(const std::string& path, std::string_view text) {
  const std::string ext = extension_of(path);
  if (ext == "tsv") return FileFormat::trait_table;
  if (ext == "phy" || ext == "phylip") return FileFormat::phylip;
  if (ext == "fa" || ext == "fasta" || ext == "fas" || ext == "fna" || ext == "faa")
    return FileFormat::fasta;
  auto first = trim(text);
  if (!first.empty() && first.front() == '>') return FileFormat::fasta;
  return FileFormat::phylip;
}

}  // namespace

Alignment read_alignment_file(const std::string& path, const Alphabet& alphabet) {
  const std::string text = read_text(path);
  try {
    switch (detect_format(path, text)) {
      case FileFormat::trait_table:
        if (alphabet.kind() == AlphabetKind::morph)
          return parse_trait_table(text, alphabet.gap_mode(), alphabet);
        return parse_trait_table(text, alphabet.gap_mode());
      case FileFormat::phylip:
        return parse_phylip(text, alphabet);
      case FileFormat::fasta:
        return parse_fasta(text, alphabet);
    }
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
  throw DataError(path + ": unrecognized format");
}

Alignment read_morph_alignment_file(const std::string& path, GapMode gap_mode) {
  const std::string text = read_text(path);
  try {
    switch (detect_format(path, text)) {
      case FileFormat::trait_table:
        return parse_trait_table(text, gap_mode);
      case FileFormat::phylip: {
        auto in = phylip_records(text);
        return build_phylip(in, observed_morph_alphabet(in.records, gap_mode));
      }
      case FileFormat::fasta: {
        auto records = fasta_records(text, false);
        return build(records, observed_morph_alphabet(records, gap_mode));
      }
    }
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
  throw DataError(path + ": unrecognized format");
}

SiteColumn column(const Alignment& alignment, std::size_t site) {
  if (site >= alignment.site_count())
    throw DataError("site index " + std::to_string(site) + " out of range (alignment has " +
                    std::to_string(alignment.site_count()) + " sites)");
  SiteColumn col;
  col.site_index = site;
  col.alphabet = alignment.alphabet_ptr();
  col.values.reserve(alignment.taxon_count());
  for (std::size_t t = 0; t < alignment.taxon_count(); ++t) {
    const Symbol s = alignment.at(t, site);
    if (alignment.alphabet().gap_mode() == GapMode::skip_site && alignment.alphabet().is_gap(s))
      col.skip = true;
    col.values.push_back(s);
  }
  return col;
}

Alignment tokenize_codons(const Alignment& dna) {
  const Alphabet& in = dna.alphabet();
  if (in.kind() != AlphabetKind::dna) throw DataError("codon tokenization requires a dna alignment");
  if (dna.site_count() % 3 != 0)
    throw DataError("alignment length " + std::to_string(dna.site_count()) +
                    " is not divisible by 3");
  auto codon = std::make_shared<const Alphabet>(
      resolve_alphabet("codon", std::nullopt, in.gap_mode()).with_ambiguity_as_gap(in.ambiguity_as_gap()));
  std::vector<std::vector<Symbol>> rows;
  for (std::size_t t = 0; t < dna.taxon_count(); ++t) {
    std::vector<Symbol> row;
    for (std::size_t s = 0; s < dna.site_count(); s += 3) {
      int gaps = 0;
      std::string triplet;
      for (std::size_t k = 0; k < 3; ++k) {
        const Symbol sym = dna.at(t, s + k);
        if (in.is_gap(sym)) {
          ++gaps;
        } else {
          triplet += in.token(sym);
        }
      }
      if (gaps == 3) {
        row.push_back(codon->gap_index());
      } else if (gaps > 0) {
        throw DataError("partial-gap codon in taxon \"" + dna.taxa()[t] + "\" at sites " +
                        std::to_string(s + 1) + "-" + std::to_string(s + 3));
      } else {
        row.push_back(*codon->find(triplet));
      }
    }
    rows.push_back(std::move(row));
  }
  return Alignment(dna.taxa(), codon, std::move(rows));
}

std::string write_fasta(const Alignment& alignment) {
  std::string out;
  for (std::size_t t = 0; t < alignment.taxon_count(); ++t) {
    out += '>';
    out += alignment.taxa()[t];
    out += '\n';
    append_row(out, alignment, t);
    out += '\n';
  }
  return out;
}

std::string write_phylip(const Alignment& alignment) {
  std::size_t width = 0;
  for (const auto& label : alignment.taxa()) {
    if (label.find_first_of(kSpace) != std::string::npos)
      throw DataError("taxon \"" + label + "\" contains whitespace and cannot be written as PHYLIP");
    width = std::max(width, label.size());
  }
  std::size_t chars = alignment.site_count();
  if (alignment.alphabet().kind() == AlphabetKind::codon) chars *= 3;
  std::string out = std::to_string(alignment.taxon_count()) + " " + std::to_string(chars) + "\n";
  for (std::size_t t = 0; t < alignment.taxon_count(); ++t) {
    const auto& label = alignment.taxa()[t];
    out += label;
    out.append(width - label.size() + 2, ' ');
    append_row(out, alignment, t);
    out += '\n';
  }
  return out;
}

std::string write_trait_table(const Alignment& alignment) {
  std::string out = "taxon";
  for (std::size_t s = 0; s < alignment.site_count(); ++s) out += "\ttrait_" + std::to_string(s + 1);
  out += '\n';
  for (std::size_t t = 0; t < alignment.taxon_count(); ++t) {
    out += alignment.taxa()[t];
    for (std::size_t s = 0; s < alignment.site_count(); ++s) {
      out += '\t';
      out += alignment.alphabet().token(alignment.at(t, s));
    }
    out += '\n';
  }
  return out;
}

}  // namespace nbp
