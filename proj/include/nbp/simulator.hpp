#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nbp/alignment.hpp"
#include "nbp/tree.hpp"

namespace nbp {

// Seedable stream with draws defined here rather than by the standard
// distributions, whose output differs between library implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  // Seed of the independent substream `stream` of a run seeded with `seed`.
  static std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream);

  double uniform();  // [0, 1)
  double exponential(double rate);
  std::uint64_t index(std::uint64_t bound);  // uniform on [0, bound)

 private:
  std::mt19937_64 engine_;
};

struct StopCondition {
  enum class Kind { at_time, at_extant };
  Kind kind = Kind::at_extant;
  double time = 0.0;
  std::size_t extant = 0;

  static StopCondition at_time(double t) { return {Kind::at_time, t, 0}; }
  static StopCondition at_extant(std::size_t n) { return {Kind::at_extant, 0.0, n}; }
};

struct NbpConfig {
  Alphabet alphabet = resolve_alphabet("dna", std::nullopt, GapMode::as_character);
  double substitution_rate = 1.0;  // per site per unit time
  double speciation_rate = 1.0;
  double extinction_rate = 0.0;
  std::size_t n_sites = 1;
  StopCondition stop = StopCondition::at_extant(4);
  std::optional<std::vector<Symbol>> root_state;  // default: uniform per site
  std::uint64_t seed = 0;
  // Deletion turns a site into the gap at the substitution rate. Requires a
  // gap-as-character alphabet.
  bool allow_deletion = false;
  std::uint64_t max_events = 50'000'000;

  void validate() const;
};

enum class EventKind { substitution, deletion, speciation, extinction };
const char* to_string(EventKind kind);

struct SimEvent {
  double time = 0.0;
  EventKind kind = EventKind::substitution;
  std::uint64_t lineage = 0;
  std::uint64_t child = 0;  // speciation only
  std::size_t site = 0;     // substitution and deletion only
  Symbol from = 0;
  Symbol to = 0;
};

struct SimResult {
  Alphabet alphabet;
  PhyloTree true_tree;  // empty when the clade went extinct
  std::vector<std::string> extant_taxa;
  std::vector<std::vector<Symbol>> traits;
  std::vector<SimEvent> event_log;
  double end_time = 0.0;

  bool extinct() const { return extant_taxa.empty(); }
  Alignment trait_alignment() const;
};

SimResult simulate(const NbpConfig& cfg);

// Evolves one symbol for `duration` under uniform replacement among the other
// letters at `rate` substitutions per unit time.
Symbol evolve_symbol(const Alphabet& alphabet, Symbol state, double rate, double duration,
                     RandomStream& rng);

struct TruthExport {
  std::string newick;
  std::string traits;
  bool trait_table = false;  // traits is a TSV trait table rather than FASTA
};
TruthExport export_truth(const SimResult& result);

// One JSON object per line, times at 17 significant digits.
std::string write_event_log(const SimResult& result);

}  // namespace nbp
