#include "nbp/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <queue>
#include <tuple>

#include "nbp/error.hpp"

namespace nbp {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kRootStream = ~std::uint64_t{0};

// Non-gap letter drawn uniformly from those different from `state`.
Symbol other_letter(const Alphabet& alphabet, Symbol state, RandomStream& rng) {
  const auto letters = static_cast<Symbol>(alphabet.letter_count());
  auto pick = static_cast<Symbol>(rng.index(letters - 1));
  // Letters occupy indices [0, letters) in both gap modes.
  if (pick >= state) ++pick;
  return pick;
}

struct RawNode {
  double time = 0.0;
  int parent = -1;
  std::vector<int> children;
  bool extinct = false;
  std::string label;
};

struct Lineage {
  std::uint64_t id = 0;
  int branch_start = 0;
  std::vector<Symbol> traits;
  RandomStream rng;
  bool alive = true;
};

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::uint64_t RandomStream::substream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

double RandomStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::exponential(double rate) {
  return -std::log1p(-uniform()) / rate;
}

std::uint64_t RandomStream::index(std::uint64_t bound) {
  if (bound == 0) throw NumericalError("random index with an empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % bound;
}

void NbpConfig::validate() const {
  auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!finite_nonneg(substitution_rate)) throw DataError("substitution rate must be finite and >= 0");
  if (!finite_nonneg(speciation_rate) || speciation_rate <= 0.0)
    throw DataError("speciation rate must be finite and > 0");
  if (!finite_nonneg(extinction_rate)) throw DataError("extinction rate must be finite and >= 0");
  if (n_sites < 1) throw DataError("simulation needs at least one site");
  if (alphabet.letter_count() < 2) throw DataError("simulation alphabet needs at least 2 letters");
  if (stop.kind == StopCondition::Kind::at_time && !(stop.time > 0.0 && std::isfinite(stop.time)))
    throw DataError("stop time must be positive");
  if (stop.kind == StopCondition::Kind::at_extant && stop.extant < 2)
    throw DataError("stop-extant count must be at least 2");
  if (allow_deletion && alphabet.gap_mode() != GapMode::as_character)
    throw DataError("deletion requires the gap to be an alphabet character");
  if (root_state) {
    if (root_state->size() != n_sites) throw DataError("root state length differs from the site count");
    for (Symbol s : *root_state)
      if (s >= alphabet.size()) throw DataError("root state symbol out of range");
  }
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::substitution: return "substitution";
    case EventKind::deletion: return "deletion";
    case EventKind::speciation: return "speciation";
    case EventKind::extinction: return "extinction";
  }
  return "unknown";
}

Alignment SimResult::trait_alignment() const {
  if (extinct()) throw DataError("clade extinct: no extant taxa to export");
  return Alignment(extant_taxa, std::make_shared<const Alphabet>(alphabet), traits);
}

SimResult simulate(const NbpConfig& cfg) {
  cfg.validate();
  const Alphabet& alphabet = cfg.alphabet;
  const double site_rate = cfg.substitution_rate * static_cast<double>(cfg.n_sites);
  const double deletion_rate = cfg.allow_deletion ? site_rate : 0.0;
  const double total_rate = site_rate + deletion_rate + cfg.speciation_rate + cfg.extinction_rate;

  std::vector<Symbol> root_state;
  if (cfg.root_state) {
    root_state = *cfg.root_state;
  } else {
    RandomStream root_rng(RandomStream::substream_seed(cfg.seed, kRootStream));
    root_state.resize(cfg.n_sites);
    for (auto& s : root_state) s = static_cast<Symbol>(root_rng.index(alphabet.letter_count()));
  }

  std::vector<RawNode> raw{{0.0, -1, {}, false, {}}};  // origin
  std::vector<Lineage> lineages;
  auto add_node = [&](int parent, double time) {
    raw.push_back({time, parent, {}, false, {}});
    const int id = static_cast<int>(raw.size() - 1);
    raw[static_cast<std::size_t>(parent)].children.push_back(id);
    return id;
  };

  using Pending = std::tuple<double, std::uint64_t>;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue;
  auto spawn = [&](int branch_start, std::vector<Symbol> traits, double now) {
    const std::uint64_t id = lineages.size();
    Lineage lin{id, branch_start, std::move(traits),
                RandomStream(RandomStream::substream_seed(cfg.seed, id)), true};
    queue.emplace(now + lin.rng.exponential(total_rate), id);
    lineages.push_back(std::move(lin));
  };
  spawn(0, root_state, 0.0);

  SimResult result{alphabet, {}, {}, {}, {}, 0.0};
  std::size_t alive = 1;
  std::uint64_t events = 0;
  double now = 0.0;
  bool stopped = false;

  while (!stopped) {
    auto [t, id] = queue.top();
    queue.pop();
    if (cfg.stop.kind == StopCondition::Kind::at_time && t > cfg.stop.time) {
      now = cfg.stop.time;
      break;
    }
    if (++events > cfg.max_events)
      throw DataError("simulation exceeded the event budget of " + std::to_string(cfg.max_events) +
                      " events");
    now = t;
    Lineage& lin = lineages[id];
    double u = lin.rng.uniform() * total_rate;

    if (u < site_rate) {
      const auto site = static_cast<std::size_t>(lin.rng.index(cfg.n_sites));
      const Symbol from = lin.traits[site];
      if (!alphabet.is_gap(from)) {
        const Symbol to = other_letter(alphabet, from, lin.rng);
        lin.traits[site] = to;
        result.event_log.push_back({t, EventKind::substitution, id, 0, site, from, to});
      }
    } else if ((u -= site_rate) < deletion_rate) {
      const auto site = static_cast<std::size_t>(lin.rng.index(cfg.n_sites));
      const Symbol from = lin.traits[site];
      if (!alphabet.is_gap(from)) {
        lin.traits[site] = alphabet.gap_index();
        result.event_log.push_back({t, EventKind::deletion, id, 0, site, from, alphabet.gap_index()});
      }
    } else if ((u -= deletion_rate) < cfg.speciation_rate) {
      const int split = add_node(lin.branch_start, t);
      lin.branch_start = split;
      const std::uint64_t child = lineages.size();
      result.event_log.push_back({t, EventKind::speciation, id, child, 0, 0, 0});
      auto traits = lin.traits;
      spawn(split, std::move(traits), t);  // invalidates `lin`
      ++alive;
      if (cfg.stop.kind == StopCondition::Kind::at_extant && alive >= cfg.stop.extant) stopped = true;
    } else {
      lin.alive = false;
      const int leaf = add_node(lin.branch_start, t);
      raw[static_cast<std::size_t>(leaf)].extinct = true;
      result.event_log.push_back({t, EventKind::extinction, id, 0, 0, 0, 0});
      if (--alive == 0) stopped = true;
      continue;
    }
    Lineage& again = lineages[id];
    queue.emplace(t + again.rng.exponential(total_rate), id);
  }
  result.end_time = now;
  if (alive == 0) return result;

  std::size_t label = 0;
  for (auto& lin : lineages) {
    if (!lin.alive) continue;
    const int leaf = add_node(lin.branch_start, now);
    raw[static_cast<std::size_t>(leaf)].label = "box_" + std::to_string(++label);
    result.extant_taxa.push_back(raw[static_cast<std::size_t>(leaf)].label);
    result.traits.push_back(lin.traits);
  }

  // Prune extinct tips and collapse the unary nodes left behind. Returns the
  // index in the output tree, or -1 when nothing survives below.
  PhyloTree& tree = result.true_tree;
  std::function<int(int)> build = [&](int v) -> int {
    const RawNode& node = raw[static_cast<std::size_t>(v)];
    if (node.children.empty()) {
      if (node.extinct) return -1;
      return tree.add_node({node.label, -1, {}, std::nullopt});
    }
    std::vector<int> kept;
    for (int c : node.children) {
      const int out = build(c);
      if (out < 0) continue;
      const double span = raw[static_cast<std::size_t>(c)].time - node.time;
      auto& len = tree.node(out).length;
      len = len.value_or(0.0) + span;
      kept.push_back(out);
    }
    if (kept.empty()) return -1;
    if (kept.size() == 1) return kept.front();
    const int out = tree.add_node({});
    for (int k : kept) tree.attach(out, k);
    return out;
  };
  // The origin has a single child; its span becomes the root length.
  tree.set_root(build(0));
  return result;
}

Symbol evolve_symbol(const Alphabet& alphabet, Symbol state, double rate, double duration,
                     RandomStream& rng) {
  if (duration < 0.0) throw DataError("evolution duration must be nonnegative");
  if (!(rate > 0.0) || duration == 0.0 || alphabet.is_gap(state)) return state;
  double elapsed = rng.exponential(rate);
  while (elapsed <= duration) {
    state = other_letter(alphabet, state, rng);
    elapsed += rng.exponential(rate);
  }
  return state;
}

TruthExport export_truth(const SimResult& result) {
  if (result.extinct()) throw DataError("clade extinct: no extant taxa to export");
  TruthExport out;
  out.newick = write_newick(result.true_tree);
  const Alignment aln = result.trait_alignment();
  if (result.alphabet.kind() == AlphabetKind::morph) {
    out.traits = write_trait_table(aln);
    out.trait_table = true;
  } else {
    out.traits = write_fasta(aln);
  }
  return out;
}

std::string write_event_log(const SimResult& result) {
  std::string out;
  for (const auto& e : result.event_log) {
    out += "{\"time\":" + format_double(e.time) + ",\"event\":\"" + to_string(e.kind) +
           "\",\"lineage\":" + std::to_string(e.lineage);
    switch (e.kind) {
      case EventKind::speciation:
        out += ",\"child\":" + std::to_string(e.child);
        break;
      case EventKind::substitution:
      case EventKind::deletion:
        out += ",\"site\":" + std::to_string(e.site) + ",\"from\":\"" +
               result.alphabet.token(e.from) + "\",\"to\":\"" + result.alphabet.token(e.to) + "\"";
        break;
      case EventKind::extinction:
        break;
    }
    out += "}\n";
  }
  return out;
}

}  // namespace nbp
