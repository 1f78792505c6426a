#include "nbp/cli.hpp"

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "nbp/error.hpp"
#include "nbp/simulator.hpp"

namespace nbp {
namespace {

std::string json_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

std::string json_vector(const Eigen::VectorXd& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += json_number(v(i));
  }
  return out + "]";
}

std::string json_matrix(const Eigen::MatrixXd& m) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i > 0) out += ", ";
    out += json_vector(m.row(i).transpose());
  }
  return out + "]";
}

std::string json_strings(const std::vector<std::string>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += json_string(v[i]);
  }
  return out + "]";
}

GapMode parse_gap_mode(const std::string& s) {
  if (s == "char") return GapMode::as_character;
  if (s == "skip") return GapMode::skip_site;
  throw DataError("unknown gap mode '" + s + "'");
}

EntropyBase parse_entropy_base(const std::string& s) {
  if (s == "e") return EntropyBase::nats;
  if (s == "2") return EntropyBase::bits;
  throw DataError("unknown entropy base '" + s + "'");
}

Alphabet resolve_spec(const AlphabetSpec& spec, GapMode gap_mode, bool ambiguity_as_gap) {
  std::optional<std::vector<std::string>> symbols;
  if (spec.custom_file) symbols = read_symbol_file(*spec.custom_file);
  return resolve_alphabet(spec.name, symbols, gap_mode).with_ambiguity_as_gap(ambiguity_as_gap);
}

// First label present in one list but not the other, both sorted.
std::string first_unmatched(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  for (const auto& label : a)
    if (!sb.contains(label)) return label;
  for (const auto& label : b)
    if (!sa.contains(label)) return label;
  return {};
}

void dump_site_matrices(const std::string& dir, const std::vector<PipelineInput>& inputs,
                        const std::vector<std::vector<std::size_t>>& site_ids,
                        const std::vector<SiteMatrixSequence>& sources) {
  std::filesystem::create_directories(dir);
  std::size_t k = 0;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    for (std::size_t i = 0; i < sources[s].matrices.size(); ++i) {
      const auto& m = sources[s].matrices[i];
      char name[32];
      std::snprintf(name, sizeof name, "site_%06zu.json", k++);
      std::string body = "{\"source\": " + json_string(inputs[s].path) +
                         ", \"site\": " + std::to_string(site_ids[s][i]) + ", \"kind\": " +
                         json_string(m.kind == TransitionKind::embedded ? "embedded" : "exponential") +
                         ", \"time\": " + json_number(m.time) +
                         ", \"taxa\": " + json_strings(sources[s].taxa) + ", \"P\": " + json_matrix(m.p) +
                         "}\n";
      write_file_atomic((std::filesystem::path(dir) / name).string(), body);
    }
  }
}

unsigned default_threads() {
  if (const char* env = std::getenv("NBP_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err, int verbosity) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("nbp", sink);
  logger->set_pattern("nbp: [%l] %v");
  logger->set_level(verbosity <= 0 ? spdlog::level::warn
                                   : verbosity == 1 ? spdlog::level::info : spdlog::level::debug);
  return logger;
}

void emit(const std::string& content, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << content;
  } else {
    write_file_atomic(out_path, content);
  }
}

}  // namespace

AlphabetSpec AlphabetSpec::parse(const std::string& text) {
  constexpr std::string_view custom = "custom:";
  if (text.rfind(custom, 0) == 0) {
    const std::string file = text.substr(custom.size());
    if (file.empty()) throw DataError("custom alphabet needs a file: custom:<file>");
    return {"custom", file};
  }
  parse_alphabet_kind(text);
  if (text == "custom") throw DataError("custom alphabet needs a file: custom:<file>");
  return {text, std::nullopt};
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw DataError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot move output into place at " + path + ": " + ec.message());
  }
}

Alignment load_alignment(const PipelineInput& input, GapMode gap_mode, bool ambiguity_as_gap) {
  if (input.alphabet.name == "morph") return read_morph_alignment_file(input.path, gap_mode);
  return read_alignment_file(input.path, resolve_spec(input.alphabet, gap_mode, ambiguity_as_gap));
}

PipelineResult pipeline(const std::vector<PipelineInput>& inputs, const PipelineOptions& options) {
  if (inputs.empty()) throw DataError("no input alignments");
  std::vector<SiteMatrixSequence> sources;
  std::vector<std::vector<std::size_t>> site_ids;
  PipelineResult result;
  std::vector<std::string> reference;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Alignment aln =
        load_alignment(inputs[k], options.gap_mode, options.ambiguity_as_gap).sorted_by_label();
    if (aln.taxon_count() < 3)
      throw DataError(inputs[k].path + ": at least 3 taxa are required, found " +
                      std::to_string(aln.taxon_count()));
    if (k == 0) {
      reference = aln.taxa();
    } else if (aln.taxa() != reference) {
      auto label = first_unmatched(reference, aln.taxa());
      throw DataError(inputs[k].path + ": taxa differ from " + inputs[0].path +
                      (label.empty() ? std::string() : "; first unmatched label \"" + label + "\""));
    }
    auto built = alignment_site_matrices(aln, options.mode, options.threads);
    result.skipped_sites += built.skipped;
    std::vector<std::size_t> ids;
    for (std::size_t s = 0; s < aln.site_count(); ++s)
      if (!column(aln, s).skip) ids.push_back(s);
    site_ids.push_back(std::move(ids));
    sources.push_back(std::move(built.sequence));
  }
  const SiteMatrixSequence mixed = mix_sources(sources);
  result.included_sites = mixed.matrices.size();
  if (mixed.matrices.empty()) throw DataError("every site was skipped; nothing to combine");
  if (options.dump_dir) dump_site_matrices(*options.dump_dir, inputs, site_ids, sources);

  const TransitionMatrix total = chain_product(mixed, options.threads);
  result.flatness = product_flatness(total);
  result.raw_distances = reciprocal_distances(total, mixed.taxa);
  result.distances = distance_matrix(total, mixed.taxa);
  result.tree = neighbor_joining(result.distances, options.nj);
  return result;
}

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Species-level CTMC phylogenetics and Neighboring Box Process simulation", "nbp"};
  app.set_version_flag("--version", std::string("nbp ") + kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  int verbosity = 0;
  app.add_flag("-v,--verbose", verbosity, "More log output on stderr (repeatable)");

  // Options shared by the alignment-reading subcommands.
  struct Common {
    std::vector<std::string> inputs;
    std::vector<std::string> alphabets{"dna"};
    std::string gap_mode = "char";
    std::string mode = "embedded";
    std::string entropy_base = "e";
    bool ambiguity_as_gap = false;
    unsigned threads = default_threads();
    std::string out_path;
  };
  Common common;
  auto add_common = [&](CLI::App* sub, bool multi_input) {
    auto* in = sub->add_option("--in", common.inputs, "Alignment file (FASTA, PHYLIP or trait table)");
    if (!multi_input) in->expected(1);
    sub->add_option("--alphabet", common.alphabets,
                    "dna | protein | codon | morph | custom:<file>, one per input or one for all");
    sub->add_option("--gap-mode", common.gap_mode, "char: gap is a letter; skip: drop gapped sites")
        ->check(CLI::IsMember({"char", "skip"}));
    sub->add_option("--mode", common.mode, "embedded | entropy | fixed:<t>");
    sub->add_option("--entropy-base", common.entropy_base, "Logarithm base of the site entropy")
        ->check(CLI::IsMember({"e", "2"}));
    sub->add_flag("--ambiguity-as-gap", common.ambiguity_as_gap, "Read ambiguity codes as gaps");
    sub->add_option("--threads", common.threads, "Worker threads (default: NBP_THREADS or all cores)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", common.out_path, "Write the result here instead of stdout");
  };

  auto* site = app.add_subcommand("site", "Rate, transition and stationary matrices of one site as JSON");
  std::size_t site_index = 0;
  add_common(site, false);
  site->add_option("--site", site_index, "0-based site index");

  auto* dist = app.add_subcommand("dist", "Distance matrix from the product of site matrices");
  std::string dist_format = "phylip";
  bool raw_asymmetric = false;
  add_common(dist, true);
  dist->add_option("--format", dist_format, "phylip | json")->check(CLI::IsMember({"phylip", "json"}));
  dist->add_flag("--raw-asymmetric", raw_asymmetric, "Also emit the matrix before symmetrization");

  auto* tree = app.add_subcommand("tree", "Neighbor-joining tree as Newick");
  std::string dist_in;
  bool no_clamp = false;
  add_common(tree, true);
  tree->add_option("--dist", dist_in, "Read a PHYLIP distance matrix instead of alignments");
  tree->add_flag("--no-clamp", no_clamp, "Keep negative branch lengths");

  auto* net = app.add_subcommand("net", "Saturated species network of one site as DOT");
  add_common(net, false);
  net->add_option("--site", site_index, "0-based site index");

  auto* pipe = app.add_subcommand("pipeline", "Alignments to distances to tree");
  std::string dist_out;
  std::string dump_dir;
  add_common(pipe, true);
  pipe->add_option("--dist-out", dist_out, "Also write the PHYLIP distance matrix here");
  pipe->add_option("--dump-dir", dump_dir, "Write every per-site matrix as JSON into this directory");
  pipe->add_flag("--no-clamp", no_clamp, "Keep negative branch lengths");

  auto* sim = app.add_subcommand("sim", "Simulate the Neighboring Box Process");
  std::string sim_alphabet = "dna";
  std::string sim_gap_mode = "char";
  std::size_t morph_states = 4;
  double sub_rate = 1.0, spec_rate = 1.0, ext_rate = 0.0;
  std::size_t sites = 100;
  std::size_t stop_extant = 0;
  double stop_time = 0.0;
  std::optional<std::uint64_t> seed;
  std::string out_prefix;
  bool allow_deletion = false;
  std::uint64_t max_events = 50'000'000;
  sim->add_option("--alphabet", sim_alphabet, "dna | protein | codon | morph | custom:<file>");
  sim->add_option("--morph-states", morph_states, "Number of states 1..K for the morph alphabet")
      ->check(CLI::Range(2, 1000000));
  sim->add_option("--gap-mode", sim_gap_mode, "char | skip")->check(CLI::IsMember({"char", "skip"}));
  sim->add_option("--sub-rate", sub_rate, "Substitutions per site per unit time");
  sim->add_option("--spec-rate", spec_rate, "Speciation rate per lineage");
  sim->add_option("--ext-rate", ext_rate, "Extinction rate per lineage");
  sim->add_option("--sites", sites, "Number of sites")->check(CLI::PositiveNumber);
  auto* extant_opt = sim->add_option("--stop-extant", stop_extant, "Stop when N lineages are alive");
  auto* time_opt = sim->add_option("--stop-time", stop_time, "Stop at time T");
  extant_opt->excludes(time_opt);
  sim->add_option("--seed", seed, "Random seed (drawn and printed when absent)");
  sim->add_option("--out-prefix", out_prefix, "Output prefix")->required();
  sim->add_flag("--allow-deletion", allow_deletion, "Sites may be deleted (become gaps)");
  sim->add_option("--max-events", max_events, "Abort after this many events");

  std::vector<const char*> cargv;
  cargv.reserve(argv.size());
  for (const auto& a : argv) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto log = make_logger(err, verbosity);
  try {
    auto inputs_from_common = [&] {
      if (common.inputs.empty()) throw CLI::RequiredError("--in");
      if (common.alphabets.size() != 1 && common.alphabets.size() != common.inputs.size())
        throw CLI::ValidationError("--alphabet", "give one alphabet, or one per --in");
      std::vector<PipelineInput> inputs;
      for (std::size_t k = 0; k < common.inputs.size(); ++k)
        inputs.push_back({common.inputs[k],
                          AlphabetSpec::parse(common.alphabets.size() == 1 ? common.alphabets[0]
                                                                           : common.alphabets[k])});
      return inputs;
    };
    auto time_mode = [&] {
      TimeMode m = parse_time_mode(common.mode);
      m.entropy_base = parse_entropy_base(common.entropy_base);
      return m;
    };
    auto pipeline_options = [&] {
      PipelineOptions o;
      o.mode = time_mode();
      o.gap_mode = parse_gap_mode(common.gap_mode);
      o.ambiguity_as_gap = common.ambiguity_as_gap;
      o.threads = common.threads;
      o.nj.clamp_negative = !no_clamp;
      return o;
    };
    auto report = [&](const PipelineResult& r) {
      log->info("{} sites combined, {} skipped", r.included_sites, r.skipped_sites);
      if (r.skipped_sites > 0) log->warn("skipped {} gapped sites", r.skipped_sites);
      log->info("product flatness {:.3e}", r.flatness);
      if (r.flatness < kFlatnessWarning)
        log->warn("site product is nearly rank one (flatness {:.3e}); distances carry little signal",
                  r.flatness);
    };

    if (*site || *net) {
      const auto inputs = inputs_from_common();
      const GapMode gap = parse_gap_mode(common.gap_mode);
      const Alignment aln = load_alignment(inputs.front(), gap, common.ambiguity_as_gap);
      const SiteColumn col = column(aln, site_index);
      const RateMatrix q = rate_matrix(col);
      if (*net) {
        emit(write_dot(site_network(col, q, aln.taxa())), common.out_path, out);
        return kExitOk;
      }
      const TimeMode mode = time_mode();
      const double entropy = site_entropy(col, mode.entropy_base);
      const TransitionMatrix p = site_transition(col, mode);
      StationaryDistribution pi;
      if (p.kind == TransitionKind::embedded) {
        pi = stationary_distribution(q, p);
      } else {
        pi.pi = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(q.size()),
                                          1.0 / static_cast<double>(q.size()));
      }
      std::string body = "{\"site\": " + std::to_string(site_index) +
                         ", \"taxa\": " + json_strings(aln.taxa()) + ", \"mode\": " +
                         json_string(p.kind == TransitionKind::embedded ? "embedded" : "exponential") +
                         ", \"time\": " + json_number(p.time) + ", \"Q\": " + json_matrix(q.q()) +
                         ", \"P\": " + json_matrix(p.p) + ", \"pi\": " + json_vector(pi.pi) +
                         ", \"entropy\": " + json_number(entropy) +
                         ", \"balance_residual\": " + json_number(detailed_balance_violation(p, pi)) +
                         "}\n";
      emit(body, common.out_path, out);
      return kExitOk;
    }

    if (*dist) {
      const auto r = pipeline(inputs_from_common(), pipeline_options());
      report(r);
      std::string body;
      if (dist_format == "json") {
        body = "{\"taxa\": " + json_strings(r.distances.taxa) + ", \"D\": " + json_matrix(r.distances.d);
        if (raw_asymmetric) body += ", \"raw\": " + json_matrix(r.raw_distances);
        body += ", \"included_sites\": " + std::to_string(r.included_sites) +
                ", \"skipped_sites\": " + std::to_string(r.skipped_sites) +
                ", \"flatness\": " + json_number(r.flatness) + "}\n";
      } else {
        body = write_phylip_distances(r.distances);
        if (raw_asymmetric) body += write_phylip_distances(r.distances.taxa, r.raw_distances);
      }
      emit(body, common.out_path, out);
      return kExitOk;
    }

    if (*tree) {
      PhyloTree t;
      if (!dist_in.empty()) {
        std::ifstream f(dist_in);
        if (!f) throw DataError("cannot open " + dist_in);
        std::stringstream buf;
        buf << f.rdbuf();
        DistanceMatrix d;
        try {
          d = parse_phylip_distances(buf.str());
        } catch (const DataError& e) {
          throw DataError(dist_in + ": " + e.what());
        }
        t = neighbor_joining(d, NjOptions{!no_clamp});
      } else {
        const auto r = pipeline(inputs_from_common(), pipeline_options());
        report(r);
        t = r.tree;
      }
      emit(write_newick(t) + "\n", common.out_path, out);
      return kExitOk;
    }

    if (*pipe) {
      auto options = pipeline_options();
      if (!dump_dir.empty()) options.dump_dir = dump_dir;
      const auto r = pipeline(inputs_from_common(), options);
      report(r);
      if (!dist_out.empty()) write_file_atomic(dist_out, write_phylip_distances(r.distances));
      emit(write_newick(r.tree) + "\n", common.out_path, out);
      return kExitOk;
    }

    if (*sim) {
      NbpConfig cfg;
      const GapMode gap = parse_gap_mode(sim_gap_mode);
      const AlphabetSpec spec = AlphabetSpec::parse(sim_alphabet);
      if (spec.name == "morph") {
        std::vector<std::string> states;
        for (std::size_t k = 1; k <= morph_states; ++k) states.push_back(std::to_string(k));
        cfg.alphabet = resolve_alphabet("morph", states, gap);
      } else {
        cfg.alphabet = resolve_spec(spec, gap, false);
      }
      cfg.substitution_rate = sub_rate;
      cfg.speciation_rate = spec_rate;
      cfg.extinction_rate = ext_rate;
      cfg.n_sites = sites;
      cfg.stop = *time_opt ? StopCondition::at_time(stop_time)
                           : StopCondition::at_extant(*extant_opt ? stop_extant : 4);
      if (!seed) {
        seed = std::random_device{}() | (static_cast<std::uint64_t>(std::random_device{}()) << 32);
        err << "nbp: seed " << *seed << "\n";
      }
      cfg.seed = *seed;
      cfg.allow_deletion = allow_deletion;
      cfg.max_events = max_events;

      const SimResult result = simulate(cfg);
      write_file_atomic(out_prefix + ".events.jsonl", write_event_log(result));
      if (result.extinct()) {
        log->warn("clade extinct at time {}; no tree or traits written", result.end_time);
        return kExitOk;
      }
      const TruthExport truth = export_truth(result);
      write_file_atomic(out_prefix + ".true.nwk", truth.newick + "\n");
      write_file_atomic(out_prefix + (truth.trait_table ? ".traits.tsv" : ".fasta"), truth.traits);
      log->info("{} extant taxa at time {}", result.extant_taxa.size(), result.end_time);
      return kExitOk;
    }
  } catch (const CLI::Error& e) {
    err << "nbp: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "nbp: error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    err << "nbp: internal consistency failure: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "nbp: error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace nbp
