#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nbp/genome_combine.hpp"
#include "nbp/tree.hpp"

namespace nbp {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes of the nbp executable.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2 };

// "dna", "protein", "codon", "morph" or "custom:<file>".
struct AlphabetSpec {
  std::string name;
  std::optional<std::string> custom_file;
  static AlphabetSpec parse(const std::string& text);
};

struct PipelineInput {
  std::string path;
  AlphabetSpec alphabet;
};

struct PipelineOptions {
  TimeMode mode = TimeMode::embedded();
  GapMode gap_mode = GapMode::as_character;
  bool ambiguity_as_gap = false;
  unsigned threads = 1;
  NjOptions nj;
  std::optional<std::string> dump_dir;  // per-site matrices as JSON
};

struct PipelineResult {
  DistanceMatrix distances;
  Eigen::MatrixXd raw_distances;  // before symmetrization
  PhyloTree tree;
  std::size_t included_sites = 0;
  std::size_t skipped_sites = 0;
  double flatness = 0.0;
};

Alignment load_alignment(const PipelineInput& input, GapMode gap_mode, bool ambiguity_as_gap);

// Reads every input, orders taxa by label, builds per-site matrices, mixes the
// sources in the given order and reduces them to distances and an NJ tree.
PipelineResult pipeline(const std::vector<PipelineInput>& inputs, const PipelineOptions& options);

// Entry point of the executable. Data artifacts go to `out`, diagnostics to
// `err`. argv[0] is the program name.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

// Writes through a temporary file in the same directory and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace nbp
