#pragma once

// Synthetic MiniASM corpora with controlled dead-store motifs.
//
// Generated programs are self-contained: `main` writes one input cell per
// procedure, then calls the roots of a call tree. Every procedure carries
// exactly one scenario, either a dead-store motif or its negative twin:
//   a  store/store to one frame cell inside a block
//   b  store ... store across blocks, register-only work between
//   c  callee stores a global cell that its caller overwrites
//   g  store, guarded read, store; the read is skipped for negative input
// Filler stores are always read back in the same block, so no dead store
// arises by accident.

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "graphspy/isa.hpp"
#include "graphspy/model.hpp"
#include "graphspy/vm.hpp"

namespace graphspy {

enum class OptLevel : std::uint8_t { Opt0, Opt1 };
std::string_view opt_level_name(OptLevel level);
std::string config_tag(DialectKind dialect, OptLevel opt);

enum class Scenario : std::uint8_t { MotifA, MotifB, MotifC, Guarded };
inline constexpr std::size_t kScenarioCount = 4;
std::string_view scenario_name(Scenario s);

struct GenConfig {
  std::uint64_t seed = 1;
  int min_procs = 3, max_procs = 6;          // besides main
  int min_segments = 2, max_segments = 4;    // body segments per procedure
  int min_block_len = 1, max_block_len = 3;  // filler instructions per block
  double call_density = 0.5;                 // chance a procedure gets a caller
  double loop_probability = 0.8;
  double dead_store_injection = 0.5;         // positive motif vs. negative twin
  std::array<double, kScenarioCount> scenario_weights{0.3, 0.3, 0.2, 0.2};
  DialectKind dialect = DialectKind::A;
  OptLevel opt = OptLevel::Opt0;

  nlohmann::ordered_json to_json() const;
};

struct GeneratedProgram {
  Program program;
  std::string text;  // rendered in the configured dialect
  std::map<std::string, std::string> intent;  // procedure -> scenario, "+" or "-" suffix
};

GeneratedProgram generate_program(const GenConfig& config);

// Opt1 passes: local dead-store elimination within basic blocks, and
// strength reduction of multiplication by two.
Program redundancy_removal(const Program& program);

// Self-contained programs need no input; runs start from empty memory.
inline constexpr std::uint64_t kGenMaxSteps = 200000;
// Extra labeling runs seed 16 cells here; generated programs never touch them.
inline constexpr std::uint64_t kArgumentBase = 16384;

// Profiles one run and turns every exercised procedure except the entry into
// a labeled sample.
std::vector<SampleRecord> program_samples(const Program& program, const std::string& program_id,
                                          const std::string& tag,
                                          const std::map<std::string, std::string>& intent = {});

struct DatasetSplit {
  std::string tag;
  std::vector<SampleRecord> train, val, test;
  nlohmann::ordered_json manifest;
};

class GenerationBudgetExceeded : public Error {
 public:
  explicit GenerationBudgetExceeded(const std::string& why) : Error("GenerationBudgetExceeded", why) {}
};

struct SplitRatios {
  double train = 0.4, val = 0.3, test = 0.3;
};

std::string generator_version();

// Per-config dataset seed: configs draw disjoint programs, so the dialect
// twins of one program never land in different hybrid roles.
std::uint64_t config_seed(std::uint64_t seed, const std::string& tag);

// Programs are assigned whole to one role; samples are accepted until each
// (role, class) quota is met, which balances classes by rejection.
DatasetSplit build_dataset(const GenConfig& base, std::size_t samples, const SplitRatios& ratios,
                           std::uint64_t seed, std::size_t max_programs = 0);

DatasetSplit mix_hybrid(const std::vector<DatasetSplit>& splits, std::uint64_t seed);

}  // namespace graphspy
