#pragma once

// Built-in consistency suites shared by `graphspy selfcheck` and the tests.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "graphspy/nn/gradcheck.hpp"
#include "graphspy/vm.hpp"

namespace graphspy {

// Random load/store trace over `addresses` cells, length in [1, max_len].
Trace random_trace(std::mt19937_64& rng, std::size_t max_len, std::size_t addresses);

struct EquivalenceResult {
  std::size_t traces = 0;
  std::size_t mismatches = 0;
  std::size_t reports = 0;  // dead stores found in total
  double seconds = 0;
};

// Shadow detector vs. quadratic scan, compared as sets.
bool same_reports(std::vector<DeadStoreReport> a, std::vector<DeadStoreReport> b);
EquivalenceResult oracle_equivalence(std::size_t traces, std::size_t max_len, std::size_t addresses,
                                     std::uint64_t seed);

// The motivating pair: a value kept in a register between two stores (one
// dead store), and the same code reading the cell back (none).
struct FixtureCheck {
  std::string name;
  std::size_t expected = 0;
  std::size_t reported = 0;
};
extern const char* const kHeldInRegisterFixture;
extern const char* const kReadBackFixture;
std::vector<FixtureCheck> motivating_fixtures();

struct NamedGradCheck {
  std::string name;
  nn::GradCheckResult result;
};

// dense, GRU cell, conv2d+maxpool, residual block, 3-step GGNN, fused model.
std::vector<NamedGradCheck> gradient_suite(std::uint64_t seed);

}  // namespace graphspy
