#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace stochproj {

struct SuiteConfig {
  std::uint64_t seed = 42;
  std::size_t order_pairs = 100;       // random 1D pairs for the order check
  std::size_t projections = 20;        // projection instances, half 1D and half 2D
  std::size_t transforms = 50;         // grid functions for the transform identities
  std::size_t max_atoms_1d = 20;
  std::size_t max_atoms_2d = 10;
  double gap_tolerance = 1e-6;
};

/// One invariant of the battery: how many trials ran, how many passed, and
/// the worst residual seen against its tolerance.
struct SuiteRow {
  std::string invariant;
  std::size_t trials = 0;
  std::size_t passed = 0;
  double worst_residual = 0.0;
  double tolerance = 0.0;

  bool ok() const { return trials == passed; }
};

struct SuiteReport {
  std::vector<SuiteRow> rows;
  double seconds = 0.0;

  bool ok() const;
  const SuiteRow& row(const std::string& invariant) const;
};

SuiteReport run_suite(const SuiteConfig& config = {});

/// Header "invariant,trials,passed,worst_residual,tolerance" then one line per row.
void write_suite_csv(std::ostream& os, const SuiteReport& report);

}  // namespace stochproj
