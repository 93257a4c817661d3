#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "capmass/capacity.hpp"
#include "capmass/quadrature.hpp"

namespace capmass {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  bool skipped = false;
  double measured = 0.0;    // worst case over the criterion's sub-checks
  double target = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyOptions {
  bool fast = false;              // skip criteria that need the grid solver
  QuadratureOptions quadrature;
  GridOptions grid;
  std::uint64_t seed = 20240601;
  std::vector<int> only;          // empty runs every criterion
};

/// Runs the acceptance criteria in order, reporting each as it finishes.
std::vector<CriterionResult> run_acceptance(const VerifyOptions& opt,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

/// "[PASS] 3 cv-deficit-limit: measured=... target=... tol=... (detail)"
std::string format_criterion(const CriterionResult& r);

}  // namespace capmass
