#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fare/train.hpp"

namespace fare {

// Finite-difference comparison against the tape's analytic gradients.
// `perturb_param` (when set) adds `perturb_amount` to the analytic gradient
// of the named parameter before comparing; a self-test hook showing the
// checker fails loudly when a gradient is wrong.
struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;  // relative error bound
  std::string perturb_param;
  double perturb_amount = 0.0;
};

struct GradCheckReport {
  bool ok = true;
  std::string worst_param;
  double worst_rel_error = 0.0;
};

// Compares every parameter of the loss graph for a fresh b=8 batch of the
// given loss kind; central differences with the configured step.
GradCheckReport check_loss_gradients(LossKind kind, std::uint64_t seed,
                                     const GradCheckOptions& opts = {});

enum class SuiteStatus { kPass, kFail, kSkip };

struct SuiteResult {
  std::string name;
  SuiteStatus status;
  std::string detail;
};

struct VerifyOptions {
  // Disabling protected-attribute normalization makes the KDE equivalence
  // suite report skipped (the identity provably needs unit rows).
  bool normalize_z = true;
  GradCheckOptions gradients;
};

// Known suites: kde-equivalence, sparse-degenerate, gradients,
// mask-exactness, cclk-oracle, uniform-reduction, value-collapse.
// An empty selector runs all of them.
std::vector<SuiteResult> run_verification(const std::vector<std::string>& suites = {},
                                          const VerifyOptions& opts = {});

bool all_passed(const std::vector<SuiteResult>& results);

}  // namespace fare
