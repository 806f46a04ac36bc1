#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gxpo {

struct SuiteResult {
  std::string suite;
  std::size_t instances = 0;
  std::size_t failures = 0;
  std::string detail;

  bool pass() const { return instances > 0 && failures == 0; }
};

// Named verification suites, each checking one family of closed-form
// results against an independent brute-force route. Per-instance CSV rows
// go to `csv` when non-null; the result records the failure count and a
// one-line summary.
SuiteResult run_exactness_suite(std::ostream* csv);   // extrapolation == K+1 GD steps
SuiteResult run_bounds_suite(std::ostream* csv);      // displacement-error bound
SuiteResult run_bias_suite(std::ostream* csv);        // retention-ratio bias identity
SuiteResult run_alignment_suite(std::ostream* csv);   // modelled corrective alignment
SuiteResult run_budget_suite(std::ostream* csv);      // backward-pass budget identity
SuiteResult run_gate_suite(std::ostream* csv);        // scripted norm-spike shutoff
SuiteResult run_gradcheck_suite(std::ostream* csv);   // analytic vs central differences

const std::vector<std::string>& suite_names();
using SuiteFn = SuiteResult (*)(std::ostream*);
std::optional<SuiteFn> find_suite(const std::string& name);

// Additional checks used by the acceptance harness.
SuiteResult run_gradient_evolution_check();   // g_n == (I - eta H)^n g0 along GD
SuiteResult run_pass_accounting_check();      // 3 s* + (T - s*) bookkeeping
SuiteResult run_gxpo_sfpo_equivalence_check();
SuiteResult run_toy_convergence_check();

}  // namespace gxpo
