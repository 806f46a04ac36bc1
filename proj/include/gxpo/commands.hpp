#pragma once

#include <string>

#include "gxpo/run_config.hpp"

namespace gxpo {

// Exit codes: 0 success, 1 check/run failure, 2 usage or config error.

// Runs one named verification suite (or "all"), writing per-instance CSV
// rows to <out_dir>/<suite>.csv. Exit 0 iff every instance passed.
int cmd_verify(const std::string& suite, const std::string& out_dir);

// Trains per the config: one curve CSV and one diagnostics CSV per seed,
// plus an aggregate curve, all under cfg.out_dir.
int cmd_train(const RunConfig& cfg);

// Expands sweep_alpha x sweep_k, trains each combination into its own
// subdirectory and drops one aggregate curve per combination at the top
// level of cfg.out_dir.
int cmd_sweep(const RunConfig& cfg);

}  // namespace gxpo
