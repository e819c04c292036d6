#pragma once

// Subcommand drivers behind the command-line tool. Every run writes into
// its output directory: the resolved config (config.txt), CSV outputs and
// manifest.json with artifact hashes.

#include "pinnmeta/meta.hpp"
#include "pinnmeta/run_config.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pinnmeta {

// Environment variable naming the default output root ("runs" if unset).
inline constexpr const char* kOutputRootEnv = "PINNMETA_OUTPUT_ROOT";

std::string output_dir(const RunConfig& config);

// Held-out tasks: the explicit parameter list (consumed family-arity values
// at a time) or `m` draws from derive_seed(seed, "test-tasks").
std::vector<TaskSpec> held_out_tasks(IcFamily family, int m, std::uint64_t seed,
                                     const std::vector<double>& params_list = {},
                                     bool frequency_in_y = false);

// Point budget and optimizer settings of the fine-tune phase for one arm.
FineTuneConfig fine_tune_config_for(Arm arm, const RunConfig& config);

// Random arm: Xavier init from derive_seed(seed, "random-init", task_index).
// Meta arms: the meta-trained parameters.
MlpParams fine_tune_start(Arm arm, const std::vector<int>& layer_sizes, const MlpParams* meta,
                          std::uint64_t seed, std::size_t task_index);

// Point-set seed of held-out task `task_index`.
std::uint64_t fine_tune_point_seed(std::uint64_t seed, std::size_t task_index);

// Epochs reported in the fine-tune summary.
inline const std::vector<int> kSummaryEpochs = {1000, 1500, 2000};

// Each returns the process exit code: 0 when every task completed, 1 on
// divergence or I/O failure. UsageError propagates before any output.
int cmd_meta_train(RunConfig config, std::ostream& log);
int cmd_fine_tune(RunConfig config, std::ostream& log);
int cmd_denoise(RunConfig config, std::ostream& log);
int cmd_solve_oracle(RunConfig config, std::ostream& log);
int cmd_export_figures_data(RunConfig config, std::ostream& log);

} // namespace pinnmeta
