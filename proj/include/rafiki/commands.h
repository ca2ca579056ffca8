/* Copyright 2026 The Rafiki Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Command bodies behind the rafiki-core CLI. Each writes only inside its
// output directory: config.json (effective config), run.json (version, seed,
// command) and the command's own CSV/JSON artifacts.
#ifndef RAFIKI_COMMANDS_H_
#define RAFIKI_COMMANDS_H_

#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "rafiki/config.h"

namespace rafiki {

inline constexpr char kVersion[] = "0.1.0";

// Seeds run by one command: seed, seed + 1, ..., seed + seeds - 1.
std::vector<uint64_t> RunSeeds(const RunConfig& conf);

// trials.csv, best.json, progress.csv, summary.csv. With a workers sweep:
// scaling.csv and summary.csv with one time-to-target column per size.
absl::Status CmdTune(const RunConfig& conf);

// metrics.csv, train.csv, summary.csv and, for rl, policy_<seed>.bin.
absl::Status CmdServeSim(const RunConfig& conf);

struct CompareRow {
  std::string metric;
  int pairs = 0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double mean_delta = 0.0;  // b - a
  int wins = 0;             // b > a
  int losses = 0;
  double sign_p = 1.0;      // two-sided
};

struct CompareReport {
  std::vector<std::string> differing;  // echo keys that differ
  std::vector<CompareRow> rows;
};

// Two-sided sign test p value for `wins` against `losses`; ties dropped.
double SignTestP(int wins, int losses);

// Pairs summary.csv rows by seed. IncompatibleRuns (FailedPrecondition) when
// the echoed configs differ outside `vary`; an empty `vary` allows study.mode,
// advisor.kind, workload.dispatcher and rl.beta. run.* and output.* never
// count, nor rl.* once the dispatchers differ.
absl::StatusOr<CompareReport> CompareRuns(const std::string& dir_a, const std::string& dir_b,
                                          const std::vector<std::string>& vary = {});

// compare.md and compare.csv in out_dir, plus series.csv with the averaged
// best-p or per-window curves of both runs.
absl::Status CmdCompare(const std::vector<std::string>& dirs, const std::string& out_dir,
                        const std::vector<std::string>& vary = {});

}  // namespace rafiki

#endif  // RAFIKI_COMMANDS_H_
