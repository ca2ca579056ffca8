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

// Run configuration.
//
// INI text with sections
//   [run] [study] [task] [advisor] [space.<knob>] [models] [model.<name>]
//   [ensemble] [rl] [workload] [output]
// or JSON with one object per section. Lists are comma separated in INI and
// arrays in JSON. Unknown sections and keys are rejected; every violation is
// reported at once.
//
// EchoConfig emits the effective configuration, defaults included, as JSON
// that loads back to the same configuration.

#ifndef RAFIKI_CONFIG_H_
#define RAFIKI_CONFIG_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "rafiki/hyperspace.h"
#include "rafiki/serve.h"
#include "rafiki/tune.h"

namespace rafiki {

struct RunConfig {
  uint64_t seed = 0;
  int seeds = 1;  // consecutive seeds run by one command

  std::vector<KnobDef> space = SurrogateKnobs();
  TuneConfig tune;
  std::vector<int> workers_sweep;  // non-empty: tune runs a scaling sweep

  ServeConfig serve;
  std::vector<std::string> model_list;  // names, in serving order
  std::string model_preset = "trio";

  std::string out_dir = "out";
  bool trace = false;
};

// One section as parsed: (key, value, line) triples in file order.
struct RawEntry {
  std::string key;
  std::string value;
  int line = 0;
};
struct RawSection {
  std::string name;
  std::vector<RawEntry> entries;
};
using RawConfig = std::vector<RawSection>;

// ParseError (InvalidArgument) with a line number on malformed text.
absl::StatusOr<RawConfig> ParseIni(const std::string& text);
absl::StatusOr<RawConfig> ParseJsonConfig(const std::string& text);

// Applies `key=value` overrides of the form section.key=value.
absl::Status ApplyOverrides(RawConfig& raw, const std::vector<std::string>& sets);

// ValidationError (InvalidArgument) listing every violation.
absl::StatusOr<RunConfig> BuildRunConfig(const RawConfig& raw);

// Reads INI or JSON, chosen by a leading '{'.
absl::StatusOr<RunConfig> LoadConfigText(const std::string& text,
                                         const std::vector<std::string>& sets = {});
absl::StatusOr<RunConfig> LoadConfig(const std::string& path,
                                     const std::vector<std::string>& sets = {});

std::string EchoConfig(const RunConfig& conf);

}  // namespace rafiki

#endif  // RAFIKI_CONFIG_H_
