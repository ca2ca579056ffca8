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

// rafiki-core: tune | serve-sim | compare.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "absl/strings/str_cat.h"
#include "rafiki/commands.h"
#include "rafiki/config.h"

namespace {

struct RunFlags {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out;
  bool trace = false;
  std::vector<std::string> sets;
};

void AddRunFlags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "INI or JSON config file");
  cmd->add_option("--seed", f.seed, "root seed (overrides run.seed)");
  cmd->add_option("--out", f.out, "output directory (overrides output.dir)");
  cmd->add_flag("--trace", f.trace, "write a JSONL event trace");
  cmd->add_option("--set", f.sets, "override, section.key=value")->take_all();
}

std::optional<std::string> EnvOut() {
  const char* env = std::getenv("RAFIKI_OUT");
  if (env == nullptr || *env == '\0') return std::nullopt;
  return std::string(env);
}

absl::StatusOr<rafiki::RunConfig> Resolve(const RunFlags& f) {
  std::vector<std::string> sets = f.sets;
  if (f.seed) sets.push_back(absl::StrCat("run.seed=", *f.seed));
  if (!f.out.empty()) sets.push_back("output.dir=" + f.out);
  if (auto env = EnvOut()) sets.push_back("output.dir=" + *env);
  if (f.trace) sets.push_back("output.trace=true");
  if (f.config.empty()) return rafiki::LoadConfigText("", sets);
  return rafiki::LoadConfig(f.config, sets);
}

int Report(const absl::Status& s) {
  if (s.ok()) return 0;
  std::cerr << "rafiki-core: " << s.message() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rafiki core: tuning and serving simulations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", rafiki::kVersion);

  RunFlags tune_flags, serve_flags;
  CLI::App* tune = app.add_subcommand("tune", "hyper-parameter tuning study");
  AddRunFlags(tune, tune_flags);
  CLI::App* serve = app.add_subcommand("serve-sim", "inference serving simulation");
  AddRunFlags(serve, serve_flags);

  std::vector<std::string> dirs, vary;
  std::string compare_out = "compare";
  CLI::App* compare = app.add_subcommand("compare", "paired comparison of run directories");
  compare->add_option("dirs", dirs, "run directories, first is the baseline")
      ->required()
      ->expected(2, -1);
  compare->add_option("--out", compare_out, "report directory");
  compare->add_option("--vary", vary, "config keys allowed to differ")->take_all();

  CLI11_PARSE(app, argc, argv);

  if (*tune || *serve) {
    const bool is_tune = tune->parsed();
    auto conf = Resolve(is_tune ? tune_flags : serve_flags);
    if (!conf.ok()) return Report(conf.status());
    return Report(is_tune ? rafiki::CmdTune(*conf) : rafiki::CmdServeSim(*conf));
  }
  if (auto env = EnvOut()) compare_out = *env;
  return Report(rafiki::CmdCompare(dirs, compare_out, vary));
}
