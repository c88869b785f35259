// Copyright 2026 The miadyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// miadyn command line: runs pipeline stages from one JSON config.
//
// Exit codes: 0 success, 1 invalid arguments or config, 2 stage failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "miadyn/pipeline/config.hpp"
#include "miadyn/pipeline/stages.hpp"
#include "miadyn/util/parallel.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitStageFailure = 2;

struct Args {
  std::string config;
  std::string out;
  int threads = 0;
  bool force = false;
  bool quiet = false;
};

int Run(const std::string& stage, const Args& args) {
  auto cfg = miadyn::pipeline::LoadConfig(args.config);
  if (!cfg.ok()) {
    std::cerr << "error: " << cfg.status().message() << "\n";
    return kExitInvalid;
  }
  if (!args.out.empty()) cfg->output_dir = args.out;
  if (cfg->output_dir.empty()) {
    std::cerr << "error: no output directory; pass --out or set output_dir in the config\n";
    return kExitInvalid;
  }
  if (args.threads > 0) miadyn::SetThreadCap(args.threads);

  miadyn::pipeline::RunOptions options;
  options.force = args.force;
  if (!args.quiet) options.log = [](const std::string& line) { std::cerr << line << "\n"; };
  auto manifest = miadyn::pipeline::RunPipeline(*cfg, cfg->output_dir, options,
                                                stage == "pipeline" ? "" : stage);
  if (!manifest.ok()) {
    std::cerr << "error: " << manifest.status().message() << "\n";
    return kExitStageFailure;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Membership-inference vulnerability dynamics toolkit"};
  app.set_version_flag("--version", std::string(MIADYN_VERSION));
  app.require_subcommand(1);

  Args args;
  std::string chosen;
  const std::pair<const char*, const char*> commands[] = {
      {"gen-data", "generate or load the sample pool and plan shadow membership"},
      {"train", "train the shadow population and log per-sample scores"},
      {"attack", "estimate per-sample vulnerability states at every checkpoint"},
      {"dynamics", "population metrics, transitions, exposure and travel strata"},
      {"hardness", "per-sample hardness metrics"},
      {"correlate", "correlate hardness with advantage and encoding speed"},
      {"report", "render planes, curves and loss histograms as SVG"},
      {"pipeline", "run every stage in order"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", args.config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", args.out, "output directory (overrides output_dir)");
    sub->add_option("--threads", args.threads, "worker thread cap (default: MIADYN_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--force", args.force, "recompute even when outputs are up to date");
    sub->add_flag("--quiet", args.quiet, "suppress progress lines");
    sub->callback([&chosen, name = std::string(name)] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }
  return Run(chosen, args);
}
