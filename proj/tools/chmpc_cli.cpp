// Copyright (c) 2026 The chmpc Authors.
// All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>
#include <string>

#include "chmpc/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Current-harnessing MPC for an underactuated 6-DOF underwater vehicle"};
  app.require_subcommand(1);

  std::string config, out = "out";

  auto* run = app.add_subcommand("run", "Closed-loop run in the configured mode");
  run->add_option("--config", config, "Scenario config file")->required();
  run->add_option("--out", out, "Output directory");

  auto* cmp = app.add_subcommand("compare", "Paired baseline vs harnessing runs");
  cmp->add_option("--config", config, "Scenario config file")->required();
  cmp->add_option("--out", out, "Output directory");

  auto* fit = app.add_subcommand("fit-thruster", "Fit the bi-directional power law");
  fit->add_option("--config", config, "Calibration table (THRUSTCAL v1)")->required();
  fit->add_option("--out", out, "Output directory");

  auto* chk = app.add_subcommand("check", "Derivative, DARE and allocation self-checks");
  chk->add_option("--config", config, "Scenario config file")->required();
  chk->add_option("--out", out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return chmpc::cmd_run(config, out);
  if (cmp->parsed()) return chmpc::cmd_compare(config, out);
  if (fit->parsed()) return chmpc::cmd_fit_thruster(config, out);
  if (chk->parsed()) return chmpc::cmd_check(config, out);
  return 1;
}
