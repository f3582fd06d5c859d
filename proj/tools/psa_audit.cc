/*
 * Copyright 2026 The PSA Audit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// psa_audit: command-line driver for name-perturbation sensitivity audits.

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "psa/config.h"
#include "psa/errors.h"
#include "psa/pipeline.h"

namespace {

enum ExitCode {
  kOk = 0,
  kInputError = 1,
  kConfigError = 2,
  kTransportError = 3,
  kPartialMatrix = 4,
  kProtocolError = 5,
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Name perturbation sensitivity audit for text classifiers"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::optional<uint64_t> seed;
  bool allow_partial = false, obfuscate = false, match_gender = false;
  bool skip_malformed = false, print_config = false, quiet = false;
  app.add_option("--config", config_path, "Audit config (JSON)");
  app.add_option("--seed", seed, "Override extraction.seed");
  app.add_flag("--allow-partial", allow_partial,
               "Analyze matrices with failed cells (pairwise deletion)");
  app.add_flag("--obfuscate-names", obfuscate,
               "Replace names with stable labels P01.. in reports");
  app.add_flag("--match-gender", match_gender,
               "Only pair names with anchors of the same gender");
  app.add_flag("--skip-malformed", skip_malformed,
               "Skip malformed corpus records instead of aborting");
  app.add_flag("--print-config", print_config,
               "Print the effective config with all defaults and exit");
  app.add_flag("-q,--quiet", quiet, "No progress output");

  const std::vector<std::pair<std::string, std::string>> stages = {
      {"extract", "Select anchored sentences from the corpus"},
      {"perturb", "Render the sentence x name grid"},
      {"score", "Score base and perturbed sentences"},
      {"analyze", "Compute sensitivity metrics from the score matrix"},
      {"report", "Write report.json and the CSV bundle"},
      {"run", "Run every stage in order"},
  };
  for (const auto& [name, help] : stages) {
    app.add_subcommand(name, help)->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);

  std::string stage;
  for (const auto* sub : app.get_subcommands()) stage = sub->get_name();
  if (stage.empty() && !print_config) {
    std::cerr << app.help();
    return kConfigError;
  }

  try {
    if (print_config && config_path.empty()) {
      std::cout << psa::ConfigToJson(psa::AuditConfig{}).dump(2) << '\n';
      return kOk;
    }
    if (config_path.empty()) {
      throw psa::ConfigError("--config", "a config file is required");
    }
    psa::AuditConfig config = psa::LoadConfig(config_path);
    if (seed) config.extraction.seed = *seed;
    config.flags.allow_partial |= allow_partial;
    config.flags.obfuscate_names |= obfuscate;
    config.flags.match_gender |= match_gender;
    config.flags.skip_malformed |= skip_malformed;

    psa::StageOptions options;
    if (!quiet) options.log = &std::cerr;
    if (const char* dir = std::getenv("PSA_CACHE_DIR"); dir && *dir) {
      options.cache_dir = dir;
      config.cache_dir = dir;
    }
    if (print_config) {
      std::cout << psa::ConfigToJson(config).dump(2) << '\n';
      return kOk;
    }
    config.Validate();

    if (stage == "extract") {
      psa::RunExtract(config, options);
    } else if (stage == "perturb") {
      psa::RunPerturb(config, options);
    } else if (stage == "score") {
      psa::RunScore(config, options);
    } else if (stage == "analyze") {
      psa::RunAnalyze(config, options);
    } else if (stage == "report") {
      psa::RunReport(config, options);
    } else {
      psa::RunAll(config, options);
    }
    return kOk;
  } catch (const psa::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const psa::PartialMatrixError& e) {
    std::cerr << stage << ": partial matrix: " << e.what() << '\n';
    return kPartialMatrix;
  } catch (const psa::TransportError& e) {
    std::cerr << stage << ": transport error: " << e.what() << '\n';
    return kTransportError;
  } catch (const psa::ProtocolError& e) {
    std::cerr << stage << ": protocol error: " << e.what() << '\n';
    return kProtocolError;
  } catch (const std::exception& e) {
    std::cerr << stage << ": " << e.what() << '\n';
    return kInputError;
  }
}
