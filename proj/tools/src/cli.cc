// Copyright 2026 The fedsim Authors
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

#include "fedsim/tools/cli.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "fedsim/config.h"
#include "fedsim/data.h"
#include "fedsim/error.h"
#include "fedsim/experiment.h"
#include "fedsim/features.h"
#include "fedsim/logging.h"
#include "fedsim/nn.h"

namespace fedsim::cli {
namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> output;
};

void AddCommonFlags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON run configuration")->required();
  cmd->add_option("--seed", flags.seed, "Master seed (overrides the config)");
  cmd->add_option("--threads", flags.threads, "Worker threads for client training")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--output", flags.output, "Output directory (overrides the config)");
}

// Flag > file > default.
RunConfig ResolveConfig(const CommonFlags& flags) {
  RunConfig cfg = LoadRunConfig(flags.config_path);
  if (flags.seed) cfg.experiment.master_seed = *flags.seed;
  if (flags.threads) cfg.experiment.threads = *flags.threads;
  if (flags.output) cfg.output_dir = fs::absolute(*flags.output).lexically_normal();
  cfg.experiment.Validate();
  return cfg;
}

void WriteFile(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  out << contents;
  if (!out) ThrowError(ErrorCode::kIo, "cannot write " + path.string());
}

void PrepareOutputDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) ThrowError(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

std::string Fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

int Simulate(const CommonFlags& flags, bool save_model, std::ostream& out) {
  const RunConfig cfg = ResolveConfig(flags);
  const data::Dataset dataset = data::Load(cfg.dataset, cfg.experiment.master_seed);
  PrepareOutputDir(cfg.output_dir);
  // Written first so a failed run still leaves the configuration behind.
  WriteFile(cfg.output_dir / "resolved-config.json", ResolvedConfigJson(cfg) + "\n");

  const ExperimentReport report = RunExperiment(cfg.experiment, dataset);
  WriteFile(cfg.output_dir / "metrics.csv", ReportCsv(report));
  WriteFile(cfg.output_dir / "summary.json", ReportSummaryJson(report) + "\n");
  if (save_model && !report.repeats.empty()) {
    nn::SaveBinary(report.repeats.front().final_global, cfg.output_dir / "global_model.bin");
  }

  out << "ablation " << AblationName(report.ablation) << ", " << report.repeats.size()
      << " repeat(s)\n";
  out << "Ts macro-F1: pretrained " << Fixed(report.MeanTsBaseline()) << ", final "
      << Fixed(report.MeanFinalTsF1()) << "\n";
  for (std::size_t s = 1; s <= cfg.experiment.shards; ++s) {
    out << "shard " << s << ": Tr macro-F1 " << Fixed(report.MeanTrF1(s))
        << ", question rate " << Fixed(report.MeanQuestionRate(s)) << "\n";
  }
  out << "wrote " << cfg.output_dir.string() << "\n";
  return kExitOk;
}

int Ablate(const CommonFlags& flags, std::ostream& out) {
  const RunConfig cfg = ResolveConfig(flags);
  const data::Dataset dataset = data::Load(cfg.dataset, cfg.experiment.master_seed);
  PrepareOutputDir(cfg.output_dir);
  WriteFile(cfg.output_dir / "resolved-config.json", ResolvedConfigJson(cfg) + "\n");

  std::ostringstream csv;
  csv << "variant,repeat,shard,tr_macro_f1,question_rate,ts_macro_f1\n";
  out << "variant              shard  tr_macro_f1  question_rate  ts_macro_f1\n";
  for (Ablation variant : AllAblations()) {
    ExperimentConfig ec = cfg.experiment;
    ec.ablation = variant;
    const ExperimentReport report = RunExperiment(ec, dataset);
    const std::string name = AblationName(variant);
    std::vector<double> ts_sum(ec.shards, 0.0);
    for (const auto& rep : report.repeats) {
      for (const auto& sh : rep.shards) {
        const double ts = sh.rounds.empty() ? sh.ts_f1_start : sh.rounds.back().ts_f1;
        ts_sum[sh.shard - 1] += ts;
        csv << name << ',' << rep.repeat << ',' << sh.shard << ',' << sh.tr_f1 << ','
            << sh.question_rate << ',' << ts << '\n';
      }
    }
    const double n = static_cast<double>(std::max<std::size_t>(1, report.repeats.size()));
    for (std::size_t s = 1; s <= ec.shards; ++s) {
      const double ts = ts_sum[s - 1] / n;
      csv << name << ",mean," << s << ',' << report.MeanTrF1(s) << ','
          << report.MeanQuestionRate(s) << ',' << ts << '\n';
      char line[128];
      std::snprintf(line, sizeof(line), "%-20s %5zu  %11s  %13s  %11s\n", name.c_str(), s,
                    Fixed(report.MeanTrF1(s)).c_str(),
                    Fixed(report.MeanQuestionRate(s)).c_str(), Fixed(ts).c_str());
      out << line;
    }
  }
  WriteFile(cfg.output_dir / "ablation.csv", csv.str());
  out << "wrote " << (cfg.output_dir / "ablation.csv").string() << "\n";
  return kExitOk;
}

int Validate(const CommonFlags& flags, std::ostream& out) {
  const RunConfig cfg = ResolveConfig(flags);
  const data::Dataset dataset = data::Load(cfg.dataset, cfg.experiment.master_seed);
  const auto& ec = cfg.experiment;

  std::vector<std::size_t> class_windows(dataset.n_classes(), 0);
  out << "source " << data::SourceName(cfg.dataset.source) << ", "
      << dataset.streams.size() << " users, " << dataset.n_classes() << " classes\n";
  if (dataset.skipped_lines > 0) {
    out << "skipped malformed records: " << dataset.skipped_lines << "\n";
  }
  if (dataset.filtered_samples > 0) {
    out << "filtered samples (activity not listed): " << dataset.filtered_samples << "\n";
  }
  out << "user        windows\n";
  std::optional<std::string> short_user;
  std::size_t short_count = 0;
  for (const auto& stream : dataset.streams) {
    const auto windows = Segment(stream, ec.window_len, ec.overlap);
    for (const auto& w : windows) ++class_windows.at(w.true_label);
    char line[96];
    std::snprintf(line, sizeof(line), "%-10s %8zu\n", stream.user_id.c_str(), windows.size());
    out << line;
    if (windows.size() < ec.shards && !short_user) {
      short_user = stream.user_id;
      short_count = windows.size();
    }
  }
  out << "class                 windows\n";
  for (std::size_t c = 0; c < class_windows.size(); ++c) {
    char line[96];
    std::snprintf(line, sizeof(line), "%-20s %8zu\n", dataset.class_names[c].c_str(),
                  class_windows[c]);
    out << line;
  }
  if (short_user) {
    ThrowError(ErrorCode::kConfig, "user " + *short_user + " has " +
                                       std::to_string(short_count) +
                                       " windows, fewer than shards=" +
                                       std::to_string(ec.shards));
  }
  for (std::size_t c = 0; c < class_windows.size(); ++c) {
    if (class_windows[c] == 0) {
      ThrowError(ErrorCode::kFormat, "class " + dataset.class_names[c] + " has no windows");
    }
  }
  out << "ok\n";
  return kExitOk;
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
      return kExitConfig;
    case ErrorCode::kIo:
    case ErrorCode::kFormat:
      return kExitData;
    case ErrorCode::kNumeric:
      return kExitNumeric;
    case ErrorCode::kShape:
    case ErrorCode::kState:
      break;
  }
  return kExitOther;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Personalized semi-supervised federated HAR simulator", "fedsim"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "fedsim 0.1.0");

  CommonFlags sim_flags, ablate_flags, validate_flags;
  bool save_model = false;
  CLI::App* sim = app.add_subcommand("simulate", "Run the experiment and write metrics");
  AddCommonFlags(sim, sim_flags);
  sim->add_flag("--save-model", save_model,
                "Also write the first repeat's final global model (global_model.bin)");
  CLI::App* ablate = app.add_subcommand("ablate", "Run every ablation variant and compare");
  AddCommonFlags(ablate, ablate_flags);
  CLI::App* validate = app.add_subcommand("validate", "Check the config and dataset only");
  AddCommonFlags(validate, validate_flags);

  // CLI11 wants argv order reversed when parsing from a vector.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (*sim) return Simulate(sim_flags, save_model, out);
    if (*ablate) return Ablate(ablate_flags, out);
    if (*validate) return Validate(validate_flags, out);
  } catch (const Error& e) {
    err << "error (" << ErrorCodeName(e.code()) << "): " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOther;
}

}  // namespace fedsim::cli
