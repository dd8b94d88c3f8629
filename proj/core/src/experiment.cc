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

#include "fedsim/experiment.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "fedsim/error.h"
#include "fedsim/logging.h"
#include "fedsim/metrics.h"
#include "fedsim/random.h"

namespace fedsim {
namespace {

// Stream tags for DeriveSeed.
enum SeedTag : std::uint64_t {
  kTagPartition = 1,
  kTagShards,
  kTagInit,
  kTagPretrain,
  kTagSeeds,
  kTagRounds,
  kTagTrain,
  kTagMask,
};

void ConfigError(const std::string& field, const std::string& what) {
  ThrowError(ErrorCode::kConfig, field + ": " + what);
}

struct UserWindows {
  std::string user_id;
  std::vector<FeatureSample> samples;  // raw (unstandardized) features
};

std::vector<UserWindows> ExtractAll(const data::Dataset& dataset,
                                    const ExperimentConfig& cfg) {
  std::vector<UserWindows> out;
  std::uint64_t next_id = 0;
  for (const auto& stream : dataset.streams) {
    UserWindows uw;
    uw.user_id = stream.user_id;
    for (const auto& w : Segment(stream, cfg.window_len, cfg.overlap)) {
      uw.samples.push_back(ExtractFeatures(w, next_id++));
    }
    out.push_back(std::move(uw));
  }
  return out;
}

double EvaluateF1(const nn::ModelWeights& weights,
                  std::span<const FeatureSample> samples, std::size_t n_classes) {
  ConfusionMatrix cm(n_classes);
  for (const auto& s : samples) {
    cm.Add(s.true_label, nn::Forward(weights, s.features).top_class);
  }
  return cm.MacroF1();
}

NodeConfig MakeNodeConfig(const ExperimentConfig& cfg) {
  NodeConfig nc;
  nc.personal_layers = cfg.personal_layers;
  nc.adam = cfg.adam;
  nc.propagation = cfg.propagation;
  nc.al_step = cfg.al_step;
  nc.question_size = cfg.question_size;
  switch (cfg.ablation) {
    case Ablation::kFull:
    case Ablation::kAlOnly:
      break;
    case Ablation::kLpOnly:
      nc.active_learning = false;
      break;
    case Ablation::kFullLabelsFedAvg:
      nc.active_learning = false;
      nc.personal_layers = 0;
      break;
    case Ablation::kNoPersonalization:
      nc.personal_layers = 0;
      break;
  }
  return nc;
}

bool UsesPropagation(Ablation a) {
  return a == Ablation::kFull || a == Ablation::kLpOnly ||
         a == Ablation::kNoPersonalization;
}

template <typename F>
double MeanOver(const ExperimentReport& r, F&& f) {
  if (r.repeats.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& rep : r.repeats) sum += f(rep);
  return sum / static_cast<double>(r.repeats.size());
}

RepeatRecord RunRepeat(const ExperimentConfig& cfg, const data::Dataset& dataset,
                       std::span<const UserWindows> all_windows, std::size_t repeat,
                       const RunHooks& hooks) {
  const std::uint64_t seed = cfg.master_seed + repeat;
  const std::size_t n_classes = dataset.n_classes();
  RepeatRecord rec;
  rec.repeat = repeat;
  rec.seed = seed;

  std::vector<std::string> users;
  std::map<std::string, const UserWindows*> by_user;
  for (const auto& uw : all_windows) {
    users.push_back(uw.user_id);
    by_user[uw.user_id] = &uw;
  }
  const UserPartition part =
      PartitionUsers(users, cfg.fractions, DeriveSeed(seed, {kTagPartition}));
  rec.n_pt = part.pt.size();
  rec.n_tr = part.tr.size();
  rec.n_ts = part.ts.size();

  std::vector<FeatureSample> pt_samples;
  for (const auto& u : part.pt) {
    for (FeatureSample s : by_user.at(u)->samples) {
      s.origin = DataOrigin::kPretraining;
      pt_samples.push_back(std::move(s));
    }
  }
  PretrainResult pre = Pretrain(pt_samples, n_classes, cfg, seed);
  GlobalModelState& global = pre.global;

  std::vector<FeatureSample> ts_samples;
  for (const auto& u : part.ts) {
    for (const auto& s : by_user.at(u)->samples) {
      FeatureSample z = global.standardizer.Apply(s);
      z.origin = DataOrigin::kTest;
      ts_samples.push_back(std::move(z));
    }
  }
  rec.ts_baseline_f1 = EvaluateF1(global.weights, ts_samples, n_classes);

  // Tr clients, their standardized windows, and their shards.
  const NodeConfig node_cfg = MakeNodeConfig(cfg);
  std::vector<ClientNode> clients;
  std::vector<std::vector<FeatureSample>> client_windows;
  std::vector<std::vector<std::vector<std::size_t>>> client_shards;
  for (std::size_t i = 0; i < part.tr.size(); ++i) {
    const UserWindows& uw = *by_user.at(part.tr[i]);
    if (uw.samples.size() < cfg.shards) {
      ThrowError(ErrorCode::kConfig,
                 "user " + uw.user_id + " has " + std::to_string(uw.samples.size()) +
                     " windows, fewer than shards=" + std::to_string(cfg.shards));
    }
    clients.emplace_back(i, global, node_cfg);
    clients.back().InstallPretrainingSeeds(pre.seeds);
    std::vector<FeatureSample> windows;
    for (const auto& s : uw.samples) {
      FeatureSample z = global.standardizer.Apply(s);
      z.origin = DataOrigin::kTraining;
      windows.push_back(std::move(z));
    }
    client_windows.push_back(std::move(windows));
    client_shards.push_back(
        MakeShards(uw.samples.size(), cfg.shards, DeriveSeed(seed, {kTagShards, i})));
  }

  fed::RoundOptions round_opts;
  round_opts.round = cfg.round;
  round_opts.round.seed = DeriveSeed(seed, {kTagRounds});
  round_opts.epochs = cfg.epochs;
  round_opts.batch_size = cfg.batch_size;
  round_opts.weighting = cfg.weighting;
  round_opts.mask_scale = cfg.mask_scale;
  round_opts.label_propagation = UsesPropagation(cfg.ablation);
  round_opts.train_seed = DeriveSeed(seed, {kTagTrain});
  round_opts.mask_seed = DeriveSeed(seed, {kTagMask});
  round_opts.threads = cfg.threads;

  auto notify = [&](HarnessEvent ev) {
    if (hooks.observer) {
      ev.repeat = repeat;
      hooks.observer(ev);
    }
  };

  for (std::size_t shard = 0; shard < cfg.shards; ++shard) {
    ShardRecord sr;
    sr.shard = shard + 1;
    ConfusionMatrix cm(n_classes);

    // (1) Every Tr device classifies its shard with its personalized model.
    for (std::size_t c = 0; c < clients.size(); ++c) {
      ClientNode& node = clients[c];
      const auto asked_before = node.al_state().questions_asked;
      const auto seen_before = node.al_state().windows_seen;
      for (std::size_t idx : client_shards[c][shard]) {
        const FeatureSample& sample = client_windows[c][idx];
        notify({HarnessEvent::Kind::kClassify, 0, shard, c, sample.origin, {}});
        const std::uint64_t window_id = sample.window_id;
        const std::size_t truth = sample.true_label;
        const ClassifyResult res = node.ClassifyWindow(sample);
        cm.Add(truth, res.prediction.top_class);
        if (cfg.ablation == Ablation::kFullLabelsFedAvg) {
          node.LabelWindow(window_id, truth);
        } else if (res.question) {
          // The simulated user always answers with the true activity.
          node.AnswerQuestion(window_id, truth);
        }
      }
      sr.questions += node.al_state().questions_asked - asked_before;
      sr.windows += node.al_state().windows_seen - seen_before;
    }
    sr.tr_f1 = cm.MacroF1();
    sr.question_rate = sr.windows == 0 ? 0.0
                                       : static_cast<double>(sr.questions) /
                                             static_cast<double>(sr.windows);
    for (std::size_t k = 0; k < n_classes; ++k) sr.tr_class_f1.push_back(cm.ClassF1(k));
    sr.ts_f1_start = EvaluateF1(global.weights, ts_samples, n_classes);

    // (2) Communication rounds, each followed by a generalization check.
    double best_ts = sr.ts_f1_start;
    std::size_t stale = 0;
    for (std::size_t r = 0; r < cfg.round.rounds; ++r) {
      const std::uint64_t round_index = shard * cfg.round.rounds + r;
      const fed::RoundMetrics m =
          fed::RunRound(global, clients, round_opts, round_index);
      notify({HarnessEvent::Kind::kRound, 0, shard, 0, DataOrigin::kTraining, {}});
      RoundRecord rr;
      rr.round = r + 1;
      rr.ts_f1 = EvaluateF1(global.weights, ts_samples, n_classes);
      rr.participants = m.participants.size();
      rr.labeled_samples = m.labeled_samples;
      rr.propagated = m.propagated;
      rr.aggregated = m.aggregated;
      sr.rounds.push_back(rr);
      if (cfg.early_stop_patience > 0) {
        if (rr.ts_f1 > best_ts + cfg.early_stop_min_delta) {
          best_ts = rr.ts_f1;
          stale = 0;
        } else if (++stale >= cfg.early_stop_patience) {
          break;
        }
      }
    }

    // (3) Final global weights reach every Tr device, which personalizes.
    for (auto& node : clients) node.ApplyGlobalUpdate(global);
    notify({HarnessEvent::Kind::kBroadcast, 0, shard, 0, DataOrigin::kTraining, {}});
    notify({HarnessEvent::Kind::kShardEnd, 0, shard, 0, DataOrigin::kTraining, clients});
    rec.shards.push_back(std::move(sr));
  }
  rec.final_global = global.weights;
  return rec;
}

}  // namespace

std::string AblationName(Ablation a) {
  switch (a) {
    case Ablation::kFull:
      return "full";
    case Ablation::kAlOnly:
      return "al_only";
    case Ablation::kLpOnly:
      return "lp_only";
    case Ablation::kFullLabelsFedAvg:
      return "full_labels_fedavg";
    case Ablation::kNoPersonalization:
      return "no_personalization";
  }
  return "unknown";
}

std::optional<Ablation> ParseAblation(std::string_view name) {
  for (Ablation a : AllAblations()) {
    if (AblationName(a) == name) return a;
  }
  return std::nullopt;
}

std::vector<Ablation> AllAblations() {
  return {Ablation::kFull, Ablation::kAlOnly, Ablation::kLpOnly,
          Ablation::kFullLabelsFedAvg, Ablation::kNoPersonalization};
}

void ExperimentConfig::Validate() const {
  const auto& f = fractions;
  if (!(f.pt > 0.0)) ConfigError("partition.pt", "must be > 0");
  if (!(f.tr > 0.0)) ConfigError("partition.tr", "must be > 0");
  if (!(f.ts > 0.0)) ConfigError("partition.ts", "must be > 0");
  if (std::abs(f.pt + f.tr + f.ts - 1.0) > 1e-9) {
    ConfigError("partition", "fractions must sum to 1");
  }
  if (shards < 1) ConfigError("shards", "must be >= 1");
  if (!(round.client_fraction > 0.0 && round.client_fraction <= 1.0)) {
    ConfigError("federation.client_fraction", "must be in (0, 1]");
  }
  if (repeats < 1) ConfigError("repeats", "must be >= 1");
  if (hidden.empty()) ConfigError("network.hidden", "must list at least one layer");
  for (std::size_t h : hidden) {
    if (h == 0) ConfigError("network.hidden", "layer widths must be >= 1");
  }
  if (personal_layers > hidden.size() + 1) {
    ConfigError("personal_layers", "exceeds the number of weight-bearing layers (" +
                                       std::to_string(hidden.size() + 1) + ")");
  }
  if (!(adam.learning_rate > 0.0)) ConfigError("network.learning_rate", "must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) ConfigError("network.beta1", "must be in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) ConfigError("network.beta2", "must be in [0, 1)");
  if (!(adam.epsilon > 0.0)) ConfigError("network.epsilon", "must be > 0");
  if (batch_size < 1) ConfigError("network.batch_size", "must be >= 1");
  if (!(al_step > 0.0 && al_step < 1.0)) ConfigError("active_learning.step", "must be in (0, 1)");
  if (question_size < 1) ConfigError("active_learning.k", "must be >= 1");
  if (!(propagation.gamma > 0.0)) ConfigError("propagation.gamma", "must be > 0");
  if (!(propagation.reliability_threshold > 0.5 && propagation.reliability_threshold < 1.0)) {
    ConfigError("propagation.reliability_threshold", "must be in (0.5, 1)");
  }
  if (propagation.max_size < 1) ConfigError("propagation.max_size", "must be >= 1");
  if (!(propagation.mass_floor >= 0.0)) ConfigError("propagation.mass_floor", "must be >= 0");
  if (window_len < 4) ConfigError("features.window_len", "must be >= 4");
  if (!(overlap >= 0.0 && overlap < 1.0)) ConfigError("features.overlap", "must be in [0, 1)");
  if (!(mask_scale > 0.0)) ConfigError("federation.mask_scale", "must be > 0");
  if (threads < 1) ConfigError("threads", "must be >= 1");
}

UserPartition PartitionUsers(std::span<const std::string> users,
                             const PartitionFractions& fractions,
                             std::uint64_t seed) {
  std::vector<std::string> order(users.begin(), users.end());
  std::sort(order.begin(), order.end());
  Rng rng(seed);
  rng.Shuffle(std::span<std::string>(order));
  const std::size_t n = order.size();
  auto count = [n](double f) {
    return std::min(n, static_cast<std::size_t>(std::llround(f * static_cast<double>(n))));
  };
  const std::size_t n_pt = count(fractions.pt);
  const std::size_t n_ts = std::min(n - n_pt, count(fractions.ts));
  UserPartition p;
  p.pt.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_pt));
  p.ts.assign(order.begin() + static_cast<std::ptrdiff_t>(n_pt),
              order.begin() + static_cast<std::ptrdiff_t>(n_pt + n_ts));
  p.tr.assign(order.begin() + static_cast<std::ptrdiff_t>(n_pt + n_ts), order.end());
  return p;
}

std::vector<std::vector<std::size_t>> MakeShards(std::size_t n_items,
                                                 std::size_t shards,
                                                 std::uint64_t seed) {
  if (shards < 1) ThrowError(ErrorCode::kConfig, "shards must be >= 1");
  std::vector<std::size_t> perm(n_items);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  rng.Shuffle(std::span<std::size_t>(perm));
  std::vector<std::vector<std::size_t>> out(shards);
  const std::size_t base = n_items / shards, extra = n_items % shards;
  std::size_t pos = 0;
  for (std::size_t s = 0; s < shards; ++s) {
    const std::size_t len = base + (s < extra ? 1 : 0);
    out[s].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                  perm.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return out;
}

PretrainResult Pretrain(std::span<const FeatureSample> pt_samples,
                        std::size_t n_classes, const ExperimentConfig& cfg,
                        std::uint64_t seed) {
  if (pt_samples.empty()) {
    ThrowError(ErrorCode::kConfig, "pre-training partition has no samples");
  }
  PretrainResult out;
  out.global.standardizer = Standardizer::Fit(pt_samples);

  std::vector<FeatureSample> standardized;
  standardized.reserve(pt_samples.size());
  for (const auto& s : pt_samples) {
    FeatureSample z = out.global.standardizer.Apply(s);
    z.origin = DataOrigin::kPretraining;
    z.assigned_label = z.true_label;
    z.label_source = LabelSource::kPretraining;
    standardized.push_back(std::move(z));
  }

  out.global.weights = nn::BuildNetwork(standardized.front().features.size(), n_classes,
                                        cfg.hidden, DeriveSeed(seed, {kTagInit}));
  std::vector<nn::Example> data;
  data.reserve(standardized.size());
  for (const auto& s : standardized) data.push_back({s.features, s.true_label});
  nn::AdamState adam = nn::AdamState::For(out.global.weights, cfg.adam);
  nn::Train(out.global.weights, adam, data,
            {cfg.pretrain_epochs, cfg.batch_size, DeriveSeed(seed, {kTagPretrain})});
  out.global.weights.version = 0;

  // Class-stratified: round-robin over classes, each class list shuffled.
  const std::size_t quota = std::min(cfg.seed_samples, standardized.size());
  std::vector<std::vector<std::size_t>> per_class(n_classes);
  for (std::size_t i = 0; i < standardized.size(); ++i) {
    per_class.at(standardized[i].true_label).push_back(i);
  }
  Rng rng(DeriveSeed(seed, {kTagSeeds}));
  for (auto& idx : per_class) rng.Shuffle(std::span<std::size_t>(idx));
  std::vector<std::size_t> cursor(n_classes, 0);
  std::vector<std::size_t> chosen;
  while (chosen.size() < quota) {
    for (std::size_t c = 0; c < n_classes && chosen.size() < quota; ++c) {
      if (cursor[c] < per_class[c].size()) chosen.push_back(per_class[c][cursor[c]++]);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t i : chosen) out.seeds.push_back(standardized[i]);
  return out;
}

ExperimentReport RunExperiment(const ExperimentConfig& cfg,
                               const data::Dataset& dataset, const RunHooks& hooks) {
  cfg.Validate();
  if (dataset.n_classes() < 2) {
    ThrowError(ErrorCode::kConfig, "dataset needs at least 2 activity classes");
  }
  if (dataset.streams.empty()) ThrowError(ErrorCode::kConfig, "dataset has no users");
  if (cfg.personal_layers > cfg.hidden.size() + 1) {
    ThrowError(ErrorCode::kConfig, "personal_layers exceeds network depth");
  }
  const auto windows = ExtractAll(dataset, cfg);

  ExperimentReport report;
  report.ablation = cfg.ablation;
  report.class_names = dataset.class_names;
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    log::Info("repeat " + std::to_string(r + 1) + "/" + std::to_string(cfg.repeats) +
              " (" + AblationName(cfg.ablation) + ")");
    report.repeats.push_back(RunRepeat(cfg, dataset, windows, r, hooks));
  }
  return report;
}

double ExperimentReport::MeanTrF1(std::size_t shard) const {
  return MeanOver(*this, [&](const RepeatRecord& r) { return r.shards.at(shard - 1).tr_f1; });
}

double ExperimentReport::MeanQuestionRate(std::size_t shard) const {
  return MeanOver(*this, [&](const RepeatRecord& r) {
    return r.shards.at(shard - 1).question_rate;
  });
}

double ExperimentReport::MeanTsBaseline() const {
  return MeanOver(*this, [](const RepeatRecord& r) { return r.ts_baseline_f1; });
}

double ExperimentReport::MeanFinalTsF1() const {
  return MeanOver(*this, [](const RepeatRecord& r) {
    const ShardRecord& last = r.shards.back();
    return last.rounds.empty() ? last.ts_f1_start : last.rounds.back().ts_f1;
  });
}

}  // namespace fedsim
