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

#include <charconv>
#include <cmath>
#include <sstream>

#include "fedsim/experiment.h"
#include "json.hpp"

namespace fedsim {
namespace {

// Shortest representation that parses back to the same double, so reports
// from identical runs are byte-identical and lossless.
std::string Num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd Summarize(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

nlohmann::json ToJson(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

}  // namespace

std::string ReportCsv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "repeat,shard,round,split,metric,activity,value\n";
  auto row = [&](std::size_t repeat, std::size_t shard, std::size_t round,
                 const char* split, const char* metric, const std::string& activity,
                 double value) {
    out << repeat << ',' << shard << ',' << round << ',' << split << ',' << metric << ','
        << activity << ',' << Num(value) << '\n';
  };
  for (const auto& rep : report.repeats) {
    for (const auto& sh : rep.shards) {
      row(rep.repeat, sh.shard, 0, "Tr", "macro_f1", "", sh.tr_f1);
      row(rep.repeat, sh.shard, 0, "Tr", "question_rate", "", sh.question_rate);
      row(rep.repeat, sh.shard, 0, "Ts", "macro_f1", "", sh.ts_f1_start);
      for (std::size_t c = 0; c < sh.tr_class_f1.size(); ++c) {
        if (sh.tr_class_f1[c]) {
          row(rep.repeat, sh.shard, 0, "Tr", "f1", report.class_names.at(c), *sh.tr_class_f1[c]);
        }
      }
      for (const auto& rr : sh.rounds) {
        row(rep.repeat, sh.shard, rr.round, "Ts", "macro_f1", "", rr.ts_f1);
        row(rep.repeat, sh.shard, rr.round, "Tr", "participants", "",
            static_cast<double>(rr.participants));
        row(rep.repeat, sh.shard, rr.round, "Tr", "labeled_samples", "",
            static_cast<double>(rr.labeled_samples));
      }
    }
  }
  return out.str();
}

std::string ReportSummaryJson(const ExperimentReport& report) {
  nlohmann::json j;
  j["ablation"] = AblationName(report.ablation);
  j["repeats"] = report.repeats.size();
  j["class_names"] = report.class_names;

  std::vector<double> baseline, final_ts;
  for (const auto& rep : report.repeats) {
    baseline.push_back(rep.ts_baseline_f1);
    const auto& last = rep.shards.back();
    final_ts.push_back(last.rounds.empty() ? last.ts_f1_start : last.rounds.back().ts_f1);
  }
  j["ts_baseline_macro_f1"] = ToJson(Summarize(baseline));
  j["ts_final_macro_f1"] = ToJson(Summarize(final_ts));

  const std::size_t n_shards = report.repeats.empty() ? 0 : report.repeats.front().shards.size();
  j["shards"] = nlohmann::json::array();
  for (std::size_t s = 0; s < n_shards; ++s) {
    std::vector<double> f1, qr;
    std::size_t max_rounds = 0;
    for (const auto& rep : report.repeats) {
      f1.push_back(rep.shards[s].tr_f1);
      qr.push_back(rep.shards[s].question_rate);
      max_rounds = std::max(max_rounds, rep.shards[s].rounds.size());
    }
    nlohmann::json js;
    js["shard"] = s + 1;
    js["tr_macro_f1"] = ToJson(Summarize(f1));
    js["question_rate"] = ToJson(Summarize(qr));

    nlohmann::json activity = nlohmann::json::object();
    for (std::size_t c = 0; c < report.class_names.size(); ++c) {
      std::vector<double> xs;
      for (const auto& rep : report.repeats) {
        if (rep.shards[s].tr_class_f1[c]) xs.push_back(*rep.shards[s].tr_class_f1[c]);
      }
      if (!xs.empty()) activity[report.class_names[c]] = ToJson(Summarize(xs));
    }
    js["tr_activity_f1"] = activity;

    js["ts_macro_f1_by_round"] = nlohmann::json::array();
    for (std::size_t r = 0; r < max_rounds; ++r) {
      std::vector<double> xs;
      for (const auto& rep : report.repeats) {
        if (r < rep.shards[s].rounds.size()) xs.push_back(rep.shards[s].rounds[r].ts_f1);
      }
      nlohmann::json jr = ToJson(Summarize(xs));
      jr["round"] = r + 1;
      js["ts_macro_f1_by_round"].push_back(jr);
    }
    j["shards"].push_back(js);
  }
  return j.dump(2);
}

}  // namespace fedsim
