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

#include "fedsim/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "fedsim/error.h"
#include "json.hpp"

namespace fedsim {
namespace {

using nlohmann::json;

[[noreturn]] void Fail(const std::string& path, const std::string& what) {
  ThrowError(ErrorCode::kConfig, path + ": " + what);
}

// Walks one JSON object, tracking which keys were consumed so that leftovers
// can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) Fail(Name(), "expected an object");
  }

  ObjectReader(const ObjectReader&) = delete;
  ObjectReader& operator=(const ObjectReader&) = delete;

  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() == 0) Finish();
  }

  std::string Path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* Find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void Get(const std::string& key, double& out) {
    if (const json* v = Find(key)) {
      if (!v->is_number()) Fail(Path(key), "expected a number");
      out = v->get<double>();
    }
  }

  // size_t and uint64_t are the same type on the supported platforms.
  void Get(const std::string& key, std::size_t& out) {
    static_assert(std::is_same_v<std::size_t, std::uint64_t>);
    if (const json* v = Find(key)) out = Count(*v, Path(key));
  }

  void Get(const std::string& key, std::string& out) {
    if (const json* v = Find(key)) {
      if (!v->is_string()) Fail(Path(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void Get(const std::string& key, std::vector<std::size_t>& out) {
    if (const json* v = Find(key)) {
      if (!v->is_array()) Fail(Path(key), "expected an array of counts");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        out.push_back(Count((*v)[i], Path(key) + "[" + std::to_string(i) + "]"));
      }
    }
  }

  void Get(const std::string& key, std::vector<std::string>& out) {
    if (const json* v = Find(key)) {
      if (!v->is_array()) Fail(Path(key), "expected an array of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) Fail(Path(key), "expected an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }

  void Get(const std::string& key, std::map<std::string, std::string>& out) {
    if (const json* v = Find(key)) {
      if (!v->is_object()) Fail(Path(key), "expected an object of strings");
      out.clear();
      for (const auto& [k, e] : v->items()) {
        if (!e.is_string()) Fail(Path(key) + "." + k, "expected a string");
        out[k] = e.get<std::string>();
      }
    }
  }

 private:
  std::string Name() const { return path_.empty() ? "<root>" : path_; }

  static std::uint64_t Count(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) Fail(path, "must be non-negative");
    Fail(path, "expected a non-negative integer");
  }

  void Finish() {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) Fail(Path(key), "unknown key");
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

data::DatasetSource ParseSource(const std::string& s, const std::string& path) {
  if (s == "synthetic") return data::DatasetSource::kSynthetic;
  if (s == "wisdm_raw") return data::DatasetSource::kWisdmRaw;
  if (s == "generic_csv") return data::DatasetSource::kGenericCsv;
  Fail(path, "unknown source '" + s + "' (expected synthetic, wisdm_raw or generic_csv)");
}

fed::Weighting ParseWeighting(const std::string& s, const std::string& path) {
  if (s == "sample_count") return fed::Weighting::kSampleCount;
  if (s == "uniform") return fed::Weighting::kUniform;
  Fail(path, "unknown weighting '" + s + "' (expected sample_count or uniform)");
}

std::string WeightingName(fed::Weighting w) {
  return w == fed::Weighting::kUniform ? "uniform" : "sample_count";
}

void ParseDataset(const json& j, RunConfig& cfg, std::size_t features_window_len) {
  ObjectReader r(j, "dataset");
  auto& m = cfg.dataset;
  std::string source;
  r.Get("source", source);
  if (source.empty()) Fail("dataset.source", "is required");
  m.source = ParseSource(source, "dataset.source");

  std::string path;
  r.Get("path", path);
  m.path = path;
  if (m.source != data::DatasetSource::kSynthetic && path.empty()) {
    Fail("dataset.path", "is required for source " + source);
  }
  if (!m.path.empty()) m.path = std::filesystem::absolute(m.path).lexically_normal();

  if (m.source == data::DatasetSource::kWisdmRaw) {
    // The five activities used for WISDM, with both stair directions merged.
    m.activities = {"walking", "jogging", "sitting", "standing", "stairs"};
    m.aliases = {{"upstairs", "stairs"}, {"downstairs", "stairs"}};
    m.columns.axes = {"x", "y", "z"};
  }
  if (const json* cols = r.Find("columns")) {
    ObjectReader c(*cols, "dataset.columns");
    c.Get("user", m.columns.user);
    c.Get("activity", m.columns.activity);
    c.Get("timestamp", m.columns.timestamp);
    c.Get("axes", m.columns.axes);
  }
  r.Get("sampling_rate_hz", m.sampling_rate_hz);
  r.Get("activities", m.activities);
  r.Get("aliases", m.aliases);

  m.synthetic.window_len = features_window_len;
  if (const json* s = r.Find("synthetic")) {
    ObjectReader sr(*s, "dataset.synthetic");
    sr.Get("n_users", m.synthetic.n_users);
    sr.Get("n_classes", m.synthetic.n_classes);
    sr.Get("windows_per_user", m.synthetic.windows_per_user);
    sr.Get("n_axes", m.synthetic.n_axes);
    sr.Get("window_len", m.synthetic.window_len);
    sr.Get("bout_windows", m.synthetic.bout_windows);
    sr.Get("user_variability", m.synthetic.user_variability);
    sr.Get("sampling_rate_hz", m.synthetic.sampling_rate_hz);
  }

  if (!(m.sampling_rate_hz > 0.0)) Fail("dataset.sampling_rate_hz", "must be > 0");
  if (m.source == data::DatasetSource::kSynthetic) {
    const auto& s = m.synthetic;
    if (s.n_users < 1) Fail("dataset.synthetic.n_users", "must be >= 1");
    if (s.n_classes < 2) Fail("dataset.synthetic.n_classes", "must be >= 2");
    if (s.n_axes < 1) Fail("dataset.synthetic.n_axes", "must be >= 1");
    if (s.windows_per_user < s.n_classes) {
      Fail("dataset.synthetic.windows_per_user", "must be >= n_classes");
    }
    if (s.window_len < 4) Fail("dataset.synthetic.window_len", "must be >= 4");
    if (s.bout_windows < 1) Fail("dataset.synthetic.bout_windows", "must be >= 1");
    if (!(s.user_variability >= 0.0)) Fail("dataset.synthetic.user_variability", "must be >= 0");
    if (!(s.sampling_rate_hz > 0.0)) Fail("dataset.synthetic.sampling_rate_hz", "must be > 0");
  } else {
    if (m.activities.empty()) Fail("dataset.activities", "must not be empty");
    if (m.columns.axes.empty()) Fail("dataset.columns.axes", "must name at least one column");
  }
}

}  // namespace

RunConfig ParseRunConfig(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    ThrowError(ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
  }

  RunConfig cfg;
  auto& e = cfg.experiment;
  {
    ObjectReader r(root, "");
    std::string output_dir;
    r.Get("output_dir", output_dir);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    cfg.output_dir = std::filesystem::absolute(cfg.output_dir).lexically_normal();

    r.Get("seed", e.master_seed);
    r.Get("repeats", e.repeats);
    r.Get("shards", e.shards);
    r.Get("personal_layers", e.personal_layers);
    r.Get("threads", e.threads);
    std::string ablation = AblationName(e.ablation);
    r.Get("ablation", ablation);
    if (auto a = ParseAblation(ablation)) {
      e.ablation = *a;
    } else {
      Fail("ablation", "unknown variant '" + ablation + "'");
    }

    if (const json* p = r.Find("partition")) {
      ObjectReader pr(*p, "partition");
      pr.Get("pt", e.fractions.pt);
      pr.Get("tr", e.fractions.tr);
      pr.Get("ts", e.fractions.ts);
    }
    if (const json* n = r.Find("network")) {
      ObjectReader nr(*n, "network");
      nr.Get("hidden", e.hidden);
      nr.Get("learning_rate", e.adam.learning_rate);
      nr.Get("beta1", e.adam.beta1);
      nr.Get("beta2", e.adam.beta2);
      nr.Get("epsilon", e.adam.epsilon);
      nr.Get("epochs", e.epochs);
      nr.Get("batch_size", e.batch_size);
      nr.Get("pretrain_epochs", e.pretrain_epochs);
    }
    if (const json* a = r.Find("active_learning")) {
      ObjectReader ar(*a, "active_learning");
      ar.Get("step", e.al_step);
      ar.Get("k", e.question_size);
    }
    if (const json* p = r.Find("propagation")) {
      ObjectReader pr(*p, "propagation");
      pr.Get("gamma", e.propagation.gamma);
      pr.Get("reliability_threshold", e.propagation.reliability_threshold);
      pr.Get("max_size", e.propagation.max_size);
      pr.Get("max_iterations", e.propagation.max_iterations);
      pr.Get("mass_floor", e.propagation.mass_floor);
      pr.Get("seed_samples", e.seed_samples);
    }
    if (const json* f = r.Find("features")) {
      ObjectReader fr(*f, "features");
      fr.Get("window_len", e.window_len);
      fr.Get("overlap", e.overlap);
    }
    if (const json* f = r.Find("federation")) {
      ObjectReader fr(*f, "federation");
      fr.Get("client_fraction", e.round.client_fraction);
      fr.Get("rounds", e.round.rounds);
      std::string weighting = WeightingName(e.weighting);
      fr.Get("weighting", weighting);
      e.weighting = ParseWeighting(weighting, "federation.weighting");
      fr.Get("mask_scale", e.mask_scale);
      fr.Get("early_stop_patience", e.early_stop_patience);
      fr.Get("early_stop_min_delta", e.early_stop_min_delta);
    }

    const json* d = r.Find("dataset");
    if (d == nullptr) Fail("dataset", "is required");
    ParseDataset(*d, cfg, e.window_len);
  }
  e.Validate();
  return cfg;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) ThrowError(ErrorCode::kIo, "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseRunConfig(ss.str());
}

std::string ResolvedConfigJson(const RunConfig& cfg) {
  const auto& e = cfg.experiment;
  const auto& m = cfg.dataset;
  json j;
  j["output_dir"] = cfg.output_dir.string();
  j["seed"] = e.master_seed;
  j["repeats"] = e.repeats;
  j["shards"] = e.shards;
  j["personal_layers"] = e.personal_layers;
  j["threads"] = e.threads;
  j["ablation"] = AblationName(e.ablation);
  j["partition"] = {{"pt", e.fractions.pt}, {"tr", e.fractions.tr}, {"ts", e.fractions.ts}};
  j["network"] = {{"hidden", e.hidden},
                  {"learning_rate", e.adam.learning_rate},
                  {"beta1", e.adam.beta1},
                  {"beta2", e.adam.beta2},
                  {"epsilon", e.adam.epsilon},
                  {"epochs", e.epochs},
                  {"batch_size", e.batch_size},
                  {"pretrain_epochs", e.pretrain_epochs}};
  j["active_learning"] = {{"step", e.al_step}, {"k", e.question_size}};
  j["propagation"] = {{"gamma", e.propagation.gamma},
                      {"reliability_threshold", e.propagation.reliability_threshold},
                      {"max_size", e.propagation.max_size},
                      {"max_iterations", e.propagation.max_iterations},
                      {"mass_floor", e.propagation.mass_floor},
                      {"seed_samples", e.seed_samples}};
  j["features"] = {{"window_len", e.window_len}, {"overlap", e.overlap}};
  j["federation"] = {{"client_fraction", e.round.client_fraction},
                     {"rounds", e.round.rounds},
                     {"weighting", WeightingName(e.weighting)},
                     {"mask_scale", e.mask_scale},
                     {"early_stop_patience", e.early_stop_patience},
                     {"early_stop_min_delta", e.early_stop_min_delta}};

  json d;
  d["source"] = data::SourceName(m.source);
  if (!m.path.empty()) d["path"] = m.path.string();
  d["sampling_rate_hz"] = m.sampling_rate_hz;
  if (m.source == data::DatasetSource::kSynthetic) {
    const auto& s = m.synthetic;
    d["synthetic"] = {{"n_users", s.n_users},
                      {"n_classes", s.n_classes},
                      {"windows_per_user", s.windows_per_user},
                      {"n_axes", s.n_axes},
                      {"window_len", s.window_len},
                      {"bout_windows", s.bout_windows},
                      {"user_variability", s.user_variability},
                      {"sampling_rate_hz", s.sampling_rate_hz}};
  } else {
    d["columns"] = {{"user", m.columns.user},
                    {"activity", m.columns.activity},
                    {"timestamp", m.columns.timestamp},
                    {"axes", m.columns.axes}};
    d["activities"] = m.activities;
    d["aliases"] = m.aliases;
  }
  j["dataset"] = d;
  return j.dump(2);
}

}  // namespace fedsim
