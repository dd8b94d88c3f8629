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

#include "fedsim/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>

#include "fedsim/error.h"
#include "fedsim/logging.h"
#include "fedsim/random.h"

namespace fedsim::data {
namespace {

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string Lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string_view> Split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(Trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> ParseDouble(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::int64_t> ParseInt(std::string_view s) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec == std::errc() && ptr == end) return v;
  // Some exports write integral timestamps in floating form.
  if (auto d = ParseDouble(s); d && std::abs(*d) < 9e18) {
    return static_cast<std::int64_t>(std::llround(*d));
  }
  return std::nullopt;
}

// Maps raw activity names to class indices through aliases and the whitelist.
class ActivityMap {
 public:
  explicit ActivityMap(const DatasetManifest& m) {
    if (m.activities.empty()) {
      ThrowError(ErrorCode::kConfig, "dataset.activities whitelist must not be empty");
    }
    for (std::size_t i = 0; i < m.activities.size(); ++i) {
      index_[Lower(m.activities[i])] = i;
    }
    for (const auto& [raw, target] : m.aliases) aliases_[Lower(raw)] = Lower(target);
  }

  std::optional<std::size_t> Find(std::string_view raw) const {
    std::string key = Lower(raw);
    if (auto a = aliases_.find(key); a != aliases_.end()) key = a->second;
    if (auto it = index_.find(key); it != index_.end()) return it->second;
    return std::nullopt;
  }

 private:
  std::map<std::string, std::size_t> index_;
  std::map<std::string, std::string> aliases_;
};

struct Record {
  std::int64_t timestamp;
  std::vector<double> values;
  std::size_t label;
};

Dataset Assemble(std::map<std::string, std::vector<Record>> per_user,
                 const DatasetManifest& manifest, std::size_t skipped,
                 std::size_t filtered) {
  Dataset ds;
  ds.class_names = manifest.activities;
  ds.skipped_lines = skipped;
  ds.filtered_samples = filtered;
  for (auto& [user, records] : per_user) {
    std::stable_sort(records.begin(), records.end(),
                     [](const Record& a, const Record& b) { return a.timestamp < b.timestamp; });
    SensorStream s;
    s.user_id = user;
    for (const auto& r : records) s.Append(r.timestamp, r.values, r.label);
    ds.streams.push_back(std::move(s));
  }
  return ds;
}

std::string ReadAll(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowError(ErrorCode::kIo, "cannot open dataset file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string SourceName(DatasetSource source) {
  switch (source) {
    case DatasetSource::kWisdmRaw:
      return "wisdm_raw";
    case DatasetSource::kGenericCsv:
      return "generic_csv";
    case DatasetSource::kSynthetic:
      return "synthetic";
  }
  return "unknown";
}

Dataset LoadWisdm(const std::filesystem::path& path,
                  const DatasetManifest& manifest) {
  const ActivityMap activities(manifest);
  const std::string text = ReadAll(path);

  std::map<std::string, std::vector<Record>> per_user;
  std::size_t skipped = 0, filtered = 0, valid = 0;
  // Records end with ';' but the public file also breaks lines without one
  // and sometimes packs several records per line.
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find_first_of(";\n", start);
    const std::string_view record = Trim(std::string_view(text).substr(
        start, end == std::string::npos ? std::string::npos : end - start));
    start = end == std::string::npos ? text.size() : end + 1;
    if (record.empty()) continue;

    const auto fields = Split(record, ',');
    if (fields.size() != 6 || fields[0].empty() || fields[1].empty()) {
      ++skipped;
      continue;
    }
    const auto ts = ParseInt(fields[2]);
    const auto x = ParseDouble(fields[3]);
    const auto y = ParseDouble(fields[4]);
    const auto z = ParseDouble(fields[5]);
    if (!ts || !x || !y || !z) {
      ++skipped;
      continue;
    }
    ++valid;
    const auto label = activities.Find(fields[1]);
    if (!label) {
      ++filtered;
      continue;
    }
    per_user[std::string(fields[0])].push_back({*ts, {*x, *y, *z}, *label});
  }
  if (valid == 0) {
    ThrowError(ErrorCode::kFormat, "no valid WISDM records in " + path.string());
  }
  if (skipped > 0) {
    log::Warn("skipped " + std::to_string(skipped) + " malformed WISDM records");
  }
  return Assemble(std::move(per_user), manifest, skipped, filtered);
}

Dataset LoadGenericCsv(const std::filesystem::path& path,
                       const DatasetManifest& manifest) {
  const ActivityMap activities(manifest);
  if (manifest.columns.axes.empty()) {
    ThrowError(ErrorCode::kConfig, "dataset.columns.axes must name at least one column");
  }
  std::ifstream in(path);
  if (!in) ThrowError(ErrorCode::kIo, "cannot open dataset file " + path.string());

  std::string line;
  if (!std::getline(in, line)) {
    ThrowError(ErrorCode::kFormat, "empty CSV file " + path.string());
  }
  const auto header = Split(line, ',');
  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    ThrowError(ErrorCode::kFormat, "CSV " + path.string() + " has no column '" + name + "'");
  };
  const std::size_t user_col = column(manifest.columns.user);
  const std::size_t activity_col = column(manifest.columns.activity);
  const std::size_t ts_col = column(manifest.columns.timestamp);
  std::vector<std::size_t> axis_cols;
  for (const auto& a : manifest.columns.axes) axis_cols.push_back(column(a));

  std::map<std::string, std::vector<Record>> per_user;
  std::size_t skipped = 0, filtered = 0, valid = 0;
  while (std::getline(in, line)) {
    if (Trim(line).empty()) continue;
    const auto fields = Split(line, ',');
    if (fields.size() != header.size() || fields[user_col].empty()) {
      ++skipped;
      continue;
    }
    const auto ts = ParseInt(fields[ts_col]);
    if (!ts) {
      ++skipped;
      continue;
    }
    std::vector<double> values;
    values.reserve(axis_cols.size());
    bool ok = true;
    for (std::size_t c : axis_cols) {
      const auto v = ParseDouble(fields[c]);
      if (!v) {
        ok = false;
        break;
      }
      values.push_back(*v);
    }
    if (!ok) {
      ++skipped;
      continue;
    }
    ++valid;
    const auto label = activities.Find(fields[activity_col]);
    if (!label) {
      ++filtered;
      continue;
    }
    per_user[std::string(fields[user_col])].push_back({*ts, std::move(values), *label});
  }
  if (valid == 0) ThrowError(ErrorCode::kFormat, "no valid rows in " + path.string());
  return Assemble(std::move(per_user), manifest, skipped, filtered);
}

void WriteGenericCsv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) ThrowError(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  const std::size_t n_axes = dataset.streams.empty() ? 0 : dataset.streams.front().n_axes;
  out << "user,activity,timestamp";
  for (std::size_t a = 0; a < n_axes; ++a) out << ",axis_" << a;
  out << '\n';
  for (const auto& s : dataset.streams) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << s.user_id << ',' << dataset.class_names.at(s.labels[i]) << ','
          << s.timestamps_ms[i];
      for (double v : s.Sample(i)) out << ',' << FormatDouble(v);
      out << '\n';
    }
  }
  if (!out) ThrowError(ErrorCode::kIo, "failed writing " + path.string());
}

Dataset SynthGenerate(const SynthConfig& cfg, std::uint64_t seed) {
  if (cfg.n_users == 0 || cfg.n_classes < 2 || cfg.n_axes == 0 ||
      cfg.windows_per_user < cfg.n_classes || cfg.window_len < 4 ||
      cfg.bout_windows == 0 || cfg.user_variability < 0.0 ||
      !(cfg.sampling_rate_hz > 0.0)) {
    ThrowError(ErrorCode::kConfig, "invalid synthetic dataset parameters");
  }
  const std::size_t C = cfg.n_classes;
  const std::size_t A = cfg.n_axes;
  const double two_pi = 2.0 * std::numbers::pi;

  // Class archetypes. Each axis ranks the classes by an independent seeded
  // permutation, so classes differ on several axes at once while the spread
  // of the archetypes does not depend on the seed.
  struct Archetype {
    double freq;  // cycles per window
    double amplitude;
    double offset;
  };
  std::vector<std::vector<Archetype>> archetype(C, std::vector<Archetype>(A));
  {
    Rng rng(DeriveSeed(seed, {0x617263}));
    const double denom = static_cast<double>(C - 1);
    for (std::size_t a = 0; a < A; ++a) {
      std::vector<std::size_t> fr(C), am(C), of(C);
      std::iota(fr.begin(), fr.end(), std::size_t{0});
      am = fr;
      of = fr;
      rng.Shuffle(std::span<std::size_t>(fr));
      rng.Shuffle(std::span<std::size_t>(am));
      rng.Shuffle(std::span<std::size_t>(of));
      for (std::size_t c = 0; c < C; ++c) {
        archetype[c][a].freq = 1.0 + 5.0 * static_cast<double>(fr[c]) / denom;
        archetype[c][a].amplitude = 0.5 + 1.5 * static_cast<double>(am[c]) / denom;
        archetype[c][a].offset = -1.0 + 2.0 * static_cast<double>(of[c]) / denom;
      }
    }
  }

  Dataset ds;
  for (std::size_t c = 0; c < C; ++c) ds.class_names.push_back("activity_" + std::to_string(c));
  const double v = cfg.user_variability;
  const double dt_ms = 1000.0 / cfg.sampling_rate_hz;

  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    Rng rng(DeriveSeed(seed, {0x75736572, u}));
    // Subject-level traits.
    const double freq_scale = std::exp(rng.Normal(0.0, 0.08 * v));
    const double noise = 0.15 + 0.25 * rng.Uniform();
    std::vector<double> amp_scale(A), offset_shift(A);
    for (std::size_t a = 0; a < A; ++a) {
      amp_scale[a] = std::exp(rng.Normal(0.0, 0.25 * v));
      offset_shift[a] = rng.Normal(0.0, 0.35 * v);
    }
    // How this subject performs each activity.
    std::vector<std::vector<double>> style_amp(C, std::vector<double>(A));
    std::vector<std::vector<double>> style_offset(C, std::vector<double>(A));
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t a = 0; a < A; ++a) {
        style_amp[c][a] = std::exp(rng.Normal(0.0, 0.25 * v));
        style_offset[c][a] = rng.Normal(0.0, 0.35 * v);
      }
    }

    // Even budget per class; the remainder goes to the lowest classes.
    std::vector<std::size_t> bouts_class, bouts_len;
    for (std::size_t c = 0; c < C; ++c) {
      std::size_t budget = cfg.windows_per_user / C + (c < cfg.windows_per_user % C ? 1 : 0);
      while (budget > 0) {
        const std::size_t len = std::min(budget, cfg.bout_windows);
        bouts_class.push_back(c);
        bouts_len.push_back(len);
        budget -= len;
      }
    }
    std::vector<std::size_t> bout_order(bouts_class.size());
    std::iota(bout_order.begin(), bout_order.end(), std::size_t{0});
    rng.Shuffle(std::span<std::size_t>(bout_order));

    SensorStream stream;
    {
      // Zero-padded so lexicographic order equals numeric order.
      const std::string id = std::to_string(u);
      const std::size_t width = std::to_string(cfg.n_users - 1).size();
      stream.user_id = "u" + std::string(width - id.size(), '0') + id;
    }
    std::vector<double> sample(A);
    std::size_t t_global = 0;
    for (std::size_t b : bout_order) {
      const std::size_t c = bouts_class[b];
      const std::size_t n = bouts_len[b] * cfg.window_len;
      std::vector<double> phase(A);
      for (double& p : phase) p = two_pi * rng.Uniform();
      for (std::size_t t = 0; t < n; ++t, ++t_global) {
        for (std::size_t a = 0; a < A; ++a) {
          const Archetype& arc = archetype[c][a];
          const double f = arc.freq * freq_scale / static_cast<double>(cfg.window_len);
          const double amp = arc.amplitude * amp_scale[a] * style_amp[c][a];
          const double off = arc.offset + offset_shift[a] + style_offset[c][a];
          sample[a] = off + amp * std::sin(two_pi * f * static_cast<double>(t) + phase[a]) +
                      rng.Normal(0.0, noise);
        }
        stream.Append(static_cast<std::int64_t>(std::llround(static_cast<double>(t_global) * dt_ms)),
                      sample, c);
      }
    }
    ds.streams.push_back(std::move(stream));
  }
  return ds;
}

Dataset Load(const DatasetManifest& manifest, std::uint64_t seed) {
  switch (manifest.source) {
    case DatasetSource::kWisdmRaw:
      return LoadWisdm(manifest.path, manifest);
    case DatasetSource::kGenericCsv:
      return LoadGenericCsv(manifest.path, manifest);
    case DatasetSource::kSynthetic:
      return SynthGenerate(manifest.synthetic, seed);
  }
  ThrowError(ErrorCode::kConfig, "unknown dataset source");
}

}  // namespace fedsim::data
