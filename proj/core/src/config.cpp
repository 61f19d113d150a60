// Copyright 2026 The pattrain Authors. All Rights Reserved.
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

#include "pattrain/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "pattrain/error.hpp"

namespace pattrain {

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config: bad value '" + v + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("config: bad boolean '" + v + "' for " + key);
}

std::string fmt_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Field table: name -> (setter, getter). One place lists every key.
struct Field {
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

#define PT_STR(name)                                                                   \
  {#name, {[](PipelineConfig& c, const std::string&, const std::string& v) { c.name = v; }, \
           [](const PipelineConfig& c) { return c.name; }}}
#define PT_NUM(name, type)                                                       \
  {#name, {[](PipelineConfig& c, const std::string& k, const std::string& v) {     \
             c.name = parse_number<type>(k, v);                                  \
           },                                                                    \
           [](const PipelineConfig& c) { return std::to_string(c.name); }}}
#define PT_DBL(name)                                                             \
  {#name, {[](PipelineConfig& c, const std::string& k, const std::string& v) {     \
             c.name = parse_number<double>(k, v);                                \
           },                                                                    \
           [](const PipelineConfig& c) { return fmt_double(c.name); }}}
#define PT_BOOL(name)                                                            \
  {#name, {[](PipelineConfig& c, const std::string& k, const std::string& v) {     \
             c.name = parse_bool(k, v);                                          \
           },                                                                    \
           [](const PipelineConfig& c) { return std::string(c.name ? "true" : "false"); }}}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      PT_STR(arch),
      PT_STR(dataset),
      PT_STR(train_images),
      PT_STR(train_labels),
      PT_STR(test_images),
      PT_STR(test_labels),
      PT_NUM(train_limit, std::size_t),
      PT_NUM(test_limit, std::size_t),
      PT_NUM(synthetic_samples, std::size_t),
      PT_NUM(synthetic_classes, int),
      PT_NUM(synthetic_side, int),
      PT_DBL(lr),
      PT_NUM(lr_decay_every, int),
      PT_DBL(lr_decay_factor),
      PT_NUM(batch_size, int),
      PT_NUM(seed, std::uint64_t),
      PT_NUM(workers, int),
      PT_NUM(total_epochs, int),
      PT_NUM(trigger_window, int),
      PT_DBL(start_threshold),
      PT_NUM(dppg_epochs, int),
      PT_NUM(finalize_epochs, int),
      PT_NUM(hard_prune_epoch, int),
      PT_NUM(min_reg_epochs, int),
      PT_BOOL(no_prune),
      PT_NUM(pool_size, int),
      PT_DBL(prune_fraction),
      PT_BOOL(exempt_first_conv),
      {"spike_rule",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          if (v == "relative") {
            c.spike_rule = SpikeRule::kRelativeIncrease;
          } else if (v == "literal") {
            c.spike_rule = SpikeRule::kLiteralQuotient;
          } else {
            throw ConfigError("config: " + k + " must be relative or literal");
          }
        },
        [](const PipelineConfig& c) {
          return std::string(c.spike_rule == SpikeRule::kRelativeIncrease ? "relative"
                                                                           : "literal");
        }}},
      PT_DBL(delta_spike),
      PT_DBL(delta_literal),
      PT_DBL(lambda_pattern),
      PT_DBL(lambda_kernel),
      PT_DBL(sparsity_threshold),
      {"layer_thresholds",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.layer_thresholds.clear();
          if (v.empty()) return;
          std::istringstream in(v + ",");
          std::string item;
          while (std::getline(in, item, ',')) {
            c.layer_thresholds.push_back(parse_number<double>(k, trim(item)));
          }
        },
        [](const PipelineConfig& c) {
          std::string out;
          for (double t : c.layer_thresholds) out += (out.empty() ? "" : ",") + fmt_double(t);
          return out;
        }}},
      PT_NUM(tile_budget, std::size_t),
      PT_STR(out_dir),
  };
  return table;
}

#undef PT_STR
#undef PT_NUM
#undef PT_DBL
#undef PT_BOOL

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("config: unknown key '" + key + "'");
  it->second.set(*this, key, value);
}

std::map<std::string, std::string> PipelineConfig::to_map() const {
  std::map<std::string, std::string> out;
  for (const auto& [k, f] : fields()) out[k] = f.get(*this);
  return out;
}

std::string PipelineConfig::canonical() const {
  std::string out;
  for (const auto& [k, v] : to_map()) {
    if (k == "out_dir") continue;
    out += k + "=" + v + "\n";
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t PipelineConfig::hash() const { return fnv1a64(canonical()); }

void PipelineConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  require(dataset == "idx" || dataset == "synthetic", "dataset must be idx or synthetic");
  if (dataset == "idx") {
    require(!train_images.empty() && !train_labels.empty() && !test_images.empty() &&
                !test_labels.empty(),
            "idx dataset needs train_images, train_labels, test_images, test_labels");
  } else {
    require(synthetic_samples >= 4, "synthetic_samples must be >= 4");
    require(synthetic_classes >= 2 && synthetic_classes <= 255, "synthetic_classes in [2, 255]");
    require(synthetic_side >= 8, "synthetic_side must be >= 8");
  }
  require(lr > 0.0, "lr must be > 0");
  require(lr_decay_every >= 0, "lr_decay_every must be >= 0");
  require(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0, "lr_decay_factor in (0, 1]");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(workers >= 1 && workers <= 64, "workers in [1, 64]");
  require(batch_size >= workers, "batch_size must be >= workers");
  require(total_epochs >= 1, "total_epochs must be >= 1");
  require(trigger_window >= 1, "trigger_window must be >= 1");
  require(start_threshold > 0.0, "start_threshold must be > 0");
  require(dppg_epochs >= 1, "dppg_epochs must be >= 1");
  require(finalize_epochs >= 1, "finalize_epochs must be >= 1");
  require(min_reg_epochs >= 0, "min_reg_epochs must be >= 0");
  require(hard_prune_epoch >= 0, "hard_prune_epoch must be >= 0");
  require(pool_size >= 1 && pool_size <= 126, "pool_size in [1, 126]");
  require(prune_fraction >= 0.0 && prune_fraction <= 0.9, "prune_fraction in [0, 0.9]");
  require(delta_spike > 0.0, "delta_spike must be > 0");
  require(delta_literal > 0.0, "delta_literal must be > 0");
  require(lambda_pattern >= 0.0 && lambda_kernel >= 0.0, "lambdas must be >= 0");
  require(sparsity_threshold >= 0.0 && sparsity_threshold <= 1.0,
          "sparsity_threshold in [0, 1]");
  for (double t : layer_thresholds) require(t >= 0.0 && t <= 1.0, "layer_thresholds in [0, 1]");
  require(tile_budget >= 64, "tile_budget must be >= 64 bytes");
}

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  PipelineConfig cfg = parse_config(ss.str());
  // Relative dataset paths resolve against the config file's directory.
  const auto base = path.parent_path();
  for (std::string* p : {&cfg.train_images, &cfg.train_labels, &cfg.test_images,
                         &cfg.test_labels}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).string();
  }
  return cfg;
}

}  // namespace pattrain
