// Copyright 2026 The fedgs-sim Authors. All Rights Reserved.
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

/**
 * @file
 * @brief Experiment configuration and its INI-style text format.
 *
 * Grammar (one construct per line, surrounding whitespace ignored):
 *
 *     # comment            ; comment
 *     [section]
 *     key = value
 *
 * Sections: experiment, strategy, difficulty, model, optimizer, client.N.
 * Keys must belong to their section and may appear once. Lists are
 * comma-separated. Client sections must be numbered 0..K without gaps; the
 * highest-numbered one is the held-out test centre. When no client section is
 * present the built-in heterogeneous federation is used. Any unknown section or
 * key is a ParseError.
 */

#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "fedgs/difficulty.hpp"
#include "fedgs/errors.hpp"
#include "fedgs/fl.hpp"
#include "fedgs/synth.hpp"

namespace fedgs {

struct ExperimentConfig {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t rounds = 20;
  std::vector<StrategyKind> strategies{StrategyKind::FedGS, StrategyKind::FedAvg};
  TrainingConfig training = default_training();
  std::vector<ClientDataSpec> clients = default_federation_specs();
  std::string output_dir = "out";
  bool record_wall_time = false;

  static TrainingConfig default_training() {
    TrainingConfig t;
    t.strategy.batch_size = 4;
    t.strategy.local_epochs = 2;
    t.strategy.difficulty = DifficultyConfig{100.0, 30.0, Regime::WholeMask, 1, StructuringElement::Square3, Connectivity::Eight};
    return t;
  }

  void validate() const {
    if (seeds.empty()) throw ValidationError("experiment: at least one seed is required");
    if (rounds < 1) throw ValidationError("experiment: rounds must be >= 1");
    if (strategies.empty()) throw ValidationError("experiment: at least one strategy is required");
    if (clients.size() < 2) throw ValidationError("experiment: need at least one training client and a test centre");
    training.validate();
    std::set<std::uint64_t> offsets;
    for (const auto& c : clients) {
      c.validate();
      if (c.height != clients.front().height || c.width != clients.front().width)
        throw ValidationError("experiment: all clients must share one image size");
      if (!offsets.insert(c.seed_offset).second)
        throw ValidationError("experiment: duplicate client seed_offset " + std::to_string(c.seed_offset));
    }
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

class Field {
 public:
  Field(std::size_t line, std::string key, std::string_view value) : line_(line), key_(std::move(key)), value_(value) {}

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, "key '" + key_ + "': " + msg); }

  double real() const { return parse_real(value_); }

  std::uint64_t uint() const { return parse_uint(value_); }

  std::size_t size() const { return static_cast<std::size_t>(uint()); }

  bool boolean() const {
    if (value_ == "true") return true;
    if (value_ == "false") return false;
    fail("expected true or false, got '" + std::string(value_) + "'");
  }

  template <class E>
  E choice(std::initializer_list<std::pair<std::string_view, E>> options) const {
    for (const auto& [name, v] : options)
      if (value_ == name) return v;
    std::string names;
    for (const auto& [name, v] : options) names += (names.empty() ? "" : ", ") + std::string(name);
    fail("expected one of {" + names + "}, got '" + std::string(value_) + "'");
  }

  std::vector<std::uint64_t> uint_list() const {
    std::vector<std::uint64_t> out;
    for (const auto item : split_list(value_)) out.push_back(parse_uint(item));
    return out;
  }

  std::vector<std::string_view> list() const { return split_list(value_); }

  std::string text() const { return std::string(value_); }

 private:
  double parse_real(std::string_view s) const {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) fail("expected a real number, got '" + std::string(s) + "'");
    return v;
  }

  std::uint64_t parse_uint(std::string_view s) const {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
      fail("expected a non-negative integer, got '" + std::string(s) + "'");
    return v;
  }

  std::size_t line_;
  std::string key_;
  std::string_view value_;
};

inline void apply_experiment(ExperimentConfig& cfg, const std::string& key, const Field& f) {
  if (key == "seeds") {
    cfg.seeds = f.uint_list();
  } else if (key == "rounds") {
    cfg.rounds = f.size();
  } else if (key == "strategies") {
    cfg.strategies.clear();
    for (const auto item : f.list()) {
      if (item == "fedgs")
        cfg.strategies.push_back(StrategyKind::FedGS);
      else if (item == "fedavg")
        cfg.strategies.push_back(StrategyKind::FedAvg);
      else
        f.fail("unknown strategy '" + std::string(item) + "' (expected fedgs or fedavg)");
    }
  } else if (key == "output_dir") {
    cfg.output_dir = f.text();
  } else if (key == "record_wall_time") {
    cfg.record_wall_time = f.boolean();
  } else {
    f.fail("unknown key in [experiment]");
  }
}

inline void apply_strategy(StrategyConfig& s, const std::string& key, const Field& f) {
  if (key == "batch_size")
    s.batch_size = f.size();
  else if (key == "local_epochs")
    s.local_epochs = f.size();
  else
    f.fail("unknown key in [strategy]");
}

inline void apply_difficulty(DifficultyConfig& d, const std::string& key, const Field& f) {
  if (key == "regime")
    d.regime = f.choice<Regime>({{"whole_mask", Regime::WholeMask}, {"blob_split", Regime::BlobSplit}});
  else if (key == "log_base")
    d.log_base = f.real();
  else if (key == "threshold")
    d.threshold = f.real();
  else if (key == "erosion_iterations")
    d.erosion_iterations = f.size();
  else if (key == "structuring_element")
    d.element = f.choice<StructuringElement>({{"square3", StructuringElement::Square3}, {"cross3", StructuringElement::Cross3}});
  else if (key == "connectivity")
    d.connectivity = f.choice<Connectivity>({{"four", Connectivity::Four}, {"eight", Connectivity::Eight}});
  else
    f.fail("unknown key in [difficulty]");
}

inline void apply_model(ArchDescriptor& a, const std::string& key, const Field& f) {
  if (key == "in_channels")
    a.in_channels = f.size();
  else if (key == "hidden_channels")
    a.hidden_channels = f.size();
  else
    f.fail("unknown key in [model]");
}

inline void apply_optimizer(OptimizerHyper& o, const std::string& key, const Field& f) {
  if (key == "kind")
    o.kind = f.choice<OptimizerKind>({{"sgd", OptimizerKind::SGD}, {"adamw", OptimizerKind::AdamW}});
  else if (key == "learning_rate")
    o.learning_rate = f.real();
  else if (key == "beta1")
    o.beta1 = f.real();
  else if (key == "beta2")
    o.beta2 = f.real();
  else if (key == "epsilon")
    o.epsilon = f.real();
  else if (key == "weight_decay")
    o.weight_decay = f.real();
  else
    f.fail("unknown key in [optimizer]");
}

inline void apply_client(ClientDataSpec& c, const std::string& key, const Field& f) {
  if (key == "n_samples") c.n_samples = f.size();
  else if (key == "height") c.height = f.size();
  else if (key == "width") c.width = f.size();
  else if (key == "lesions_min") c.lesions_min = f.size();
  else if (key == "lesions_max") c.lesions_max = f.size();
  else if (key == "small_fraction") c.small_fraction = f.real();
  else if (key == "small_radius_min") c.small_radius_min = f.real();
  else if (key == "small_radius_max") c.small_radius_max = f.real();
  else if (key == "large_radius_min") c.large_radius_min = f.real();
  else if (key == "large_radius_max") c.large_radius_max = f.real();
  else if (key == "noise_std") c.noise_std = f.real();
  else if (key == "lesion_intensity") c.lesion_intensity = f.real();
  else if (key == "seed_offset") c.seed_offset = f.uint();
  else f.fail("unknown key in client section");
}

}  // namespace detail

/// Parses configuration text; throws ParseError (syntax, unknown keys) or ValidationError.
inline ExperimentConfig parse_config_text(std::string_view text) {
  ExperimentConfig cfg;
  std::map<std::size_t, ClientDataSpec> clients;
  std::set<std::string> seen_sections;
  std::set<std::string> seen_keys;
  std::string section;
  std::size_t client_index = 0;

  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;

    const std::string_view line = detail::trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (!seen_sections.insert(section).second) throw ParseError(line_no, "duplicate section [" + section + "]");
      seen_keys.clear();
      if (section.rfind("client.", 0) == 0) {
        const std::string_view idx = std::string_view(section).substr(7);
        const auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), client_index);
        if (ec != std::errc{} || ptr != idx.data() + idx.size() || idx.empty())
          throw ParseError(line_no, "bad client section name [" + section + "]");
        ClientDataSpec spec;
        spec.seed_offset = client_index;
        clients.emplace(client_index, spec);
      } else if (section != "experiment" && section != "strategy" && section != "difficulty" && section != "model" &&
                 section != "optimizer") {
        throw ParseError(line_no, "unknown section [" + section + "]");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (section.empty()) throw ParseError(line_no, "key '" + key + "' outside of any section");
    if (!seen_keys.insert(key).second) throw ParseError(line_no, "duplicate key '" + key + "'");

    const detail::Field f(line_no, key, value);
    if (section == "experiment") detail::apply_experiment(cfg, key, f);
    else if (section == "strategy") detail::apply_strategy(cfg.training.strategy, key, f);
    else if (section == "difficulty") detail::apply_difficulty(cfg.training.strategy.difficulty, key, f);
    else if (section == "model") detail::apply_model(cfg.training.arch, key, f);
    else if (section == "optimizer") detail::apply_optimizer(cfg.training.optimizer, key, f);
    else detail::apply_client(clients.at(client_index), key, f);
  }

  if (!clients.empty()) {
    cfg.clients.clear();
    std::size_t expect = 0;
    for (auto& [idx, spec] : clients) {
      if (idx != expect) throw ValidationError("client sections must be numbered 0.." + std::to_string(clients.size() - 1));
      cfg.clients.push_back(spec);
      ++expect;
    }
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

namespace detail {

inline std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Renders a configuration in the text format; parse_config_text() inverts it.
inline std::string to_config_text(const ExperimentConfig& cfg) {
  using detail::format_real;
  std::ostringstream o;
  const auto& st = cfg.training.strategy;
  const auto& d = st.difficulty;
  const auto& op = cfg.training.optimizer;

  o << "# fedgs-sim experiment configuration\n\n[experiment]\nseeds = ";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) o << (i ? ", " : "") << cfg.seeds[i];
  o << "\nrounds = " << cfg.rounds << "\nstrategies = ";
  for (std::size_t i = 0; i < cfg.strategies.size(); ++i) o << (i ? ", " : "") << to_string(cfg.strategies[i]);
  o << "\noutput_dir = " << cfg.output_dir << "\nrecord_wall_time = " << (cfg.record_wall_time ? "true" : "false") << "\n\n";

  o << "[strategy]\nbatch_size = " << st.batch_size << "\nlocal_epochs = " << st.local_epochs << "\n\n";

  o << "[difficulty]\nregime = " << (d.regime == Regime::WholeMask ? "whole_mask" : "blob_split")
    << "\nlog_base = " << format_real(d.log_base) << "\nthreshold = " << format_real(d.threshold)
    << "\nerosion_iterations = " << d.erosion_iterations
    << "\nstructuring_element = " << (d.element == StructuringElement::Square3 ? "square3" : "cross3")
    << "\nconnectivity = " << (d.connectivity == Connectivity::Eight ? "eight" : "four") << "\n\n";

  o << "[model]\nin_channels = " << cfg.training.arch.in_channels << "\nhidden_channels = " << cfg.training.arch.hidden_channels
    << "\n\n";

  o << "[optimizer]\nkind = " << (op.kind == OptimizerKind::AdamW ? "adamw" : "sgd")
    << "\nlearning_rate = " << format_real(op.learning_rate) << "\nbeta1 = " << format_real(op.beta1)
    << "\nbeta2 = " << format_real(op.beta2) << "\nepsilon = " << format_real(op.epsilon)
    << "\nweight_decay = " << format_real(op.weight_decay) << "\n";

  for (std::size_t k = 0; k < cfg.clients.size(); ++k) {
    const auto& c = cfg.clients[k];
    o << "\n" << (k + 1 == cfg.clients.size() ? "# held-out test centre\n" : "") << "[client." << k << "]\n"
      << "n_samples = " << c.n_samples << "\nheight = " << c.height << "\nwidth = " << c.width
      << "\nlesions_min = " << c.lesions_min << "\nlesions_max = " << c.lesions_max
      << "\nsmall_fraction = " << format_real(c.small_fraction)
      << "\nsmall_radius_min = " << format_real(c.small_radius_min)
      << "\nsmall_radius_max = " << format_real(c.small_radius_max)
      << "\nlarge_radius_min = " << format_real(c.large_radius_min)
      << "\nlarge_radius_max = " << format_real(c.large_radius_max) << "\nnoise_std = " << format_real(c.noise_std)
      << "\nlesion_intensity = " << format_real(c.lesion_intensity) << "\nseed_offset = " << c.seed_offset << "\n";
  }
  return o.str();
}

}  // namespace fedgs
