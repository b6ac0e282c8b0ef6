/*
 * Copyright 2026 The simkernel Authors.
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

// Experiment orchestration: reference-set selection, modality weight search,
// evaluation reports and the config-driven train/evaluate pipelines.
//
// Every fitted quantity (reference set, standardization, descriptor scaling,
// learner) reads the training split only.

#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "simkernel/common.hpp"
#include "simkernel/distances.hpp"
#include "simkernel/io.hpp"
#include "simkernel/learners.hpp"
#include "simkernel/metrics.hpp"
#include "simkernel/sessions.hpp"
#include "simkernel/similarity.hpp"

namespace simkernel::harness {

using nlohmann::json;
using LabelMatrix = std::vector<std::vector<int>>;  // instance x concept, 0/1

// ---------------------------------------------------------------------------
// Reference-set selection.

// Rarity score of an instance: sum over its positive concepts of
// 1 / (number of training positives of that concept).
inline Vector rarity_scores(const LabelMatrix& labels) {
  require(!labels.empty(), "rarity_scores: empty training set");
  const std::size_t concepts = labels.front().size();
  Vector freq(concepts, 0.0);
  for (const auto& row : labels) {
    require(row.size() == concepts, "rarity_scores: ragged label matrix");
    for (std::size_t c = 0; c < concepts; ++c) {
      require(row[c] == 0 || row[c] == 1, "rarity_scores: labels must be 0 or 1");
      freq[c] += row[c];
    }
  }
  Vector score(labels.size(), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t c = 0; c < concepts; ++c)
      if (labels[i][c]) score[i] += 1.0 / freq[c];
  return score;
}

// Shortest prefix of the rarity ranking (ties by instance id) holding at
// least ceil(p N) instances and, per concept, min(positives, ceil(p N))
// positives. Larger p always yields a superset.
inline std::vector<std::size_t> select_reference_set(const LabelMatrix& labels, double p) {
  if (labels.empty()) throw DataError("select_reference_set: empty training set");
  require(p > 0.0 && p <= 1.0, "select_reference_set: fraction must lie in (0, 1]");
  const Vector score = rarity_scores(labels);
  const std::size_t n = labels.size(), concepts = labels.front().size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });

  const double quota = std::ceil(p * static_cast<double>(n) - 1e-9);
  std::vector<double> need(concepts, 0.0), have(concepts, 0.0);
  for (const auto& row : labels)
    for (std::size_t c = 0; c < concepts; ++c) need[c] += row[c];
  for (double& v : need) v = std::min(v, quota);

  auto satisfied = [&](std::size_t taken) {
    if (static_cast<double>(taken) < quota) return false;
    for (std::size_t c = 0; c < concepts; ++c)
      if (have[c] < need[c]) return false;
    return true;
  };
  std::vector<std::size_t> chosen;
  for (std::size_t i : order) {
    if (satisfied(chosen.size())) break;
    chosen.push_back(i);
    for (std::size_t c = 0; c < concepts; ++c) have[c] += labels[i][c];
  }
  return chosen;
}

// ---------------------------------------------------------------------------
// Modality weight search.

struct WeightSearchResult {
  Vector weights;
  double auc = 0.0;
  std::size_t candidate = 0;
};

// All weight vectors on the simplex with coordinates in multiples of `step`,
// in lexicographic order of the integer compositions.
inline std::vector<Vector> simplex_grid(std::size_t modalities, double step) {
  require(modalities >= 1, "simplex_grid: need at least one modality");
  require(step > 0.0 && step <= 1.0, "simplex_grid: step must lie in (0, 1]");
  const long total = std::lround(1.0 / step);
  require(std::abs(static_cast<double>(total) * step - 1.0) < 1e-9,
          "simplex_grid: 1 / step must be an integer");
  std::vector<Vector> grid;
  std::vector<long> parts(modalities, 0);
  std::function<void(std::size_t, long)> fill = [&](std::size_t i, long left) {
    if (i + 1 == modalities) {
      parts[i] = left;
      Vector w(modalities);
      for (std::size_t k = 0; k < modalities; ++k) w[k] = static_cast<double>(parts[k]) / total;
      grid.push_back(std::move(w));
      return;
    }
    for (long v = left; v >= 0; --v) {
      parts[i] = v;
      fill(i + 1, left - v);
    }
  };
  fill(0, total);
  return grid;
}

// Pairs are rows of per-modality distances; label 1 marks a same-topic pair.
// Candidates are scored by the AUC of -sum_k w_k d_k; the first best wins.
inline WeightSearchResult search_modality_weights(const Matrix& pair_distances,
                                                  const std::vector<int>& same_topic,
                                                  const std::vector<Vector>& grid) {
  require(!grid.empty(), "search_modality_weights: empty grid");
  require(pair_distances.rows() == same_topic.size(), "search_modality_weights: one label per pair");
  const bool pos = std::count(same_topic.begin(), same_topic.end(), 1) > 0;
  const bool neg = std::count(same_topic.begin(), same_topic.end(), 0) > 0;
  require(pos && neg, "search_modality_weights: both pair classes must be present");
  std::optional<WeightSearchResult> best;
  Vector scores(pair_distances.rows());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    require(grid[g].size() == pair_distances.cols(),
            "search_modality_weights: candidate dimension differs from modality count");
    for (std::size_t r = 0; r < pair_distances.rows(); ++r)
      scores[r] = -dot(pair_distances.row(r), grid[g]);
    const double auc = metrics::roc_auc(scores, same_topic);
    if (!best || auc > best->auc) best = WeightSearchResult{grid[g], auc, g};
  }
  return *best;
}

// ---------------------------------------------------------------------------
// Evaluation report.

inline const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> names = {"auc",    "ap", "ndcg", "accuracy", "precision",
                                                 "recall", "f1", "mae",  "rmse"};
  return names;
}

// Scores and labels are instance x concept. Metrics undefined for a concept
// (for example AUC with a single class present) are null and left out of
// the macro average.
inline json eval_report(const Matrix& scores, const LabelMatrix& labels,
                        const std::vector<std::string>& metric_names,
                        const std::vector<std::string>& concept_names, double threshold = 0.0) {
  require(scores.rows() == labels.size() && scores.rows() > 0, "eval_report: misaligned inputs");
  require(concept_names.size() == scores.cols(), "eval_report: one name per concept");
  for (const auto& m : metric_names)
    if (std::find(known_metrics().begin(), known_metrics().end(), m) == known_metrics().end())
      throw ConfigError("eval_report: unknown metric '" + m + "'");

  json per_concept = json::object();
  std::map<std::string, std::pair<double, int>> macro;
  for (std::size_t c = 0; c < scores.cols(); ++c) {
    Vector s(scores.rows());
    std::vector<int> y(scores.rows());
    Vector target(scores.rows());
    for (std::size_t i = 0; i < scores.rows(); ++i) {
      require(labels[i].size() == scores.cols(), "eval_report: misaligned label row");
      s[i] = scores(i, c);
      y[i] = labels[i][c];
      target[i] = y[i];
    }
    const bool both = std::count(y.begin(), y.end(), 1) > 0 && std::count(y.begin(), y.end(), 0) > 0;
    const bool any_pos = std::count(y.begin(), y.end(), 1) > 0;
    const auto confusion = metrics::confusion_metrics(s, y, threshold);
    json entry = json::object();
    for (const auto& m : metric_names) {
      std::optional<double> v;
      if (m == "auc" && both) v = metrics::roc_auc(s, y);
      else if (m == "ap" && any_pos) v = metrics::average_precision(s, y);
      else if (m == "ndcg" && any_pos) v = metrics::ndcg(s, target);
      else if (m == "accuracy") v = confusion.accuracy;
      else if (m == "precision") v = confusion.precision;
      else if (m == "recall") v = confusion.recall;
      else if (m == "f1") v = confusion.f_measure;
      else if (m == "mae") v = metrics::mean_absolute_error(s, target);
      else if (m == "rmse") v = metrics::root_mean_squared_error(s, target);
      entry[m] = v ? json(*v) : json(nullptr);
      if (v) {
        macro[m].first += *v;
        macro[m].second += 1;
      }
    }
    per_concept[concept_names[c]] = entry;
  }
  json macro_json = json::object();
  for (const auto& m : metric_names) {
    const auto it = macro.find(m);
    macro_json[m] = it == macro.end() ? json(nullptr) : json(it->second.first / it->second.second);
  }
  return {{"per_concept", per_concept}, {"macro", macro_json}};
}

// ---------------------------------------------------------------------------
// Shared pipeline pieces.

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Seeded shuffle; the first round(n f) indices form the test split. Both
// sides are kept sorted.
inline Split split_indices(std::size_t n, double test_fraction, std::uint64_t seed) {
  require(test_fraction > 0.0 && test_fraction < 1.0, "split: test_fraction must lie in (0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed ^ 0x5eed5eed5eedULL);
  rng.shuffle(order);
  const std::size_t n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  if (n_test < 1 || n_test + 2 > n) throw DataError("split: too few instances for a train/test split");
  Split s{{order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end()},
          {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test)}};
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

struct ReferenceOptions {
  std::string strategy = "random";  // random | rarity
  std::size_t size = 30;            // |S| for the random strategy
  double fraction = 0.1;            // p for the rarity strategy
  std::size_t representatives = 10; // |R| for the class graph
};

struct ReferenceChoice {
  std::vector<std::size_t> samples;          // positions within the training split
  std::vector<std::size_t> representatives;  // disjoint from samples
};

// Representatives are drawn round-robin over label groups (per-concept
// positives, or positives and negatives for a single concept) from training
// instances outside S.
inline ReferenceChoice choose_references(const LabelMatrix& train_labels,
                                         const ReferenceOptions& options, bool need_representatives,
                                         std::uint64_t seed) {
  const std::size_t n = train_labels.size();
  ReferenceChoice choice;
  Rng rng(seed ^ 0x12ef5eedULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  if (options.strategy == "random") {
    if (options.size < 1 || options.size > n) throw ConfigError("reference.size out of range");
    choice.samples.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(options.size));
  } else if (options.strategy == "rarity") {
    choice.samples = select_reference_set(train_labels, options.fraction);
  } else {
    throw ConfigError("reference.strategy must be 'random' or 'rarity'");
  }
  if (!need_representatives) return choice;

  const std::set<std::size_t> in_s(choice.samples.begin(), choice.samples.end());
  const std::size_t concepts = train_labels.front().size();
  std::vector<std::vector<std::size_t>> groups(concepts == 1 ? 2 : concepts);
  for (std::size_t i : order) {
    if (in_s.count(i)) continue;
    if (concepts == 1) {
      groups[train_labels[i][0] == 1 ? 0 : 1].push_back(i);
    } else {
      for (std::size_t c = 0; c < concepts; ++c)
        if (train_labels[i][c]) groups[c].push_back(i);
    }
  }
  std::set<std::size_t> taken;
  std::vector<std::size_t> cursor(groups.size(), 0);
  bool progress = true;
  while (choice.representatives.size() < options.representatives && progress) {
    progress = false;
    for (std::size_t g = 0; g < groups.size() && choice.representatives.size() < options.representatives; ++g) {
      while (cursor[g] < groups[g].size() && taken.count(groups[g][cursor[g]])) ++cursor[g];
      if (cursor[g] == groups[g].size()) continue;
      taken.insert(groups[g][cursor[g]]);
      choice.representatives.push_back(groups[g][cursor[g]]);
      progress = true;
    }
  }
  for (std::size_t i : order) {
    if (choice.representatives.size() >= options.representatives) break;
    if (!in_s.count(i) && !taken.count(i)) {
      taken.insert(i);
      choice.representatives.push_back(i);
    }
  }
  if (choice.representatives.size() < options.representatives || options.representatives == 0)
    throw ConfigError("reference.representatives out of range for the training split");
  return choice;
}

struct LearnerOptions {
  std::string type = "svm";  // svm | logreg
  learners::SvmOptions svm{1.0, 0.0, 1000, 1e-6, 1.0, 1.0, 1.0};
  learners::LogRegOptions logreg;
};

// One-vs-rest training on features; returns test scores (instance x concept).
inline Matrix train_and_score(const Matrix& train_features, const Matrix& test_features,
                              const LabelMatrix& train_labels, std::size_t concepts,
                              const LearnerOptions& options, int threads) {
  Matrix scores(test_features.rows(), concepts);
  if (options.type == "svm") {
    const Matrix k_train = similarity::similarity_kernel_matrix(train_features, nullptr, threads);
    const Matrix k_test = similarity::similarity_kernel_matrix(test_features, &train_features, threads);
    for (std::size_t c = 0; c < concepts; ++c) {
      std::vector<int> y(train_labels.size());
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = train_labels[i][c] ? 1 : -1;
      const auto model = learners::svm_train(k_train, y, options.svm);
      const Vector s = learners::svm_decision(model, k_test, threads);
      for (std::size_t i = 0; i < s.size(); ++i) scores(i, c) = s[i];
    }
  } else if (options.type == "logreg") {
    const Matrix x_train = learners::with_bias_column(train_features);
    const Matrix x_test = learners::with_bias_column(test_features);
    for (std::size_t c = 0; c < concepts; ++c) {
      std::vector<int> y(train_labels.size());
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = train_labels[i][c];
      const auto model = learners::logreg_train(x_train, y, options.logreg);
      const Vector p = learners::logreg_predict(model, x_test);
      for (std::size_t i = 0; i < p.size(); ++i) scores(i, c) = p[i];
    }
  } else {
    throw ConfigError("learner.type must be 'svm' or 'logreg'");
  }
  return scores;
}

// Rethrows a failure with the pipeline stage prepended, keeping its category.
template <class Fn>
auto run_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  const std::string tag = std::string("[") + stage + "] ";
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(tag + e.what());
  } catch (const DataError& e) {
    throw DataError(tag + e.what());
  } catch (const NumericError& e) {
    throw NumericError(tag + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(tag + e.what());
  }
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------------------
// Experiment configuration.

struct ModalityConfig {
  std::string name;
  std::string path;
  std::string distance = "l2";  // l1 | l2 | js | fisher_discrete | dtw
  double scale = 1.0;
};

struct ExperimentConfig {
  std::string pipeline;        // sessions | dense
  std::uint64_t seed = 0;
  int threads = 1;
  std::string output;
  std::string graph = "pairwise";  // pairwise | class | descriptor (sessions only)
  double test_fraction = 0.3;
  ReferenceOptions reference;
  LearnerOptions learner;
  std::vector<std::string> metrics = {"auc", "ap"};
  double threshold = 0.0;
  bool record_timings = false;

  // sessions
  std::string session_data;  // empty: generate
  std::size_t n_drop = 1000, n_normal = 1000, min_len = 15, max_len = 30;
  std::size_t truncate_at = 5, min_reports = 15;
  std::vector<std::string> session_modalities;  // empty: all seven

  // dense
  std::vector<ModalityConfig> modalities;
  std::string labels_path;

  json digest_source;  // config without run-local keys (threads, output)
};

namespace detail {

inline void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                       const std::string& context) {
  if (!obj.is_object()) throw ConfigError(context + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) ==
        allowed.end())
      throw ConfigError(context + ": unknown key '" + key + "'");
  }
}

template <class T>
void read_key(const json& obj, const char* key, T& target, const std::string& context) {
  if (!obj.contains(key)) return;
  try {
    target = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(context + "." + key + ": wrong type");
  }
}

inline std::string resolve(const std::string& path, const std::string& base) {
  if (path.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_relative() && !base.empty()) p = std::filesystem::path(base) / p;
  if (!std::filesystem::exists(p)) throw ConfigError("referenced file does not exist: " + p.string());
  return p.string();
}

}  // namespace detail

// Parses a config document; relative paths resolve against `base_dir`.
inline ExperimentConfig parse_config(const json& j, const std::string& base_dir = "") {
  using detail::check_keys;
  using detail::read_key;
  check_keys(j,
             {"pipeline", "seed", "threads", "output", "graph", "test_fraction", "reference", "learner",
              "metrics", "threshold", "record_timings", "sessions", "dense"},
             "config");
  ExperimentConfig cfg;
  read_key(j, "pipeline", cfg.pipeline, "config");
  if (cfg.pipeline != "sessions" && cfg.pipeline != "dense")
    throw ConfigError("config.pipeline must be 'sessions' or 'dense'");
  read_key(j, "seed", cfg.seed, "config");
  read_key(j, "threads", cfg.threads, "config");
  read_key(j, "output", cfg.output, "config");
  read_key(j, "graph", cfg.graph, "config");
  read_key(j, "test_fraction", cfg.test_fraction, "config");
  read_key(j, "metrics", cfg.metrics, "config");
  read_key(j, "threshold", cfg.threshold, "config");
  read_key(j, "record_timings", cfg.record_timings, "config");
  if (cfg.graph != "pairwise" && cfg.graph != "class" && cfg.graph != "descriptor")
    throw ConfigError("config.graph must be 'pairwise', 'class' or 'descriptor'");
  if (cfg.graph == "descriptor" && cfg.pipeline != "sessions")
    throw ConfigError("config.graph 'descriptor' is only available for the sessions pipeline");
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0))
    throw ConfigError("config.test_fraction must lie in (0, 1)");
  if (cfg.threads < 1) throw ConfigError("config.threads must be at least 1");
  for (const auto& m : cfg.metrics)
    if (std::find(known_metrics().begin(), known_metrics().end(), m) == known_metrics().end())
      throw ConfigError("config.metrics: unknown metric '" + m + "'");

  if (j.contains("reference")) {
    const auto& r = j["reference"];
    check_keys(r, {"strategy", "size", "fraction", "representatives"}, "reference");
    read_key(r, "strategy", cfg.reference.strategy, "reference");
    read_key(r, "size", cfg.reference.size, "reference");
    read_key(r, "fraction", cfg.reference.fraction, "reference");
    read_key(r, "representatives", cfg.reference.representatives, "reference");
    if (cfg.reference.strategy != "random" && cfg.reference.strategy != "rarity")
      throw ConfigError("reference.strategy must be 'random' or 'rarity'");
  }
  if (j.contains("learner")) {
    const auto& l = j["learner"];
    check_keys(l,
               {"type", "C", "eta", "max_epochs", "tol", "bias_offset", "positive_weight",
                "negative_weight", "epochs", "l2"},
               "learner");
    read_key(l, "type", cfg.learner.type, "learner");
    if (cfg.learner.type != "svm" && cfg.learner.type != "logreg")
      throw ConfigError("learner.type must be 'svm' or 'logreg'");
    auto& s = cfg.learner.svm;
    read_key(l, "C", s.C, "learner");
    read_key(l, "max_epochs", s.max_epochs, "learner");
    read_key(l, "tol", s.tol, "learner");
    read_key(l, "bias_offset", s.bias_offset, "learner");
    read_key(l, "positive_weight", s.positive_weight, "learner");
    read_key(l, "negative_weight", s.negative_weight, "learner");
    auto& g = cfg.learner.logreg;
    read_key(l, "epochs", g.epochs, "learner");
    read_key(l, "l2", g.l2, "learner");
    if (cfg.learner.type == "svm") read_key(l, "eta", s.eta, "learner");
    else read_key(l, "eta", g.eta, "learner");
    if (cfg.learner.type == "logreg" && !j.contains("threshold")) cfg.threshold = 0.5;
  }
  if (cfg.pipeline == "sessions") {
    if (j.contains("dense")) throw ConfigError("config: 'dense' block given for the sessions pipeline");
    if (j.contains("sessions")) {
      const auto& s = j["sessions"];
      check_keys(s, {"data", "n_drop", "n_normal", "min_len", "max_len", "truncate_at", "min_reports", "modalities"},
                 "sessions");
      read_key(s, "data", cfg.session_data, "sessions");
      cfg.session_data = detail::resolve(cfg.session_data, base_dir);
      read_key(s, "n_drop", cfg.n_drop, "sessions");
      read_key(s, "n_normal", cfg.n_normal, "sessions");
      read_key(s, "min_len", cfg.min_len, "sessions");
      read_key(s, "max_len", cfg.max_len, "sessions");
      read_key(s, "truncate_at", cfg.truncate_at, "sessions");
      read_key(s, "min_reports", cfg.min_reports, "sessions");
      read_key(s, "modalities", cfg.session_modalities, "sessions");
    }
    const auto specs = sessions::session_specs();
    for (const auto& m : cfg.session_modalities)
      if (std::find_if(specs.begin(), specs.end(), [&](const auto& sp) { return sp.modality == m; }) ==
          specs.end())
        throw ConfigError("sessions.modalities: unknown modality '" + m + "'");
  } else {
    if (j.contains("sessions")) throw ConfigError("config: 'sessions' block given for the dense pipeline");
    if (!j.contains("dense")) throw ConfigError("config: the dense pipeline needs a 'dense' block");
    const auto& d = j["dense"];
    check_keys(d, {"modalities", "labels"}, "dense");
    read_key(d, "labels", cfg.labels_path, "dense");
    if (cfg.labels_path.empty()) throw ConfigError("dense.labels is required");
    cfg.labels_path = detail::resolve(cfg.labels_path, base_dir);
    if (!d.contains("modalities") || !d["modalities"].is_array() || d["modalities"].empty())
      throw ConfigError("dense.modalities must be a non-empty array");
    for (const auto& m : d["modalities"]) {
      check_keys(m, {"name", "path", "distance", "scale"}, "dense.modalities");
      ModalityConfig mc;
      read_key(m, "name", mc.name, "dense.modalities");
      read_key(m, "path", mc.path, "dense.modalities");
      read_key(m, "distance", mc.distance, "dense.modalities");
      read_key(m, "scale", mc.scale, "dense.modalities");
      static const std::set<std::string> registered = {"l1", "l2", "js", "fisher_discrete", "dtw"};
      if (!registered.count(mc.distance))
        throw ConfigError("dense.modalities: unregistered distance '" + mc.distance + "'");
      if (mc.name.empty()) throw ConfigError("dense.modalities: name is required");
      if (!(mc.scale > 0.0)) throw ConfigError("dense.modalities: scale must be positive");
      mc.path = detail::resolve(mc.path, base_dir);
      cfg.modalities.push_back(std::move(mc));
    }
  }
  cfg.digest_source = j;
  cfg.digest_source.erase("threads");
  cfg.digest_source.erase("output");
  return cfg;
}

inline std::string config_digest(const ExperimentConfig& cfg) {
  return Digest().add(cfg.digest_source.dump()).hex();
}

// ---------------------------------------------------------------------------
// Pipelines.

struct ExperimentResult {
  json report;
  std::vector<std::string> instance_ids;  // test instances
  std::vector<std::string> concepts;
  Matrix scores;                          // test x concept
  LabelMatrix labels;                     // test x concept
  std::size_t feature_columns = 0;
};

inline std::string predictions_csv(const ExperimentResult& r) {
  std::string out = "instance,concept,score,label\n";
  for (std::size_t i = 0; i < r.instance_ids.size(); ++i)
    for (std::size_t c = 0; c < r.concepts.size(); ++c)
      out += r.instance_ids[i] + "," + r.concepts[c] + "," + io::format_number(r.scores(i, c)) + "," +
             std::to_string(r.labels[i][c]) + "\n";
  return out;
}

namespace detail {

inline similarity::GraphType graph_type(const std::string& g) {
  return g == "class" ? similarity::GraphType::kClass : similarity::GraphType::kPairwise;
}

// Similarity features for train and test given prepared instances.
template <class Instance>
std::pair<Matrix, Matrix> similarity_split(const std::vector<Instance>& train,
                                           const std::vector<Instance>& test,
                                           const LabelMatrix& train_labels,
                                           const std::vector<similarity::DistanceSpec<Instance>>& specs,
                                           const ExperimentConfig& cfg, json& features) {
  const auto graph = graph_type(cfg.graph);
  const bool class_graph = graph == similarity::GraphType::kClass;
  const auto choice = run_stage("reference", [&] {
    return choose_references(train_labels, cfg.reference, class_graph, cfg.seed);
  });
  similarity::SampleSet<Instance> set;
  for (std::size_t i : choice.samples) set.samples.push_back(train[i]);
  for (std::size_t i : choice.representatives) {
    set.representatives.push_back(train[i]);
    set.representative_labels.push_back(train_labels[i][0]);
  }
  set.sample_ids = choice.samples;
  set.representative_ids = choice.representatives;
  auto stats = run_stage("standardize", [&] {
    return similarity::fit_similarity_stats(train, set, specs, graph, cfg.threads);
  });
  auto f_train = run_stage("features", [&] {
    return similarity::similarity_features(train, set, specs, stats, graph, cfg.threads);
  });
  auto f_test = run_stage("features", [&] {
    return similarity::similarity_features(test, set, specs, stats, graph, cfg.threads);
  });
  features = {{"graph", cfg.graph},
              {"columns", f_train.values.cols()},
              {"modalities", specs.size()},
              {"samples", set.samples.size()},
              {"representatives", set.representatives.size()},
              {"degenerate_columns", stats.degenerate_count()},
              {"stats_digest", stats.digest()}};
  return {std::move(f_train.values), std::move(f_test.values)};
}

inline ExperimentResult finish(const ExperimentConfig& cfg, const Matrix& f_train, const Matrix& f_test,
                               const LabelMatrix& train_labels, LabelMatrix test_labels,
                               std::vector<std::string> test_ids, std::vector<std::string> concepts,
                               json features, json timings, const Stopwatch& clock) {
  ExperimentResult r;
  r.scores = run_stage("learner", [&] {
    return train_and_score(f_train, f_test, train_labels, concepts.size(), cfg.learner, cfg.threads);
  });
  if (cfg.record_timings) timings["learner"] = clock.seconds();
  const json ev = run_stage("evaluate", [&] {
    return eval_report(r.scores, test_labels, cfg.metrics, concepts, cfg.threshold);
  });
  r.report = {{"config_digest", config_digest(cfg)},
              {"per_concept", ev["per_concept"]},
              {"macro", ev["macro"]},
              {"features", features},
              {"timings", timings}};
  r.feature_columns = f_train.cols();
  r.instance_ids = std::move(test_ids);
  r.concepts = std::move(concepts);
  r.labels = std::move(test_labels);
  return r;
}

}  // namespace detail

inline ExperimentResult run_sessions(const ExperimentConfig& cfg) {
  Stopwatch clock;
  json timings = json::object();
  auto records = run_stage("ingest", [&] {
    if (!cfg.session_data.empty()) return io::read_sessions(cfg.session_data);
    return sessions::generate_sessions(cfg.n_drop, cfg.n_normal, cfg.seed, {cfg.min_len, cfg.max_len});
  });
  // Minimum-length filter counts reports before truncation.
  std::erase_if(records, [&](const auto& s) { return s.length() < cfg.min_reports; });
  if (records.size() < 4) throw DataError("[ingest] too few sessions after the length filter");
  if (cfg.record_timings) timings["ingest"] = clock.seconds();

  const Split split = run_stage("split", [&] { return split_indices(records.size(), cfg.test_fraction, cfg.seed); });
  LabelMatrix train_labels, test_labels;
  std::vector<std::string> test_ids;
  for (std::size_t i : split.train) train_labels.push_back({records[i].label});
  for (std::size_t i : split.test) {
    test_labels.push_back({records[i].label});
    test_ids.push_back(records[i].id);
  }

  std::vector<sessions::PreparedSession> train, test;
  run_stage("describe", [&] {
    std::vector<Vector> descriptors;
    for (std::size_t i : split.train) descriptors.push_back(sessions::describe_session(records[i], cfg.truncate_at));
    const auto scaler = sessions::DescriptorScaler::fit(descriptors);
    for (std::size_t i : split.train) train.push_back(sessions::prepare_session(records[i], cfg.truncate_at, &scaler));
    for (std::size_t i : split.test) test.push_back(sessions::prepare_session(records[i], cfg.truncate_at, &scaler));
    return 0;
  });
  if (cfg.record_timings) timings["describe"] = clock.seconds();

  Matrix f_train, f_test;
  json features;
  if (cfg.graph == "descriptor") {
    // Baseline: linear kernel on the z-scored descriptors.
    f_train = Matrix(train.size(), sessions::kDescriptorSize);
    f_test = Matrix(test.size(), sessions::kDescriptorSize);
    for (std::size_t i = 0; i < train.size(); ++i)
      std::copy(train[i].descriptor.begin(), train[i].descriptor.end(), f_train.row(i).begin());
    for (std::size_t i = 0; i < test.size(); ++i)
      std::copy(test[i].descriptor.begin(), test[i].descriptor.end(), f_test.row(i).begin());
    features = {{"graph", "descriptor"}, {"columns", sessions::kDescriptorSize}};
  } else {
    auto specs = sessions::session_specs();
    if (!cfg.session_modalities.empty()) {
      std::erase_if(specs, [&](const auto& s) {
        return std::find(cfg.session_modalities.begin(), cfg.session_modalities.end(), s.modality) ==
               cfg.session_modalities.end();
      });
    }
    std::tie(f_train, f_test) = detail::similarity_split(train, test, train_labels, specs, cfg, features);
  }
  if (cfg.record_timings) timings["features"] = clock.seconds();
  return detail::finish(cfg, f_train, f_test, train_labels, std::move(test_labels), std::move(test_ids),
                        {"drop"}, std::move(features), std::move(timings), clock);
}

// Dense multimodal instance: one payload vector per modality.
struct DenseInstance {
  std::vector<Vector> modalities;
};

inline similarity::DistanceFn<DenseInstance> dense_distance(std::size_t m, const std::string& name) {
  using distances::Distribution;
  if (name == "l1")
    return [m](const DenseInstance& a, const DenseInstance& b) { return distances::l1(a.modalities[m], b.modalities[m]); };
  if (name == "l2")
    return [m](const DenseInstance& a, const DenseInstance& b) { return distances::l2(a.modalities[m], b.modalities[m]); };
  if (name == "dtw")
    return [m](const DenseInstance& a, const DenseInstance& b) { return distances::dtw(a.modalities[m], b.modalities[m]); };
  if (name == "js")
    return [m](const DenseInstance& a, const DenseInstance& b) {
      return distances::js_divergence(Distribution(a.modalities[m]), Distribution(b.modalities[m]));
    };
  if (name == "fisher_discrete")
    return [m](const DenseInstance& a, const DenseInstance& b) {
      return distances::fisher_distance_discrete(Distribution(a.modalities[m]), Distribution(b.modalities[m]));
    };
  throw ConfigError("unregistered distance '" + name + "'");
}

inline ExperimentResult run_dense(const ExperimentConfig& cfg) {
  Stopwatch clock;
  json timings = json::object();
  std::vector<DenseInstance> instances;
  LabelMatrix labels;
  std::vector<std::string> concepts;
  run_stage("ingest", [&] {
    const auto label_table = io::read_table(cfg.labels_path);
    concepts = label_table.header;
    for (std::size_t r = 0; r < label_table.values.rows(); ++r) {
      std::vector<int> row;
      for (double v : label_table.values.row(r)) {
        if (v != 0.0 && v != 1.0) throw DataError(cfg.labels_path + ": labels must be 0 or 1");
        row.push_back(static_cast<int>(v));
      }
      labels.push_back(std::move(row));
    }
    instances.resize(labels.size());
    for (const auto& m : cfg.modalities) {
      const auto table = io::read_table(m.path);
      if (table.values.rows() != labels.size())
        throw DataError(m.path + ": row count differs from the label file");
      for (std::size_t r = 0; r < labels.size(); ++r) {
        Vector v = table.values.row_vector(r);
        if (m.distance == "js" || m.distance == "fisher_discrete") distances::Distribution check(v);
        instances[r].modalities.push_back(std::move(v));
      }
    }
    return 0;
  });
  if (cfg.record_timings) timings["ingest"] = clock.seconds();

  const Split split = run_stage("split", [&] { return split_indices(labels.size(), cfg.test_fraction, cfg.seed); });
  std::vector<DenseInstance> train, test;
  LabelMatrix train_labels, test_labels;
  std::vector<std::string> test_ids;
  for (std::size_t i : split.train) {
    train.push_back(instances[i]);
    train_labels.push_back(labels[i]);
  }
  for (std::size_t i : split.test) {
    test.push_back(instances[i]);
    test_labels.push_back(labels[i]);
    test_ids.push_back(std::to_string(i));
  }
  for (std::size_t c = 0; c < concepts.size(); ++c) {
    const bool pos = std::any_of(train_labels.begin(), train_labels.end(), [&](const auto& r) { return r[c] == 1; });
    if (!pos) throw DataError("[split] concept '" + concepts[c] + "' has no training positive");
  }

  std::vector<similarity::DistanceSpec<DenseInstance>> specs;
  for (std::size_t m = 0; m < cfg.modalities.size(); ++m)
    specs.push_back({cfg.modalities[m].name, dense_distance(m, cfg.modalities[m].distance), cfg.modalities[m].scale});
  json features;
  auto [f_train, f_test] = detail::similarity_split(train, test, train_labels, specs, cfg, features);
  if (cfg.record_timings) timings["features"] = clock.seconds();
  return detail::finish(cfg, f_train, f_test, train_labels, std::move(test_labels), std::move(test_ids),
                        std::move(concepts), std::move(features), std::move(timings), clock);
}

// Runs the configured pipeline and, when an output directory is set, writes
// report.json and predictions.csv there.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult r = cfg.pipeline == "sessions" ? run_sessions(cfg) : run_dense(cfg);
  if (!cfg.output.empty()) {
    run_stage("report", [&] {
      std::filesystem::create_directories(cfg.output);
      io::write_file((std::filesystem::path(cfg.output) / "report.json").string(), io::dump(r.report));
      io::write_file((std::filesystem::path(cfg.output) / "predictions.csv").string(), predictions_csv(r));
      return 0;
    });
  }
  return r;
}

}  // namespace simkernel::harness
