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

// simkernel command-line tool.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
// failure, 1 anything else. Every subcommand writes into --output.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "simkernel/bicluster.hpp"
#include "simkernel/fisher.hpp"
#include "simkernel/gmm.hpp"
#include "simkernel/harness.hpp"
#include "simkernel/io.hpp"
#include "simkernel/learners.hpp"
#include "simkernel/metrics.hpp"
#include "simkernel/sessions.hpp"
#include "simkernel/similarity.hpp"

namespace {

using namespace simkernel;
using nlohmann::json;
namespace fs = std::filesystem;

struct Globals {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string output = "out";
  bool seed_given = false, threads_given = false, output_given = false;
};

std::string out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.output);
  return (fs::path(g.output) / name).string();
}

std::vector<int> read_label_column(const std::string& path, bool signed_labels) {
  const auto t = io::read_table(path);
  std::vector<int> y;
  for (std::size_t r = 0; r < t.values.rows(); ++r) {
    const double v = t.values(r, 0);
    if (signed_labels) {
      if (v == 1.0) y.push_back(1);
      else if (v == -1.0 || v == 0.0) y.push_back(-1);
      else throw DataError(path + ": labels must be -1/+1 or 0/1");
    } else {
      if (v != 0.0 && v != 1.0) throw DataError(path + ": labels must be 0 or 1");
      y.push_back(static_cast<int>(v));
    }
  }
  return y;
}

// ---------------------------------------------------------------------------

void cmd_gmm_train(const Globals& g, const std::string& input, std::size_t components, int max_iter,
                   double tol) {
  const auto table = io::read_table(input);
  gmm::EmOptions options;
  options.seed = g.seed;
  options.max_iter = max_iter;
  options.tol = tol;
  options.threads = g.threads;
  const auto result = gmm::em_fit(table.values, components, options);
  const json meta = {{"seed", g.seed},
                     {"iterations", result.iterations},
                     {"converged", result.converged},
                     {"reseeds", result.reseeds},
                     {"final_loglik", result.loglik_trace.back()},
                     {"loglik_trace", result.loglik_trace}};
  io::write_file(out_path(g, "gmm.json"), io::dump(io::gmm_json(result.model, meta)));
}

void cmd_fisher(const Globals& g, const std::string& model_path, const std::string& input,
                const std::string& normalize, double power) {
  const auto model = io::gmm_from_json(io::read_json(model_path));
  const auto table = io::read_table(input);
  const std::size_t set_col = table.column("set");
  if (table.header.size() - 1 != model.dim())
    throw DataError(input + ": sample dimension differs from the model");
  std::map<double, std::vector<Vector>> sets;
  for (std::size_t r = 0; r < table.values.rows(); ++r) {
    Vector x;
    for (std::size_t c = 0; c < table.values.cols(); ++c)
      if (c != set_col) x.push_back(table.values(r, c));
    sets[table.values(r, set_col)].push_back(std::move(x));
  }
  fisher::Normalization norm;
  if (normalize == "power" || normalize == "both") norm.power = power;
  if (normalize == "l2" || normalize == "both") norm.l2 = true;
  if (normalize != "none" && normalize != "power" && normalize != "l2" && normalize != "both")
    throw ConfigError("--normalize must be none, power, l2 or both");

  const std::size_t length = 2 * model.components() * model.dim() + model.components();
  Matrix out(sets.size(), length + 1);
  std::size_t row = 0;
  for (const auto& [id, samples] : sets) {
    const auto fv = fisher::fisher_vector(model, Matrix::from_rows(samples), norm, g.threads);
    out(row, 0) = id;
    std::copy(fv.values.begin(), fv.values.end(), out.row(row).begin() + 1);
    ++row;
  }
  std::vector<std::string> header = {"set"};
  for (std::size_t i = 0; i < length; ++i) header.push_back("f" + std::to_string(i));
  io::write_table(out_path(g, "fisher.csv"), header, out);
  const json sidecar = {{"model_id", fisher::model_id(model)},
                        {"normalize", normalize},
                        {"power", norm.power ? json(*norm.power) : json(nullptr)},
                        {"length", length},
                        {"sets", sets.size()}};
  io::write_file(out_path(g, "fisher.json"), io::dump(sidecar));
}

// Columns named "<modality>.<feature>" group into modalities; a column
// without a dot is its own modality.
struct ModalLayout {
  std::vector<std::string> names;
  std::vector<std::vector<std::size_t>> columns;
};

ModalLayout modal_layout(const std::vector<std::string>& header) {
  ModalLayout layout;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto dot = header[c].find('.');
    const std::string name = dot == std::string::npos ? header[c] : header[c].substr(0, dot);
    auto it = std::find(layout.names.begin(), layout.names.end(), name);
    if (it == layout.names.end()) {
      layout.names.push_back(name);
      layout.columns.emplace_back();
      it = layout.names.end() - 1;
    }
    layout.columns[static_cast<std::size_t>(it - layout.names.begin())].push_back(c);
  }
  return layout;
}

std::vector<harness::DenseInstance> dense_instances(const io::Table& t, const ModalLayout& layout) {
  std::vector<harness::DenseInstance> out(t.values.rows());
  for (std::size_t r = 0; r < t.values.rows(); ++r)
    for (const auto& cols : layout.columns) {
      Vector v;
      for (std::size_t c : cols) v.push_back(t.values(r, c));
      out[r].modalities.push_back(std::move(v));
    }
  return out;
}

void cmd_simkernel_features(const Globals& g, const std::string& train_path,
                            const std::string& apply_path, const std::vector<std::string>& distance_opts,
                            const std::string& graph_name, std::size_t sample_count,
                            std::size_t representative_count, const std::string& labels_path,
                            bool write_kernel) {
  const auto train_table = io::read_table(train_path);
  const auto apply_table = io::read_table(apply_path);
  if (train_table.header != apply_table.header)
    throw DataError("train and apply files have different columns");
  const auto layout = modal_layout(train_table.header);
  std::map<std::string, std::string> dist;
  for (const auto& opt : distance_opts) {
    const auto eq = opt.find('=');
    if (eq == std::string::npos) throw ConfigError("--distance expects modality=name");
    dist[opt.substr(0, eq)] = opt.substr(eq + 1);
  }
  for (const auto& [name, d] : dist)
    if (std::find(layout.names.begin(), layout.names.end(), name) == layout.names.end())
      throw ConfigError("--distance names unknown modality '" + name + "'");
  std::vector<similarity::DistanceSpec<harness::DenseInstance>> specs;
  for (std::size_t m = 0; m < layout.names.size(); ++m) {
    const auto it = dist.find(layout.names[m]);
    specs.push_back({layout.names[m], harness::dense_distance(m, it == dist.end() ? "l2" : it->second)});
  }

  if (graph_name != "pairwise" && graph_name != "class")
    throw ConfigError("--graph must be pairwise or class");
  const auto graph = harness::detail::graph_type(graph_name);
  const auto train = dense_instances(train_table, layout);
  const auto apply = dense_instances(apply_table, layout);
  harness::LabelMatrix labels(train.size(), std::vector<int>{0});
  if (!labels_path.empty()) {
    const auto y = read_label_column(labels_path, false);
    if (y.size() != train.size()) throw DataError("label count differs from training rows");
    for (std::size_t i = 0; i < y.size(); ++i) labels[i][0] = y[i];
  } else if (graph == similarity::GraphType::kClass) {
    throw ConfigError("--labels is required for the class graph");
  }
  harness::ReferenceOptions ref;
  ref.size = sample_count;
  ref.representatives = representative_count;
  const auto choice =
      harness::choose_references(labels, ref, graph == similarity::GraphType::kClass, g.seed);
  similarity::SampleSet<harness::DenseInstance> set;
  for (std::size_t i : choice.samples) set.samples.push_back(train[i]);
  for (std::size_t i : choice.representatives) {
    set.representatives.push_back(train[i]);
    set.representative_labels.push_back(labels[i][0]);
  }
  set.sample_ids = choice.samples;
  set.representative_ids = choice.representatives;

  const auto stats = similarity::fit_similarity_stats(train, set, specs, graph, g.threads);
  if (stats.degenerate_count() > 0)
    std::cerr << "warning: " << stats.degenerate_count() << " constant feature column(s) set to 0\n";
  const auto f_train = similarity::similarity_features(train, set, specs, stats, graph, g.threads);
  const auto f_apply = similarity::similarity_features(apply, set, specs, stats, graph, g.threads);
  io::write_table(out_path(g, "features_train.csv"), f_train.column_ids, f_train.values);
  io::write_table(out_path(g, "features_apply.csv"), f_apply.column_ids, f_apply.values);
  json sidecar = {{"graph_type", graph_name},
                  {"modalities", layout.names},
                  {"S", set.samples.size()},
                  {"R", set.representatives.size()},
                  {"sample_indices", choice.samples},
                  {"representative_indices", choice.representatives},
                  {"degenerate_columns", stats.degenerate_count()},
                  {"stats_digest", stats.digest()}};
  io::write_file(out_path(g, "features.json"), io::dump(sidecar));
  if (write_kernel) {
    std::vector<std::string> header;
    for (std::size_t i = 0; i < train.size(); ++i) header.push_back("t" + std::to_string(i));
    io::write_table(out_path(g, "kernel_train.csv"), header,
                    similarity::similarity_kernel_matrix(f_train, nullptr, g.threads));
    io::write_table(out_path(g, "kernel_apply.csv"), header,
                    similarity::similarity_kernel_matrix(f_apply, &f_train, g.threads));
  }
}

void cmd_svm_train(const Globals& g, const std::string& kernel_path, const std::string& labels_path,
                   learners::SvmOptions options) {
  const auto k = io::read_table(kernel_path).values;
  const auto y = read_label_column(labels_path, true);
  const auto model = learners::svm_train(k, y, options);
  const json meta = {{"epochs", model.epochs},
                     {"converged", model.converged},
                     {"dual_objective", model.objective_trace.back()},
                     {"support_vectors", model.support_indices.size()}};
  io::write_file(out_path(g, "svm.json"), io::dump(io::svm_json(model, meta)));
}

void cmd_predict(const Globals& g, const std::string& model_path, const std::string& kernel_path) {
  const auto model = io::svm_from_json(io::read_json(model_path));
  const auto k = io::read_table(kernel_path).values;
  const Vector scores = learners::svm_decision(model, k, g.threads);
  Matrix m(scores.size(), 1);
  for (std::size_t i = 0; i < scores.size(); ++i) m(i, 0) = scores[i];
  io::write_table(out_path(g, "predictions.csv"), {"score"}, m);
}

// Predictions CSV with "score" and "label" columns and an optional string
// "concept" column.
void cmd_eval(const Globals& g, const std::string& path, const std::vector<std::string>& metric_names,
              double threshold) {
  const auto lines = io::read_lines(path);
  if (lines.size() < 2) throw DataError(path + ": no predictions");
  const auto header = io::split(lines[0]);
  auto find = [&](const std::string& name) -> std::ptrdiff_t {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
  };
  const auto score_col = find("score"), label_col = find("label"), concept_col = find("concept");
  if (score_col < 0 || label_col < 0) throw DataError(path + ": needs score and label columns");
  std::vector<std::string> concepts;
  std::map<std::string, std::pair<Vector, std::vector<int>>> data;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = io::split(lines[i]);
    const std::string where = path + ":" + std::to_string(i + 1);
    if (cells.size() != header.size()) throw DataError(where + ": wrong cell count");
    const std::string concept_name = concept_col >= 0 ? cells[static_cast<std::size_t>(concept_col)] : "all";
    if (!data.count(concept_name)) concepts.push_back(concept_name);
    const double label = io::parse_number(cells[static_cast<std::size_t>(label_col)], where);
    if (label != 0.0 && label != 1.0) throw DataError(where + ": label must be 0 or 1");
    data[concept_name].first.push_back(io::parse_number(cells[static_cast<std::size_t>(score_col)], where));
    data[concept_name].second.push_back(static_cast<int>(label));
  }
  const std::size_t n = data[concepts[0]].first.size();
  for (const auto& c : concepts)
    if (data[c].first.size() != n) throw DataError(path + ": concepts have different instance counts");
  Matrix scores(n, concepts.size());
  harness::LabelMatrix labels(n, std::vector<int>(concepts.size()));
  for (std::size_t c = 0; c < concepts.size(); ++c)
    for (std::size_t i = 0; i < n; ++i) {
      scores(i, c) = data[concepts[c]].first[i];
      labels[i][c] = data[concepts[c]].second[i];
    }
  const json report = harness::eval_report(scores, labels, metric_names, concepts, threshold);
  io::write_file(out_path(g, "eval.json"), io::dump(report));
}

void cmd_bicluster(const Globals& g, const std::string& input, std::size_t k, std::size_t l, int max_iter,
                   double weight, const std::string& external, int restarts) {
  const auto counts = io::read_table(input).values;
  bicluster::CoclusterOptions options;
  options.row_clusters = k;
  options.col_clusters = l;
  options.seed = g.seed;
  options.max_iter = max_iter;
  options.weight = weight;
  options.threads = g.threads;
  if (!external.empty()) options.external = io::read_table(external).values;
  const auto result = bicluster::cocluster_best(counts, options, restarts);
  if (!result.dropped_columns.empty())
    std::cerr << "warning: dropped " << result.dropped_columns.size() << " all-zero column(s)\n";
  io::write_file(out_path(g, "row_clusters.csv"), io::assignment_csv("row_id", result.rows));
  io::write_file(out_path(g, "col_clusters.csv"), io::assignment_csv("col_id", result.columns));
  io::write_file(out_path(g, "bicluster.json"), io::dump(io::coclustering_meta(result)));
}

void cmd_dtw(const Globals& g, const std::string& input) {
  std::vector<Vector> series;
  const auto lines = io::read_lines(input);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    Vector s;
    for (const auto& cell : io::split(lines[i]))
      s.push_back(io::parse_number(cell, input + ":" + std::to_string(i + 1)));
    series.push_back(std::move(s));
  }
  if (series.empty()) throw DataError(input + ": no series");
  Matrix d(series.size(), series.size());
  parallel_for(series.size(), g.threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < series.size(); ++j) d(i, j) = distances::dtw(series[i], series[j]);
  });
  std::vector<std::string> header;
  for (std::size_t i = 0; i < series.size(); ++i) header.push_back("s" + std::to_string(i));
  io::write_table(out_path(g, "dtw.csv"), header, d);
}

void cmd_synth_sessions(const Globals& g, std::size_t drop, std::size_t normal, std::size_t min_len,
                        std::size_t max_len) {
  const auto records = sessions::generate_sessions(drop, normal, g.seed, {min_len, max_len});
  io::write_file(out_path(g, "sessions.csv"), io::sessions_csv(records));
}

void cmd_select_refset(const Globals& g, const std::string& labels_path, double fraction) {
  const auto t = io::read_table(labels_path);
  harness::LabelMatrix labels;
  for (std::size_t r = 0; r < t.values.rows(); ++r) {
    std::vector<int> row;
    for (double v : t.values.row(r)) {
      if (v != 0.0 && v != 1.0) throw DataError(labels_path + ": labels must be 0 or 1");
      row.push_back(static_cast<int>(v));
    }
    labels.push_back(std::move(row));
  }
  const auto chosen = harness::select_reference_set(labels, fraction);
  Matrix m(chosen.size(), 1);
  for (std::size_t i = 0; i < chosen.size(); ++i) m(i, 0) = static_cast<double>(chosen[i]);
  io::write_table(out_path(g, "refset.csv"), {"index"}, m);
  io::write_file(out_path(g, "refset.json"),
                 io::dump({{"fraction", fraction}, {"size", chosen.size()}, {"training_size", labels.size()}}));
}

void cmd_weight_search(const Globals& g, const std::string& pairs_path, double step) {
  const auto t = io::read_table(pairs_path);
  const std::size_t same_col = t.column("same");
  std::vector<std::string> modalities;
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (c != same_col) modalities.push_back(t.header[c]);
  if (modalities.empty()) throw DataError(pairs_path + ": no modality columns");
  Matrix d(t.values.rows(), modalities.size());
  std::vector<int> same;
  for (std::size_t r = 0; r < t.values.rows(); ++r) {
    std::size_t k = 0;
    for (std::size_t c = 0; c < t.header.size(); ++c)
      if (c != same_col) d(r, k++) = t.values(r, c);
    const double v = t.values(r, same_col);
    if (v != 0.0 && v != 1.0) throw DataError(pairs_path + ": 'same' must be 0 or 1");
    same.push_back(static_cast<int>(v));
  }
  const auto result =
      harness::search_modality_weights(d, same, harness::simplex_grid(modalities.size(), step));
  io::write_file(out_path(g, "weights.json"), io::dump({{"modalities", modalities},
                                                        {"weights", result.weights},
                                                        {"auc", result.auc},
                                                        {"candidate", result.candidate}}));
}

void cmd_run(Globals g, const std::string& config_path) {
  const json j = io::read_json(config_path);
  auto cfg = harness::parse_config(j, fs::path(config_path).parent_path().string());
  if (g.seed_given) {
    cfg.seed = g.seed;
    cfg.digest_source["seed"] = g.seed;
  }
  if (g.threads_given || !j.contains("threads")) cfg.threads = g.threads;
  if (g.output_given || cfg.output.empty()) cfg.output = g.output;
  const auto result = harness::run_experiment(cfg);
  std::cout << io::dump(result.report["macro"]);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simkernel: Fisher and similarity kernels for multimodal data"};
  app.require_subcommand(1);
  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  auto* threads_opt =
      app.add_option("--threads", g.threads, "worker threads")->check(CLI::Range(1, 1024))->capture_default_str();
  auto* output_opt = app.add_option("--output", g.output, "output directory")->capture_default_str();

  std::function<void()> action;

  auto* gmm = app.add_subcommand("gmm-train", "fit a diagonal Gaussian mixture by EM");
  std::string gmm_input;
  std::size_t components = 2;
  int max_iter = 200;
  double tol = 1e-6;
  gmm->add_option("--input", gmm_input, "samples CSV with header")->required()->check(CLI::ExistingFile);
  gmm->add_option("--components", components, "mixture size")->required();
  gmm->add_option("--max-iter", max_iter)->capture_default_str();
  gmm->add_option("--tol", tol)->capture_default_str();
  gmm->callback([&] { action = [&] { cmd_gmm_train(g, gmm_input, components, max_iter, tol); }; });

  auto* fisher_cmd = app.add_subcommand("fisher", "Fisher vectors of sample sets under a GMM");
  std::string fisher_model, fisher_input, normalize = "both";
  double power = 0.5;
  fisher_cmd->add_option("--model", fisher_model, "gmm.json")->required()->check(CLI::ExistingFile);
  fisher_cmd->add_option("--input", fisher_input, "CSV with a 'set' column")->required()->check(CLI::ExistingFile);
  fisher_cmd->add_option("--normalize", normalize, "none | power | l2 | both")->capture_default_str();
  fisher_cmd->add_option("--power", power, "signed power exponent")->capture_default_str();
  fisher_cmd->callback([&] { action = [&] { cmd_fisher(g, fisher_model, fisher_input, normalize, power); }; });

  auto* feat = app.add_subcommand("simkernel-features", "similarity-kernel features");
  std::string feat_train, feat_apply, graph = "pairwise", feat_labels;
  std::vector<std::string> distance_opts;
  std::size_t samples = 30, reps = 10;
  bool write_kernel = false;
  feat->add_option("--train", feat_train, "training CSV")->required()->check(CLI::ExistingFile);
  feat->add_option("--apply", feat_apply, "CSV to featurize")->required()->check(CLI::ExistingFile);
  feat->add_option("--distance", distance_opts, "modality=l1|l2|js|fisher_discrete|dtw");
  feat->add_option("--graph", graph, "pairwise | class")->capture_default_str();
  feat->add_option("--samples", samples, "reference set size")->capture_default_str();
  feat->add_option("--representatives", reps, "class representatives")->capture_default_str();
  feat->add_option("--labels", feat_labels, "training labels (class graph)")->check(CLI::ExistingFile);
  feat->add_flag("--kernel", write_kernel, "also write train and apply kernel matrices");
  feat->callback([&] {
    action = [&] {
      cmd_simkernel_features(g, feat_train, feat_apply, distance_opts, graph, samples, reps, feat_labels,
                             write_kernel);
    };
  });

  auto* svm = app.add_subcommand("svm-train", "train a 1-norm soft-margin SVM on a kernel");
  std::string svm_kernel, svm_labels;
  learners::SvmOptions svm_options;
  svm->add_option("--kernel", svm_kernel, "square kernel CSV")->required()->check(CLI::ExistingFile);
  svm->add_option("--labels", svm_labels, "label CSV")->required()->check(CLI::ExistingFile);
  svm->add_option("--C", svm_options.C)->capture_default_str();
  svm->add_option("--eta", svm_options.eta, "0 selects 1/max K_ii")->capture_default_str();
  svm->add_option("--max-epochs", svm_options.max_epochs)->capture_default_str();
  svm->add_option("--tol", svm_options.tol)->capture_default_str();
  svm->add_option("--bias-offset", svm_options.bias_offset)->capture_default_str();
  svm->callback([&] { action = [&] { cmd_svm_train(g, svm_kernel, svm_labels, svm_options); }; });

  auto* predict = app.add_subcommand("predict", "score instances with a trained SVM");
  std::string predict_model, predict_kernel;
  predict->add_option("--model", predict_model, "svm.json")->required()->check(CLI::ExistingFile);
  predict->add_option("--kernel", predict_kernel, "test x train kernel CSV")->required()->check(CLI::ExistingFile);
  predict->callback([&] { action = [&] { cmd_predict(g, predict_model, predict_kernel); }; });

  auto* eval = app.add_subcommand("eval", "evaluate predictions");
  std::string eval_input;
  std::vector<std::string> metric_names = {"auc", "ap", "ndcg", "accuracy", "f1"};
  double threshold = 0.0;
  eval->add_option("--predictions", eval_input, "CSV with score,label[,concept]")->required()->check(CLI::ExistingFile);
  eval->add_option("--metrics", metric_names)->delimiter(',')->capture_default_str();
  eval->add_option("--threshold", threshold)->capture_default_str();
  eval->callback([&] { action = [&] { cmd_eval(g, eval_input, metric_names, threshold); }; });

  auto* bic = app.add_subcommand("bicluster", "information-theoretic co-clustering");
  std::string bic_input, bic_external;
  std::size_t row_clusters = 2, col_clusters = 2;
  int bic_iter = 100, restarts = 1;
  double weight = 0.0;
  bic->add_option("--input", bic_input, "count matrix CSV")->required()->check(CLI::ExistingFile);
  bic->add_option("--row-clusters", row_clusters)->capture_default_str();
  bic->add_option("--col-clusters", col_clusters)->capture_default_str();
  bic->add_option("--max-iter", bic_iter)->capture_default_str();
  bic->add_option("--weight", weight, "external distance blend weight")->capture_default_str();
  bic->add_option("--external", bic_external, "row x row distance CSV")->check(CLI::ExistingFile);
  bic->add_option("--restarts", restarts)->capture_default_str();
  bic->callback([&] {
    action = [&] { cmd_bicluster(g, bic_input, row_clusters, col_clusters, bic_iter, weight, bic_external, restarts); };
  });

  auto* dtw = app.add_subcommand("dtw", "pairwise DTW distances between series");
  std::string dtw_input;
  dtw->add_option("--input", dtw_input, "one comma-separated series per line")->required()->check(CLI::ExistingFile);
  dtw->callback([&] { action = [&] { cmd_dtw(g, dtw_input); }; });

  auto* synth = app.add_subcommand("synth-sessions", "generate synthetic session records");
  std::size_t n_drop = 100, n_normal = 100, min_len = 15, max_len = 0;
  synth->add_option("--drop", n_drop)->capture_default_str();
  synth->add_option("--normal", n_normal)->capture_default_str();
  synth->add_option("--min-len", min_len)->capture_default_str();
  synth->add_option("--max-len", max_len, "0 selects 2 * min-len")->capture_default_str();
  synth->callback([&] { action = [&] { cmd_synth_sessions(g, n_drop, n_normal, min_len, max_len); }; });

  auto* refset = app.add_subcommand("select-refset", "rarity-ranked reference set");
  std::string refset_labels;
  double fraction = 0.1;
  refset->add_option("--labels", refset_labels, "label matrix CSV")->required()->check(CLI::ExistingFile);
  refset->add_option("--fraction", fraction)->capture_default_str();
  refset->callback([&] { action = [&] { cmd_select_refset(g, refset_labels, fraction); }; });

  auto* ws = app.add_subcommand("weight-search", "grid search of modality weights by pair AUC");
  std::string pairs;
  double step = 0.1;
  ws->add_option("--pairs", pairs, "CSV with 'same' and one column per modality")->required()->check(CLI::ExistingFile);
  ws->add_option("--step", step)->capture_default_str();
  ws->callback([&] { action = [&] { cmd_weight_search(g, pairs, step); }; });

  auto* run = app.add_subcommand("run", "config-driven experiment");
  std::string config;
  run->add_option("--config", config, "experiment JSON")->required()->check(CLI::ExistingFile);
  run->callback([&] { action = [&] { cmd_run(g, config); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  g.seed_given = seed_opt->count() > 0;
  g.threads_given = threads_opt->count() > 0;
  g.output_given = output_opt->count() > 0;

  try {
    action();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
