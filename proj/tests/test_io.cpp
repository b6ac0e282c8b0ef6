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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>
#include <sys/wait.h>

#include "simkernel/io.hpp"

namespace {

using namespace simkernel;
namespace fs = std::filesystem;
using io::json;

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "simkernel_io_test";
  fs::create_directories(dir);
  return dir;
}

std::string write_scratch(const std::string& name, const std::string& content) {
  const std::string path = (scratch() / name).string();
  io::write_file(path, content);
  return path;
}

TEST(Numbers, FormatRoundTripsExactly) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double v = rng.normal() * std::pow(10.0, static_cast<int>(rng.uniform() * 40) - 20);
    EXPECT_EQ(io::parse_number(io::format_number(v), "t"), v);
  }
  EXPECT_EQ(io::parse_number(io::format_number(std::numeric_limits<double>::min()), "t"),
            std::numeric_limits<double>::min());
  EXPECT_THROW(io::parse_number("1.5x", "t"), DataError);
  EXPECT_THROW(io::parse_number("", "t"), DataError);
}

TEST(Numbers, SplitKeepsTrailingEmptyCell) {
  EXPECT_EQ(io::split("a,b,"), (std::vector<std::string>{"a", "b", ""}));
  EXPECT_EQ(io::split("a;b", ';'), (std::vector<std::string>{"a", "b"}));
}

TEST(Tables, RoundTripAndErrors) {
  const Matrix m = Matrix::from_rows({{1.0, -2.5}, {1e-300, 3.0}});
  const auto path = write_scratch("t.csv", io::table_csv({"x", "y"}, m));
  const auto t = io::read_table(path);
  EXPECT_EQ(t.header, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(t.values, m);
  EXPECT_EQ(t.column("y"), 1u);
  EXPECT_THROW(t.column("z"), DataError);
  EXPECT_THROW(io::read_table(write_scratch("ragged.csv", "x,y\n1,2\n3\n")), DataError);
  EXPECT_THROW(io::read_table(write_scratch("text.csv", "x\nabc\n")), DataError);
  EXPECT_THROW(io::read_table(write_scratch("header.csv", "x,y\n")), DataError);
  EXPECT_THROW(io::read_table((scratch() / "missing.csv").string()), DataError);
  EXPECT_THROW(io::table_csv({"x"}, m), std::invalid_argument);
}

TEST(Json, InvalidJsonIsConfigError) {
  EXPECT_THROW(io::read_json(write_scratch("bad.json", "{\"a\": ")), ConfigError);
  EXPECT_EQ(io::read_json(write_scratch("ok.json", "{\"a\": 1}"))["a"], 1);
}

TEST(Sessions, CsvRoundTrip) {
  const auto records = sessions::generate_sessions(4, 5, 9);
  const auto path = write_scratch("s.csv", io::sessions_csv(records));
  const auto back = io::read_sessions(path);
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(back[i].id, records[i].id);
    EXPECT_EQ(back[i].label, records[i].label);
    EXPECT_EQ(back[i].series, records[i].series);
  }
}

TEST(Sessions, MalformedCsvIsDataError) {
  std::string header = "session_id,t_index";
  for (const char* name : sessions::kSeriesNames) header += std::string(",") + name;
  header += ",label\n";
  const auto valid = sessions::generate_sessions(1, 1, 1)[0];
  std::string row_values = ",";
  for (const auto& series : valid.series) row_values += io::format_number(series[0]) + ",";
  auto row = [&](const std::string& id, int t, int label) {
    return id + "," + std::to_string(t) + row_values + std::to_string(label) + "\n";
  };
  EXPECT_NO_THROW(io::read_sessions(write_scratch("ok.csv", header + row("a", 0, 1) + row("a", 1, 1))));
  EXPECT_THROW(io::read_sessions(write_scratch("gap.csv", header + row("a", 0, 1) + row("a", 2, 1))), DataError);
  EXPECT_THROW(io::read_sessions(write_scratch("lab.csv", header + row("a", 0, 1) + row("a", 1, 0))), DataError);
  EXPECT_THROW(io::read_sessions(write_scratch("split.csv", header + row("a", 0, 0) + row("b", 0, 0) + row("a", 1, 0))),
               DataError);
  EXPECT_THROW(io::read_sessions(write_scratch("two.csv", header + row("a", 0, 2))), DataError);
  EXPECT_THROW(io::read_sessions(write_scratch("hdr.csv", "session_id,t_index,label\n")), DataError);
}

TEST(Terms, ParseMergesAndSorts) {
  const auto doc = io::parse_term_line("7:2 3:1 7:0.5", "t");
  EXPECT_EQ(doc.terms, (std::vector<std::pair<int, double>>{{3, 1.0}, {7, 2.5}}));
  EXPECT_EQ(doc.length, 3.5);
  EXPECT_TRUE(io::parse_term_line("", "t").terms.empty());
  EXPECT_THROW(io::parse_term_line("3", "t"), DataError);
  EXPECT_THROW(io::parse_term_line("3:0", "t"), DataError);
  EXPECT_THROW(io::parse_term_line("1.5:2", "t"), DataError);
  EXPECT_THROW(io::parse_term_line("-1:2", "t"), DataError);
}

TEST(Models, GmmRoundTrip) {
  const gmm::GaussianMixture model({0.25, 0.75}, Matrix::from_rows({{0.0, 1.0}, {2.0, -1.0}}),
                                   Matrix::from_rows({{1.0, 0.5}, {0.1, 2.0}}));
  const auto j = io::gmm_json(model, {{"seed", 3}});
  const auto back = io::gmm_from_json(json::parse(j.dump()));
  EXPECT_EQ(back.weights(), model.weights());
  EXPECT_EQ(back.means(), model.means());
  EXPECT_EQ(back.stdevs(), model.stdevs());
  auto wrong = j;
  wrong["n"] = 3;
  EXPECT_THROW(io::gmm_from_json(wrong), DataError);
  wrong = j;
  wrong["weights"] = {0.5, 0.6};
  EXPECT_THROW(io::gmm_from_json(wrong), DataError);
  EXPECT_THROW(io::gmm_from_json(json::object()), DataError);
}

TEST(Models, SvmRoundTrip) {
  const Matrix k = Matrix::from_rows({{1.0, 0.2, 0.1}, {0.2, 1.0, 0.3}, {0.1, 0.3, 1.0}});
  learners::SvmOptions o;
  o.bias_offset = 1.0;
  const auto model = learners::svm_train(k, {1, -1, 1}, o);
  const auto back = io::svm_from_json(json::parse(io::svm_json(model, {}).dump()));
  EXPECT_EQ(learners::svm_decision(back, k), learners::svm_decision(model, k));
  auto bad = io::svm_json(model, {});
  bad["support_indices"] = {5};
  EXPECT_THROW(io::svm_from_json(bad), DataError);
  bad = io::svm_json(model, {});
  bad["labels"] = {1};
  EXPECT_THROW(io::svm_from_json(bad), DataError);
}

TEST(Models, RaggedMatrixIsDataError) {
  EXPECT_THROW(io::matrix_from_json(json::parse("[[1, 2], [3]]"), "m"), DataError);
  EXPECT_THROW(io::matrix_from_json(json::parse("3"), "m"), DataError);
}

TEST(Assignments, CsvLayout) {
  EXPECT_EQ(io::assignment_csv("row_id", {1, 0, 1}), "row_id,cluster_id\n0,1\n1,0\n2,1\n");
}

int cli(const std::string& args) {
  const std::string command = std::string(SIMKERNEL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodesByErrorKind) {
  const fs::path out = scratch() / "cli";
  const std::string o = " --output " + out.string();
  EXPECT_EQ(cli("--help"), 0);
  EXPECT_EQ(cli("no-such-command"), 2);
  EXPECT_EQ(cli(o + " run --config " + write_scratch("bad.json", "{\"pipeline\": \"x\"}")), 2);
  EXPECT_EQ(cli(o + " dtw --input " + write_scratch("series.txt", "1,2,oops\n")), 3);
  EXPECT_EQ(cli(o + " dtw --input " + write_scratch("series_ok.txt", "1,2,3\n2,3\n")), 0);
  EXPECT_TRUE(fs::exists(out));
}

}  // namespace
