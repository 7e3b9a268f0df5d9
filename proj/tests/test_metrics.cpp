// Copyright 2026 The vprtempo-cpp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "vprtempo/metrics.hpp"
#include "vprtempo/rng.hpp"

using namespace vprtempo;

namespace {

VectorX<double> vec(std::initializer_list<double> vs) {
  VectorX<double> v(static_cast<Eigen::Index>(vs.size()));
  Eigen::Index i = 0;
  for (double x : vs) v[i++] = x;
  return v;
}

/// Exhaustive-sort ranking oracle for recall@N: stable sort by (similarity
/// desc, index asc), check the true index lands in the first n.
double recallAtNOracle(const MatrixX<double>& sim, const GroundTruth& gt, int n) {
  n = std::min<int>(n, static_cast<int>(sim.cols()));
  int hits = 0;
  for (Eigen::Index q = 0; q < sim.rows(); ++q) {
    std::vector<int> order(sim.cols());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (sim(q, a) != sim(q, b)) return sim(q, a) > sim(q, b);
      return a < b;
    });
    const int t = gt.trueIndex(static_cast<int>(q));
    for (int k = 0; k < n; ++k)
      if (order[k] == t) {
        ++hits;
        break;
      }
  }
  return 100.0 * hits / static_cast<double>(sim.rows());
}

}  // namespace

TEST_CASE("matchPlace takes the argmax with low-index ties") {
  REQUIRE(matchPlace(vec({0.1, 0.9, 0.3})) == std::pair<int, double>{1, 0.9});
  REQUIRE(matchPlace(vec({0.5, 0.5})) == std::pair<int, double>{0, 0.5});
  REQUIRE(matchPlace(vec({0.0})) == std::pair<int, double>{0, 0.0});
  REQUIRE_THROWS_AS(matchPlace(VectorX<double>()), InvalidInputError);
}

TEST_CASE("forced-match precision is the fraction of correct matches") {
  std::vector<QueryMatch> all(4);
  for (auto& m : all) m.correct = true;
  REQUIRE(precisionAt100Recall(all) == 100.0);
  for (auto& m : all) m.correct = false;
  REQUIRE(precisionAt100Recall(all) == 0.0);
  all[0].correct = all[1].correct = all[2].correct = true;
  REQUIRE(precisionAt100Recall(all) == 75.0);
}

TEST_CASE("recall at the place count is always total") {
  RandomStream rng(4);
  MatrixX<double> sim(6, 9);
  for (Eigen::Index q = 0; q < 6; ++q)
    for (Eigen::Index r = 0; r < 9; ++r) sim(q, r) = rng.uniform01();
  const auto gt = groundTruthIdentity(6);
  REQUIRE(recallAtN(sim, gt, 9) == 100.0);
  REQUIRE(recallAtN(sim, gt, 500) == 100.0);  // clamped past the place count
}

TEST_CASE("recall at 1 equals forced-match precision") {
  RandomStream rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    MatrixX<double> sim(8, 8);
    for (Eigen::Index q = 0; q < 8; ++q)
      for (Eigen::Index r = 0; r < 8; ++r)
        sim(q, r) = std::floor(rng.uniform01() * 8.0) / 8.0;  // force ties
    const auto gt = groundTruthIdentity(8);
    const auto matches = buildMatches(sim, gt);
    REQUIRE(recallAtN(sim, gt, 1) == precisionAt100Recall(matches));
  }
}

TEST_CASE("recall matches the exhaustive-sort oracle and is monotone in n") {
  RandomStream rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    MatrixX<double> sim(5, 5);
    for (Eigen::Index q = 0; q < 5; ++q)
      for (Eigen::Index r = 0; r < 5; ++r)
        sim(q, r) = std::floor(rng.uniform01() * 6.0);  // small grid, many ties
    const auto gt = groundTruthIdentity(5);
    double prev = 0.0;
    for (int n = 1; n <= 5; ++n) {
      const double got = recallAtN(sim, gt, n);
      REQUIRE(got == recallAtNOracle(sim, gt, n));
      REQUIRE(got >= prev);
      prev = got;
    }
    REQUIRE(prev == 100.0);
  }
}

TEST_CASE("pr curve on all-correct predictions holds precision 1") {
  MatrixX<double> sim = MatrixX<double>::Zero(4, 4);
  for (int q = 0; q < 4; ++q) sim(q, q) = 0.5 + 0.1 * q;
  const auto gt = groundTruthIdentity(4);
  const auto curve = prCurve(buildMatches(sim, gt));
  for (const auto& p : curve) REQUIRE(p.precision == 1.0);
  REQUIRE(curve.back().recall == 1.0);
}

TEST_CASE("pr curve endpoint reproduces forced-match precision") {
  RandomStream rng(7);
  MatrixX<double> sim(10, 10);
  for (Eigen::Index q = 0; q < 10; ++q)
    for (Eigen::Index r = 0; r < 10; ++r) sim(q, r) = rng.uniform01();
  const auto gt = groundTruthIdentity(10);
  const auto matches = buildMatches(sim, gt);
  const auto curve = prCurve(matches);
  REQUIRE(curve.back().recall == 1.0);
  REQUIRE(curve.back().precision ==
          Catch::Approx(precisionAt100Recall(matches) / 100.0).epsilon(1e-12));
  double prevRecall = 0.0;
  for (const auto& p : curve) {
    REQUIRE(p.recall >= prevRecall);
    prevRecall = p.recall;
  }
}

TEST_CASE("pr curve sweep over a three-query fixture") {
  // Best-match amplitudes: 0.9 correct, 0.8 wrong, 0.7 correct.
  MatrixX<double> sim(3, 3);
  sim << 0.9, 0.1, 0.0,   // query 0 -> place 0, correct
         0.0, 0.1, 0.8,   // query 1 -> place 2, wrong
         0.1, 0.0, 0.7;   // query 2 -> place 2, correct
  const auto gt = groundTruthIdentity(3);
  const auto curve = prCurve(buildMatches(sim, gt));
  REQUIRE(curve.size() == 3);
  REQUIRE(curve[0].precision == 1.0);
  REQUIRE(curve[0].recall == Catch::Approx(1.0 / 3.0));
  REQUIRE(curve[1].precision == 0.5);
  REQUIRE(curve[1].recall == Catch::Approx(2.0 / 3.0));
  REQUIRE(curve[2].precision == Catch::Approx(2.0 / 3.0));
  REQUIRE(curve[2].recall == 1.0);
}

TEST_CASE("sad similarity is the negated absolute difference sum") {
  const Image a = Image::constant(28, 28, 0.0f);
  const Image b = Image::constant(28, 28, 255.0f);
  const auto sim = sadBaseline<double>({a, b}, {a});
  REQUIRE(sim(0, 0) == 0.0);  // identical images: maximal similarity
  REQUIRE(sim(0, 1) == -784.0 * 255.0);
  REQUIRE(matchPlace<double>(sim.row(0).transpose()).first == 0);
}

TEST_CASE("permuting references permutes sad columns") {
  RandomStream rng(8);
  std::vector<Image> refs;
  for (int i = 0; i < 4; ++i) {
    Image img = Image::constant(6, 6, 0.0f);
    for (float& v : img.data) v = static_cast<float>(std::floor(rng.uniformIn(0, 256)));
    refs.push_back(img);
  }
  const std::vector<Image> queries(refs.rbegin(), refs.rend());
  const auto sim = sadBaseline<double>(refs, queries);
  const std::vector<Image> permuted = {refs[2], refs[0], refs[3], refs[1]};
  const auto simP = sadBaseline<double>(permuted, queries);
  const int perm[4] = {2, 0, 3, 1};
  for (int q = 0; q < 4; ++q)
    for (int r = 0; r < 4; ++r) REQUIRE(simP(q, r) == sim(q, perm[r]));

  // Symmetry: sad(A,B)(i,j) == sad(B,A)(j,i).
  const auto ab = sadBaseline<double>(refs, queries);
  const auto ba = sadBaseline<double>(queries, refs);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) REQUIRE(ab(i, j) == ba(j, i));
}

TEST_CASE("sad rejects mismatched dimensions") {
  const Image a = Image::constant(28, 28, 1.0f);
  const Image b = Image::constant(14, 14, 1.0f);
  REQUIRE_THROWS_AS(sadBaseline<double>({a}, {b}), InvalidInputError);
  REQUIRE_THROWS_AS(sadBaseline<double>({}, {a}), InvalidInputError);
}

TEST_CASE("report serialization round-trips through json and csv") {
  RandomStream rng(9);
  MatrixX<double> sim(5, 5);
  for (Eigen::Index q = 0; q < 5; ++q)
    for (Eigen::Index r = 0; r < 5; ++r) sim(q, r) = rng.uniform01();
  const auto gt = groundTruthIdentity(5);
  EvalReport report;
  report.snn = evaluateMethod(sim, gt);
  report.places = 5;
  report.queries = 5;
  report.trainMinutes = 0.25;
  report.queryHz = 123.0;

  const auto j = toJson(report);
  REQUIRE(j["vprtempo"]["p_at_100r"].get<double>() == report.snn.pAt100R);
  REQUIRE(j["vprtempo"]["recall_at_n"]["1"].get<double>() == report.snn.recallAtN.at(1));
  REQUIRE(j["timing"]["query_hz"].get<double>() == 123.0);
  const auto reparsed = nlohmann::json::parse(j.dump());
  REQUIRE(reparsed == j);

  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "vprtempo_metrics_csv";
  fs::create_directories(dir);
  writeMatchesCsv(report.snn.matches, (dir / "matches.csv").string());
  writePrCurveCsv(report.snn.prCurve, (dir / "pr.csv").string());
  writeRecallCsv(report.snn.recallAtN, (dir / "recall.csv").string());
  writeSimilarityBinary(sim, (dir / "sim.f32").string());

  std::ifstream matches(dir / "matches.csv");
  std::string header;
  std::getline(matches, header);
  REQUIRE(header == "query,predicted,true,amplitude,correct");
  int rows = 0;
  std::string line;
  while (std::getline(matches, line))
    if (!line.empty()) ++rows;
  REQUIRE(rows == 5);

  REQUIRE(fs::file_size(dir / "sim.f32") == 5 * 5 * sizeof(float));
  std::ifstream shape(dir / "sim.f32.json");
  nlohmann::json shapeJson;
  shape >> shapeJson;
  REQUIRE(shapeJson["rows"] == 5);
  REQUIRE(shapeJson["cols"] == 5);
  fs::remove_all(dir);
}
