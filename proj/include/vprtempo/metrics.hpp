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

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vprtempo/dataset.hpp"
#include "vprtempo/errors.hpp"
#include "vprtempo/image.hpp"
#include "vprtempo/network.hpp"

namespace vprtempo {

// Similarity matrices are row = query, column = reference place, higher =
// more similar (output amplitudes for the network, negated distances for
// SAD).

/// Eq.-9 matching: index of the highest amplitude, ties toward the lowest
/// index.
template <typename Scalar>
std::pair<int, Scalar> matchPlace(const VectorX<Scalar>& amplitudes) {
  if (amplitudes.size() == 0) throw InvalidInputError("matchPlace: empty vector");
  int best = 0;
  for (Eigen::Index i = 1; i < amplitudes.size(); ++i)
    if (amplitudes[i] > amplitudes[best]) best = static_cast<int>(i);
  return {best, amplitudes[best]};
}

struct QueryMatch {
  int query = 0;
  int predicted = 0;
  int trueIndex = 0;
  double amplitude = 0.0;
  bool correct = false;
};

template <typename Scalar>
std::vector<QueryMatch> buildMatches(const MatrixX<Scalar>& sim, const GroundTruth& gt) {
  if (sim.rows() == 0 || sim.cols() == 0)
    throw InvalidInputError("buildMatches: empty similarity matrix");
  std::vector<QueryMatch> matches(sim.rows());
  for (Eigen::Index q = 0; q < sim.rows(); ++q) {
    const auto [idx, amp] = matchPlace<Scalar>(sim.row(q).transpose());
    matches[q] = {static_cast<int>(q), idx, gt.trueIndex(static_cast<int>(q)),
                  static_cast<double>(amp), gt.correct(static_cast<int>(q), idx)};
  }
  return matches;
}

/// Percent of correct matches when every query is forced to match.
inline double precisionAt100Recall(const std::vector<QueryMatch>& matches) {
  if (matches.empty()) throw InvalidInputError("precisionAt100Recall: no matches");
  std::size_t correct = 0;
  for (const auto& m : matches) correct += m.correct ? 1 : 0;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(matches.size());
}

/// Percent of queries whose true place ranks in the top n by similarity
/// (ties broken toward the lower index). n past the place count is clamped.
template <typename Scalar>
double recallAtN(const MatrixX<Scalar>& sim, const GroundTruth& gt, int n) {
  if (n < 1) throw InvalidInputError("recallAtN: n must be >= 1");
  if (sim.rows() == 0 || sim.cols() == 0)
    throw InvalidInputError("recallAtN: empty similarity matrix");
  n = std::min<int>(n, static_cast<int>(sim.cols()));
  std::size_t hits = 0;
  for (Eigen::Index q = 0; q < sim.rows(); ++q) {
    const int t = gt.trueIndex(static_cast<int>(q));
    const Scalar ref = sim(q, t);
    int rank = 1;
    for (Eigen::Index r = 0; r < sim.cols(); ++r) {
      if (r == t) continue;
      if (sim(q, r) > ref || (sim(q, r) == ref && r < t)) ++rank;
    }
    if (rank <= n) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(sim.rows());
}

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Precision-recall sweep over best-match amplitudes, descending: at each
/// distinct amplitude value, queries at or above it count as retrieved;
/// precision = correct retrieved / retrieved, recall = retrieved / total.
/// The final point (everything retrieved) has recall 1 and precision equal
/// to P@100R / 100.
inline std::vector<PrPoint> prCurve(std::vector<QueryMatch> matches) {
  if (matches.empty()) throw InvalidInputError("prCurve: no matches");
  std::sort(matches.begin(), matches.end(), [](const QueryMatch& a, const QueryMatch& b) {
    return a.amplitude > b.amplitude;
  });
  std::vector<PrPoint> curve;
  const double total = static_cast<double>(matches.size());
  std::size_t retrieved = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    ++retrieved;
    correct += matches[i].correct ? 1 : 0;
    const bool lastOfValue =
        i + 1 == matches.size() || matches[i + 1].amplitude < matches[i].amplitude;
    if (lastOfValue)
      curve.push_back({matches[i].amplitude,
                       static_cast<double>(correct) / static_cast<double>(retrieved),
                       static_cast<double>(retrieved) / total});
  }
  return curve;
}

/// Sum-of-absolute-differences baseline over equally sized images, stored
/// negated so that higher means more similar.
template <typename Scalar>
MatrixX<Scalar> sadBaseline(const std::vector<Image>& refs,
                            const std::vector<Image>& queries) {
  if (refs.empty() || queries.empty())
    throw InvalidInputError("sadBaseline: empty image set");
  const int w = refs.front().width;
  const int h = refs.front().height;
  for (const auto& img : refs)
    if (img.width != w || img.height != h)
      throw InvalidInputError("sadBaseline: reference image dimension mismatch");
  for (const auto& img : queries)
    if (img.width != w || img.height != h)
      throw InvalidInputError("sadBaseline: query image dimension mismatch");

  MatrixX<Scalar> sim(queries.size(), refs.size());
  for (std::size_t q = 0; q < queries.size(); ++q)
    for (std::size_t r = 0; r < refs.size(); ++r) {
      double sum = 0.0;
      const auto& a = queries[q].data;
      const auto& b = refs[r].data;
      for (std::size_t k = 0; k < a.size(); ++k)
        sum += std::abs(static_cast<double>(a[k]) - static_cast<double>(b[k]));
      sim(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(r)) =
          static_cast<Scalar>(-sum);
    }
  return sim;
}

struct MethodReport {
  double pAt100R = 0.0;
  std::map<int, double> recallAtN;
  std::vector<PrPoint> prCurve;
  std::vector<QueryMatch> matches;
};

struct EvalReport {
  MethodReport snn;
  bool hasSad = false;
  MethodReport sad;
  double trainMinutes = 0.0;
  double queryHz = 0.0;
  int places = 0;
  int queries = 0;
};

inline const std::vector<int>& defaultRecallNs() {
  static const std::vector<int> ns = {1, 5, 10, 15, 20, 25};
  return ns;
}

template <typename Scalar>
MethodReport evaluateMethod(const MatrixX<Scalar>& sim, const GroundTruth& gt,
                            const std::vector<int>& ns = defaultRecallNs()) {
  MethodReport report;
  report.matches = buildMatches(sim, gt);
  report.pAt100R = precisionAt100Recall(report.matches);
  for (int n : ns) report.recallAtN[n] = recallAtN(sim, gt, n);
  report.prCurve = prCurve(report.matches);
  return report;
}

inline nlohmann::json toJson(const MethodReport& report) {
  nlohmann::json j;
  j["p_at_100r"] = report.pAt100R;
  j["recall_at_n"] = nlohmann::json::object();
  for (const auto& [n, r] : report.recallAtN)
    j["recall_at_n"][std::to_string(n)] = r;
  j["pr_curve"] = nlohmann::json::array();
  for (const auto& p : report.prCurve)
    j["pr_curve"].push_back(
        {{"threshold", p.threshold}, {"precision", p.precision}, {"recall", p.recall}});
  return j;
}

inline nlohmann::json toJson(const EvalReport& report) {
  nlohmann::json j;
  j["places"] = report.places;
  j["queries"] = report.queries;
  j["timing"] = {{"train_minutes", report.trainMinutes}, {"query_hz", report.queryHz}};
  j["vprtempo"] = toJson(report.snn);
  if (report.hasSad) j["sad"] = toJson(report.sad);
  return j;
}

inline void writeMatchesCsv(const std::vector<QueryMatch>& matches,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "query,predicted,true,amplitude,correct\n";
  for (const auto& m : matches)
    out << m.query << ',' << m.predicted << ',' << m.trueIndex << ',' << m.amplitude
        << ',' << (m.correct ? 1 : 0) << '\n';
}

inline void writePrCurveCsv(const std::vector<PrPoint>& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "threshold,precision,recall\n";
  for (const auto& p : curve)
    out << p.threshold << ',' << p.precision << ',' << p.recall << '\n';
}

inline void writeRecallCsv(const std::map<int, double>& recallAtN,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "n,recall_percent\n";
  for (const auto& [n, r] : recallAtN) out << n << ',' << r << '\n';
}

/// Binary f32 little-endian dump (column index fastest) plus a JSON shape
/// header at <path>.json.
template <typename Scalar>
void writeSimilarityBinary(const MatrixX<Scalar>& sim, const std::string& path) {
  static_assert(std::endian::native == std::endian::little,
                "binary export assumes a little-endian host");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (Eigen::Index q = 0; q < sim.rows(); ++q)
    for (Eigen::Index r = 0; r < sim.cols(); ++r) {
      const float v = static_cast<float>(sim(q, r));
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  nlohmann::json shape;
  shape["rows"] = sim.rows();
  shape["cols"] = sim.cols();
  shape["dtype"] = "f32le";
  shape["order"] = "row-major";
  std::ofstream js(path + ".json");
  js << shape.dump(2) << "\n";
}

}  // namespace vprtempo
