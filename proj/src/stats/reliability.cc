// Copyright 2026 The GeoShare Authors
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

#include "geoshare/stats/reliability.h"

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <sstream>

namespace geoshare::stats {
namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(Trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

const char* ToString(StatsErrc code) {
  switch (code) {
    case StatsErrc::kTooFewRaters: return "TooFewRaters";
    case StatsErrc::kTooFewItems: return "TooFewItems";
    case StatsErrc::kZeroTotalVariance: return "ZeroTotalVariance";
    case StatsErrc::kConstantItem: return "ConstantItem";
    case StatsErrc::kMissingEntry: return "MissingEntry";
    case StatsErrc::kParseError: return "ParseError";
  }
  return "Unknown";
}

void Fail(StatsErrc code, const std::string& message) {
  throw StatsError(code, std::string("stats: ") + ToString(code) + ": " + message);
}

ScoreMatrix::ScoreMatrix(std::vector<std::vector<double>> rows, std::vector<std::string> item_names)
    : rows_(std::move(rows)), names_(std::move(item_names)) {
  if (rows_.size() < 2) Fail(StatsErrc::kTooFewRaters, "need at least 2 raters");
  const std::size_t k = rows_.front().size();
  if (k < 2) Fail(StatsErrc::kTooFewItems, "need at least 2 items");
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    if (rows_[r].size() != k) {
      Fail(StatsErrc::kMissingEntry, "rater " + std::to_string(r) + " has " +
                                         std::to_string(rows_[r].size()) + " scores, expected " +
                                         std::to_string(k));
    }
    for (const double v : rows_[r]) {
      if (!std::isfinite(v)) Fail(StatsErrc::kMissingEntry, "rater " + std::to_string(r) + ": non-finite score");
    }
  }
  if (names_.empty()) {
    for (std::size_t i = 0; i < k; ++i) names_.push_back("item" + std::to_string(i + 1));
  } else if (names_.size() != k) {
    Fail(StatsErrc::kParseError, "item name count does not match the item count");
  }
}

std::vector<double> ScoreMatrix::Item(std::size_t item) const {
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& row : rows_) out.push_back(row[item]);
  return out;
}

std::vector<double> ScoreMatrix::Totals() const {
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& row : rows_) out.push_back(std::accumulate(row.begin(), row.end(), 0.0));
  return out;
}

double Mean(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double SampleVariance(const std::vector<double>& x) {
  const double m = Mean(x);
  double ss = 0.0;
  for (const double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double PearsonCorrelation(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = Mean(x), my = Mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double CronbachAlpha(const ScoreMatrix& m) {
  const double k = static_cast<double>(m.items());
  const double total = SampleVariance(m.Totals());
  if (!(total > 0.0)) Fail(StatsErrc::kZeroTotalVariance, "total scores do not vary");
  double items = 0.0;
  for (std::size_t i = 0; i < m.items(); ++i) items += SampleVariance(m.Item(i));
  return k * (total - items) / ((k - 1.0) * total);
}

double StandardizedAlpha(const ScoreMatrix& m) {
  const std::size_t k = m.items();
  std::vector<std::vector<double>> items;
  for (std::size_t i = 0; i < k; ++i) {
    items.push_back(m.Item(i));
    if (!(SampleVariance(items.back()) > 0.0)) {
      Fail(StatsErrc::kConstantItem, "item '" + m.item_names()[i] + "' has zero variance");
    }
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) sum += PearsonCorrelation(items[i], items[j]);
  }
  const double kd = static_cast<double>(k);
  const double r_bar = sum / (kd * (kd - 1.0) / 2.0);
  return kd * r_bar / (1.0 + (kd - 1.0) * r_bar);
}

ScaleStats ComputeScaleStats(const ScoreMatrix& m) {
  const auto totals = m.Totals();
  ScaleStats s;
  s.mean = Mean(totals);
  s.variance = SampleVariance(totals);
  s.std = std::sqrt(s.variance);
  return s;
}

ReliabilityReport Analyze(const ScoreMatrix& m) {
  ReliabilityReport r;
  r.k = m.items();
  r.n = m.raters();
  r.alpha = CronbachAlpha(m);
  try {
    r.alpha_std = StandardizedAlpha(m);
  } catch (const StatsError& e) {
    if (e.code() != StatsErrc::kConstantItem) throw;
    r.warnings.push_back(std::string("standardized alpha undefined: ") + e.what());
  }
  r.scale = ComputeScaleStats(m);
  if (r.alpha < 0.0) {
    r.warnings.push_back("negative alpha: items covary negatively on average");
  }
  return r;
}

ScoreMatrix ReadScoresCsv(std::istream& in) {
  std::string line;
  std::vector<std::string> names;
  while (names.empty() && std::getline(in, line)) {
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!Trim(line).empty()) names = SplitCsv(line);
  }
  if (names.empty()) Fail(StatsErrc::kParseError, "missing header row");
  std::vector<std::vector<double>> rows;
  for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
    if (Trim(line).empty()) continue;
    const auto fields = SplitCsv(line);
    if (fields.size() != names.size()) {
      Fail(StatsErrc::kMissingEntry, "line " + std::to_string(line_no) + ": expected " +
                                         std::to_string(names.size()) + " fields");
    }
    std::vector<double> row;
    for (const auto& f : fields) {
      if (f.empty()) Fail(StatsErrc::kMissingEntry, "line " + std::to_string(line_no) + ": empty score");
      double v = 0.0;
      const char* end = f.data() + f.size();
      const auto [ptr, ec] = std::from_chars(f.data(), end, v);
      if (ec != std::errc() || ptr != end) {
        Fail(StatsErrc::kParseError, "line " + std::to_string(line_no) + ": '" + f + "' is not a number");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return ScoreMatrix(std::move(rows), std::move(names));
}

nlohmann::json ToJson(const ReliabilityReport& r) {
  nlohmann::json out{{"alpha", r.alpha},     {"k", r.k},
                     {"n", r.n},             {"mean", r.scale.mean},
                     {"variance", r.scale.variance}, {"std", r.scale.std},
                     {"warnings", r.warnings}};
  out["alpha_std"] = r.alpha_std ? nlohmann::json(*r.alpha_std) : nlohmann::json(nullptr);
  return out;
}

std::string ToText(const ReliabilityReport& r) {
  std::ostringstream out;
  out << "alpha=" << FormatNumber(r.alpha) << "\n";
  out << "alpha_std=" << (r.alpha_std ? FormatNumber(*r.alpha_std) : "undefined") << "\n";
  out << "k=" << r.k << "\nn=" << r.n << "\n";
  out << "mean=" << FormatNumber(r.scale.mean) << "\n";
  out << "variance=" << FormatNumber(r.scale.variance) << "\n";
  out << "std=" << FormatNumber(r.scale.std) << "\n";
  return out.str();
}

std::string FormatNumber(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  std::string s(buf.data(), ptr);
  if (std::isfinite(value) && s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

}  // namespace geoshare::stats
