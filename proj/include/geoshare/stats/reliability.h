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

#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoshare/common/error.h"

namespace geoshare::stats {

enum class StatsErrc {
  kTooFewRaters,
  kTooFewItems,
  kZeroTotalVariance,
  kConstantItem,
  kMissingEntry,
  kParseError,
};

using StatsError = Error<StatsErrc>;

const char* ToString(StatsErrc code);
[[noreturn]] void Fail(StatsErrc code, const std::string& message);

// Rows are raters, columns are items.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  // Throws on ragged rows, non-finite entries, < 2 raters or < 2 items.
  explicit ScoreMatrix(std::vector<std::vector<double>> rows,
                       std::vector<std::string> item_names = {});

  std::size_t raters() const { return rows_.size(); }
  std::size_t items() const { return rows_.empty() ? 0 : rows_.front().size(); }
  double at(std::size_t rater, std::size_t item) const { return rows_[rater][item]; }
  const std::vector<std::string>& item_names() const { return names_; }

  std::vector<double> Item(std::size_t item) const;
  // Per-rater sum across items.
  std::vector<double> Totals() const;

 private:
  std::vector<std::vector<double>> rows_;
  std::vector<std::string> names_;
};

double Mean(const std::vector<double>& x);
// Sample variance (n - 1 denominator).
double SampleVariance(const std::vector<double>& x);
double PearsonCorrelation(const std::vector<double>& x, const std::vector<double>& y);

double CronbachAlpha(const ScoreMatrix& m);
// From the mean pairwise Pearson correlation of the items.
double StandardizedAlpha(const ScoreMatrix& m);

struct ScaleStats {
  double mean = 0;
  double variance = 0;
  double std = 0;
};

ScaleStats ComputeScaleStats(const ScoreMatrix& m);

struct ReliabilityReport {
  double alpha = 0;
  std::optional<double> alpha_std;  // absent when an item is constant
  std::size_t k = 0;
  std::size_t n = 0;
  ScaleStats scale;
  std::vector<std::string> warnings;
};

ReliabilityReport Analyze(const ScoreMatrix& m);

// CSV with a header row of item names, then one rater per row.
ScoreMatrix ReadScoresCsv(std::istream& in);

nlohmann::json ToJson(const ReliabilityReport& report);
// key=value lines.
std::string ToText(const ReliabilityReport& report);

// Shortest round-trip decimal, always with a fractional part ("1.0").
std::string FormatNumber(double value);

}  // namespace geoshare::stats
