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

#include "geoshare/sfm/io.h"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace geoshare::sfm {
namespace {

constexpr double kNoData = -9999.0;

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double ParseDouble(const std::string& text, std::size_t line_no) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  while (begin < end && *begin == ' ') ++begin;
  while (end > begin && end[-1] == ' ') --end;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    Fail(SfmErrc::kParseError,
         "line " + std::to_string(line_no) + ": not a number: '" + text + "'");
  }
  return value;
}

std::uint32_t ParseId(const std::string& text, std::size_t line_no) {
  std::uint32_t value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    Fail(SfmErrc::kParseError,
         "line " + std::to_string(line_no) + ": not an id: '" + text + "'");
  }
  return value;
}

bool ReadLine(std::istream& in, std::string* line) {
  if (!std::getline(in, *line)) return false;
  if (!line->empty() && line->back() == '\r') line->pop_back();
  return true;
}

void ExpectHeader(std::istream& in, const std::string& expected) {
  std::string header;
  if (!ReadLine(in, &header)) Fail(SfmErrc::kParseError, "empty file");
  if (header.rfind("\xEF\xBB\xBF", 0) == 0) header.erase(0, 3);
  if (header != expected) {
    Fail(SfmErrc::kParseError,
         "expected header '" + expected + "', got '" + header + "'");
  }
}

}  // namespace

std::vector<FeatureTrack> ReadTracksCsv(std::istream& in) {
  ExpectHeader(in, "track_id,image_id,u,v");
  std::map<TrackId, FeatureTrack> tracks;
  std::string line;
  std::size_t line_no = 1;
  while (ReadLine(in, &line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = SplitCsvLine(line);
    if (fields.size() != 4) {
      Fail(SfmErrc::kParseError,
           "line " + std::to_string(line_no) + ": expected 4 fields");
    }
    const TrackId track = ParseId(fields[0], line_no);
    Observation obs;
    obs.image_id = ParseId(fields[1], line_no);
    obs.pixel = {ParseDouble(fields[2], line_no), ParseDouble(fields[3], line_no)};
    FeatureTrack& t = tracks[track];
    t.track_id = track;
    if (t.Find(obs.image_id) != nullptr) {
      Fail(SfmErrc::kParseError, "line " + std::to_string(line_no) + ": track " +
                                     std::to_string(track) +
                                     " observes an image twice");
    }
    t.observations.push_back(obs);
  }
  std::vector<FeatureTrack> out;
  out.reserve(tracks.size());
  for (auto& [id, t] : tracks) out.push_back(std::move(t));
  return out;
}

void WriteTracksCsv(std::ostream& out, const std::vector<FeatureTrack>& tracks) {
  out << "track_id,image_id,u,v\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& t : tracks) {
    for (const auto& obs : t.observations) {
      out << t.track_id << ',' << obs.image_id << ',' << obs.pixel.x() << ','
          << obs.pixel.y() << '\n';
    }
  }
}

std::map<ImageId, CameraIntrinsics> ReadIntrinsicsCsv(std::istream& in) {
  ExpectHeader(in, "image_id,fx,fy,cx,cy,width,height");
  std::map<ImageId, CameraIntrinsics> result;
  std::string line;
  std::size_t line_no = 1;
  while (ReadLine(in, &line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = SplitCsvLine(line);
    if (fields.size() != 7) {
      Fail(SfmErrc::kParseError,
           "line " + std::to_string(line_no) + ": expected 7 fields");
    }
    CameraIntrinsics k;
    const ImageId id = ParseId(fields[0], line_no);
    k.fx = ParseDouble(fields[1], line_no);
    k.fy = ParseDouble(fields[2], line_no);
    k.cx = ParseDouble(fields[3], line_no);
    k.cy = ParseDouble(fields[4], line_no);
    k.width = ParseDouble(fields[5], line_no);
    k.height = ParseDouble(fields[6], line_no);
    k.Validate();
    if (!result.emplace(id, k).second) {
      Fail(SfmErrc::kParseError, "duplicate intrinsics for image " +
                                     std::to_string(id));
    }
  }
  return result;
}

void WriteIntrinsicsCsv(std::ostream& out,
                        const std::map<ImageId, CameraIntrinsics>& intrinsics) {
  out << "image_id,fx,fy,cx,cy,width,height\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& [id, k] : intrinsics) {
    out << id << ',' << k.fx << ',' << k.fy << ',' << k.cx << ',' << k.cy << ','
        << k.width << ',' << k.height << '\n';
  }
}

void WriteEsriAsciiGrid(std::ostream& out, const DemGrid& grid) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "ncols " << grid.ncols << "\n";
  out << "nrows " << grid.nrows << "\n";
  out << "xllcorner " << grid.x0 << "\n";
  out << "yllcorner " << grid.y0 << "\n";
  out << "cellsize " << grid.cell_size << "\n";
  out << "NODATA_value " << kNoData << "\n";
  for (int r = 0; r < grid.nrows; ++r) {
    for (int c = 0; c < grid.ncols; ++c) {
      const double h = grid.At(r, c);
      if (c > 0) out << ' ';
      if (std::isnan(h)) {
        out << kNoData;
      } else {
        out << h;
      }
    }
    out << '\n';
  }
}

DemGrid ReadEsriAsciiGrid(std::istream& in) {
  DemGrid grid;
  double nodata = kNoData;
  for (int i = 0; i < 6; ++i) {
    std::string key;
    double value = 0.0;
    if (!(in >> key >> value)) Fail(SfmErrc::kParseError, "truncated grid header");
    if (key == "ncols") grid.ncols = static_cast<int>(value);
    else if (key == "nrows") grid.nrows = static_cast<int>(value);
    else if (key == "xllcorner") grid.x0 = value;
    else if (key == "yllcorner") grid.y0 = value;
    else if (key == "cellsize") grid.cell_size = value;
    else if (key == "NODATA_value") nodata = value;
    else Fail(SfmErrc::kParseError, "unknown grid header key '" + key + "'");
  }
  if (grid.ncols <= 0 || grid.nrows <= 0 || !(grid.cell_size > 0.0)) {
    Fail(SfmErrc::kParseError, "invalid grid dimensions");
  }
  grid.heights.resize(static_cast<std::size_t>(grid.ncols) * grid.nrows);
  for (auto& h : grid.heights) {
    if (!(in >> h)) Fail(SfmErrc::kParseError, "truncated grid body");
    if (h == nodata) h = std::numeric_limits<double>::quiet_NaN();
  }
  return grid;
}

}  // namespace geoshare::sfm
