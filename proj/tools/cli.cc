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

#include "cli.h"

#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <charconv>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "geoshare/common/ply.h"
#include "geoshare/mesh/obj.h"
#include "geoshare/mesh/ops.h"
#include "geoshare/registry/registry.h"
#include "geoshare/registry/service.h"
#include "geoshare/server/node.h"
#include "geoshare/sfm/dem.h"
#include "geoshare/sfm/incremental.h"
#include "geoshare/sfm/io.h"
#include "geoshare/stats/reliability.h"
#include "geoshare/tiles/builder.h"

namespace geoshare::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::ifstream OpenInput(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

std::ofstream OpenOutput(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

tiles::GeoAnchor ParseAnchor(const std::string& text) {
  double v[3];
  const char* p = text.data();
  const char* end = p + text.size();
  for (int i = 0; i < 3; ++i) {
    const auto [next, ec] = std::from_chars(p, end, v[i]);
    const bool last = i == 2;
    if (ec != std::errc() || (last ? next != end : next == end || *next != ',')) {
      throw UsageError("--anchor expects lon,lat,h, got '" + text + "'");
    }
    p = next + (last ? 0 : 1);
  }
  return {v[0], v[1], v[2]};
}

// Blocks SIGINT and SIGTERM for the calling thread and the threads it spawns,
// then runs `serve` until one of them arrives and `stop` has been called.
template <typename Serve, typename Stop>
void RunUntilSignalled(Serve serve, Stop stop) {
  sigset_t set, old;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, &old);
  std::atomic<bool> done{false};
  std::thread waiter([&] {
    const timespec tick{0, 100'000'000};
    while (!done.load()) {
      if (sigtimedwait(&set, nullptr, &tick) > 0) {
        stop();
        return;
      }
    }
  });
  try {
    serve();
  } catch (...) {
    done = true;
    waiter.join();
    pthread_sigmask(SIG_SETMASK, &old, nullptr);
    throw;
  }
  done = true;
  waiter.join();
  pthread_sigmask(SIG_SETMASK, &old, nullptr);
}

void PrintReport(std::ostream& out, const json& report, bool as_json) {
  if (as_json) {
    out << report.dump(2) << '\n';
    return;
  }
  for (const auto& [key, value] : report.items()) {
    out << key << '=' << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
  }
}

struct Options {
  bool json = false;
  std::string input;
  std::string out;

  // sfm
  std::string tracks;
  std::string intrinsics;
  std::uint64_t seed = 0;

  // dem
  double cell_size = 1.0;
  std::string dem_method = "idw";

  // mesh
  double epsilon = 1e-6;
  double ratio = 0.3;

  // tile
  std::string anchor;
  std::string dataset_id;
  std::size_t max_leaf_tris = 5000;
  int max_depth = 8;
  double lod_ratio = 0.3;

  // serve / registry
  std::string config;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data;
  std::string registry_url;
  std::string node_id;
  std::string base_url;
  std::string wmts_template;
  int heartbeat_interval = 30;
  std::string log;
  registry::UnixSeconds window = registry::kDefaultStalenessWindow;
};

int RunSfm(const Options& o, std::ostream& out) {
  auto tracks_in = OpenInput(o.tracks);
  auto intrinsics_in = OpenInput(o.intrinsics);
  const auto tracks = sfm::ReadTracksCsv(tracks_in);
  const auto intrinsics = sfm::ReadIntrinsicsCsv(intrinsics_in);
  sfm::IncrementalConfig config;
  config.seed = o.seed;
  const auto result = sfm::IncrementalSfm(tracks, intrinsics, config);
  const auto& recon = result.reconstruction;

  PointCloud cloud;
  for (const auto& [id, p] : recon.points) cloud.positions.push_back(p);
  auto ply = OpenOutput(o.out);
  WritePly(ply, cloud);

  json unregistered = json::array();
  for (const auto& u : result.unregistered) {
    unregistered.push_back({{"image_id", u.image_id}, {"reason", u.reason}});
  }
  json report = {
      {"images", intrinsics.size()},
      {"registered", recon.poses.size()},
      {"points", recon.points.size()},
      {"observations", recon.NumObservations()},
      {"mean_reprojection_px", sfm::MeanReprojectionError(recon)},
      {"rms_reprojection_px", sfm::RmsReprojectionError(recon)},
      {"seed_pair", std::to_string(result.seed.first) + "," + std::to_string(result.seed.second)},
  };
  if (o.json) report["unregistered"] = unregistered;
  PrintReport(out, report, o.json);
  return kExitOk;
}

int RunDem(const Options& o, std::ostream& out) {
  const auto cloud = ReadPlyFile(o.input);
  const auto spec = sfm::FitDemSpec(cloud.positions, o.cell_size);
  const auto method = o.dem_method == "nearest" ? sfm::DemMethod::kNearest : sfm::DemMethod::kIdw;
  const auto grid = sfm::BuildDem(cloud.positions, spec, method);
  auto asc = OpenOutput(o.out);
  sfm::WriteEsriAsciiGrid(asc, grid);
  std::size_t filled = 0;
  for (const double h : grid.heights) filled += std::isnan(h) ? 0 : 1;
  PrintReport(out,
              {{"ncols", grid.ncols},
               {"nrows", grid.nrows},
               {"cell_size", grid.cell_size},
               {"filled_cells", filled}},
              o.json);
  return kExitOk;
}

json MeshCounts(const mesh::TriangleMesh& in, const mesh::TriangleMesh& result) {
  return {{"vertices_in", in.NumVertices()},
          {"vertices_out", result.NumVertices()},
          {"triangles_in", in.NumTriangles()},
          {"triangles_out", result.NumTriangles()}};
}

int RunMesh(const std::string& op, const Options& o, std::ostream& out) {
  const auto input = mesh::ReadObjFile(o.input);
  json report;
  mesh::TriangleMesh result;
  if (op == "dedup") {
    result = mesh::DedupVertices(input, o.epsilon);
    report = MeshCounts(input, result);
  } else if (op == "simplify") {
    auto simplified = mesh::Simplify(input, o.ratio);
    result = std::move(simplified.mesh);
    report = MeshCounts(input, result);
    report["collapses"] = simplified.collapses;
    report["max_deviation"] = simplified.max_deviation;
  } else {
    auto deshaded = mesh::Deshade(input);
    result = std::move(deshaded.mesh);
    report = MeshCounts(input, result);
    report["lit"] = deshaded.lit;
    report["light"] = {deshaded.light.x(), deshaded.light.y(), deshaded.light.z()};
    report["ambient"] = deshaded.ambient;
  }
  mesh::WriteObjFile(o.out, result);
  PrintReport(out, report, o.json);
  return kExitOk;
}

int RunTileBuild(const Options& o, std::ostream& out) {
  const auto anchor = ParseAnchor(o.anchor);
  const auto input = mesh::ReadObjFile(o.input);
  tiles::BuildConfig config;
  config.max_triangles_per_leaf = o.max_leaf_tris;
  config.max_depth = o.max_depth;
  config.lod_ratio_per_level = o.lod_ratio;
  const std::string id = o.dataset_id.empty() ? fs::path(o.input).stem().string() : o.dataset_id;
  const auto built = tiles::BuildTileset(input, anchor, id, config);
  tiles::WriteTilesetDirectory(o.out, built);
  std::size_t leaves = 0;
  tiles::ForEachTile(built.tileset, [&](const tiles::Tile& t, std::size_t, auto) {
    leaves += t.IsLeaf() ? 1 : 0;
  });
  PrintReport(out,
              {{"dataset_id", id},
               {"tiles", tiles::CountTiles(built.tileset)},
               {"leaves", leaves},
               {"contents", built.contents.size()},
               {"root_geometric_error", built.tileset.root.geometric_error}},
              o.json);
  return kExitOk;
}

int RunTileValidate(const Options& o, std::ostream& out) {
  const auto violations = tiles::ValidateTilesetDirectory(o.input);
  if (o.json) {
    json list = json::array();
    for (const auto& v : violations) {
      list.push_back({{"kind", tiles::ToString(v.kind)},
                      {"tile", v.tile},
                      {"parent", v.parent ? json(*v.parent) : json(nullptr)},
                      {"message", v.message}});
    }
    out << json{{"violations", list}}.dump(2) << '\n';
  } else {
    for (const auto& v : violations) {
      out << tiles::ToString(v.kind) << " tile " << v.tile << ": " << v.message << '\n';
    }
    out << violations.size() << " violations\n";
  }
  return violations.empty() ? kExitOk : kExitDomainError;
}

int RunServe(const Options& o, const CLI::App& cmd, std::ostream& out, std::ostream& err) {
  server::NodeConfig config;
  if (!o.config.empty()) config = server::LoadConfig(o.config);
  const auto given = [&](const char* flag) { return cmd.count(flag) > 0; };
  if (given("--host")) config.host = o.host;
  if (given("--port")) config.port = o.port;
  if (given("--data")) config.data_dir = o.data;
  if (given("--registry-url")) config.registry_url = o.registry_url;
  if (given("--node-id")) config.node_id = o.node_id;
  if (given("--base-url")) config.base_url = o.base_url;
  if (given("--wmts-template")) config.wmts_template = o.wmts_template;
  if (given("--heartbeat-interval")) config.heartbeat_interval = o.heartbeat_interval;
  config.Validate();

  server::NodeServer node(config);
  const int port = node.Bind();
  err << "serving " << node.store().datasets().size() << " dataset(s) and "
      << node.store().layers().size() << " layer(s) from " << config.data_dir.string() << '\n';
  out << "listening http://" << config.host << ':' << port << std::endl;
  RunUntilSignalled([&] { node.Serve(); }, [&] { node.Stop(); });
  node.Stop();
  err << "node stopped\n";
  return kExitOk;
}

int RunRegistry(const Options& o, std::ostream& out, std::ostream& err) {
  std::optional<registry::Registry> reg;
  if (o.log.empty()) {
    reg.emplace();
  } else {
    reg.emplace(fs::path(o.log));
  }
  registry::RegistryService service(*reg, registry::SystemClock, o.window);
  const int port = service.Bind(o.host, o.port);
  out << "listening http://" << o.host << ':' << port << std::endl;
  RunUntilSignalled([&] { service.Serve(); }, [&] { service.Stop(); });
  err << "registry stopped\n";
  return kExitOk;
}

int RunAlpha(const Options& o, std::ostream& out, std::ostream& err) {
  auto in = OpenInput(o.input);
  const auto report = stats::Analyze(stats::ReadScoresCsv(in));
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';
  if (o.json) {
    out << stats::ToJson(report).dump(2) << '\n';
  } else {
    out << stats::ToText(report);
  }
  return kExitOk;
}

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app("GeoShare pipeline: reconstruct, process meshes, tile, serve, register, analyze.",
               "geoshare");
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  const auto add_json = [&](CLI::App* cmd) {
    cmd->add_flag("--json", o.json, "Print the report as JSON");
  };

  auto* sfm_cmd = app.add_subcommand("sfm", "Incremental reconstruction from feature tracks to a PLY cloud");
  sfm_cmd->add_option("--tracks", o.tracks, "CSV track_id,image_id,u,v")->required()->check(CLI::ExistingFile);
  sfm_cmd->add_option("--intrinsics", o.intrinsics, "CSV image_id,fx,fy,cx,cy,width,height")
      ->required()
      ->check(CLI::ExistingFile);
  sfm_cmd->add_option("--out", o.out, "Output PLY point cloud")->required();
  sfm_cmd->add_option("--seed", o.seed, "RANSAC seed")->capture_default_str();
  add_json(sfm_cmd);

  auto* dem_cmd = app.add_subcommand("dem", "Grid a PLY point cloud into an Esri ASCII elevation model");
  dem_cmd->add_option("cloud", o.input, "Input PLY point cloud")->required()->check(CLI::ExistingFile);
  dem_cmd->add_option("--out", o.out, "Output .asc grid")->required();
  dem_cmd->add_option("--cell-size", o.cell_size, "Grid cell size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  dem_cmd->add_option("--method", o.dem_method, "Interpolation")
      ->check(CLI::IsMember({"nearest", "idw"}))
      ->capture_default_str();
  add_json(dem_cmd);

  auto* mesh_cmd = app.add_subcommand("mesh", "Mesh processing on OBJ files");
  mesh_cmd->require_subcommand(1);
  std::map<std::string, CLI::App*> mesh_ops;
  const auto add_mesh_op = [&](const std::string& name, const std::string& description) {
    auto* cmd = mesh_cmd->add_subcommand(name, description);
    cmd->add_option("mesh", o.input, "Input OBJ")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "Output OBJ")->required();
    add_json(cmd);
    mesh_ops[name] = cmd;
    return cmd;
  };
  add_mesh_op("dedup", "Merge vertices closer than --epsilon")
      ->add_option("--epsilon", o.epsilon, "Merge distance")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  add_mesh_op("simplify", "Quadric edge-collapse simplification to --ratio of the faces")
      ->add_option("--ratio", o.ratio, "Target fraction of triangles kept, in (0, 1]")
      ->capture_default_str();
  add_mesh_op("deshade", "Remove baked directional lighting from vertex colors");

  auto* tile_cmd = app.add_subcommand("tile", "Tileset generation and validation");
  tile_cmd->require_subcommand(1);
  auto* build_cmd = tile_cmd->add_subcommand("build", "Build a tileset directory from an OBJ");
  build_cmd->add_option("mesh", o.input, "Input OBJ")->required()->check(CLI::ExistingFile);
  build_cmd->add_option("--anchor", o.anchor, "Geographic anchor lon,lat,h")->required();
  build_cmd->add_option("--out", o.out, "Output directory")->required();
  build_cmd->add_option("--dataset-id", o.dataset_id, "Dataset id (default: input file stem)");
  build_cmd->add_option("--max-leaf-tris", o.max_leaf_tris, "Triangle budget per leaf")
      ->capture_default_str();
  build_cmd->add_option("--max-depth", o.max_depth, "Maximum tree depth")->capture_default_str();
  build_cmd->add_option("--lod-ratio", o.lod_ratio, "Triangle fraction kept per level up")
      ->capture_default_str();
  add_json(build_cmd);
  auto* validate_cmd = tile_cmd->add_subcommand("validate", "Check tileset invariants; exit 1 on violations");
  validate_cmd->add_option("dir", o.input, "Tileset directory")->required()->check(CLI::ExistingDirectory);
  add_json(validate_cmd);

  auto* serve_cmd = app.add_subcommand("serve", "Run a tile server node until interrupted");
  serve_cmd->add_option("--config", o.config, "key = value config file; flags override it")
      ->check(CLI::ExistingFile);
  serve_cmd->add_option("--data", o.data, "Data directory");
  serve_cmd->add_option("--host", o.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", o.port, "Port, 0 for any free port")->capture_default_str();
  serve_cmd->add_option("--registry-url", o.registry_url, "Registry to announce to");
  serve_cmd->add_option("--node-id", o.node_id, "Node id used with the registry");
  serve_cmd->add_option("--base-url", o.base_url, "Public URL of this node");
  serve_cmd->add_option("--wmts-template", o.wmts_template, "Upstream imagery URL template");
  serve_cmd->add_option("--heartbeat-interval", o.heartbeat_interval, "Seconds between heartbeats")
      ->capture_default_str();

  auto* registry_cmd = app.add_subcommand("registry", "Run the dataset registry until interrupted");
  registry_cmd->add_option("--host", o.host, "Bind address")->capture_default_str();
  registry_cmd->add_option("--port", o.port, "Port, 0 for any free port")->capture_default_str();
  registry_cmd->add_option("--log", o.log, "Append-only event log replayed on start");
  registry_cmd->add_option("--window", o.window, "Staleness window in seconds")->capture_default_str();

  auto* alpha_cmd = app.add_subcommand("alpha", "Cronbach's alpha for a rater-by-item score CSV");
  alpha_cmd->add_option("scores", o.input, "CSV with an item-name header row")
      ->required()
      ->check(CLI::ExistingFile);
  add_json(alpha_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsageError;
  }

  try {
    if (sfm_cmd->parsed()) return RunSfm(o, out);
    if (dem_cmd->parsed()) return RunDem(o, out);
    if (mesh_cmd->parsed()) {
      for (const auto& [name, cmd] : mesh_ops) {
        if (cmd->parsed()) return RunMesh(name, o, out);
      }
    }
    if (build_cmd->parsed()) return RunTileBuild(o, out);
    if (validate_cmd->parsed()) return RunTileValidate(o, out);
    if (serve_cmd->parsed()) return RunServe(o, *serve_cmd, out, err);
    if (registry_cmd->parsed()) return RunRegistry(o, out, err);
    if (alpha_cmd->parsed()) return RunAlpha(o, out, err);
  } catch (const UsageError& e) {
    err << "geoshare: " << e.what() << '\n';
    return kExitUsageError;
  } catch (const std::exception& e) {
    err << "geoshare: " << e.what() << '\n';
    return kExitDomainError;
  }
  err << app.help();
  return kExitUsageError;
}

}  // namespace geoshare::cli
