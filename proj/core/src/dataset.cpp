// Copyright 2026 The leofuse Authors
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

#include "leo/dataset.hpp"

#include <fstream>
#include <sstream>

#include "leo/version.hpp"

namespace leo::io {

namespace {

json state_to_json(const geom::ParallelogramState & s) {
  auto a = s.to_array();
  return json(std::vector<double>(a.begin(), a.end()));
}

geom::ParallelogramState state_from_json(const json & j) {
  auto v = j.get<std::vector<double>>();
  if (v.size() != 8) throw SchemaMismatch("state vector must have 8 entries");
  std::array<double, 8> a;
  std::copy(v.begin(), v.end(), a.begin());
  return geom::ParallelogramState::from_array(a);
}

json cov2_to_json(const Eigen::Matrix2d & c) { return json::array({c(0, 0), c(0, 1), c(1, 0), c(1, 1)}); }

Eigen::Matrix2d cov2_from_json(const json & j) {
  auto v = j.get<std::vector<double>>();
  if (v.size() != 4) throw SchemaMismatch("2x2 covariance must have 4 entries");
  Eigen::Matrix2d c;
  c << v[0], v[1], v[2], v[3];
  return c;
}

const char * kind_name(geom::ShapeKind k) {
  switch (k) {
    case geom::ShapeKind::L_SHAPE: return "L";
    case geom::ShapeKind::I_SHAPE: return "I";
    case geom::ShapeKind::POINT: return "P";
  }
  return "P";
}

geom::ShapeKind kind_from_name(const std::string & s) {
  if (s == "L") return geom::ShapeKind::L_SHAPE;
  if (s == "I") return geom::ShapeKind::I_SHAPE;
  if (s == "P") return geom::ShapeKind::POINT;
  throw SchemaMismatch("unknown shape kind '" + s + "'");
}

json track_to_json(const fusion::SensorTrack & t) {
  json j;
  j["sensor"] = fusion::sensor_name(t.sensor_id);
  j["object"] = t.object_id;
  j["t"] = t.timestamp;
  j["state"] = std::vector<double>(t.state.data(), t.state.data() + 4);
  std::vector<double> cov(16);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) cov[r * 4 + c] = t.state_cov(r, c);
  j["state_cov"] = cov;
  j["kind"] = kind_name(t.shape.kind);
  json pts = json::array();
  for (const auto & p : t.shape.extension_points) pts.push_back(json::array({p.x, p.y}));
  j["points"] = pts;
  json covs = json::array();
  for (const auto & c : t.shape.point_covariances) covs.push_back(cov2_to_json(c));
  j["covs"] = covs;
  return j;
}

fusion::SensorTrack track_from_json(const json & j) {
  fusion::SensorTrack t;
  t.sensor_id = fusion::sensor_from_name(j.at("sensor").get<std::string>());
  t.object_id = j.at("object").get<int>();
  t.timestamp = j.at("t").get<double>();
  auto st = j.at("state").get<std::vector<double>>();
  if (st.size() != 4) throw SchemaMismatch("track state must have 4 entries");
  t.state << st[0], st[1], st[2], st[3];
  auto cov = j.at("state_cov").get<std::vector<double>>();
  if (cov.size() != 16) throw SchemaMismatch("track covariance must have 16 entries");
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) t.state_cov(r, c) = cov[r * 4 + c];
  t.shape.kind = kind_from_name(j.at("kind").get<std::string>());
  for (const auto & p : j.at("points")) {
    auto xy = p.get<std::vector<double>>();
    if (xy.size() != 2) throw SchemaMismatch("point must have 2 entries");
    t.shape.extension_points.push_back({xy[0], xy[1]});
  }
  for (const auto & c : j.at("covs")) t.shape.point_covariances.push_back(cov2_from_json(c));
  return t;
}

}  // namespace

json frame_to_json(const sim::Frame & f) {
  json j;
  j["t"] = f.fusion_timestamp;
  j["scenario"] = f.scenario_id;
  j["lane"] = sim::lane_name(f.lane);
  j["ego"] = {{"v", f.ego.v}, {"yaw_rate", f.ego.yaw_rate}, {"a", f.ego.a}, {"t", f.ego.timestamp}};
  j["truth"] = state_to_json(f.truth);
  json tracks = json::array();
  for (const auto & t : f.tracks) tracks.push_back(track_to_json(t));
  j["tracks"] = tracks;
  if (f.fused) {
    json fused;
    fused["state"] = state_to_json(f.fused->state);
    json covs = json::array();
    for (const auto & c : f.fused->endpoint_covs) covs.push_back(cov2_to_json(c));
    fused["covs"] = covs;
    json sensors = json::array();
    for (auto s : f.fused->contributing_sensors) sensors.push_back(fusion::sensor_name(s));
    fused["sensors"] = sensors;
    j["fused"] = fused;
  }
  return j;
}

sim::Frame frame_from_json(const json & j) {
  sim::Frame f;
  f.fusion_timestamp = j.at("t").get<double>();
  f.scenario_id = j.at("scenario").get<int>();
  f.lane = sim::lane_from_name(j.at("lane").get<std::string>());
  const auto & e = j.at("ego");
  f.ego = {e.at("v").get<double>(), e.at("yaw_rate").get<double>(), e.at("a").get<double>(),
           e.at("t").get<double>()};
  f.truth = state_from_json(j.at("truth"));
  for (const auto & t : j.at("tracks")) f.tracks.push_back(track_from_json(t));
  if (j.contains("fused")) {
    fusion::FusedLabel label;
    label.state = state_from_json(j.at("fused").at("state"));
    for (const auto & c : j.at("fused").at("covs")) label.endpoint_covs.push_back(cov2_from_json(c));
    for (const auto & s : j.at("fused").at("sensors")) {
      label.contributing_sensors.insert(fusion::sensor_from_name(s.get<std::string>()));
    }
    f.fused = std::move(label);
  }
  return f;
}

std::string dataset_to_string(const std::vector<sim::Frame> & frames) {
  std::ostringstream os;
  json header;
  header["schema"] = "leo-dataset";
  header["version"] = kDatasetSchemaVersion;
  os << header.dump() << "\n";
  for (const auto & f : frames) os << frame_to_json(f).dump() << "\n";
  return os.str();
}

std::vector<sim::Frame> dataset_from_string(const std::string & text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw SchemaMismatch("empty dataset: missing header line");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception & e) {
    throw SchemaMismatch(std::string("malformed header line: ") + e.what());
  }
  if (!header.contains("schema") || header["schema"] != "leo-dataset") {
    throw SchemaMismatch("header schema is not 'leo-dataset'");
  }
  int version = header.value("version", -1);
  if (version != kDatasetSchemaVersion) {
    throw SchemaMismatch("dataset version " + std::to_string(version) + ", expected " +
                         std::to_string(kDatasetSchemaVersion));
  }
  std::vector<sim::Frame> frames;
  size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      frames.push_back(frame_from_json(json::parse(line)));
    } catch (const json::exception & e) {
      throw SchemaMismatch("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return frames;
}

std::string read_file(const std::string & path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string & path, const std::string & content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("write to '" + path + "' failed");
}

void write_dataset(const std::vector<sim::Frame> & frames, const std::string & path) {
  write_file(path, dataset_to_string(frames));
}

std::vector<sim::Frame> read_dataset(const std::string & path) { return dataset_from_string(read_file(path)); }

}  // namespace leo::io
