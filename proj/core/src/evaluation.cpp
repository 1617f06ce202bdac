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

#include "leo/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include "leo/dataset.hpp"
#include "leo/parallel.hpp"
#include "leo/version.hpp"

namespace leo::eval {

const char * length_class_name(LengthClass c) {
  switch (c) {
    case LengthClass::L1: return "l1";
    case LengthClass::L2: return "l2";
    case LengthClass::OTHER: return "other";
  }
  return "other";
}

std::pair<LengthClass, sim::Lane> stratify(const geom::ParallelogramState & label) {
  LengthClass lc = LengthClass::OTHER;
  if (label.l >= 3.0 && label.l <= 10.0) {
    lc = LengthClass::L1;
  } else if (label.l > 10.0) {
    lc = LengthClass::L2;
  }
  geom::Point2 c = geom::state_to_polygon(label).centroid();
  return {lc, sim::lane_from_lateral(c.y)};
}

namespace {

constexpr const char * kParamNames[8] = {"rf_x", "rf_y", "l", "w", "theta", "theta_star", "v_x", "v_y"};
// relative error is reported only for the parameters with a published
// percentage column
constexpr bool kHasRelError[8] = {true, true, true, true, false, true, true, false};

struct FrameRecord {
  int scenario_id = 0;
  double ts = 0.0;
  LengthClass lc = LengthClass::OTHER;
  sim::Lane lane = sim::Lane::OTHER;
  double giou = 0.0, diou = 0.0;
  std::array<double, 8> abs_err{};
  std::array<double, 8> abs_label{};
  double cp_x = 0.0, cp_y = 0.0, fp_x = 0.0, fp_y = 0.0;
  double range = 0.0;
  bool valid = false;
};

FrameRecord make_record(const geom::ParallelogramState & pred, const geom::ParallelogramState & truth,
                        int scenario_id, double ts) {
  FrameRecord r;
  r.scenario_id = scenario_id;
  r.ts = ts;
  auto [lc, lane] = stratify(truth);
  r.lc = lc;
  r.lane = lane;
  auto poly_p = geom::state_to_polygon(pred);
  auto poly_t = geom::state_to_polygon(truth);
  r.giou = geom::giou(poly_p, poly_t);
  r.diou = geom::diou(poly_p, poly_t);
  auto ap = pred.to_array();
  auto at = truth.to_array();
  for (int i = 0; i < 8; ++i) {
    double d = ap[static_cast<size_t>(i)] - at[static_cast<size_t>(i)];
    if (i == 4) d = train::wrap_diff_2pi(d);
    if (i == 5) d = train::wrap_diff_pi(d);
    r.abs_err[static_cast<size_t>(i)] = std::abs(d);
    r.abs_label[static_cast<size_t>(i)] = std::abs(at[static_cast<size_t>(i)]);
  }
  auto [cp_p, fp_p] = geom::closest_farthest_corners(poly_p);
  auto [cp_t, fp_t] = geom::closest_farthest_corners(poly_t);
  r.cp_x = std::abs(cp_p.x - cp_t.x);
  r.cp_y = std::abs(cp_p.y - cp_t.y);
  r.fp_x = std::abs(fp_p.x - fp_t.x);
  r.fp_y = std::abs(fp_p.y - fp_t.y);
  r.range = geom::norm(poly_t.centroid());
  r.valid = true;
  return r;
}

struct Accum {
  size_t count = 0;
  double giou = 0.0, diou = 0.0;
  std::array<double, 8> abs_err{};
  std::array<double, 8> abs_label{};
  double cp_x = 0.0, cp_y = 0.0, fp_x = 0.0, fp_y = 0.0;

  void add(const FrameRecord & r) {
    ++count;
    giou += r.giou;
    diou += r.diou;
    for (int i = 0; i < 8; ++i) {
      abs_err[static_cast<size_t>(i)] += r.abs_err[static_cast<size_t>(i)];
      abs_label[static_cast<size_t>(i)] += r.abs_label[static_cast<size_t>(i)];
    }
    cp_x += r.cp_x;
    cp_y += r.cp_y;
    fp_x += r.fp_x;
    fp_y += r.fp_y;
  }

  json to_json() const {
    double inv = 1.0 / static_cast<double>(count);
    json mae = json::object();
    json rel = json::object();
    for (int i = 0; i < 8; ++i) {
      double m = abs_err[static_cast<size_t>(i)] * inv;
      mae[kParamNames[i]] = m;
      if (kHasRelError[i]) {
        double denom = abs_label[static_cast<size_t>(i)] * inv;
        if (denom > 1e-9) rel[kParamNames[i]] = 100.0 * m / denom;
      }
    }
    return json{{"count", count},
                {"giou", giou * inv},
                {"diou", diou * inv},
                {"mae", mae},
                {"rel_pct", rel},
                {"cp", {{"x", cp_x * inv}, {"y", cp_y * inv}}},
                {"fp", {{"x", fp_x * inv}, {"y", fp_y * inv}}}};
  }
};

std::string stratum_key(LengthClass lc, sim::Lane lane) {
  return std::string(length_class_name(lc)) + "|" + sim::lane_name(lane);
}

json aggregate_records(std::vector<FrameRecord> records) {
  // canonical order, so the report is identical for any input permutation
  std::sort(records.begin(), records.end(), [](const FrameRecord & a, const FrameRecord & b) {
    if (a.scenario_id != b.scenario_id) return a.scenario_id < b.scenario_id;
    return a.ts < b.ts;
  });
  Accum global;
  std::map<std::string, Accum> strata;
  std::map<int, Accum> range_bins;  // 10 m bins, for the plots
  for (const auto & r : records) {
    if (!r.valid) continue;
    global.add(r);
    strata[stratum_key(r.lc, r.lane)].add(r);
    range_bins[static_cast<int>(r.range / 10.0)].add(r);
  }
  json out;
  out["global"] = global.count ? global.to_json() : json(nullptr);
  json sj = json::object();
  for (const auto & [key, acc] : strata) sj[key] = acc.to_json();
  out["strata"] = sj;
  json rb = json::object();
  for (const auto & [bin, acc] : range_bins) {
    rb[std::to_string(bin * 10) + "-" + std::to_string(bin * 10 + 10)] = acc.to_json();
  }
  out["range_bins"] = rb;
  return out;
}

json latency_json(std::vector<double> samples_ms, int warmup, double batch128_per_s) {
  json out{{"mean_ms", nullptr}, {"p95_ms", nullptr}, {"batch128_per_s", batch128_per_s}};
  if (static_cast<int>(samples_ms.size()) > warmup) {
    samples_ms.erase(samples_ms.begin(), samples_ms.begin() + warmup);
    double mean = 0.0;
    for (double v : samples_ms) mean += v;
    mean /= static_cast<double>(samples_ms.size());
    std::sort(samples_ms.begin(), samples_ms.end());
    double p95 = samples_ms[static_cast<size_t>(0.95 * static_cast<double>(samples_ms.size() - 1))];
    out["mean_ms"] = mean;
    out["p95_ms"] = p95;
  }
  return out;
}

json report_shell(const std::string & source, const json & options, size_t total_frames, size_t evaluated) {
  json out;
  out["schema"] = "leo-report";
  out["version"] = kReportSchemaVersion;
  out["source"] = source;
  out["options"] = options;
  out["counts"] = {{"frames", total_frames}, {"evaluated", evaluated}, {"skipped", total_frames - evaluated}};
  return out;
}

}  // namespace

json evaluate(const gat::Checkpoint & ckpt, const std::vector<sim::Frame> & frames, const EvalOptions & opt) {
  auto windows = graph::build_windows(frames, graph::LabelSource::TRUTH);
  if (windows.empty()) throw EmptyDataset("dataset yields no evaluation windows");

  // ablations applied on raw features, identical to how absent sensors look
  // during training
  std::vector<graph::FusionGraph> prepared;
  prepared.reserve(windows.size());
  for (auto & w : windows) {
    for (auto sid : opt.drop_sensors) graph::blank_source(w, static_cast<int>(sid));
    prepared.push_back(graph::normalize_features(w, ckpt.stats));
  }

  gat::ForwardOptions fwd;
  if (opt.no_inter_attention) fwd.lambda_override = 1.0;

  // latency probe (single-threaded, warm-up excluded)
  std::vector<double> lat_ms;
  double batch_per_s = 0.0;
  if (opt.measure_latency) {
    int probes = std::min<int>(opt.latency_warmup + opt.latency_samples, static_cast<int>(prepared.size()));
    for (int i = 0; i < probes; ++i) {
      auto t0 = std::chrono::steady_clock::now();
      (void)gat::predict(ckpt.params, ckpt.model, prepared[static_cast<size_t>(i)], fwd);
      auto t1 = std::chrono::steady_clock::now();
      lat_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::vector<const graph::FusionGraph *> batch;
    for (int i = 0; i < 128; ++i) batch.push_back(&prepared[static_cast<size_t>(i) % prepared.size()]);
    auto t0 = std::chrono::steady_clock::now();
    nn::Tape tape;
    gat::BoundParams bound = gat::bind(tape, ckpt.params, false);
    (void)gat::forward_batch(tape, bound, ckpt.model, batch, fwd);
    auto t1 = std::chrono::steady_clock::now();
    batch_per_s = 128.0 / std::chrono::duration<double>(t1 - t0).count();
  }

  std::vector<FrameRecord> records(prepared.size());
  parallel_for(prepared.size(), [&](size_t i) {
    geom::ParallelogramState pred = gat::predict(ckpt.params, ckpt.model, prepared[i], fwd);
    records[i] = make_record(pred, prepared[i].target, prepared[i].scenario_id, prepared[i].fusion_timestamp);
  });

  json options;
  json drops = json::array();
  for (auto sid : opt.drop_sensors) drops.push_back(fusion::sensor_name(sid));
  options["drop_sensors"] = drops;
  options["no_inter_attention"] = opt.no_inter_attention;

  json out = report_shell("model", options, frames.size(), records.size());
  json agg = aggregate_records(std::move(records));
  out["global"] = agg["global"];
  out["strata"] = agg["strata"];
  out["range_bins"] = agg["range_bins"];
  out["latency"] = latency_json(std::move(lat_ms), opt.latency_warmup, batch_per_s);
  return out;
}

json compare_baseline(const std::vector<sim::Frame> & frames) {
  std::vector<FrameRecord> records;
  std::vector<double> lat_ms;
  size_t evaluated = 0;
  for (const auto & f : frames) {
    if (!f.fused) continue;
    ++evaluated;
    records.push_back(make_record(f.fused->state, f.truth, f.scenario_id, f.fusion_timestamp));
  }
  if (records.empty()) throw EmptyDataset("no frames carry a fused label; run `label` first");

  // timing of the geometric pipeline itself
  int probed = 0;
  for (const auto & f : frames) {
    if (f.tracks.empty() || probed > 210) continue;
    auto t0 = std::chrono::steady_clock::now();
    try {
      (void)fusion::fuse_tracks(f.tracks);
    } catch (const Error &) {
      continue;
    }
    auto t1 = std::chrono::steady_clock::now();
    lat_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    ++probed;
  }
  double per_s = 0.0;
  if (lat_ms.size() > 10) {
    double mean = 0.0;
    for (double v : lat_ms) mean += v;
    mean /= static_cast<double>(lat_ms.size());
    per_s = mean > 0.0 ? 1000.0 / mean : 0.0;
  }

  json options;
  options["drop_sensors"] = json::array();
  options["no_inter_attention"] = false;

  json out = report_shell("geometric", options, frames.size(), evaluated);
  json agg = aggregate_records(std::move(records));
  out["global"] = agg["global"];
  out["strata"] = agg["strata"];
  out["range_bins"] = agg["range_bins"];
  out["latency"] = latency_json(std::move(lat_ms), 10, per_s);
  return out;
}

void write_report_csv(const json & report, const std::string & path) {
  std::ostringstream os;
  os << "stratum,count,giou,diou";
  for (const auto * p : kParamNames) os << ",mae_" << p;
  os << ",cp_x,cp_y,fp_x,fp_y\n";
  auto row = [&](const std::string & name, const json & m) {
    if (m.is_null()) return;
    os << name << "," << m["count"] << "," << m["giou"] << "," << m["diou"];
    for (const auto * p : kParamNames) os << "," << m["mae"][p];
    os << "," << m["cp"]["x"] << "," << m["cp"]["y"] << "," << m["fp"]["x"] << "," << m["fp"]["y"] << "\n";
  };
  row("global", report["global"]);
  for (const auto & [key, m] : report["strata"].items()) row(key, m);
  io::write_file(path, os.str());
}

void write_report_svg(const json & report, const std::string & path) {
  // simple error-vs-range plot: GIoU and RF_x MAE per 10 m bin
  struct Pt {
    double x, giou, mae;
  };
  std::vector<Pt> pts;
  for (const auto & [key, m] : report["range_bins"].items()) {
    double lo = std::stod(key.substr(0, key.find('-')));
    pts.push_back({lo + 5.0, m["giou"].get<double>(), m["mae"]["rf_x"].get<double>()});
  }
  std::sort(pts.begin(), pts.end(), [](const Pt & a, const Pt & b) { return a.x < b.x; });

  const double w = 640, h = 360, ml = 50, mr = 20, mt = 20, mb = 40;
  double xmax = 100.0, mae_max = 0.1;
  for (const auto & p : pts) {
    xmax = std::max(xmax, p.x + 5.0);
    mae_max = std::max(mae_max, p.mae * 1.2);
  }
  auto X = [&](double v) { return ml + v / xmax * (w - ml - mr); };
  auto Yg = [&](double v) { return mt + (1.0 - std::clamp(v, -1.0, 1.0)) / 2.0 * (h - mt - mb); };
  auto Ym = [&](double v) { return mt + (1.0 - std::clamp(v / mae_max, 0.0, 1.0)) * (h - mt - mb); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\"" << h - mb
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
     << "\" stroke=\"black\"/>\n";
  auto polyline = [&](const char * color, auto yfn, auto sel) {
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto & p : pts) os << X(p.x) << "," << yfn(sel(p)) << " ";
    os << "\"/>\n";
  };
  if (!pts.empty()) {
    polyline("steelblue", Yg, [](const Pt & p) { return p.giou; });
    polyline("indianred", Ym, [](const Pt & p) { return p.mae; });
  }
  os << "<text x=\"" << (w / 2) << "\" y=\"" << (h - 8) << "\" font-size=\"12\">range to target [m]</text>\n";
  os << "<text x=\"8\" y=\"14\" font-size=\"12\" fill=\"steelblue\">GIoU</text>\n";
  os << "<text x=\"8\" y=\"28\" font-size=\"12\" fill=\"indianred\">RF_x MAE (max " << mae_max
     << " m)</text>\n";
  os << "</svg>\n";
  io::write_file(path, os.str());
}

}  // namespace leo::eval
