#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "reachgen/arm_model.hpp"
#include "reachgen/errors.hpp"
#include "reachgen/ilqg.hpp"
#include "reachgen/io_util.hpp"
#include "reachgen/minjerk.hpp"
#include "reachgen/muscle_opt.hpp"
#include "reachgen/parallel.hpp"
#include "reachgen/rng.hpp"
#include "reachgen/types.hpp"

namespace reachgen {

enum class Method { ID, OC };
enum class Split { Train, Test };

inline std::string to_string(Method m) { return m == Method::ID ? "id" : "oc"; }
inline std::string to_string(Split s) {
  return s == Split::Train ? "train" : "test";
}

inline Method method_from_string(const std::string& s) {
  if (s == "id" || s == "ID") return Method::ID;
  if (s == "oc" || s == "OC") return Method::OC;
  throw ParseError("unknown method: " + s);
}

struct Rect {
  double x_lo = -0.25, x_hi = 0.25;
  double y_lo = 0.25, y_hi = 0.45;

  double width() const { return x_hi - x_lo; }
  double height() const { return y_hi - y_lo; }
  Vec2 center() const { return {0.5 * (x_lo + x_hi), 0.5 * (y_lo + y_hi)}; }
};

struct GenConfig {
  Rect region;
  double max_reach_dist = 0.10;    // m
  double reach_margin_lo = 0.15;   // m, min hand distance from shoulder
  double reach_margin_hi = 0.58;   // m
  int n_train = 4500;
  int n_test = 500;
  std::uint64_t seed = 1;
  Method method = Method::ID;

  std::vector<std::string> validate() const {
    std::vector<std::string> errs;
    if (region.width() <= 0.0 || region.height() <= 0.0)
      errs.push_back("sampling region must have positive extent");
    if (max_reach_dist <= 0.0)
      errs.push_back("max_reach_dist must be > 0");
    if (!(0.0 < reach_margin_lo && reach_margin_lo < reach_margin_hi))
      errs.push_back("reach margins must satisfy 0 < lo < hi");
    if (n_train < 0 || n_test < 0 || n_train + n_test < 1)
      errs.push_back("dataset sizes must be nonnegative and total >= 1");
    return errs;
  }
};

struct Sample {
  int id = 0;
  ReachPair pair;
  ActivationTrajectory activations = ActivationTrajectory::Zero();
  Method method = Method::ID;
  Split split = Split::Train;
};

struct Dataset {
  std::vector<Sample> samples;
  GenConfig gen;
  ArmParams arm;
  long pair_rejections = 0;   // endpoints outside the reachability margin
  long label_rejections = 0;  // labeling failed, pair resampled
};

inline void to_json(nlohmann::json& j, const Rect& r) {
  j = {{"x_lo", r.x_lo}, {"x_hi", r.x_hi}, {"y_lo", r.y_lo}, {"y_hi", r.y_hi}};
}

inline void from_json(const nlohmann::json& j, Rect& r) {
  j.at("x_lo").get_to(r.x_lo);
  j.at("x_hi").get_to(r.x_hi);
  j.at("y_lo").get_to(r.y_lo);
  j.at("y_hi").get_to(r.y_hi);
}

inline void to_json(nlohmann::json& j, const GenConfig& g) {
  j = {{"region", g.region},
       {"max_reach_dist", g.max_reach_dist},
       {"reach_margin_lo", g.reach_margin_lo},
       {"reach_margin_hi", g.reach_margin_hi},
       {"n_train", g.n_train},
       {"n_test", g.n_test},
       {"seed", g.seed},
       {"method", to_string(g.method)}};
}

inline void from_json(const nlohmann::json& j, GenConfig& g) {
  j.at("region").get_to(g.region);
  j.at("max_reach_dist").get_to(g.max_reach_dist);
  j.at("reach_margin_lo").get_to(g.reach_margin_lo);
  j.at("reach_margin_hi").get_to(g.reach_margin_hi);
  j.at("n_train").get_to(g.n_train);
  j.at("n_test").get_to(g.n_test);
  j.at("seed").get_to(g.seed);
  g.method = method_from_string(j.at("method").get<std::string>());
}

inline void to_json(nlohmann::json& j, const ArmParams& a) {
  j = {{"l1", a.l1}, {"l2", a.l2}, {"m1", a.m1}, {"m2", a.m2},
       {"I1", a.I1}, {"I2", a.I2}, {"s1", a.s1}, {"s2", a.s2},
       {"B", {a.B(0, 0), a.B(0, 1), a.B(1, 0), a.B(1, 1)}}};
  std::vector<double> r;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < kNumMuscles; ++k) r.push_back(a.R(i, k));
  j["R"] = r;
}

inline void from_json(const nlohmann::json& j, ArmParams& a) {
  j.at("l1").get_to(a.l1);
  j.at("l2").get_to(a.l2);
  j.at("m1").get_to(a.m1);
  j.at("m2").get_to(a.m2);
  j.at("I1").get_to(a.I1);
  j.at("I2").get_to(a.I2);
  j.at("s1").get_to(a.s1);
  j.at("s2").get_to(a.s2);
  auto b = j.at("B").get<std::vector<double>>();
  if (b.size() != 4) throw ParseError("B must have 4 entries");
  a.B << b[0], b[1], b[2], b[3];
  auto r = j.at("R").get<std::vector<double>>();
  if (r.size() != 12) throw ParseError("R must have 12 entries");
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < kNumMuscles; ++k) a.R(i, k) = r[i * kNumMuscles + k];
}

// One rejection-sampled reach pair: start uniform in the region, direction
// uniform, distance uniform in (0, max_reach_dist]. Both endpoints must sit
// inside the reachability margin annulus.
inline ReachPair sample_reach_pair(RngStream& rng, const GenConfig& cfg,
                                   long* rejections = nullptr) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    ReachPair pair;
    pair.start(0) = rng.uniform(cfg.region.x_lo, cfg.region.x_hi);
    pair.start(1) = rng.uniform(cfg.region.y_lo, cfg.region.y_hi);
    double angle = rng.uniform(0.0, 2.0 * M_PI);
    double dist = cfg.max_reach_dist * (1.0 - rng.next_double());  // (0, d]
    pair.end = pair.start + dist * Vec2(std::cos(angle), std::sin(angle));
    double rs = pair.start.norm(), re = pair.end.norm();
    if (rs >= cfg.reach_margin_lo && rs <= cfg.reach_margin_hi &&
        re >= cfg.reach_margin_lo && re <= cfg.reach_margin_hi)
      return pair;
    if (rejections) ++(*rejections);
  }
  throw SamplingExhausted(
      "1000 consecutive rejections; sampling region is not reachable");
}

// Inverse-dynamics labeling: min-jerk hand path -> joint path -> torques.
inline TorqueTrajectory id_torques(const ArmParams& arm,
                                   const ReachPair& pair) {
  MinJerkSpec spec{pair.start, pair.end, kReachDuration, kNumSteps};
  TorqueTrajectory tau;
  auto points = sample_minjerk(spec);
  for (int k = 0; k < kNumSteps; ++k) {
    Vec2 q = inverse_kinematics(arm, points[k].p);
    Vec2 qd, qdd;
    hand_to_joint_derivatives(arm, q, points[k].v, points[k].a, qd, qdd);
    tau.row(k) = inverse_dynamics(arm, q, qd, qdd).transpose();
  }
  return tau;
}

inline ActivationTrajectory label_reach(const ArmParams& arm,
                                        const ReachPair& pair, Method method,
                                        const IlqgConfig& ilqg_cfg = {}) {
  if (method == Method::ID)
    return torques_to_activations(arm.R, id_torques(arm, pair));
  IlqgSolution sol = ilqg_solve(arm, pair, ilqg_cfg);
  Vec2 endpoint = forward_kinematics(arm, sol.states.back().q);
  if (!sol.converged && (endpoint - pair.end).norm() > 2e-3)
    throw Infeasible("ilqg did not converge: " + sol.message);
  return torques_to_activations(arm.R, sol.controls);
}

// Generates the full labeled dataset. Each sample id owns an RNG stream
// derived from (seed, id), so parallel generation matches serial exactly.
inline Dataset generate_dataset(const GenConfig& cfg, const ArmParams& arm,
                                const IlqgConfig& ilqg_cfg = {},
                                int threads = 1) {
  auto errs = cfg.validate();
  if (!errs.empty()) throw DomainError("invalid GenConfig: " + errs.front());
  errs = arm.validate();
  if (!errs.empty()) throw DomainError("invalid ArmParams: " + errs.front());

  int total = cfg.n_train + cfg.n_test;
  Dataset ds;
  ds.gen = cfg;
  ds.arm = arm;
  ds.samples.resize(total);
  std::atomic<long> pair_rej{0}, label_rej{0};

  parallel_for(total, threads, [&](int id) {
    RngStream rng(cfg.seed, static_cast<std::uint64_t>(id) + 1);
    Sample s;
    s.id = id;
    s.method = cfg.method;
    s.split = id < cfg.n_train ? Split::Train : Split::Test;
    long local_pair_rej = 0;
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 1000)
        throw SamplingExhausted("labeling failed 1000 times for sample " +
                                std::to_string(id));
      s.pair = sample_reach_pair(rng, cfg, &local_pair_rej);
      try {
        s.activations = label_reach(arm, s.pair, cfg.method, ilqg_cfg);
        break;
      } catch (const InfeasibleStep&) {
      } catch (const SingularConfiguration&) {
      } catch (const Infeasible&) {
      } catch (const Unreachable&) {
      }
      ++label_rej;
    }
    pair_rej += local_pair_rej;
    ds.samples[id] = std::move(s);
  });

  ds.pair_rejections = pair_rej.load();
  ds.label_rejections = label_rej.load();
  return ds;
}

inline std::string pairs_csv(const Dataset& ds) {
  std::string out = "id,x0,y0,xf,yf,split,method\n";
  for (const auto& s : ds.samples) {
    out += std::to_string(s.id) + ',' + fmt_g9(s.pair.start(0)) + ',' +
           fmt_g9(s.pair.start(1)) + ',' + fmt_g9(s.pair.end(0)) + ',' +
           fmt_g9(s.pair.end(1)) + ',' + to_string(s.split) + ',' +
           to_string(s.method) + '\n';
  }
  return out;
}

inline std::string activations_csv(const Dataset& ds) {
  std::string out = "id";
  char col[16];
  for (int t = 0; t < kNumSteps; ++t)
    for (int m = 0; m < kNumMuscles; ++m) {
      std::snprintf(col, sizeof(col), ",a_t%02d_m%d", t, m);
      out += col;
    }
  out += '\n';
  for (const auto& s : ds.samples) {
    out += std::to_string(s.id);
    for (int t = 0; t < kNumSteps; ++t)
      for (int m = 0; m < kNumMuscles; ++m) {
        out += ',';
        out += fmt_g9(s.activations(t, m));
      }
    out += '\n';
  }
  return out;
}

inline nlohmann::json dataset_manifest(const Dataset& ds,
                                       const std::string& pairs_sum,
                                       const std::string& act_sum) {
  int n_train = 0, n_test = 0;
  for (const auto& s : ds.samples)
    (s.split == Split::Train ? n_train : n_test)++;
  return {{"format_version", "1"},
          {"seed", ds.gen.seed},
          {"gen_config", ds.gen},
          {"arm_params", ds.arm},
          {"pair_rejections", ds.pair_rejections},
          {"label_rejections", ds.label_rejections},
          {"rows", {{"train", n_train}, {"test", n_test}}},
          {"checksums",
           {{"pairs.csv", pairs_sum}, {"activations.csv", act_sum}}}};
}

inline nlohmann::json save_dataset(const Dataset& ds,
                                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string pairs = pairs_csv(ds);
  std::string acts = activations_csv(ds);
  nlohmann::json manifest =
      dataset_manifest(ds, checksum_hex(pairs), checksum_hex(acts));
  atomic_write(dir / "pairs.csv", pairs);
  atomic_write(dir / "activations.csv", acts);
  atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

namespace detail {

inline double parse_double(const std::string& s, const char* file, int line,
                           int col) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(std::string(file) + ":" + std::to_string(line) +
                      ": column " + std::to_string(col) +
                      ": cannot parse number '" + s + "'");
  }
}

}  // namespace detail

inline Dataset load_dataset(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("manifest.json: ") + e.what());
  }
  if (manifest.value("format_version", "") != "1")
    throw VersionMismatch("unsupported dataset format version");

  std::string pairs_text = read_file(dir / "pairs.csv");
  std::string acts_text = read_file(dir / "activations.csv");
  auto sums = manifest.at("checksums");
  if (checksum_hex(pairs_text) != sums.at("pairs.csv").get<std::string>())
    throw ChecksumMismatch("pairs.csv does not match manifest checksum");
  if (checksum_hex(acts_text) != sums.at("activations.csv").get<std::string>())
    throw ChecksumMismatch("activations.csv does not match manifest checksum");

  Dataset ds;
  ds.gen = manifest.at("gen_config").get<GenConfig>();
  ds.arm = manifest.at("arm_params").get<ArmParams>();
  ds.pair_rejections = manifest.at("pair_rejections").get<long>();
  ds.label_rejections = manifest.at("label_rejections").get<long>();

  auto parse_lines = [](const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
      if (c == '\n') {
        lines.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
  };

  auto pair_lines = parse_lines(pairs_text);
  if (pair_lines.empty() || split_csv_line(pair_lines[0]).size() != 7)
    throw FormatError("pairs.csv: bad header");
  for (std::size_t i = 1; i < pair_lines.size(); ++i) {
    auto f = split_csv_line(pair_lines[i]);
    if (f.size() != 7)
      throw FormatError("pairs.csv:" + std::to_string(i + 1) +
                        ": expected 7 fields, got " + std::to_string(f.size()));
    Sample s;
    s.id = static_cast<int>(
        detail::parse_double(f[0], "pairs.csv", static_cast<int>(i + 1), 1));
    for (int c = 0; c < 4; ++c)
      (c < 2 ? s.pair.start(c) : s.pair.end(c - 2)) = detail::parse_double(
          f[c + 1], "pairs.csv", static_cast<int>(i + 1), c + 2);
    if (f[5] == "train") s.split = Split::Train;
    else if (f[5] == "test") s.split = Split::Test;
    else throw FormatError("pairs.csv:" + std::to_string(i + 1) +
                           ": unknown split '" + f[5] + "'");
    s.method = method_from_string(f[6]);
    ds.samples.push_back(std::move(s));
  }

  auto act_lines = parse_lines(acts_text);
  if (act_lines.size() != ds.samples.size() + 1)
    throw FormatError("activations.csv: row count does not match pairs.csv");
  for (std::size_t i = 1; i < act_lines.size(); ++i) {
    auto f = split_csv_line(act_lines[i]);
    if (f.size() != 1 + kNumSteps * kNumMuscles)
      throw FormatError("activations.csv:" + std::to_string(i + 1) +
                        ": expected 301 fields, got " +
                        std::to_string(f.size()));
    Sample& s = ds.samples[i - 1];
    int id = static_cast<int>(detail::parse_double(
        f[0], "activations.csv", static_cast<int>(i + 1), 1));
    if (id != s.id)
      throw FormatError("activations.csv:" + std::to_string(i + 1) +
                        ": id does not match pairs.csv row");
    for (int t = 0; t < kNumSteps; ++t)
      for (int m = 0; m < kNumMuscles; ++m)
        s.activations(t, m) =
            detail::parse_double(f[1 + t * kNumMuscles + m], "activations.csv",
                                 static_cast<int>(i + 1),
                                 2 + t * kNumMuscles + m);
  }
  return ds;
}

}  // namespace reachgen
