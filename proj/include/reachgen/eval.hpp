#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "reachgen/arm_model.hpp"
#include "reachgen/dataset.hpp"
#include "reachgen/errors.hpp"
#include "reachgen/minjerk.hpp"
#include "reachgen/neuralnet.hpp"
#include "reachgen/parallel.hpp"

namespace reachgen {

// Published comparison figure for torque-predicting networks.
inline constexpr double kTorqueDnnBaselineCm = 0.347;

struct PerSampleError {
  int id = 0;
  double rms = 0.0;
  double endpoint_cm = 0.0;
};

struct EvalReport {
  Method method = Method::ID;
  int n_test = 0;
  int n_excluded = 0;  // samples whose simulation failed
  double rms = 0.0;    // pooled over samples and all 300 dimensions
  double endpoint_mean_cm = 0.0;
  double endpoint_max_cm = 0.0;
  double endpoint_p95_cm = 0.0;
  double baseline_cm = kTorqueDnnBaselineCm;
  std::vector<PerSampleError> per_sample;
  nlohmann::json config_echo;
  nlohmann::json dataset_checksums;
};

inline double rms_error(const Eigen::MatrixXd& pred,
                        const Eigen::MatrixXd& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw DimensionMismatch("rms_error: shape mismatch");
  return std::sqrt((pred - truth).squaredNorm() /
                   static_cast<double>(pred.size()));
}

inline double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  double idx = p * (v.size() - 1);
  std::size_t lo = static_cast<std::size_t>(idx);
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  double w = idx - lo;
  return v[lo] * (1.0 - w) + v[hi] * w;
}

// Forward-simulates decoder predictions for every test sample and compares
// the endpoint against the reach target.
inline EvalReport endpoint_errors(const Network& decoder, const Dataset& ds,
                                  const ArmParams& arm,
                                  const InputNorm& norm = {},
                                  int threads = 1) {
  std::vector<const Sample*> test;
  for (const auto& s : ds.samples)
    if (s.split == Split::Test) test.push_back(&s);
  if (test.empty()) throw DomainError("dataset has no test split");

  struct Row {
    PerSampleError err;
    bool ok = false;
  };
  std::vector<Row> rows(test.size());
  parallel_for(static_cast<int>(test.size()), threads, [&](int i) {
    const Sample& s = *test[i];
    ActivationTrajectory pred = predict(decoder, s.pair, norm);
    Row row;
    row.err.id = s.id;
    row.err.rms = std::sqrt((pred - s.activations).squaredNorm() /
                            static_cast<double>(pred.size()));
    try {
      JointState x0;
      x0.q = inverse_kinematics(arm, s.pair.start);
      SimResult sim = simulate_activations(arm, x0, pred);
      row.err.endpoint_cm = (sim.final_hand - s.pair.end).norm() * 100.0;
      row.ok = true;
    } catch (const NumericalBlowup&) {
    } catch (const Unreachable&) {
    }
    rows[i] = row;
  });

  EvalReport rep;
  rep.method = ds.gen.method;
  double sq_sum = 0.0;
  std::vector<double> endpoints;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].ok) {
      ++rep.n_excluded;
      continue;
    }
    rep.per_sample.push_back(rows[i].err);
    sq_sum += rows[i].err.rms * rows[i].err.rms;
    endpoints.push_back(rows[i].err.endpoint_cm);
  }
  rep.n_test = static_cast<int>(rep.per_sample.size());
  if (rep.n_test > 0) {
    rep.rms = std::sqrt(sq_sum / rep.n_test);
    rep.endpoint_mean_cm = 0.0;
    for (double e : endpoints) rep.endpoint_mean_cm += e;
    rep.endpoint_mean_cm /= endpoints.size();
    rep.endpoint_max_cm = *std::max_element(endpoints.begin(), endpoints.end());
    rep.endpoint_p95_cm = percentile(endpoints, 0.95);
  }
  return rep;
}

inline nlohmann::json report_json(const EvalReport& rep) {
  nlohmann::json per;
  for (const auto& p : rep.per_sample)
    per.push_back({{"id", p.id}, {"rms", p.rms}, {"endpoint_cm", p.endpoint_cm}});
  return {{"format_version", "1"},
          {"method", to_string(rep.method)},
          {"n_test", rep.n_test},
          {"n_excluded", rep.n_excluded},
          {"rms", rep.rms},
          {"endpoint_mean_cm", rep.endpoint_mean_cm},
          {"endpoint_max_cm", rep.endpoint_max_cm},
          {"endpoint_p95_cm", rep.endpoint_p95_cm},
          {"baseline_cm", rep.baseline_cm},
          {"per_sample", per},
          {"config_echo", rep.config_echo},
          {"dataset_checksums", rep.dataset_checksums}};
}

// Writes figure-ready CSVs: predicted vs true activations for selected test
// samples, and simulated hand paths for 8 synthesized center-out reaches.
inline nlohmann::json export_plot_data(const Network& decoder,
                                       const Dataset& ds, const ArmParams& arm,
                                       const std::filesystem::path& out_dir,
                                       const InputNorm& norm = {},
                                       int n_activation_samples = 3,
                                       const IlqgConfig& ilqg_cfg = {}) {
  std::filesystem::create_directories(out_dir);
  nlohmann::json manifest;
  manifest["files"] = nlohmann::json::array();

  int written = 0;
  for (const auto& s : ds.samples) {
    if (s.split != Split::Test || written >= n_activation_samples) continue;
    ActivationTrajectory pred = predict(decoder, s.pair, norm);
    std::string csv = "t";
    for (int m = 0; m < kNumMuscles; ++m) csv += ",m" + std::to_string(m) + "_true";
    for (int m = 0; m < kNumMuscles; ++m) csv += ",m" + std::to_string(m) + "_pred";
    csv += '\n';
    for (int t = 0; t < kNumSteps; ++t) {
      csv += fmt_g9((t + 1) * kControlDt);
      for (int m = 0; m < kNumMuscles; ++m)
        csv += ',' + fmt_g9(s.activations(t, m));
      for (int m = 0; m < kNumMuscles; ++m) csv += ',' + fmt_g9(pred(t, m));
      csv += '\n';
    }
    std::string name = "activations_" + std::to_string(s.id) + ".csv";
    atomic_write(out_dir / name, csv);
    manifest["files"].push_back(name);
    ++written;
  }

  // 8 center-out reaches of 0.10 m at 45 degree spacing
  Vec2 center = ds.gen.region.center();
  std::string csv = "reach_index,t,x_true,y_true,x_pred,y_pred\n";
  for (int r = 0; r < 8; ++r) {
    double angle = r * M_PI / 4.0;
    ReachPair pair{center,
                   center + 0.10 * Vec2(std::cos(angle), std::sin(angle))};
    ActivationTrajectory truth =
        label_reach(arm, pair, ds.gen.method, ilqg_cfg);
    ActivationTrajectory pred = predict(decoder, pair, norm);
    JointState x0;
    x0.q = inverse_kinematics(arm, pair.start);
    SimResult sim_true = simulate_activations(arm, x0, truth);
    SimResult sim_pred = simulate_activations(arm, x0, pred);
    for (int k = 0; k <= kNumSteps; ++k) {
      Vec2 pt = forward_kinematics(arm, sim_true.states[k].q);
      Vec2 pp = forward_kinematics(arm, sim_pred.states[k].q);
      csv += std::to_string(r) + ',' + fmt_g9(k * kControlDt) + ',' +
             fmt_g9(pt(0)) + ',' + fmt_g9(pt(1)) + ',' + fmt_g9(pp(0)) + ',' +
             fmt_g9(pp(1)) + '\n';
    }
  }
  atomic_write(out_dir / "handpaths.csv", csv);
  manifest["files"].push_back("handpaths.csv");
  return manifest;
}

}  // namespace reachgen
