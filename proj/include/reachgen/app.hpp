#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reachgen/config.hpp"
#include "reachgen/dataset.hpp"
#include "reachgen/eval.hpp"
#include "reachgen/neuralnet.hpp"

namespace reachgen {

inline constexpr const char* kToolVersion = "1.0.0";

struct AppOptions {
  std::string command;
  std::optional<std::filesystem::path> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<Method> method;
  std::optional<std::filesystem::path> out_dir;
  int threads = 1;
};

namespace app_detail {

namespace fs = std::filesystem;

struct Stage {
  const AppConfig& cfg;
  Method method;
  int threads;
  std::string command;
  nlohmann::json inputs = nlohmann::json::object();
  nlohmann::json outputs = nlohmann::json::object();
  std::vector<fs::path> created;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  fs::path method_dir() const { return cfg.out_dir / to_string(method); }
  fs::path dataset_dir() const { return method_dir() / "dataset"; }
  fs::path autoencoder_path() const { return method_dir() / "autoencoder.rgnn"; }
  fs::path decoder_path() const { return method_dir() / "decoder.rgnn"; }
  fs::path report_path() const { return method_dir() / "report.json"; }
  fs::path plots_dir() const { return method_dir() / "plots"; }

  void note_input(const fs::path& p) {
    inputs[p.filename().string()] = file_checksum(p);
  }
  void note_output(const fs::path& p) {
    outputs[fs::relative(p, method_dir()).string()] = file_checksum(p);
    created.push_back(p);
  }

  void write_manifest() {
    nlohmann::json cfg_json = cfg;
    nlohmann::json m = {
        {"command", command},
        {"tool_version", kToolVersion},
        {"config_checksum", checksum_hex(cfg_json.dump())},
        {"input_checksums", inputs},
        {"output_checksums", outputs},
        {"timing_seconds",
         std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
             .count()}};
    atomic_write(method_dir() / ("run_manifest_" + command + ".json"),
                 m.dump(2) + "\n");
  }

  void rollback() {
    for (const auto& p : created) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }
};

inline GenConfig gen_for_method(const AppConfig& cfg, Method m) {
  GenConfig g = cfg.gen;
  g.method = m;
  return g;
}

inline void dataset_matrices(const Dataset& ds, Split split,
                             const InputNorm& norm, Eigen::MatrixXd& X,
                             Eigen::MatrixXd& T) {
  std::vector<const Sample*> rows;
  for (const auto& s : ds.samples)
    if (s.split == split) rows.push_back(&s);
  X.resize(rows.size(), 4);
  T.resize(rows.size(), kNumSteps * kNumMuscles);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    X.row(i) = norm.encode(rows[i]->pair).transpose();
    for (int t = 0; t < kNumSteps; ++t)
      for (int m = 0; m < kNumMuscles; ++m)
        T(i, t * kNumMuscles + m) = rows[i]->activations(t, m);
  }
}

inline void run_gen(Stage& st) {
  Dataset ds = generate_dataset(gen_for_method(st.cfg, st.method), st.cfg.arm,
                                st.cfg.ilqg, st.threads);
  fs::create_directories(st.dataset_dir());
  save_dataset(ds, st.dataset_dir());
  st.note_output(st.dataset_dir() / "pairs.csv");
  st.note_output(st.dataset_dir() / "activations.csv");
  st.note_output(st.dataset_dir() / "manifest.json");
  std::cout << "[" << to_string(st.method) << "] dataset: "
            << ds.samples.size() << " samples, " << ds.pair_rejections
            << " pair rejections, " << ds.label_rejections
            << " label rejections\n";
}

inline void run_pretrain(Stage& st) {
  Dataset ds = load_dataset(st.dataset_dir());
  st.note_input(st.dataset_dir() / "activations.csv");
  Eigen::MatrixXd X, T;
  dataset_matrices(ds, Split::Train, st.cfg.train.input_norm, X, T);
  PretrainConfig pc;
  pc.stage = st.cfg.train.stage_config(st.cfg.train.pretrain_epochs);
  pc.finetune = st.cfg.train.stage_config(st.cfg.train.finetune_epochs);
  Network ae = pretrain_autoencoder(T, {300, 150, 50, 4}, pc);
  save_weights(ae, st.autoencoder_path());
  st.note_output(st.autoencoder_path());
  double recon = cross_entropy(forward(ae, T), T, pc.finetune.eps_clamp);
  std::cout << "[" << to_string(st.method)
            << "] autoencoder reconstruction loss: " << recon << "\n";
}

inline void run_train_decoder(Stage& st) {
  Dataset ds = load_dataset(st.dataset_dir());
  Network ae = load_weights(st.autoencoder_path());
  st.note_input(st.dataset_dir() / "activations.csv");
  st.note_input(st.autoencoder_path());
  Eigen::MatrixXd X, T;
  dataset_matrices(ds, Split::Train, st.cfg.train.input_norm, X, T);
  auto result = train_decoder(
      ae, X, T, st.cfg.train.stage_config(st.cfg.train.decoder_epochs));
  save_weights(result.net, st.decoder_path());
  st.note_output(st.decoder_path());
  std::cout << "[" << to_string(st.method) << "] decoder training loss: "
            << (result.loss_curve.empty() ? 0.0 : result.loss_curve.back())
            << "\n";
}

inline EvalReport run_eval(Stage& st) {
  Dataset ds = load_dataset(st.dataset_dir());
  Network decoder = load_weights(st.decoder_path());
  st.note_input(st.dataset_dir() / "activations.csv");
  st.note_input(st.decoder_path());
  EvalReport rep = endpoint_errors(decoder, ds, st.cfg.arm,
                                   st.cfg.train.input_norm, st.threads);
  rep.config_echo = st.cfg;
  rep.dataset_checksums = {
      {"pairs.csv", file_checksum(st.dataset_dir() / "pairs.csv")},
      {"activations.csv",
       file_checksum(st.dataset_dir() / "activations.csv")}};
  atomic_write(st.report_path(), report_json(rep).dump(2) + "\n");
  st.note_output(st.report_path());
  std::cout << "[" << to_string(st.method) << "] rms=" << rep.rms
            << " endpoint_mean=" << rep.endpoint_mean_cm << " cm (baseline "
            << rep.baseline_cm << " cm)\n";
  return rep;
}

inline void run_export_plots(Stage& st) {
  Dataset ds = load_dataset(st.dataset_dir());
  Network decoder = load_weights(st.decoder_path());
  st.note_input(st.dataset_dir() / "activations.csv");
  st.note_input(st.decoder_path());
  nlohmann::json files = export_plot_data(decoder, ds, st.cfg.arm,
                                          st.plots_dir(),
                                          st.cfg.train.input_norm, 3,
                                          st.cfg.ilqg);
  for (const auto& f : files["files"])
    st.note_output(st.plots_dir() / f.get<std::string>());
  std::cout << "[" << to_string(st.method) << "] plot data exported to "
            << st.plots_dir().string() << "\n";
}

}  // namespace app_detail

inline int run_command(const AppOptions& opts) {
  AppConfig cfg;
  try {
    if (opts.config_path) cfg = load_config(*opts.config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (opts.seed) {
    cfg.gen.seed = *opts.seed;
    cfg.train.seed = *opts.seed;
  }
  if (opts.out_dir) cfg.out_dir = *opts.out_dir;
  if (opts.method) cfg.gen.method = *opts.method;

  if (opts.command == "validate-config") {
    auto diags = validate_config(cfg);
    bool has_error = false;
    for (const auto& d : diags) {
      bool err = d.level == Diagnostic::Level::Error;
      has_error |= err;
      std::cout << (err ? "error: " : "warning: ") << d.message << "\n";
    }
    if (diags.empty()) std::cout << "config valid\n";
    return has_error ? 2 : 0;
  }

  auto diags = validate_config(cfg);
  for (const auto& d : diags) {
    if (d.level == Diagnostic::Level::Error) {
      std::cerr << "config error: " << d.message << "\n";
      return 2;
    }
  }

  auto run_stage = [&](const std::string& command, Method m) {
    app_detail::Stage st{cfg, m, opts.threads, command};
    std::filesystem::create_directories(st.method_dir());
    try {
      if (command == "gen-data") app_detail::run_gen(st);
      else if (command == "pretrain") app_detail::run_pretrain(st);
      else if (command == "train-decoder") app_detail::run_train_decoder(st);
      else if (command == "eval") app_detail::run_eval(st);
      else if (command == "export-plots") app_detail::run_export_plots(st);
      st.write_manifest();
    } catch (...) {
      st.rollback();
      throw;
    }
  };

  try {
    if (opts.command == "pipeline") {
      nlohmann::json summary;
      for (Method m : {Method::ID, Method::OC}) {
        run_stage("gen-data", m);
        run_stage("pretrain", m);
        run_stage("train-decoder", m);
        app_detail::Stage st{cfg, m, opts.threads, "eval"};
        EvalReport rep;
        try {
          rep = app_detail::run_eval(st);
          st.write_manifest();
        } catch (...) {
          st.rollback();
          throw;
        }
        run_stage("export-plots", m);
        summary[to_string(m)] = {{"rms", rep.rms},
                                 {"endpoint_mean_cm", rep.endpoint_mean_cm},
                                 {"endpoint_p95_cm", rep.endpoint_p95_cm},
                                 {"baseline_cm", rep.baseline_cm}};
      }
      atomic_write(cfg.out_dir / "summary.json", summary.dump(2) + "\n");
      std::printf("%-10s %12s %20s\n", "condition", "rms", "endpoint mean (cm)");
      for (Method m : {Method::ID, Method::OC}) {
        const auto& s = summary[to_string(m)];
        std::printf("%-10s %12.6f %20.4f\n", to_string(m).c_str(),
                    s["rms"].get<double>(),
                    s["endpoint_mean_cm"].get<double>());
      }
    } else {
      run_stage(opts.command, cfg.gen.method);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace reachgen
