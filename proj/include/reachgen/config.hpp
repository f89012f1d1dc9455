#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "reachgen/dataset.hpp"
#include "reachgen/ilqg.hpp"
#include "reachgen/neuralnet.hpp"

namespace reachgen {

// App-level training settings: epoch budgets per pipeline stage plus the
// decoder input normalization window.
struct TrainSettings {
  int batch_size = 100;
  int cg_iters_per_batch = 3;
  int pretrain_epochs = 50;  // per greedy stage
  int finetune_epochs = 100;
  int decoder_epochs = 500;
  std::uint64_t seed = 7;
  double eps_clamp = 1e-12;
  InputNorm input_norm;

  TrainConfig stage_config(int epochs) const {
    TrainConfig c;
    c.batch_size = batch_size;
    c.cg_iters_per_batch = cg_iters_per_batch;
    c.epochs = epochs;
    c.seed = seed;
    c.eps_clamp = eps_clamp;
    return c;
  }

  std::vector<std::string> validate() const {
    auto errs = stage_config(pretrain_epochs).validate();
    if (finetune_epochs < 0 || decoder_epochs < 0)
      errs.push_back("epoch counts must be >= 0");
    if (!(input_norm.lo(0) < input_norm.hi(0) &&
          input_norm.lo(1) < input_norm.hi(1)))
      errs.push_back("input normalization bounds must satisfy lo < hi");
    return errs;
  }
};

struct AppConfig {
  ArmParams arm;
  GenConfig gen;
  IlqgConfig ilqg;
  TrainSettings train;
  std::filesystem::path out_dir = "runs";
};

namespace detail {

template <class T>
void opt_get(const nlohmann::json& j, const char* key, T& v) {
  if (j.contains(key)) j.at(key).get_to(v);
}

inline void apply(const nlohmann::json& j, Rect& r) {
  opt_get(j, "x_lo", r.x_lo);
  opt_get(j, "x_hi", r.x_hi);
  opt_get(j, "y_lo", r.y_lo);
  opt_get(j, "y_hi", r.y_hi);
}

inline void apply(const nlohmann::json& j, ArmParams& a) {
  opt_get(j, "l1", a.l1);
  opt_get(j, "l2", a.l2);
  opt_get(j, "m1", a.m1);
  opt_get(j, "m2", a.m2);
  opt_get(j, "I1", a.I1);
  opt_get(j, "I2", a.I2);
  opt_get(j, "s1", a.s1);
  opt_get(j, "s2", a.s2);
  if (j.contains("B")) {
    auto b = j.at("B").get<std::vector<double>>();
    if (b.size() != 4) throw ParseError("arm.B must have 4 entries");
    a.B << b[0], b[1], b[2], b[3];
  }
  if (j.contains("R")) {
    auto r = j.at("R").get<std::vector<double>>();
    if (r.size() != 12) throw ParseError("arm.R must have 12 entries");
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < kNumMuscles; ++k) a.R(i, k) = r[i * kNumMuscles + k];
  }
}

inline void apply(const nlohmann::json& j, GenConfig& g) {
  if (j.contains("region")) apply(j.at("region"), g.region);
  opt_get(j, "max_reach_dist", g.max_reach_dist);
  opt_get(j, "reach_margin_lo", g.reach_margin_lo);
  opt_get(j, "reach_margin_hi", g.reach_margin_hi);
  opt_get(j, "n_train", g.n_train);
  opt_get(j, "n_test", g.n_test);
  opt_get(j, "seed", g.seed);
  if (j.contains("method"))
    g.method = method_from_string(j.at("method").get<std::string>());
}

inline void apply(const nlohmann::json& j, IlqgConfig& c) {
  opt_get(j, "horizon", c.horizon);
  opt_get(j, "dt", c.dt);
  opt_get(j, "w_p", c.w_p);
  opt_get(j, "w_v", c.w_v);
  opt_get(j, "w_u", c.w_u);
  opt_get(j, "reg_init", c.reg_init);
  opt_get(j, "reg_min", c.reg_min);
  opt_get(j, "reg_max", c.reg_max);
  opt_get(j, "max_iter", c.max_iter);
  opt_get(j, "tol_rel", c.tol_rel);
  opt_get(j, "n_alphas", c.n_alphas);
}

inline void apply(const nlohmann::json& j, TrainSettings& t) {
  opt_get(j, "batch_size", t.batch_size);
  opt_get(j, "cg_iters_per_batch", t.cg_iters_per_batch);
  opt_get(j, "pretrain_epochs", t.pretrain_epochs);
  opt_get(j, "finetune_epochs", t.finetune_epochs);
  opt_get(j, "decoder_epochs", t.decoder_epochs);
  opt_get(j, "seed", t.seed);
  opt_get(j, "eps_clamp", t.eps_clamp);
  if (j.contains("input_norm")) {
    auto n = j.at("input_norm");
    std::vector<double> lo, hi;
    opt_get(n, "lo", lo);
    opt_get(n, "hi", hi);
    if (lo.size() == 2) t.input_norm.lo = Vec2(lo[0], lo[1]);
    if (hi.size() == 2) t.input_norm.hi = Vec2(hi[0], hi[1]);
  }
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const IlqgConfig& c) {
  j = {{"horizon", c.horizon}, {"dt", c.dt},
       {"w_p", c.w_p},         {"w_v", c.w_v},
       {"w_u", c.w_u},         {"reg_init", c.reg_init},
       {"reg_min", c.reg_min}, {"reg_max", c.reg_max},
       {"max_iter", c.max_iter}, {"tol_rel", c.tol_rel},
       {"n_alphas", c.n_alphas}};
}

inline void to_json(nlohmann::json& j, const TrainSettings& t) {
  j = {{"batch_size", t.batch_size},
       {"cg_iters_per_batch", t.cg_iters_per_batch},
       {"pretrain_epochs", t.pretrain_epochs},
       {"finetune_epochs", t.finetune_epochs},
       {"decoder_epochs", t.decoder_epochs},
       {"seed", t.seed},
       {"eps_clamp", t.eps_clamp},
       {"input_norm",
        {{"lo", {t.input_norm.lo(0), t.input_norm.lo(1)}},
         {"hi", {t.input_norm.hi(0), t.input_norm.hi(1)}}}}};
}

inline void to_json(nlohmann::json& j, const AppConfig& c) {
  j = {{"arm", c.arm},
       {"gen", c.gen},
       {"ilqg", c.ilqg},
       {"train", c.train},
       {"out_dir", c.out_dir.string()}};
}

// Overlays a (possibly partial) JSON document onto built-in defaults.
inline AppConfig config_from_json(const nlohmann::json& j) {
  AppConfig cfg;
  if (j.contains("arm")) detail::apply(j.at("arm"), cfg.arm);
  if (j.contains("gen")) detail::apply(j.at("gen"), cfg.gen);
  if (j.contains("ilqg")) detail::apply(j.at("ilqg"), cfg.ilqg);
  if (j.contains("train")) detail::apply(j.at("train"), cfg.train);
  if (j.contains("out_dir"))
    cfg.out_dir = j.at("out_dir").get<std::string>();
  return cfg;
}

inline AppConfig load_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

struct Diagnostic {
  enum class Level { Warning, Error };
  Level level = Level::Error;
  std::string message;
};

// Collects every invariant violation in the config; warnings flag values
// that deviate from the reference experiment without being invalid.
inline std::vector<Diagnostic> validate_config(const AppConfig& cfg) {
  std::vector<Diagnostic> diags;
  auto add_errors = [&](const std::vector<std::string>& errs,
                        const std::string& prefix) {
    for (const auto& e : errs)
      diags.push_back({Diagnostic::Level::Error, prefix + e});
  };
  add_errors(cfg.arm.validate(), "arm: ");
  add_errors(cfg.gen.validate(), "gen: ");
  add_errors(cfg.ilqg.validate(), "ilqg: ");
  add_errors(cfg.train.validate(), "train: ");
  if (std::abs(cfg.ilqg.horizon * cfg.ilqg.dt - 1.0) > 1e-12)
    diags.push_back({Diagnostic::Level::Error,
                     "ilqg: horizon * dt must equal the 1.0 s reach duration"});
  if (std::abs(cfg.gen.region.width() - 0.50) > 1e-9 ||
      std::abs(cfg.gen.region.height() - 0.20) > 1e-9)
    diags.push_back(
        {Diagnostic::Level::Warning,
         "gen: sampling region is not the reference 0.50 m x 0.20 m rectangle"});
  if (std::abs(cfg.gen.max_reach_dist - 0.10) > 1e-9)
    diags.push_back({Diagnostic::Level::Warning,
                     "gen: max reach distance differs from the reference 0.10 m"});
  return diags;
}

inline std::vector<Diagnostic> validate_config_file(
    const std::filesystem::path& path) {
  return validate_config(load_config(path));
}

}  // namespace reachgen
