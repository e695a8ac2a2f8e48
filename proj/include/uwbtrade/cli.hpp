// Copyright 2026 The uwbtrade Authors
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

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "uwbtrade/analytic_bep.hpp"
#include "uwbtrade/errors.hpp"
#include "uwbtrade/jitter_stats.hpp"
#include "uwbtrade/pulse_model.hpp"
#include "uwbtrade/tradeoff.hpp"

namespace uwbtrade::cli {

inline constexpr const char* kCsvHeader =
    "preset,coding,sync,case,N,N_f,N_c,analytic_bep,mc_bep,mc_std_err,jitter_term,mai_term,"
    "ifi_term,noise_term,seed,symbols";

inline constexpr int kDefaultPartitions = 16;

/// L = 10 tap gains of the reference multipath channel (delays l T_c).
inline const std::vector<double>& reference_channel_gains() {
  static const std::vector<double> g = {0.4653,  0.5817, 0.2327,  -0.4536, 0.3490,
                                        0.2217, -0.1163, 0.0233, -0.0116, -0.0023};
  return g;
}

struct Options {
  std::string preset = "fig4";
  std::string config_path;
  bool analytic = true;
  bool monte_carlo = false;
  std::int64_t symbols = 100000;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out;
};

/// One (coding, sync, case) curve of an experiment.
struct Series {
  SweepRequest request;
  std::string case_label;  // empty for AWGN
};

/// A set of curves written to one CSV.
struct Experiment {
  std::string label;
  std::vector<Series> series;
};

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace detail {

inline SweepRequest awgn_base(const Options& opt) {
  SweepRequest req;
  req.pulse = PulseModel(0.125e-9, 0.25e-9);
  req.base_cfg.total_gain = 512;
  req.base_cfg.desired_energy = 1.0;
  req.base_cfg.interferer_energies.assign(9, 1.0);
  req.base_cfg.noise_psd = 0.1;
  req.base_cfg.tx_jitter = UniformJitter{25e-12, 0.0};
  req.factorizations = power_of_two_factorizations(512);
  req.analytic = opt.analytic;
  req.monte_carlo = opt.monte_carlo;
  req.mc_symbols = opt.symbols;
  req.seed = opt.seed;
  req.num_partitions = kDefaultPartitions;
  req.workers = opt.workers;
  return req;
}

inline std::vector<Series> all_modes(const SweepRequest& base) {
  std::vector<Series> out;
  for (Coding c : {Coding::coded, Coding::uncoded}) {
    for (Sync s : {Sync::symbol, Sync::chip}) {
      Series ser{base, ""};
      ser.request.base_cfg.coding = c;
      ser.request.base_cfg.sync = s;
      out.push_back(std::move(ser));
    }
  }
  return out;
}

inline std::string sigma_label(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace detail

inline std::vector<Experiment> make_preset(const std::string& name, const Options& opt) {
  if (name == "fig4") {
    return {{"fig4", detail::all_modes(detail::awgn_base(opt))}};
  }
  if (name == "fig5") {
    std::vector<Experiment> out;
    for (double s2 : {1.0, 0.1, 0.01}) {
      SweepRequest base = detail::awgn_base(opt);
      base.base_cfg.noise_psd = s2;
      out.push_back({"fig5-sigma2=" + detail::sigma_label(s2), detail::all_modes(base)});
    }
    return out;
  }
  if (name == "fig6") {
    SweepRequest uni = detail::awgn_base(opt);
    SweepRequest gauss = uni;
    // Uniform on +/-25 ps has variance 625/3 ps^2 (about 208.3 ps^2).
    gauss.base_cfg.tx_jitter = TruncatedGaussianJitter{std::sqrt(625.0 / 3.0) * 1e-12, 0.0, {}};
    return {{"fig6-uniform", detail::all_modes(uni)}, {"fig6-gaussian", detail::all_modes(gauss)}};
  }
  if (name == "fig7") {
    SweepRequest base = detail::awgn_base(opt);
    base.base_cfg.interferer_energies.assign(9, 5.0);
    base.base_cfg.noise_psd = 0.01;
    base.base_cfg.tx_jitter = UniformJitter{20e-12, 0.0};
    base.base_cfg.coding = Coding::coded;
    base.base_cfg.sync = Sync::symbol;
    MultipathSpec mp;
    mp.channel = MultipathChannel::chip_spaced(reference_channel_gains(), base.pulse.chip_duration());
    base.factorizations = power_of_two_factorizations(512, mp.channel.span_chips);
    Experiment e{"fig7", {}};
    for (TemplateCase c : {TemplateCase::case1, TemplateCase::case2}) {
      mp.template_case = {c, UniformJitter{20e-12, 0.0}};
      Series ser{base, to_string(c)};
      ser.request.multipath = mp;
      e.series.push_back(std::move(ser));
    }
    return {e};
  }
  throw ConfigError("unknown preset '" + name + "' (expected fig4, fig5, fig6, fig7 or custom)");
}

// ---------------------------------------------------------------------------
// Config files
// ---------------------------------------------------------------------------

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

inline double number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("config: '" + key + "' must be a number");
  return j.get<double>();
}

inline std::int64_t integer(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw ConfigError("config: '" + key + "' must be an integer");
  return j.get<std::int64_t>();
}

inline std::vector<double> numbers(const json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError("config: '" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(number(v, key));
  return out;
}

inline std::vector<std::string> words(const json& j, const std::string& key) {
  std::vector<std::string> out;
  if (j.is_string()) {
    out.push_back(j.get<std::string>());
  } else if (j.is_array()) {
    for (const auto& v : j) {
      if (!v.is_string()) throw ConfigError("config: '" + key + "' entries must be strings");
      out.push_back(v.get<std::string>());
    }
  } else {
    throw ConfigError("config: '" + key + "' must be a string or an array of strings");
  }
  if (out.empty()) throw ConfigError("config: '" + key + "' must not be empty");
  return out;
}

inline JitterSpec parse_jitter(const json& j, const std::string& where) {
  check_keys(j, {"family", "half_width", "std_dev", "truncation", "mean"}, where);
  if (!j.contains("family") || !j["family"].is_string()) {
    throw ConfigError(where + ": 'family' must be one of none, uniform, truncated_gaussian");
  }
  const std::string fam = j["family"].get<std::string>();
  const double mean = j.contains("mean") ? number(j["mean"], where + ".mean") : 0.0;
  if (fam == "none") return NoJitter{mean};
  if (fam == "uniform") {
    if (!j.contains("half_width")) throw ConfigError(where + ": uniform requires 'half_width'");
    return UniformJitter{number(j["half_width"], where + ".half_width"), mean};
  }
  if (fam == "truncated_gaussian") {
    if (!j.contains("std_dev")) throw ConfigError(where + ": truncated_gaussian requires 'std_dev'");
    TruncatedGaussianJitter g{number(j["std_dev"], where + ".std_dev"), mean, {}};
    if (j.contains("truncation")) g.truncation = number(j["truncation"], where + ".truncation");
    return g;
  }
  throw ConfigError(where + ": unknown jitter family '" + fam + "'");
}

inline Coding parse_coding(const std::string& s) {
  if (s == "coded") return Coding::coded;
  if (s == "uncoded") return Coding::uncoded;
  throw ConfigError("config: coding must be 'coded' or 'uncoded'");
}

inline Sync parse_sync(const std::string& s) {
  if (s == "symbol") return Sync::symbol;
  if (s == "chip") return Sync::chip;
  throw ConfigError("config: sync must be 'symbol' or 'chip'");
}

inline TemplateCase parse_case(const std::string& s) {
  if (s == "case1") return TemplateCase::case1;
  if (s == "case2") return TemplateCase::case2;
  if (s == "case3") return TemplateCase::case3;
  throw ConfigError("config: template_case must be case1, case2 or case3");
}

}  // namespace detail

/// Builds the custom experiment from a JSON document whose keys mirror SystemConfig.
inline Experiment parse_config(const nlohmann::json& j, const Options& opt) {
  using nlohmann::json;
  using detail::integer;
  using detail::number;
  detail::check_keys(j,
                     {"label", "total_gain", "frames_per_symbol", "desired_energy",
                      "interferer_energies", "num_users", "interferer_energy", "noise_psd",
                      "coding", "sync", "tx_jitter", "tau", "chip_duration", "multipath",
                      "quadrature_nodes"},
                     "config");
  SweepRequest req;
  const double tau = j.contains("tau") ? number(j["tau"], "tau") : 0.125e-9;
  const double tc = j.contains("chip_duration") ? number(j["chip_duration"], "chip_duration") : 0.25e-9;
  try {
    req.pulse = PulseModel(tau, tc);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.contains("total_gain")) throw ConfigError("config: 'total_gain' (N) is required");
  const std::int64_t n = integer(j["total_gain"], "total_gain");
  if (n < 1 || n > (std::int64_t{1} << 30)) throw ConfigError("config: N must be a positive integer");
  SystemConfig& cfg = req.base_cfg;
  cfg.total_gain = static_cast<int>(n);
  cfg.desired_energy = j.contains("desired_energy") ? number(j["desired_energy"], "desired_energy") : 1.0;
  if (j.contains("interferer_energies")) {
    if (j.contains("num_users") || j.contains("interferer_energy")) {
      throw ConfigError("config: give either 'interferer_energies' or 'num_users'/'interferer_energy'");
    }
    cfg.interferer_energies = detail::numbers(j["interferer_energies"], "interferer_energies");
  } else {
    const std::int64_t nu = j.contains("num_users") ? integer(j["num_users"], "num_users") : 1;
    if (nu < 1) throw ConfigError("config: N_u must be >= 1");
    const double e = j.contains("interferer_energy") ? number(j["interferer_energy"], "interferer_energy") : 1.0;
    cfg.interferer_energies.assign(static_cast<std::size_t>(nu - 1), e);
  }
  cfg.noise_psd = j.contains("noise_psd") ? number(j["noise_psd"], "noise_psd") : 0.0;
  cfg.tx_jitter = j.contains("tx_jitter") ? detail::parse_jitter(j["tx_jitter"], "tx_jitter") : NoJitter{};

  if (j.contains("frames_per_symbol")) {
    const json& f = j["frames_per_symbol"];
    std::vector<std::int64_t> nfs;
    if (f.is_array()) {
      for (const auto& v : f) nfs.push_back(integer(v, "frames_per_symbol"));
    } else {
      nfs.push_back(integer(f, "frames_per_symbol"));
    }
    if (nfs.empty()) throw ConfigError("config: 'frames_per_symbol' must not be empty");
    for (auto nf : nfs) {
      if (nf < 1 || n % nf != 0) throw ConfigError("config: N = N_f * N_c violated for N_f = " + std::to_string(nf));
      req.factorizations.push_back({static_cast<int>(nf), static_cast<int>(n / nf)});
    }
  } else {
    req.factorizations = power_of_two_factorizations(cfg.total_gain);
  }
  if (j.contains("quadrature_nodes")) {
    const auto q = integer(j["quadrature_nodes"], "quadrature_nodes");
    if (q < 1 || q > 4096) throw ConfigError("config: quadrature_nodes must be in [1, 4096]");
    req.quadrature_nodes = static_cast<int>(q);
  }
  req.analytic = opt.analytic;
  req.monte_carlo = opt.monte_carlo;
  req.mc_symbols = opt.symbols;
  req.seed = opt.seed;
  req.num_partitions = kDefaultPartitions;
  req.workers = opt.workers;

  std::vector<TemplateCase> cases;
  if (j.contains("multipath")) {
    const json& m = j["multipath"];
    detail::check_keys(m, {"gains", "delays", "rake_weights", "template_case", "template_jitter"},
                       "multipath");
    if (!m.contains("gains")) throw ConfigError("multipath: 'gains' is required");
    MultipathSpec mp;
    try {
      auto gains = detail::numbers(m["gains"], "multipath.gains");
      mp.channel = m.contains("delays")
                       ? MultipathChannel::make(gains, detail::numbers(m["delays"], "multipath.delays"), tc)
                       : MultipathChannel::chip_spaced(gains, tc);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (m.contains("rake_weights")) mp.rake_weights = detail::numbers(m["rake_weights"], "multipath.rake_weights");
    mp.template_case.spec = m.contains("template_jitter")
                                ? detail::parse_jitter(m["template_jitter"], "multipath.template_jitter")
                                : JitterSpec{NoJitter{}};
    for (const auto& c : detail::words(m.contains("template_case") ? m["template_case"] : json("case2"),
                                       "template_case")) {
      cases.push_back(detail::parse_case(c));
    }
    req.multipath = mp;
  }

  Experiment e;
  e.label = "custom";
  if (j.contains("label")) {
    if (!j["label"].is_string() || j["label"].get<std::string>().empty()) {
      throw ConfigError("config: 'label' must be a nonempty string");
    }
    e.label = j["label"].get<std::string>();
  }
  const auto codings = detail::words(j.contains("coding") ? j["coding"] : json("coded"), "coding");
  const auto syncs = detail::words(j.contains("sync") ? j["sync"] : json("symbol"), "sync");
  for (const auto& c : codings) {
    for (const auto& s : syncs) {
      if (cases.empty()) {
        Series ser{req, ""};
        ser.request.base_cfg.coding = detail::parse_coding(c);
        ser.request.base_cfg.sync = detail::parse_sync(s);
        e.series.push_back(std::move(ser));
      }
      for (TemplateCase tc_id : cases) {
        Series ser{req, to_string(tc_id)};
        ser.request.base_cfg.coding = detail::parse_coding(c);
        ser.request.base_cfg.sync = detail::parse_sync(s);
        ser.request.multipath->template_case.id = tc_id;
        e.series.push_back(std::move(ser));
      }
    }
  }
  for (const auto& ser : e.series) {
    for (const auto& f : ser.request.factorizations) {
      ser.request.base_cfg.with_frames(f.frames_per_symbol).validate();
    }
    validate_jitter(ser.request.base_cfg.tx_jitter, ser.request.pulse);
    if (ser.request.multipath) {
      validate_jitter(ser.request.multipath->template_case.spec, ser.request.pulse);
      for (const auto& f : ser.request.factorizations) {
        if (ser.request.multipath->channel.span_chips > f.chips_per_frame) {
          throw ConfigError("config: M <= N_c violated for N_f = " + std::to_string(f.frames_per_symbol));
        }
      }
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.8e", v);
  return buf;
}

inline void write_rows(std::ostream& os, const std::string& label, const Series& ser,
                       const BepCurve& curve, const Options& opt) {
  const SystemConfig& cfg = ser.request.base_cfg;
  for (const auto& pt : curve.points) {
    os << label << ',' << to_string(cfg.coding) << ',' << to_string(cfg.sync) << ','
       << ser.case_label << ',' << cfg.total_gain << ',' << pt.split.frames_per_symbol << ','
       << pt.split.chips_per_frame << ',';
    if (pt.analytic) os << format_number(pt.analytic->bep);
    os << ',';
    if (pt.mc) os << format_number(pt.mc->bep_hat);
    os << ',';
    if (pt.mc) os << format_number(pt.mc->std_err);
    os << ',';
    if (pt.analytic) os << format_number(pt.analytic->terms.jitter_term);
    os << ',';
    if (pt.analytic) os << format_number(pt.analytic->terms.mai_term);
    os << ',';
    if (pt.analytic && pt.analytic->terms.ifi_term) os << format_number(*pt.analytic->terms.ifi_term);
    os << ',';
    if (pt.analytic) os << format_number(pt.analytic->terms.noise_term);
    os << ',';
    if (pt.mc) os << opt.seed;
    os << ',';
    if (pt.mc) os << pt.mc->symbols;
    os << '\n';
  }
}

/// Runs every series of an experiment and renders its CSV.
inline std::string run_experiment(const Experiment& e, const Options& opt, std::ostream& err) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& ser : e.series) {
    BepCurve curve;
    try {
      curve = sweep(ser.request);
    } catch (const UnsupportedAnalytic& ex) {
      err << "warning: " << e.label << " " << to_string(ser.request.base_cfg.coding) << "/"
          << to_string(ser.request.base_cfg.sync)
          << (ser.case_label.empty() ? "" : "/" + ser.case_label) << ": " << ex.what()
          << "; analytic column left empty\n";
      if (ser.request.monte_carlo) {
        SweepRequest mc_only = ser.request;
        mc_only.analytic = false;
        curve = sweep(mc_only);
      } else {
        auto splits = ser.request.factorizations;
        std::sort(splits.begin(), splits.end(), [](const auto& a, const auto& b) {
          return a.frames_per_symbol < b.frames_per_symbol;
        });
        for (const auto& f : splits) curve.points.push_back({f, std::nullopt, std::nullopt, 0});
      }
    }
    write_rows(os, e.label, ser, curve, opt);
  }
  return os.str();
}

inline std::string output_path(const std::string& out, const std::string& label, bool single) {
  if (single) return out;
  const std::filesystem::path p(out);
  std::filesystem::path name = p.stem();
  name += "-" + label;
  name += p.extension();
  return (p.parent_path() / name).string();
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Parses arguments, runs the selected experiments and writes CSV. Returns the
/// process exit status: 0 on success, 1 on invalid configuration or I/O errors.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Processing-gain trade-off for time-hopping impulse-radio UWB links"};
  Options opt;
  std::string evaluators = "analytic";
  app.add_option("--preset", opt.preset, "fig4, fig5, fig6, fig7 or custom")->capture_default_str();
  app.add_option("--config", opt.config_path, "JSON configuration for --preset custom");
  app.add_option("--evaluators", evaluators, "Comma-separated subset of analytic,mc")
      ->capture_default_str();
  app.add_option("--symbols", opt.symbols, "Monte Carlo symbols per point")->capture_default_str();
  app.add_option("--seed", opt.seed, "Master seed")->capture_default_str();
  app.add_option("--workers", opt.workers, "Monte Carlo worker threads")->capture_default_str();
  app.add_option("--out", opt.out, "Output CSV path (stdout when omitted)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    opt.analytic = false;
    opt.monte_carlo = false;
    std::stringstream ss(evaluators);
    for (std::string item; std::getline(ss, item, ',');) {
      if (item == "analytic") {
        opt.analytic = true;
      } else if (item == "mc" || item == "monte_carlo") {
        opt.monte_carlo = true;
      } else {
        throw ConfigError("--evaluators: unknown evaluator '" + item + "' (expected analytic, mc)");
      }
    }
    if (!opt.analytic && !opt.monte_carlo) throw ConfigError("--evaluators: at least one evaluator is required");
    if (opt.monte_carlo && opt.symbols < 1) throw ConfigError("--symbols: num_symbols must be >= 1");
    if (opt.workers < 1) throw ConfigError("--workers: must be >= 1");

    std::vector<Experiment> experiments;
    if (opt.preset == "custom") {
      if (opt.config_path.empty()) throw ConfigError("--preset custom requires --config");
      std::ifstream in(opt.config_path);
      if (!in) throw ConfigError("--config: cannot open '" + opt.config_path + "'");
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("--config: ") + e.what());
      }
      experiments.push_back(parse_config(j, opt));
    } else {
      if (!opt.config_path.empty()) throw ConfigError("--config applies only to --preset custom");
      experiments = make_preset(opt.preset, opt);
    }

    const bool single = experiments.size() == 1;
    for (const auto& e : experiments) {
      const std::string csv = run_experiment(e, opt, err);
      if (opt.out.empty()) {
        out << csv;
      } else {
        const std::string path = output_path(opt.out, e.label, single);
        std::ofstream f(path, std::ios::binary);
        if (!f || !(f << csv) || !f.flush()) {
          err << "error: cannot write '" << path << "'\n";
          return 1;
        }
      }
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace uwbtrade::cli
