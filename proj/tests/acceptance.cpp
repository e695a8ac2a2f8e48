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


// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "test_support.hpp"
#include "uwbtrade/cli.hpp"
#include "uwbtrade/enumerate.hpp"
#include "uwbtrade/tradeoff.hpp"

using namespace uwbtrade;
using testing::Accumulator;
using testing::reference_pulse;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("criterion %2d: %s  %s [%s]\n", id, pass ? "PASS" : "FAIL", what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

const JitterSpec kUniform25 = UniformJitter{25e-12, 0.0};

SweepRequest fig4(Coding c, Sync s) {
  SweepRequest req;
  req.base_cfg.total_gain = 512;
  req.base_cfg.interferer_energies.assign(9, 1.0);
  req.base_cfg.noise_psd = 0.1;
  req.base_cfg.coding = c;
  req.base_cfg.sync = s;
  req.base_cfg.tx_jitter = kUniform25;
  req.factorizations = power_of_two_factorizations(512);
  req.workers = workers();
  return req;
}

double combined_se(const McEstimate& a, const McEstimate& b) {
  return std::sqrt(a.std_err * a.std_err + b.std_err * b.std_err);
}

void criterion1() {
  SweepRequest req = fig4(Coding::coded, Sync::symbol);
  req.factorizations = {{16, 32}, {64, 8}, {256, 2}};
  req.monte_carlo = true;
  req.mc_symbols = 1000000;
  req.seed = 101;
  const BepCurve c = sweep(req);
  bool pass = true;
  std::ostringstream d;
  for (const auto& p : c.points) {
    const double a = p.analytic->bep;
    const double tol = std::max(3.0 * p.mc->std_err, 0.2 * a);
    pass = pass && std::abs(p.mc->bep_hat - a) <= tol;
    d << "N_f=" << p.split.frames_per_symbol << " mc=" << fmt("%.4e", p.mc->bep_hat)
      << " an=" << fmt("%.4e", a) << " tol=" << fmt("%.1e", tol) << "; ";
  }
  report(1, pass, "coded AWGN analytic vs MC (1e6 symbols)", d.str());
}

void criterion2() {
  SweepRequest req = fig4(Coding::coded, Sync::symbol);
  req.monte_carlo = true;
  req.mc_symbols = 50000;
  req.seed = 202;
  const BepCurve c = sweep(req);
  bool exact = true;
  bool mc = true;
  std::ostringstream d;
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    const auto& prev = c.points[i - 1];
    const auto& cur = c.points[i];
    exact = exact && cur.analytic->bep <= prev.analytic->bep;
    const double slack = 2.0 * combined_se(*prev.mc, *cur.mc);
    if (cur.mc->bep_hat > prev.mc->bep_hat + slack) {
      mc = false;
      d << "MC rise at N_f=" << cur.split.frames_per_symbol << "; ";
    }
  }
  d << "analytic " << fmt("%.4e", c.points.front().analytic->bep) << " -> "
    << fmt("%.4e", c.points.back().analytic->bep) << ", MC " << fmt("%.4e", c.points.front().mc->bep_hat)
    << " -> " << fmt("%.4e", c.points.back().mc->bep_hat);
  report(2, exact && mc, "coded BEP nonincreasing in N_f (analytic exact, MC 2 SE)", d.str());
}

void criterion3() {
  bool pass = true;
  std::ostringstream d;
  for (Sync s : {Sync::symbol, Sync::chip}) {
    const BepCurve c = sweep(fig4(Coding::uncoded, s));
    const int nf = c.argmin_analytic->frames_per_symbol;
    pass = pass && nf > 1 && nf < 512;
    d << to_string(s) << " argmin N_f=" << nf << "; ";
  }
  report(3, pass, "uncoded interior optimum", d.str());
}

void criterion4() {
  const JitterMoments m = compute_moments(kUniform25, reference_pulse());
  bool pass = true;
  std::ostringstream d;
  const BepCurve sym = sweep(fig4(Coding::uncoded, Sync::symbol));
  const BepCurve chip = sweep(fig4(Coding::uncoded, Sync::chip));
  for (std::size_t i = 0; i < sym.points.size(); ++i) {
    const SystemConfig cfg = fig4(Coding::uncoded, Sync::symbol).base_cfg.with_frames(
        sym.points[i].split.frames_per_symbol);
    const double vs = sigma2_mai_symbol(cfg, 1.0, m);
    const double vc = sigma2_mai_chip(cfg, 1.0, m);
    const bool eq_expected = cfg.frames_per_symbol == 1;
    pass = pass && (eq_expected ? vc == vs : vc < vs);
    pass = pass && chip.points[i].analytic->bep <= sym.points[i].analytic->bep;
  }
  d << "N_f=1 symb=chip=" << fmt("%.6e", sigma2_mai_symbol(fig4(Coding::uncoded, Sync::symbol).base_cfg.with_frames(1), 1.0, m))
    << ", N_f=8 chip/symb BEP " << fmt("%.4e", chip.points[3].analytic->bep) << "/"
    << fmt("%.4e", sym.points[3].analytic->bep);
  report(4, pass, "sync-mode ordering of MAI variance and uncoded BEP", d.str());
}

void criterion5() {
  const BepCurve a = sweep(fig4(Coding::coded, Sync::symbol));
  const BepCurve b = sweep(fig4(Coding::coded, Sync::chip));
  bool exact = true;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    exact = exact && a.points[i].analytic->bep == b.points[i].analytic->bep;
  }
  bool mc = true;
  std::ostringstream d;
  for (int nf : {16, 64}) {
    McEstimate est[2];
    int k = 0;
    for (Sync s : {Sync::symbol, Sync::chip}) {
      TrialPlan plan;
      plan.cfg = fig4(Coding::coded, s).base_cfg.with_frames(nf);
      plan.num_symbols = 200000;
      plan.seed = 500 + static_cast<std::uint64_t>(nf) + 7 * static_cast<std::uint64_t>(k);
      est[k++] = run(plan, workers());
    }
    const double diff = std::abs(est[0].bep_hat - est[1].bep_hat);
    mc = mc && diff <= 4.0 * combined_se(est[0], est[1]);
    d << "N_f=" << nf << " symb=" << fmt("%.4e", est[0].bep_hat) << " chip=" << fmt("%.4e", est[1].bep_hat)
      << " 4SE=" << fmt("%.1e", 4.0 * combined_se(est[0], est[1])) << "; ";
  }
  d << "analytic identical=" << (exact ? "yes" : "no");
  report(5, exact && mc, "coded sync invariance", d.str());
}

void criterion6() {
  const PulseModel p = reference_pulse();
  const JitterMoments m = compute_moments(NoJitter{}, p);
  // Zero-jitter MAI power per unit energy; R(T_c) of this pulse is 5.6e-4.
  const double r1 = autocorr(p, p.chip_duration());
  const double want = q_function(1.0 / std::sqrt(9.0 * (1.0 + r1 * r1) / 512.0 + 0.1));
  const double simplified = q_function(1.0 / std::sqrt(9.0 / 512.0 + 0.1));
  bool pass = true;
  double worst = 0.0;
  double first = -1.0;
  for (const auto& f : power_of_two_factorizations(512)) {
    for (Sync s : {Sync::symbol, Sync::chip}) {
      SystemConfig cfg = fig4(Coding::coded, s).base_cfg.with_frames(f.frames_per_symbol);
      cfg.tx_jitter = NoJitter{};
      const double bep = bep_coded_awgn(cfg, m).bep;
      if (first < 0.0) first = bep;
      worst = std::max(worst, std::abs(bep - first) / first);
      pass = pass && std::abs(bep - want) <= 1e-15 * want;
    }
  }
  pass = pass && worst <= 1e-15;
  report(6, pass, "zero-jitter collapse across factorizations",
         "BEP=" + fmt("%.16e", first) + " spread=" + fmt("%.1e", worst) +
             " gap to R(T_c)=0 form=" + fmt("%.1e", std::abs(first - simplified) / simplified));
}

struct LemmaCheck {
  std::string name;
  double sample;
  double target;
  double se;
  bool gated = true;
  bool ok() const { return !gated || std::abs(sample - target) <= 4.0 * se; }
};

TrialPlan two_user(int nf, Coding c, Sync s, std::uint64_t seed, std::int64_t symbols) {
  TrialPlan plan;
  plan.cfg = fig4(c, s).base_cfg;
  plan.cfg.interferer_energies = {1.0};
  plan.cfg = plan.cfg.with_frames(nf);
  plan.num_symbols = symbols;
  plan.seed = seed;
  return plan;
}

void criterion7() {
  const PulseModel p = reference_pulse();
  const JitterMoments m = compute_moments(kUniform25, p);
  std::vector<LemmaCheck> checks;

  // Coded MAI given b: zero mean and variance gamma2 N_f / N_c.
  for (int nf : {16, 32}) {
    Accumulator a;
    testing::for_each_symbol(two_user(nf, Coding::coded, Sync::symbol, 700 + nf, 100000), 100000,
                             [&](const SymbolComponents& c) { a.add(c.mai[0] * c.interferer_bits[0]); });
    const double ratio = nf / (512.0 / nf);
    checks.push_back({"L1 mean N_f=" + std::to_string(nf), a.mean, 0.0, a.mean_se()});
    checks.push_back({"L1 var N_f=" + std::to_string(nf), a.variance(), m.gamma2 * ratio, a.variance_se()});
  }
  // Uncoded symbol-synchronous MAI given b: mean (N_f / N_c) gamma1.
  {
    Accumulator a;
    testing::for_each_symbol(two_user(16, Coding::uncoded, Sync::symbol, 716, 100000), 100000,
                             [&](const SymbolComponents& c) { a.add(c.mai[0] * c.interferer_bits[0]); });
    checks.push_back({"L2 mean N_f=16", a.mean, 16.0 / 32.0 * m.gamma1, a.mean_se()});
  }
  // Overall chip-synchronous MAI variance with nine equal-energy interferers.
  {
    TrialPlan plan;
    plan.cfg = fig4(Coding::uncoded, Sync::chip).base_cfg.with_frames(16);
    plan.seed = 733;
    Accumulator a;
    testing::for_each_symbol(plan, 100000, [&](const SymbolComponents& c) {
      double s = 0.0;
      for (double x : c.mai) s += std::sqrt(1.0 / 16.0) * x;
      a.add(s);
    });
    checks.push_back({"L3 var N_f=16", a.variance(), sigma2_mai_chip(plan.cfg, 1.0, m), a.variance_se()});
  }
  // Exact enumeration on small instances against the same lemmas, with the SE
  // of a matched Monte Carlo sample.
  {
    const PulseModel pulse = reference_pulse();
    const JitterMoments m0 = compute_moments(NoJitter{}, pulse);
    auto small = [](int n, int nf, Coding c) {
      SystemConfig cfg;
      cfg.total_gain = n;
      cfg.interferer_energies = {1.0};
      cfg.noise_psd = 0.5;
      cfg.coding = c;
      return cfg.with_frames(nf);
    };
    for (auto [cfg, label] : {std::pair{small(4, 2, Coding::coded), std::string("coded N=4")},
                              std::pair{small(8, 4, Coding::uncoded), std::string("uncoded N=8")}}) {
      const EnumerationResult ex = enumerate_exact(cfg, pulse);
      TrialPlan plan;
      plan.cfg = cfg;
      plan.seed = 760;
      Accumulator a;
      testing::for_each_symbol(plan, 200000, [&](const SymbolComponents& c) { a.add(c.mai[0] * c.interferer_bits[0]); });
      const double ratio = static_cast<double>(cfg.frames_per_symbol) / cfg.chips_per_frame;
      if (cfg.coding == Coding::coded) {
        checks.push_back({"L1 exact var " + label, ex.mai_var_given_bit, m0.gamma2 * ratio, a.variance_se()});
        checks.push_back({"L1 MC var " + label, a.variance(), ex.mai_var_given_bit, a.variance_se()});
      } else {
        checks.push_back({"L2 exact mean " + label, ex.mai_mean_given_bit, ratio * m0.gamma1, a.mean_se()});
        checks.push_back({"L2 MC mean " + label, a.mean, ex.mai_mean_given_bit, a.mean_se()});
      }
    }
  }
  // Multipath IFI and MAI variances on the reference channel. IFI is gated
  // without jitter; jittered IFI gaps are reported only.
  const auto ch = MultipathChannel::chip_spaced(cli::reference_channel_gains(), p.chip_duration());
  auto mp_plan = [&](const TemplateJitterCase& tcase, const JitterSpec& tx, std::vector<double> energies,
                     std::uint64_t seed) {
    TrialPlan plan;
    plan.cfg = fig4(Coding::coded, Sync::symbol).base_cfg;
    plan.cfg.interferer_energies = std::move(energies);
    plan.cfg.noise_psd = 0.01;
    plan.cfg.tx_jitter = tx;
    plan.cfg = plan.cfg.with_frames(32);
    plan.multipath = MultipathSetup{ch, make_mrc_rake(p, ch, tcase), tcase};
    plan.seed = seed;
    return plan;
  };
  {
    const TemplateJitterCase tcase{TemplateCase::case1, NoJitter{}};
    const TrialPlan plan = mp_plan(tcase, NoJitter{}, {}, 779);
    const MultipathExpectations ex = multipath_expectations(NoJitter{}, p, ch, plan.multipath->rake, tcase);
    Accumulator ifi;
    testing::for_each_symbol(plan, 100000, [&](const SymbolComponents& c) { ifi.add(c.self_interference); });
    const double nc = plan.cfg.chips_per_frame;
    checks.push_back({"L4 IFI var no jitter", ifi.variance(), ex.sigma2_ifi / (nc * nc), ifi.variance_se()});
  }
  for (TemplateCase tc : {TemplateCase::case1, TemplateCase::case2}) {
    const TemplateJitterCase tcase{tc, UniformJitter{20e-12, 0.0}};
    const TrialPlan plan = mp_plan(tcase, UniformJitter{20e-12, 0.0}, {5.0}, 780 + static_cast<std::uint64_t>(tc));
    const MultipathExpectations ex =
        multipath_expectations(plan.cfg.tx_jitter, p, ch, plan.multipath->rake, tcase);
    Accumulator ifi, mai;
    testing::for_each_symbol(plan, 100000, [&](const SymbolComponents& c) {
      ifi.add(c.self_interference);
      mai.add(c.mai[0]);
    });
    const double nc = plan.cfg.chips_per_frame;
    const std::string name = to_string(tc);
    checks.push_back({"L4 IFI var " + name + " (info)", ifi.variance(), ex.sigma2_ifi / (nc * nc), ifi.variance_se(),
                      false});
    checks.push_back({"L5 MAI var " + name, mai.variance(), 32.0 / nc * ex.sigma2_mai, mai.variance_se()});
  }

  bool pass = true;
  std::ostringstream d;
  for (const auto& c : checks) {
    pass = pass && c.ok();
    d << c.name << ' ' << fmt("%.5g", c.sample) << " vs " << fmt("%.5g", c.target) << " ("
      << fmt("%.1f", c.se > 0 ? std::abs(c.sample - c.target) / c.se : 0.0) << " SE)"
      << (c.ok() ? "" : " !") << "; ";
  }
  report(7, pass, "lemma oracles", d.str());
}

void criterion8() {
  cli::Options opt;
  opt.monte_carlo = true;
  opt.symbols = 200000;
  opt.seed = 808;
  opt.workers = workers();
  const cli::Experiment e = cli::make_preset("fig7", opt)[0];
  std::vector<BepCurve> curves;
  for (const auto& s : e.series) {
    SweepRequest req = s.request;
    req.factorizations = {{8, 64}, {16, 32}, {32, 16}};
    curves.push_back(sweep(req));
  }
  bool order = true;
  bool match = true;
  std::ostringstream d;
  for (std::size_t i = 0; i < curves[0].points.size(); ++i) {
    const auto& c1 = curves[0].points[i];
    const auto& c2 = curves[1].points[i];
    order = order && c1.mc->bep_hat <= c2.mc->bep_hat + 2.0 * combined_se(*c1.mc, *c2.mc);
    d << "N_f=" << c1.split.frames_per_symbol << " case1 mc/an=" << fmt("%.3e", c1.mc->bep_hat) << "/"
      << fmt("%.3e", c1.analytic->bep) << " case2 mc/an=" << fmt("%.3e", c2.mc->bep_hat) << "/"
      << fmt("%.3e", c2.analytic->bep) << "; ";
    if (c1.split.frames_per_symbol >= 32) {
      for (const auto* pt : {&c1, &c2}) {
        const double tol = std::max(3.0 * pt->mc->std_err, 0.25 * pt->analytic->bep);
        match = match && std::abs(pt->mc->bep_hat - pt->analytic->bep) <= tol;
      }
    }
  }
  report(8, order && match, "multipath case ordering and analytic match", d.str());
}

void criterion9() {
  bool pass = true;
  std::ostringstream d;
  for (Coding c : {Coding::coded, Coding::uncoded}) {
    for (Sync s : {Sync::symbol, Sync::chip}) {
      SweepRequest uni = fig4(c, s);
      SweepRequest gauss = uni;
      gauss.base_cfg.tx_jitter = TruncatedGaussianJitter{std::sqrt(625.0 / 3.0) * 1e-12, 0.0, {}};
      const BepCurve u = sweep(uni);
      const BepCurve g = sweep(gauss);
      for (std::size_t i = 0; i < u.points.size(); ++i) {
        if (u.points[i].split.frames_per_symbol > 8) break;
        pass = pass && g.points[i].analytic->bep >= u.points[i].analytic->bep;
      }
      d << to_string(c) << '/' << to_string(s) << " N_f=1 " << fmt("%.4e", g.points[0].analytic->bep)
        << ">=" << fmt("%.4e", u.points[0].analytic->bep) << "; ";
    }
  }
  report(9, pass, "Gaussian jitter BEP >= uniform at N_f <= 8", d.str());
}

void criterion10() {
  const std::string path = "acceptance_reproducibility.json";
  {
    std::ofstream f(path);
    f << R"({"label": "repro", "total_gain": 512, "frames_per_symbol": [4, 16, 64],
            "num_users": 10, "interferer_energy": 1.0, "noise_psd": 0.1,
            "coding": ["coded", "uncoded"], "sync": ["symbol", "chip"],
            "tx_jitter": {"family": "uniform", "half_width": 25e-12}})";
  }
  std::vector<std::string> outs;
  bool ok = true;
  for (const char* w : {"1", "4", "16"}) {
    const char* argv[] = {"uwbtrade_cli", "--preset", "custom", "--config", path.c_str(), "--evaluators",
                          "analytic,mc", "--symbols", "4000", "--seed", "1010", "--workers", w};
    std::ostringstream out, err;
    ok = ok && cli::run_cli(13, argv, out, err) == 0;
    outs.push_back(out.str());
  }
  std::remove(path.c_str());
  const bool same = ok && outs[0] == outs[1] && outs[1] == outs[2] && !outs[0].empty();
  report(10, same, "byte-identical CSV across 1, 4, 16 workers",
         std::to_string(outs[0].size()) + " bytes, " + std::to_string(std::count(outs[0].begin(), outs[0].end(), '\n')) + " lines");
}

void guarded(int id, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(id, false, "exception", e.what());
  }
}

}  // namespace

// Runs every criterion, or only those listed as arguments.
int main(int argc, char** argv) {
  const std::vector<std::function<void()>> all = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                                  criterion6, criterion7, criterion8, criterion9, criterion10};
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty())
    for (int i = 1; i <= 10; ++i) ids.push_back(i);
  for (int id : ids) {
    if (id < 1 || id > 10) {
      std::fprintf(stderr, "unknown criterion %d\n", id);
      return 2;
    }
    guarded(id, all[id - 1]);
  }
  std::printf("%s: %d criteria failed\n", g_failures == 0 ? "ALL PASS" : "FAILURES", g_failures);
  return g_failures == 0 ? 0 : 1;
}
