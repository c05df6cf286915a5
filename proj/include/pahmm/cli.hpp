#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pahmm/design.hpp"
#include "pahmm/evaluate.hpp"
#include "pahmm/io.hpp"
#include "pahmm/preprocess.hpp"
#include "pahmm/sampler.hpp"
#include "pahmm/simulate.hpp"

namespace pahmm::cli {

namespace fs = std::filesystem;

struct PreprocessArgs {
  std::string input;
  std::string output;
  std::string report;  // empty: output + ".report.txt"
  int window_len = 90;
  int spike_tolerance = 2;
  double min_hours = 5.0;
  int window_start_min = 8 * 60;
  int window_end_min = 20 * 60;
  int min_days = 30;
  bool mean_times_15 = false;
};

inline int cmd_preprocess(const PreprocessArgs& a) {
  try {
    const MinuteSeries minutes = read_minute_csv(a.input);
    const auto wear = detect_nonwear(minutes, a.window_len, a.spike_tolerance);
    const PatientSeries quarter =
        aggregate_15min(minutes, wear, 10, a.mean_times_15);
    const DayFilterResult filtered = filter_days(
        quarter, a.min_hours, a.window_start_min, a.window_end_min);
    const bool eligible =
        check_eligibility(filtered.retained_days.size(),
                          static_cast<std::size_t>(a.min_days));
    write_quarter_csv(a.output, filtered.series);
    const std::string report_path =
        a.report.empty() ? a.output + ".report.txt" : a.report;
    auto rep = io_detail::open_out(report_path);
    std::size_t nonwear_minutes = 0;
    for (auto w : wear) nonwear_minutes += w;
    rep << "input_minutes=" << minutes.rows() << '\n'
        << "nonwear_minutes=" << nonwear_minutes << '\n'
        << "quarter_rows=" << quarter.rows() << '\n'
        << "retained_rows=" << filtered.series.rows() << '\n'
        << "missing_rate="
        << io_detail::fmt_fixed(
               filtered.series.rows()
                   ? static_cast<double>(filtered.series.n_masked()) /
                         filtered.series.rows()
                   : 0.0)
        << '\n'
        << "retained_days=" << filtered.retained_days.size() << '\n'
        << "dropped_days=" << filtered.dropped_days.size() << '\n'
        << "eligible=" << (eligible ? "yes" : "no") << '\n';
    if (filtered.series.rows() == 0)
      std::fprintf(stderr, "warning: no rows survived day filtering\n");
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "preprocess: error: %s\n", e.what());
    return 1;
  }
}

struct FitArgs {
  std::string data;
  std::string out;
  std::string model = "nhmm";  // nhmm | hmm
  std::string config;          // empty: defaults
  std::optional<std::uint64_t> seed;  // master seed override
  bool quiet = false;
};

inline int cmd_fit(const FitArgs& a) {
  try {
    if (a.model != "nhmm" && a.model != "hmm")
      throw std::runtime_error("model must be nhmm or hmm");
    const PatientSeries series = read_quarter_csv(a.data);
    ModelConfig cfg;
    if (!a.config.empty()) cfg = config_from_kv(parse_kv_config(a.config));
    const std::uint64_t master = a.seed.value_or(cfg.seed);
    cfg.seed = derive_seed(master, "fit-" + a.model, 0);
    cfg.validate();

    Rng rng(cfg.seed);
    const auto t0 = std::chrono::steady_clock::now();
    PosteriorDraws draws;
    if (a.model == "nhmm") {
      int baseline = cfg.baseline_hour;
      if (baseline < 0) {
        Rng probe(derive_seed(master, "baseline-probe", 0));
        baseline = choose_baseline_hour(series, cfg.K, probe);
      }
      const DesignMatrix design = build_design_matrix(series.t_min, baseline);
      draws = run_nhmm(series, design, cfg, rng);
    } else {
      draws = run_hmm(series, cfg, rng);
    }
    const auto t1 = std::chrono::steady_clock::now();
    write_draws_ndjson(a.out, draws);

    const double secs = std::chrono::duration<double>(t1 - t0).count();
    const int total = cfg.init_iters + cfg.burn_iters + cfg.iters;
    auto log = io_detail::open_out(a.out + ".log");
    log << "model=" << a.model << "\nsweeps=" << total
        << "\nseconds=" << io_detail::fmt_fixed(secs, 2) << "\nsweeps_per_sec="
        << io_detail::fmt_fixed(secs > 0 ? total / secs : 0.0, 1) << '\n';
    if (!a.quiet)
      std::fprintf(stderr, "fit %s: %d sweeps in %.1fs (%.1f/s), %zu draws -> %s\n",
                   a.model.c_str(), total, secs, secs > 0 ? total / secs : 0.0,
                   draws.n_draws(), a.out.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fit: error: %s\n", e.what());
    return 1;
  }
}

struct SimulateArgs {
  std::string scenarios;
  std::string out_dir;
  int jobs = 1;
};

inline int cmd_simulate(const SimulateArgs& a) {
  try {
    const auto cells = read_scenarios(a.scenarios);
    if (cells.empty()) throw std::runtime_error("no scenarios in " + a.scenarios);
    fs::create_directories(a.out_dir);
    std::vector<std::string> errors(cells.size());
    auto run_cell = [&](std::size_t idx) {
      try {
        const Scenario& s = cells[idx];
        char name[64];
        std::snprintf(name, sizeof(name), "cell_%03zu_g%.2f_n%.2f", idx, s.gamma,
                      s.nu);
        const fs::path dir = fs::path(a.out_dir) / name;
        fs::create_directories(dir);
        DynamicsSpec dyn = dynamics_profile(s.nu, s.T);
        MissingnessSpec miss = missingness_profile(s.profile, s.gamma);
        Rng rng(derive_seed(s.seed, "simulate-cell", idx));
        const SimulatedTruth truth =
            gen_synthetic(dyn, days_from_civil(2024, 1, 1) * 1440, rng);
        const MaskedDataset masked = impose_missingness(truth.series, miss, rng);
        write_quarter_csv((dir / "data.csv").string(), masked.series);
        write_truth_csv((dir / "truth.csv").string(), truth, masked);
        write_scenario_json((dir / "scenario.json").string(), cells[idx]);
      } catch (const std::exception& e) {
        errors[idx] = e.what();
      }
    };
    if (a.jobs <= 1) {
      for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
    } else {
      std::vector<std::thread> pool;
      std::atomic<std::size_t> next{0};
      for (int w = 0; w < a.jobs; ++w)
        pool.emplace_back([&] {
          for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            run_cell(i);
          }
        });
      for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (!errors[i].empty())
        throw std::runtime_error("cell " + std::to_string(i) + ": " + errors[i]);
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "simulate: error: %s\n", e.what());
    return 1;
  }
}

struct EvaluateArgs {
  std::string truth;
  std::string scenario;  // optional; enables transition/marginal metrics
  std::vector<std::string> draws;
  std::string out;
  std::string patient = "sim";
};

inline int cmd_evaluate(const EvaluateArgs& a) {
  try {
    const TruthFile truth = read_truth_csv(a.truth);
    std::vector<Mat> q_true;
    if (!a.scenario.empty()) {
      const Scenario s = read_scenario_json(a.scenario);
      q_true = dynamics_profile(s.nu, s.T).hourly_q();
    }
    std::vector<MetricRow> rows;
    std::map<std::string, std::vector<std::vector<double>>> rmse_by_model;
    for (const auto& path : a.draws) {
      PosteriorDraws draws = read_draws_ndjson(path);
      relabel_draws_by_step_mean(draws);
      if (truth.t_min.size() != draws.T)
        throw std::runtime_error(path + ": truth length does not match draws");
      std::vector<double> y_true_masked;
      for (auto r : draws.masked_rows) {
        if (!truth.masked[r])
          throw std::runtime_error(path + ": masked row " + std::to_string(r) +
                                   " not marked in truth file");
        for (int c = 0; c < draws.d; ++c)
          y_true_masked.push_back(truth.y_true[r * draws.d + c]);
      }
      const auto rmse = rmse_imputation(y_true_masked, draws);
      rmse_by_model[draws.model] = rmse;
      const char* ch_names[2] = {"rmse_hr", "rmse_steps"};
      for (int c = 0; c < draws.d && c < 2; ++c)
        for (std::size_t i = 0; i < rmse[c].size(); ++i)
          rows.push_back({a.patient, draws.model, ch_names[c],
                          static_cast<long>(i), rmse[c][i]});
      const StateAccuracy acc = state_accuracy(truth.z_true, draws);
      rows.push_back({a.patient, draws.model, "state_accuracy", -1, acc.overall});
      rows.push_back(
          {a.patient, draws.model, "state_accuracy_masked", -1, acc.masked_only});
      const HourlyMarginals est = hourly_marginals(draws, truth.t_min);
      const HourlyMarginals ref =
          hourly_marginals_path(truth.z_true, truth.t_min, draws.K);
      rows.push_back({a.patient, draws.model, "marginal_distance", -1,
                      marginal_distance(est, ref)});
      rows.push_back({a.patient, draws.model, "routine_strength", -1,
                      routine_strength(est)});
      if (!q_true.empty()) {
        const auto q_est = posterior_mean_hourly_q(draws);
        rows.push_back({a.patient, draws.model, "frobenius_avg", -1,
                        frobenius_avg(q_true, q_est)});
      }
    }
    // Paired per-draw RMSE difference (hmm - nhmm), reported as posterior
    // median with a 90% interval when both models were evaluated.
    if (rmse_by_model.count("hmm") && rmse_by_model.count("nhmm")) {
      const auto& h = rmse_by_model["hmm"];
      const auto& n = rmse_by_model["nhmm"];
      const char* ch_names[2] = {"rmse_hr_diff", "rmse_steps_diff"};
      for (std::size_t c = 0; c < h.size() && c < 2; ++c) {
        const std::size_t m = std::min(h[c].size(), n[c].size());
        std::vector<double> diff(m);
        for (std::size_t i = 0; i < m; ++i) diff[i] = h[c][i] - n[c][i];
        const QuantileSummary q = summarize90(diff);
        rows.push_back({a.patient, "hmm-nhmm", std::string(ch_names[c]) + "_median",
                        -1, q.median});
        rows.push_back({a.patient, "hmm-nhmm", std::string(ch_names[c]) + "_lo90",
                        -1, q.lo90});
        rows.push_back({a.patient, "hmm-nhmm", std::string(ch_names[c]) + "_hi90",
                        -1, q.hi90});
      }
    }
    write_metrics_csv(a.out, rows);
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "evaluate: error: %s\n", e.what());
    return 1;
  }
}

struct SummarizeArgs {
  std::string draws;
  std::string data;
  std::string out;
  int night_start = 22;
  int night_end = 8;
};

inline int cmd_summarize(const SummarizeArgs& a) {
  try {
    PosteriorDraws draws = read_draws_ndjson(a.draws);
    relabel_draws_by_step_mean(draws);
    const PatientSeries series = read_quarter_csv(a.data);
    const ActivitySummaries s =
        activity_summaries(draws, series, a.night_start, a.night_end);
    auto f = io_detail::open_out(a.out);
    auto line = [&](const char* name, const std::vector<double>& v, double raw,
                    bool has_raw) {
      std::vector<double> clean;
      for (double x : v)
        if (std::isfinite(x)) clean.push_back(x);
      if (clean.empty()) {
        f << name << ": undefined\n";
        return;
      }
      const QuantileSummary q = summarize90(clean);
      char buf[160];
      if (has_raw)
        std::snprintf(buf, sizeof(buf),
                      "%-22s median %10.3f   90%% [%10.3f, %10.3f]   raw %10.3f\n",
                      name, q.median, q.lo90, q.hi90, raw);
      else
        std::snprintf(buf, sizeof(buf),
                      "%-22s median %10.3f   90%% [%10.3f, %10.3f]\n", name,
                      q.median, q.lo90, q.hi90);
      f << buf;
    };
    f << "days=" << s.n_days << "  draws=" << draws.n_draws() << "  model="
      << draws.model << '\n';
    line("daily_steps", s.daily_steps, s.raw_daily_steps, true);
    line("hr_per_min", s.hr_per_min, s.raw_hr_per_min, true);
    line("prob_sedentary", s.prob_sedentary, 0.0, false);
    line("night_bout_qh", s.night_bout_len, 0.0, false);

    // State-membership probability by clock hour.
    const HourlyMarginals hm = hourly_marginals(draws, series.t_min);
    f << "\nmarginal probability of state membership by hour\n      ";
    for (int h = 0; h < 24; ++h) {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "%5d", h);
      f << buf;
    }
    f << '\n';
    for (int k = 0; k < hm.states(); ++k) {
      char head[16];
      std::snprintf(head, sizeof(head), "z=%-4d", k + 1);
      f << head;
      for (int h = 0; h < 24; ++h) {
        char buf[8];
        if (hm.defined[h])
          std::snprintf(buf, sizeof(buf), "%5.2f", hm.prob(k, h));
        else
          std::snprintf(buf, sizeof(buf), "%5s", "-");
        f << buf;
      }
      f << '\n';
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "summarize: error: %s\n", e.what());
    return 1;
  }
}

struct DiagnoseArgs {
  std::string draws;
  std::string out;  // trace CSV
};

inline int cmd_diagnose(const DiagnoseArgs& a) {
  try {
    const PosteriorDraws draws = read_draws_ndjson(a.draws);
    if (draws.n_draws() < 100)
      throw std::runtime_error("diagnostics need at least 100 saved draws");
    const auto traces = parameter_traces(draws);
    auto f = io_detail::open_out(a.out);
    f << "param,draw,value\n";
    for (const auto& tr : traces)
      for (std::size_t i = 0; i < tr.values.size(); ++i)
        f << tr.name << ',' << i << ',' << io_detail::fmt_fixed(tr.values[i], 6)
          << '\n';
    std::printf("%-16s %12s %s\n", "param", "ess", "flag");
    for (const auto& tr : traces) {
      const EssResult e = effective_sample_size(tr.values);
      std::printf("%-16s %12.1f %s\n", tr.name.c_str(), e.ess,
                  e.degenerate ? "degenerate" : "");
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "diagnose: error: %s\n", e.what());
    return 1;
  }
}

}  // namespace pahmm::cli
