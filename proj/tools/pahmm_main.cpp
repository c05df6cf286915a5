#include <CLI11.hpp>

#include "pahmm/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bayesian (non-)homogeneous HMMs for wearable activity series"};
  app.require_subcommand(1);
  app.fallthrough();  // global --seed/--jobs/--config may follow the subcommand

  std::uint64_t master_seed = 0;
  bool have_seed = false;
  int jobs = 1;
  std::string config_path;
  app.add_option("--seed", master_seed, "master seed for all stochastic sub-runs")
      ->each([&](const std::string&) { have_seed = true; });
  app.add_option("--jobs", jobs, "parallel jobs for fan-out commands");
  app.add_option("--config", config_path, "key = value configuration file");

  pahmm::cli::PreprocessArgs pre;
  auto* c_pre = app.add_subcommand("preprocess",
                                   "minute CSV -> quarter-hour CSV + report");
  c_pre->add_option("--input", pre.input, "minute-level CSV")->required();
  c_pre->add_option("--output", pre.output, "quarter-hour CSV")->required();
  c_pre->add_option("--report", pre.report, "report path (default <output>.report.txt)");
  c_pre->add_option("--window-len", pre.window_len, "nonwear window, minutes");
  c_pre->add_option("--spike-tolerance", pre.spike_tolerance,
                    "interior active spells tolerated per nonwear run");
  c_pre->add_option("--min-hours", pre.min_hours, "observed hours to keep a day");
  c_pre->add_option("--min-days", pre.min_days, "days required for eligibility");
  c_pre->add_flag("--mean-times-15", pre.mean_times_15,
                  "aggregate as (mean x 15) instead of (sum x 15 / n)");

  pahmm::cli::FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "run the Gibbs sampler on one series");
  c_fit->add_option("--data", fit.data, "quarter-hour CSV")->required();
  c_fit->add_option("--model", fit.model, "nhmm or hmm")->required();
  c_fit->add_option("--out", fit.out, "draws NDJSON path")->required();
  c_fit->add_flag("--quiet", fit.quiet, "suppress progress output");

  pahmm::cli::SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "materialize scenario datasets");
  c_sim->add_option("--scenarios", sim.scenarios, "scenario NDJSON")->required();
  c_sim->add_option("--out", sim.out_dir, "output directory")->required();

  pahmm::cli::EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "metric tables against truth");
  c_ev->add_option("--truth", ev.truth, "truth.csv")->required();
  c_ev->add_option("--scenario", ev.scenario, "scenario.json (enables Q metrics)");
  c_ev->add_option("--draws", ev.draws, "draws NDJSON (repeatable)")->required();
  c_ev->add_option("--out", ev.out, "tidy metrics CSV")->required();
  c_ev->add_option("--patient", ev.patient, "patient label");

  pahmm::cli::SummarizeArgs sum;
  auto* c_sum = app.add_subcommand("summarize", "physical-activity summaries");
  c_sum->add_option("--draws", sum.draws, "draws NDJSON")->required();
  c_sum->add_option("--data", sum.data, "quarter-hour CSV")->required();
  c_sum->add_option("--out", sum.out, "summary text file")->required();
  c_sum->add_option("--night-start", sum.night_start, "night window start hour");
  c_sum->add_option("--night-end", sum.night_end, "night window end hour");

  pahmm::cli::DiagnoseArgs dia;
  auto* c_dia = app.add_subcommand("diagnose", "trace export + effective sample size");
  c_dia->add_option("--draws", dia.draws, "draws NDJSON")->required();
  c_dia->add_option("--out", dia.out, "trace CSV")->required();

  CLI11_PARSE(app, argc, argv);

  if (c_pre->parsed()) return pahmm::cli::cmd_preprocess(pre);
  if (c_fit->parsed()) {
    fit.config = config_path;
    if (have_seed) fit.seed = master_seed;
    return pahmm::cli::cmd_fit(fit);
  }
  if (c_sim->parsed()) {
    sim.jobs = jobs;
    return pahmm::cli::cmd_simulate(sim);
  }
  if (c_ev->parsed()) return pahmm::cli::cmd_evaluate(ev);
  if (c_sum->parsed()) return pahmm::cli::cmd_summarize(sum);
  if (c_dia->parsed()) return pahmm::cli::cmd_diagnose(dia);
  return 1;
}
