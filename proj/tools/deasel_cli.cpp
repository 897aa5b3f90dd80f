// Licensed under the Apache License 2.0 (see LICENSE file).

#include <deasel/deasel.h>

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace {

struct Failure {
  int code;
};

void check(deasel_status status) {
  if (status != DEASEL_OK) {
    std::cerr << "deasel: " << deasel_last_error() << "\n";
    throw Failure{static_cast<int>(status)};
  }
}

struct DatasetDeleter {
  void operator()(deasel_dataset* d) const { deasel_dataset_free(d); }
};
struct SelectionDeleter {
  void operator()(deasel_selection* s) const { deasel_selection_free(s); }
};
struct ReportDeleter {
  void operator()(deasel_report* r) const { deasel_report_free(r); }
};
using Dataset = std::unique_ptr<deasel_dataset, DatasetDeleter>;
using Selection = std::unique_ptr<deasel_selection, SelectionDeleter>;
using Report = std::unique_ptr<deasel_report, ReportDeleter>;

std::string take(char* text) {
  std::string out(text ? text : "");
  deasel_string_free(text);
  return out;
}

Dataset load(const std::string& path) {
  deasel_dataset* d = nullptr;
  check(deasel_dataset_read_csv(path.c_str(), &d));
  return Dataset(d);
}

const std::map<std::string, deasel_rts> kRts{{"crs", DEASEL_RTS_CRS}, {"vrs", DEASEL_RTS_VRS}};
const std::map<std::string, deasel_model> kModels{
    {"ccr", DEASEL_MODEL_CCR}, {"bcc", DEASEL_MODEL_BCC}, {"additive", DEASEL_MODEL_ADDITIVE}};
const std::map<std::string, int> kGlModels{{"auto", -1}, {"ccr", 0}, {"bcc", 1}, {"additive", 2}};
const std::map<std::string, deasel_method> kMethods{
    {"gl", DEASEL_METHOD_GL}, {"ecm", DEASEL_METHOD_ECM}, {"rb", DEASEL_METHOD_RB}};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable selection for data envelopment analysis"};
  app.set_version_flag("--version", std::string(deasel_version()));
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write one simulated scenario panel as CSV");
  int gen_scenario = 1;
  deasel_rts gen_rts = DEASEL_RTS_CRS;
  std::size_t gen_dmus = 0;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("--scenario", gen_scenario, "Scenario id (1-12)")->check(CLI::Range(1, 12));
  gen->add_option("--rts", gen_rts, "crs or vrs")->transform(CLI::CheckedTransformer(kRts, CLI::ignore_case));
  gen->add_option("--dmus", gen_dmus, "Number of DMUs (0 keeps the scenario size)");
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("-o,--output", gen_out, "Output CSV path")->required();

  // score
  auto* score = app.add_subcommand("score", "Efficiency scores for a CSV panel");
  std::string score_data;
  deasel_model score_model = DEASEL_MODEL_CCR;
  deasel_rts score_rts = DEASEL_RTS_CRS;
  std::vector<std::size_t> score_inputs;
  score->add_option("--data", score_data, "Panel CSV")->required();
  score->add_option("--model", score_model, "ccr, bcc or additive")
      ->transform(CLI::CheckedTransformer(kModels, CLI::ignore_case));
  score->add_option("--rts", score_rts, "crs or vrs (additive model)")
      ->transform(CLI::CheckedTransformer(kRts, CLI::ignore_case));
  score->add_option("--inputs", score_inputs, "Input indices (0-based), comma separated")->delimiter(',');

  // select
  auto* sel = app.add_subcommand("select", "Run one variable-selection method on a CSV panel");
  std::string sel_data;
  deasel_select_options opts;
  deasel_select_options_init(&opts);
  double sel_lambda = -1.0;
  sel->add_option("--data", sel_data, "Panel CSV")->required();
  sel->add_option("--method", opts.method, "gl, ecm or rb")->transform(CLI::CheckedTransformer(kMethods, CLI::ignore_case));
  sel->add_option("--rts", opts.rts, "crs or vrs")->transform(CLI::CheckedTransformer(kRts, CLI::ignore_case));
  sel->add_option("--gl-model", opts.gl_model, "auto, ccr, bcc or additive")
      ->transform(CLI::CheckedTransformer(kGlModels, CLI::ignore_case));
  sel->add_option("--lambda", sel_lambda, "Fixed lambda (default: tune on the training slice)");
  sel->add_option("--tau", opts.gl_tau, "Elbow tolerance for tuning");
  sel->add_option("--training-fraction", opts.gl_training_fraction, "Share of DMUs used for tuning");
  sel->add_option("--mu", opts.gl_mu, "ADMM penalty");
  sel->add_option("--max-iterations", opts.gl_max_iterations, "ADMM iteration limit");
  sel->add_option("--tolerance", opts.gl_tolerance, "ADMM residual tolerance (0: automatic)");
  sel->add_option("--p0", opts.ecm_p0, "ECM tolerated proportion");
  sel->add_option("--gamma-bar", opts.ecm_gamma_bar, "ECM efficiency-ratio threshold");
  sel->add_option("--alpha", opts.ecm_alpha, "ECM significance level");
  sel->add_option("--confidence", opts.rb_confidence, "RB confidence level");
  sel->add_option("--seed-input", opts.rb_seed_input, "RB initial input (0-based)");
  bool no_normalize = false;
  sel->add_flag("--no-normalize", no_normalize, "Use raw data in the GL problem");

  // experiment
  auto* exp = app.add_subcommand("experiment", "Run a simulation study from a JSON config");
  std::string exp_config, exp_out;
  exp->add_option("--config", exp_config, "Config JSON")->required();
  exp->add_option("-o,--output-dir", exp_out, "Override the configured output directory");

  // report
  auto* rep = app.add_subcommand("report", "Re-emit tables from a stored report");
  std::string rep_in, rep_out;
  int rep_table = 0;
  rep->add_option("--input", rep_in, "Report directory or report.json")->required();
  rep->add_option("-o,--output-dir", rep_out, "Write all report files here");
  rep->add_option("--table", rep_table, "Print one table (3-6) to stdout")->check(CLI::Range(3, 6));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      deasel_dataset* d = nullptr;
      check(deasel_dataset_generate(gen_scenario, gen_rts, gen_dmus, gen_seed, &d));
      Dataset data(d);
      check(deasel_dataset_write_csv(data.get(), gen_out.c_str()));
    } else if (*score) {
      auto data = load(score_data);
      std::vector<double> scores(deasel_dataset_dmus(data.get()));
      std::size_t failures = 0;
      check(deasel_score(data.get(), score_model, score_rts, score_inputs.empty() ? nullptr : score_inputs.data(),
                         score_inputs.size(), scores.data(), &failures));
      std::printf("dmu,score\n");
      for (std::size_t k = 0; k < scores.size(); ++k) {
        if (std::isfinite(scores[k])) std::printf("%zu,%.12g\n", k, scores[k]);
        else std::printf("%zu,\n", k);
      }
      if (failures > 0) {
        std::cerr << "deasel: " << failures << " DMU LPs failed\n";
        return DEASEL_ERR_SOLVER;
      }
    } else if (*sel) {
      auto data = load(sel_data);
      opts.gl_lambda = sel_lambda;
      opts.gl_normalize = no_normalize ? 0 : 1;
      deasel_selection* s = nullptr;
      check(deasel_select(data.get(), &opts, &s));
      Selection selection(s);
      char* json = nullptr;
      check(deasel_selection_to_json(selection.get(), &json));
      std::cout << take(json) << "\n";
    } else if (*exp) {
      deasel_report* r = nullptr;
      check(deasel_experiment_run_file(exp_config.c_str(), &r));
      Report report(r);
      check(deasel_report_emit(report.get(), exp_out.empty() ? nullptr : exp_out.c_str()));
      char* table = nullptr;
      check(deasel_report_table(report.get(), 5, &table));
      std::cout << take(table);
    } else if (*rep) {
      deasel_report* r = nullptr;
      check(deasel_report_load(rep_in.c_str(), &r));
      Report report(r);
      if (!rep_out.empty()) check(deasel_report_emit(report.get(), rep_out.c_str()));
      if (rep_table != 0) {
        char* table = nullptr;
        check(deasel_report_table(report.get(), rep_table, &table));
        std::cout << take(table);
      }
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}
