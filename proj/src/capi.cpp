// Licensed under the Apache License 2.0 (see LICENSE file).

#include "deasel/deasel.h"

#include "error.hpp"
#include "harness.hpp"

#include <json.hpp>

#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <new>
#include <string>

struct deasel_dataset {
  deasel::dea::DataSet data;
};

struct deasel_selection {
  deasel::SelectionResult result;
  std::optional<deasel::harness::TuningResult> tuning;
};

struct deasel_report {
  deasel::harness::ExperimentReport report;
};

namespace {

using deasel::Error;
using deasel::ErrorKind;

thread_local std::string last_error;

deasel_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input:
    case ErrorKind::Rank:
    case ErrorKind::DegreesOfFreedom: return DEASEL_ERR_INPUT;
    case ErrorKind::Io: return DEASEL_ERR_IO;
    default: return DEASEL_ERR_SOLVER;
  }
}

template <class F>
deasel_status guarded(F&& body) {
  try {
    body();
    return DEASEL_OK;
  } catch (const Error& e) {
    last_error = std::string(deasel::to_string(e.kind())) + ": " + e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return DEASEL_ERR_SOLVER;
  } catch (const std::exception& e) {
    last_error = e.what();
    return DEASEL_ERR_SOLVER;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::Input, what);
}

char* duplicate(const std::string& s) {
  auto* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

deasel::dea::Rts rts_of(deasel_rts r) {
  require(r == DEASEL_RTS_CRS || r == DEASEL_RTS_VRS, "unknown returns-to-scale value");
  return r == DEASEL_RTS_CRS ? deasel::dea::Rts::CRS : deasel::dea::Rts::VRS;
}

}  // namespace

extern "C" {

const char* deasel_version(void) { return deasel::harness::kVersion; }

const char* deasel_last_error(void) { return last_error.c_str(); }

void deasel_string_free(char* text) { delete[] text; }

deasel_status deasel_dataset_from_arrays(size_t inputs, size_t outputs, size_t dmus, const double* x, const double* y,
                                         deasel_dataset** out) {
  return guarded([&] {
    require(out && x && y, "null argument");
    require(inputs > 0 && outputs > 0 && dmus > 0, "dimensions must be positive");
    const auto m = static_cast<Eigen::Index>(inputs), s = static_cast<Eigen::Index>(outputs),
               n = static_cast<Eigen::Index>(dmus);
    deasel::numlin::Matrix X = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(x, m, n);
    deasel::numlin::Matrix Y = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(y, s, n);
    *out = new deasel_dataset{deasel::dea::DataSet::make(std::move(X), std::move(Y))};
  });
}

deasel_status deasel_dataset_read_csv(const char* path, deasel_dataset** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new deasel_dataset{deasel::harness::read_panel_csv(path)};
  });
}

deasel_status deasel_dataset_write_csv(const deasel_dataset* data, const char* path) {
  return guarded([&] {
    require(data && path, "null argument");
    deasel::harness::write_panel_csv(data->data, path);
  });
}

deasel_status deasel_dataset_generate(int scenario, deasel_rts rts, size_t dmus, uint64_t seed, deasel_dataset** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    auto sc = deasel::datagen::builtin_scenario(scenario, rts_of(rts));
    if (dmus > 0) sc.n = dmus;
    *out = new deasel_dataset{deasel::datagen::generate_scenario(sc, seed).first};
  });
}

size_t deasel_dataset_inputs(const deasel_dataset* data) { return data ? data->data.inputs() : 0; }
size_t deasel_dataset_outputs(const deasel_dataset* data) { return data ? data->data.outputs() : 0; }
size_t deasel_dataset_dmus(const deasel_dataset* data) { return data ? data->data.dmus() : 0; }

deasel_status deasel_dataset_value(const deasel_dataset* data, int is_output, size_t row, size_t dmu, double* value) {
  return guarded([&] {
    require(data && value, "null argument");
    const auto& M = is_output ? data->data.Y : data->data.X;
    require(row < static_cast<size_t>(M.rows()) && dmu < static_cast<size_t>(M.cols()), "index out of range");
    *value = M(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(dmu));
  });
}

void deasel_dataset_free(deasel_dataset* data) { delete data; }

deasel_status deasel_score(const deasel_dataset* data, deasel_model model, deasel_rts rts, const size_t* inputs,
                           size_t input_count, double* scores, size_t* failures) {
  return guarded([&] {
    require(data && scores, "null argument");
    const auto& d = data->data;
    deasel::dea::IndexSet rows = inputs ? deasel::dea::IndexSet(inputs, inputs + input_count) : d.all_inputs();
    deasel::dea::EfficiencyResult result;
    switch (model) {
      case DEASEL_MODEL_CCR: result = deasel::dea::ccr_output_scores(d, rows); break;
      case DEASEL_MODEL_BCC: result = deasel::dea::bcc_output_scores(d, rows); break;
      case DEASEL_MODEL_ADDITIVE: result = deasel::dea::additive_scores(d, rows, rts_of(rts)); break;
      default: throw Error(ErrorKind::Input, "unknown model value");
    }
    for (Eigen::Index k = 0; k < result.scores.size(); ++k) scores[k] = result.scores(k);
    if (failures) *failures = result.failures();
  });
}

void deasel_select_options_init(deasel_select_options* o) {
  if (!o) return;
  const deasel::harness::GlParams gl;
  const deasel::bench::EcmParams ecm;
  const deasel::bench::RbParams rb;
  o->method = DEASEL_METHOD_GL;
  o->rts = DEASEL_RTS_CRS;
  o->gl_model = -1;
  o->gl_normalize = gl.normalize ? 1 : 0;
  o->gl_lambda = -1.0;
  o->gl_tau = gl.tau;
  o->gl_training_fraction = gl.training_fraction;
  o->gl_mu = gl.mu;
  o->gl_max_iterations = gl.max_iterations;
  o->gl_tolerance = 0.0;
  o->gl_selection_threshold = gl.selection_threshold;
  o->ecm_p0 = ecm.p0;
  o->ecm_gamma_bar = ecm.gamma_bar;
  o->ecm_alpha = ecm.alpha;
  o->rb_confidence = rb.confidence;
  o->rb_seed_input = rb.seed_input;
}

deasel_status deasel_select(const deasel_dataset* data, const deasel_select_options* o, deasel_selection** out) {
  return guarded([&] {
    require(data && o && out, "null argument");
    const auto rts = rts_of(o->rts);
    const auto candidates = data->data.all_inputs();
    auto sel = std::make_unique<deasel_selection>();
    switch (o->method) {
      case DEASEL_METHOD_GL: {
        deasel::harness::GlParams p;
        p.rts = rts;
        if (o->gl_model >= 0) {
          require(o->gl_model <= DEASEL_MODEL_ADDITIVE, "unknown model value");
          p.model = static_cast<deasel::dea::ModelKind>(o->gl_model);
        }
        p.normalize = o->gl_normalize != 0;
        if (o->gl_lambda >= 0.0) p.lambda = o->gl_lambda;
        p.tau = o->gl_tau;
        p.training_fraction = o->gl_training_fraction;
        p.mu = o->gl_mu;
        p.max_iterations = o->gl_max_iterations;
        if (o->gl_tolerance > 0.0) p.admm_tolerance = o->gl_tolerance;
        p.selection_threshold = o->gl_selection_threshold;
        auto outcome = deasel::harness::gl_select(data->data, p);
        sel->result = std::move(outcome.selection);
        sel->tuning = std::move(outcome.tuning);
        break;
      }
      case DEASEL_METHOD_ECM: {
        deasel::bench::EcmParams p;
        p.p0 = o->ecm_p0;
        p.gamma_bar = o->ecm_gamma_bar;
        p.alpha = o->ecm_alpha;
        p.rts = rts;
        sel->result = deasel::bench::ecm_backward_select(data->data, candidates, p);
        break;
      }
      case DEASEL_METHOD_RB: {
        deasel::bench::RbParams p;
        p.confidence = o->rb_confidence;
        p.seed_input = o->rb_seed_input;
        p.rts = rts;
        sel->result = deasel::bench::rb_select(data->data, candidates, p);
        break;
      }
      default: throw Error(ErrorKind::Input, "unknown method value");
    }
    *out = sel.release();
  });
}

size_t deasel_selection_count(const deasel_selection* s) { return s ? s->result.selected.size() : 0; }

size_t deasel_selection_indices(const deasel_selection* s, size_t* indices, size_t capacity) {
  if (!s) return 0;
  const auto& sel = s->result.selected;
  for (size_t i = 0; i < sel.size() && i < capacity && indices; ++i) indices[i] = sel[i];
  return sel.size();
}

int deasel_selection_converged(const deasel_selection* s) { return s && s->result.converged ? 1 : 0; }

double deasel_selection_lambda(const deasel_selection* s) {
  return s ? s->result.lambda : std::numeric_limits<double>::quiet_NaN();
}

deasel_status deasel_selection_to_json(const deasel_selection* s, char** json) {
  return guarded([&] {
    require(s && json, "null argument");
    const auto& r = s->result;
    nlohmann::ordered_json j;
    j["method"] = deasel::to_string(r.method);
    j["selected"] = r.selected;
    if (r.method == deasel::Method::GL) {
      j["group_norms"] = r.group_norms;
      j["lambda"] = r.lambda;
      j["converged"] = r.converged;
      j["iterations"] = r.iterations;
      j["primal_residual"] = r.primal_residual;
      j["dual_residual"] = r.dual_residual;
      if (s->tuning) {
        nlohmann::ordered_json pts = nlohmann::ordered_json::array();
        for (const auto& p : s->tuning->points) {
          pts.push_back({{"lambda", p.lambda}, {"loss", p.loss}, {"converged", p.converged}, {"iterations", p.iterations}});
        }
        j["tuning"] = pts;
      }
    }
    j["solver_failures"] = r.solver_failures;
    j["warnings"] = r.warnings;
    *json = duplicate(j.dump(2));
  });
}

void deasel_selection_free(deasel_selection* s) { delete s; }

deasel_status deasel_experiment_run_file(const char* config_path, deasel_report** out) {
  return guarded([&] {
    require(config_path && out, "null argument");
    const auto config = deasel::harness::load_config(config_path);
    *out = new deasel_report{deasel::harness::run_experiment(config)};
  });
}

deasel_status deasel_experiment_run_json(const char* config_json, deasel_report** out) {
  return guarded([&] {
    require(config_json && out, "null argument");
    const auto config = deasel::harness::parse_config(config_json);
    *out = new deasel_report{deasel::harness::run_experiment(config)};
  });
}

deasel_status deasel_report_load(const char* path, deasel_report** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new deasel_report{deasel::harness::load_report(path)};
  });
}

deasel_status deasel_report_emit(const deasel_report* report, const char* dir) {
  return guarded([&] {
    require(report != nullptr, "null argument");
    deasel::harness::emit_report(report->report, dir ? std::filesystem::path(dir) : report->report.output_dir);
  });
}

deasel_status deasel_report_json(const deasel_report* report, char** json) {
  return guarded([&] {
    require(report && json, "null argument");
    *json = duplicate(deasel::harness::report_to_json(report->report));
  });
}

deasel_status deasel_report_table(const deasel_report* report, int table, char** csv) {
  return guarded([&] {
    require(report && csv, "null argument");
    *csv = duplicate(deasel::harness::table_csv(report->report, table));
  });
}

void deasel_report_free(deasel_report* report) { delete report; }

}  // extern "C"
