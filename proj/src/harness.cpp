// Licensed under the Apache License 2.0 (see LICENSE file).

#include "harness.hpp"

#include "error.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string_view>
#include <thread>

namespace deasel::harness {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Small helpers

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::Io, "cannot read " + path.string());
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);  // NaN serializes as null
  return a;
}

Vector vector_from(const json& a) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = a[i].is_null() ? std::nan("") : a[i].get<double>();
  }
  return v;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorKind::Input, where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorKind::Input, "unknown key '" + key + "' in " + where);
    }
  }
}

}  // namespace

dea::ModelKind parse_model(const std::string& name) {
  const auto s = lower(name);
  if (s == "ccr") return dea::ModelKind::CCR;
  if (s == "bcc") return dea::ModelKind::BCC;
  if (s == "additive") return dea::ModelKind::Additive;
  throw Error(ErrorKind::Input, "unknown model '" + name + "' (ccr, bcc, additive)");
}

dea::Rts parse_rts(const std::string& name) {
  const auto s = lower(name);
  if (s == "crs") return dea::Rts::CRS;
  if (s == "vrs") return dea::Rts::VRS;
  throw Error(ErrorKind::Input, "unknown returns to scale '" + name + "' (crs, vrs)");
}

Method parse_method(const std::string& name) {
  const auto s = lower(name);
  if (s == "gl") return Method::GL;
  if (s == "ecm") return Method::ECM;
  if (s == "rb") return Method::RB;
  throw Error(ErrorKind::Input, "unknown method '" + name + "' (gl, ecm, rb)");
}

// ---------------------------------------------------------------------------
// Group-Lasso pipeline

std::vector<double> default_lambda_grid() {
  std::vector<double> grid{0.0};
  for (int i = 0; i < 20; ++i) grid.push_back(std::pow(10.0, -3.0 + 5.0 * i / 19.0));
  return grid;
}

dea::ModelKind GlParams::model_kind() const {
  if (model) return *model;
  return rts == dea::Rts::CRS ? dea::ModelKind::CCR : dea::ModelKind::BCC;
}

void GlParams::validate() const {
  if (lambda_grid.empty()) throw Error(ErrorKind::Input, "lambda grid must not be empty");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] >= 0.0) || !std::isfinite(lambda_grid[i])) {
      throw Error(ErrorKind::Input, "lambda grid values must be finite and >= 0");
    }
    if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1])) {
      throw Error(ErrorKind::Input, "lambda grid must be strictly increasing");
    }
  }
  if (!(tau >= 0.0)) throw Error(ErrorKind::Input, "tau must be >= 0");
  if (!(training_fraction > 0.0 && training_fraction < 1.0)) {
    throw Error(ErrorKind::Input, "training fraction must lie in (0, 1)");
  }
  if (lambda && !(*lambda >= 0.0 && std::isfinite(*lambda))) throw Error(ErrorKind::Input, "lambda must be >= 0");
  if (!(mu > 0.0) || max_iterations < 1 || !(selection_threshold > 0.0)) {
    throw Error(ErrorKind::Input, "GL mu, iterations and selection threshold must be positive");
  }
  if (admm_tolerance && !(*admm_tolerance > 0.0)) throw Error(ErrorKind::Input, "ADMM tolerance must be positive");
}

namespace {

gl::AdmmOptions admm_options(const gl::GLProblem& problem, const GlParams& params) {
  auto o = gl::AdmmOptions::defaults_for(problem);
  o.mu = params.mu;
  o.max_iterations = params.max_iterations;
  o.selection_threshold = params.selection_threshold;
  if (params.admm_tolerance) o.primal_tol = o.dual_tol = *params.admm_tolerance;
  return o;
}

}  // namespace

std::size_t training_size(std::size_t n, double fraction) {
  const auto want = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  return std::min(n, std::max<std::size_t>(5, want));
}

TuningResult tune_lambda(const dea::DataSet& train, dea::ModelKind model, const std::vector<double>& grid, double tau,
                         const GlParams& params) {
  GlParams p = params;
  p.lambda_grid = grid;
  p.tau = tau;
  p.validate();
  if (train.dmus() < 5) throw Error(ErrorKind::Input, "tuning needs a training panel of at least 5 DMUs");

  TuningResult out;
  std::optional<double> reference;
  for (double lambda : grid) {
    const auto problem = gl::assemble_gl_problem(train, model, lambda, gl::default_shift(model));
    auto [state, selection] = gl::admm_solve(problem, admm_options(problem, p));
    TuningPoint pt{lambda, problem.c.dot(state.z) + problem.objective_offset, state.converged, state.iteration};
    out.points.push_back(pt);
    if (!pt.converged) {
      ++out.skipped;
      out.warnings.push_back("tuning: lambda " + fmt(lambda) + " did not converge, skipped");
      continue;
    }
    if (!reference) {
      reference = pt.loss;
      if (lambda != grid.front()) out.warnings.push_back("tuning: reference loss taken at lambda " + fmt(lambda));
    }
    if (pt.loss <= *reference + tau * std::abs(*reference)) out.lambda = lambda;
  }
  if (!reference) throw Error(ErrorKind::Tuning, "tuning: no grid point converged");
  return out;
}

GlOutcome gl_select(const dea::DataSet& data, const GlParams& params) {
  params.validate();
  data.validate();
  const auto kind = params.model_kind();
  GlOutcome out;
  double lambda = 0.0;
  if (params.lambda) {
    lambda = *params.lambda;
  } else {
    auto train = data.head(training_size(data.dmus(), params.training_fraction));
    if (params.normalize) train = train.normalized();
    out.tuning = tune_lambda(train, kind, params.lambda_grid, params.tau, params);
    lambda = out.tuning->lambda;
  }
  const auto full = params.normalize ? data.normalized() : data;
  const auto problem = gl::assemble_gl_problem(full, kind, lambda, gl::default_shift(kind));
  auto [state, selection] = gl::admm_solve(problem, admm_options(problem, params));
  if (!selection.converged) {
    selection.warnings.push_back("ADMM stopped after " + std::to_string(selection.iterations) +
                                 " iterations without meeting the tolerance");
  }
  if (out.tuning) selection.warnings.insert(selection.warnings.begin(), out.tuning->warnings.begin(), out.tuning->warnings.end());
  out.selection = std::move(selection);
  return out;
}

// ---------------------------------------------------------------------------
// Panel CSV

dea::DataSet parse_panel_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (rows.empty() && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) {
      const auto a = cell.find_first_not_of(" \t");
      const auto b = cell.find_last_not_of(" \t");
      cells.push_back(a == std::string::npos ? std::string() : cell.substr(a, b - a + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw Error(ErrorKind::Input, "panel CSV: missing header row");

  const auto& header = rows.front();
  std::vector<std::string> in_labels, out_labels;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& h = header[c];
    if (h.rfind("in:", 0) == 0 && h.size() > 3) {
      if (!out_labels.empty()) throw Error(ErrorKind::Input, "panel CSV: input columns must precede outputs", c);
      in_labels.push_back(h.substr(3));
    } else if (h.rfind("out:", 0) == 0 && h.size() > 4) {
      out_labels.push_back(h.substr(4));
    } else {
      throw Error(ErrorKind::Input, "panel CSV: column '" + h + "' is neither in:<label> nor out:<label>", c);
    }
  }
  if (in_labels.empty() || out_labels.empty()) {
    throw Error(ErrorKind::Input, "panel CSV: need at least one input and one output column");
  }
  const auto m = static_cast<Eigen::Index>(in_labels.size());
  const auto s = static_cast<Eigen::Index>(out_labels.size());
  const auto n = static_cast<Eigen::Index>(rows.size() - 1);
  if (n < 1) throw Error(ErrorKind::Input, "panel CSV: no data rows");

  numlin::Matrix X(m, n), Y(s, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& r = rows[static_cast<std::size_t>(k + 1)];
    if (r.size() != header.size()) {
      throw Error(ErrorKind::Input, "panel CSV: row " + std::to_string(k + 2) + " has the wrong number of fields",
                  static_cast<std::size_t>(k));
    }
    for (std::size_t c = 0; c < r.size(); ++c) {
      double v = 0.0;
      const auto* first = r[c].data();
      const auto* last = first + r[c].size();
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last || r[c].empty()) {
        throw Error(ErrorKind::Input, "panel CSV: row " + std::to_string(k + 2) + " field '" + r[c] + "' is not a number",
                    static_cast<std::size_t>(k));
      }
      const auto ci = static_cast<Eigen::Index>(c);
      if (ci < m) X(ci, k) = v; else Y(ci - m, k) = v;
    }
  }
  return dea::DataSet::make(std::move(X), std::move(Y), std::move(in_labels), std::move(out_labels));
}

dea::DataSet read_panel_csv(const fs::path& path) { return parse_panel_csv(read_text(path)); }

std::string format_panel_csv(const dea::DataSet& data) {
  std::string out;
  for (const auto& l : data.input_labels) out += (out.empty() ? "" : ",") + std::string("in:") + l;
  for (const auto& l : data.output_labels) out += ",out:" + l;
  out += '\n';
  char buf[40];
  for (Eigen::Index k = 0; k < data.X.cols(); ++k) {
    for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", data.X(i, k));
      out += (i ? "," : "");
      out += buf;
    }
    for (Eigen::Index r = 0; r < data.Y.rows(); ++r) {
      std::snprintf(buf, sizeof buf, ",%.17g", data.Y(r, k));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void write_panel_csv(const dea::DataSet& data, const fs::path& path) { write_text(path, format_panel_csv(data)); }

// ---------------------------------------------------------------------------
// Configuration

namespace {

json scenario_json(const datagen::Scenario& sc) {
  json j;
  j["id"] = sc.id;
  j["rts"] = dea::to_string(sc.rts);
  j["description"] = sc.description;
  j["n"] = sc.n;
  j["relevant"] = sc.relevant;
  j["irrelevant"] = sc.irrelevant;
  j["alpha"] = sc.alpha;
  json corr = json::array();
  for (const auto& c : sc.correlations) corr.push_back({{"target", c.target}, {"source", c.source}, {"rho", c.rho}});
  j["correlations"] = corr;
  j["log_lo"] = sc.log_lo;
  j["log_hi"] = sc.log_hi;
  j["target_mean_efficiency"] = sc.target_mean_efficiency;
  j["sigma"] = sc.sigma ? json(*sc.sigma) : json(nullptr);
  return j;
}

datagen::Scenario scenario_from(const json& j, std::optional<dea::Rts> rts_default) {
  check_keys(j,
             {"id", "rts", "description", "n", "relevant", "irrelevant", "alpha", "correlations", "log_lo", "log_hi",
              "target_mean_efficiency", "sigma"},
             "scenario");
  if (!j.contains("id")) throw Error(ErrorKind::Input, "scenario record needs an id");
  const int id = j.at("id").get<int>();
  dea::Rts rts = rts_default.value_or(dea::Rts::CRS);
  if (j.contains("rts")) rts = parse_rts(j.at("rts").get<std::string>());

  datagen::Scenario sc;
  if (id >= 1 && id <= datagen::kBuiltinScenarioCount) {
    sc = datagen::builtin_scenario(id, rts);
  } else {
    sc.id = id;
    sc.rts = rts;
    sc.log_lo = std::log(5.0);
    sc.log_hi = std::log(15.0);
    sc.description = "Custom scenario";
  }
  if (j.contains("description")) sc.description = j.at("description").get<std::string>();
  if (j.contains("n")) sc.n = j.at("n").get<std::size_t>();
  if (j.contains("relevant")) sc.relevant = j.at("relevant").get<std::size_t>();
  if (j.contains("irrelevant")) sc.irrelevant = j.at("irrelevant").get<std::size_t>();
  if (j.contains("alpha")) sc.alpha = j.at("alpha").get<std::vector<double>>();
  if (j.contains("correlations")) {
    sc.correlations.clear();
    for (const auto& c : j.at("correlations")) {
      check_keys(c, {"target", "source", "rho"}, "correlation");
      sc.correlations.push_back({c.at("target").get<std::size_t>(), c.at("source").get<std::size_t>(),
                                 c.at("rho").get<double>()});
    }
  }
  if (j.contains("log_lo")) sc.log_lo = j.at("log_lo").get<double>();
  if (j.contains("log_hi")) sc.log_hi = j.at("log_hi").get<double>();
  if (j.contains("target_mean_efficiency")) sc.target_mean_efficiency = j.at("target_mean_efficiency").get<double>();
  if (j.contains("sigma")) sc.sigma = j.at("sigma").is_null() ? std::nullopt : std::optional(j.at("sigma").get<double>());
  sc.validate();
  return sc;
}

const char* method_name(Method m) { return to_string(m); }

json config_json(const ExperimentConfig& c) {
  json j;
  json sc = json::array();
  for (const auto& s : c.scenarios) sc.push_back(scenario_json(s));
  j["scenarios"] = sc;
  json methods = json::array();
  for (auto m : c.methods) methods.push_back(method_name(m));
  j["methods"] = methods;
  j["trials"] = c.trials;
  j["seed"] = c.master_seed;
  j["lambda_grid"] = c.gl.lambda_grid;
  j["training_fraction"] = c.gl.training_fraction;
  j["tolerances"] = {{"efficiency", c.efficiency_tolerance},
                     {"admm", c.gl.admm_tolerance ? json(*c.gl.admm_tolerance) : json(nullptr)},
                     {"selection", c.gl.selection_threshold}};
  j["gl"] = {{"model", c.gl.model ? json(dea::to_string(*c.gl.model)) : json("auto")},
             {"normalize", c.gl.normalize},
             {"mu", c.gl.mu},
             {"max_iterations", c.gl.max_iterations},
             {"tau", c.gl.tau},
             {"lambda", c.gl.lambda ? json(*c.gl.lambda) : json(nullptr)}};
  j["ecm"] = {{"p0", c.ecm.p0},
              {"gamma_bar", c.ecm.gamma_bar},
              {"alpha", c.ecm.alpha},
              {"max_trials", c.ecm_max_trials ? json(*c.ecm_max_trials) : json(nullptr)}};
  j["rb"] = {{"confidence", c.rb.confidence}, {"seed_input", c.rb.seed_input}};
  return j;
}

ExperimentConfig config_from(const json& j) {
  check_keys(j,
             {"scenarios", "rts", "methods", "trials", "seed", "lambda_grid", "training_fraction", "tolerances", "gl",
              "ecm", "rb", "output_dir", "threads"},
             "config");
  ExperimentConfig c;
  std::vector<dea::Rts> rts_list{dea::Rts::CRS, dea::Rts::VRS};
  if (j.contains("rts")) {
    rts_list.clear();
    for (const auto& r : j.at("rts")) rts_list.push_back(parse_rts(r.get<std::string>()));
    if (rts_list.empty()) throw Error(ErrorKind::Input, "config: rts list must not be empty");
  }
  if (!j.contains("scenarios")) throw Error(ErrorKind::Input, "config: missing 'scenarios'");
  for (const auto& entry : j.at("scenarios")) {
    if (entry.is_number_integer()) {
      for (auto r : rts_list) c.scenarios.push_back(datagen::builtin_scenario(entry.get<int>(), r));
    } else if (entry.is_object() && entry.contains("rts")) {
      c.scenarios.push_back(scenario_from(entry, std::nullopt));
    } else {
      for (auto r : rts_list) c.scenarios.push_back(scenario_from(entry, r));
    }
  }
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : j.at("methods")) {
      const auto method = parse_method(m.get<std::string>());
      if (std::find(c.methods.begin(), c.methods.end(), method) != c.methods.end()) {
        throw Error(ErrorKind::Input, "config: method listed twice");
      }
      c.methods.push_back(method);
    }
  }
  if (j.contains("trials")) {
    const auto t = j.at("trials").get<long long>();
    if (t < 1) throw Error(ErrorKind::Input, "config: trials must be >= 1");
    c.trials = static_cast<std::size_t>(t);
  }
  if (j.contains("seed")) c.master_seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("lambda_grid")) c.gl.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
  if (j.contains("training_fraction")) c.gl.training_fraction = j.at("training_fraction").get<double>();
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    check_keys(t, {"efficiency", "admm", "selection"}, "tolerances");
    if (t.contains("efficiency")) c.efficiency_tolerance = t.at("efficiency").get<double>();
    if (t.contains("admm")) c.gl.admm_tolerance = opt_from(t.at("admm"));
    if (t.contains("selection")) c.gl.selection_threshold = t.at("selection").get<double>();
  }
  if (j.contains("gl")) {
    const auto& g = j.at("gl");
    check_keys(g, {"model", "normalize", "mu", "max_iterations", "tau", "lambda"}, "gl");
    if (g.contains("model")) {
      const auto name = g.at("model").get<std::string>();
      c.gl.model = lower(name) == "auto" ? std::nullopt : std::optional(parse_model(name));
    }
    if (g.contains("normalize")) c.gl.normalize = g.at("normalize").get<bool>();
    if (g.contains("mu")) c.gl.mu = g.at("mu").get<double>();
    if (g.contains("max_iterations")) c.gl.max_iterations = g.at("max_iterations").get<int>();
    if (g.contains("tau")) c.gl.tau = g.at("tau").get<double>();
    if (g.contains("lambda")) c.gl.lambda = opt_from(g.at("lambda"));
  }
  if (j.contains("ecm")) {
    const auto& e = j.at("ecm");
    check_keys(e, {"p0", "gamma_bar", "alpha", "max_trials"}, "ecm");
    if (e.contains("p0")) c.ecm.p0 = e.at("p0").get<double>();
    if (e.contains("gamma_bar")) c.ecm.gamma_bar = e.at("gamma_bar").get<double>();
    if (e.contains("alpha")) c.ecm.alpha = e.at("alpha").get<double>();
    if (e.contains("max_trials")) {
      c.ecm_max_trials = e.at("max_trials").is_null() ? std::nullopt
                                                      : std::optional(e.at("max_trials").get<std::size_t>());
    }
  }
  if (j.contains("rb")) {
    const auto& r = j.at("rb");
    check_keys(r, {"confidence", "seed_input"}, "rb");
    if (r.contains("confidence")) c.rb.confidence = r.at("confidence").get<double>();
    if (r.contains("seed_input")) c.rb.seed_input = r.at("seed_input").get<std::size_t>();
  }
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("threads")) {
    const auto t = j.at("threads").get<long long>();
    if (t < 1) throw Error(ErrorKind::Input, "config: threads must be >= 1");
    c.threads = static_cast<unsigned>(t);
  }
  c.validate();
  return c;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (trials < 1) throw Error(ErrorKind::Input, "config: trials must be >= 1");
  if (methods.empty()) throw Error(ErrorKind::Input, "config: at least one method is required");
  if (threads < 1) throw Error(ErrorKind::Input, "config: threads must be >= 1");
  if (!(efficiency_tolerance >= 0.0)) throw Error(ErrorKind::Input, "config: efficiency tolerance must be >= 0");
  gl.validate();
  ecm.validate();
  rb.validate();
  for (const auto& sc : scenarios) {
    sc.validate();
    if (rb.seed_input >= sc.inputs()) throw Error(ErrorKind::Input, "config: RB seed input out of range");
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  try {
    return config_from(json::parse(json_text));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Input, std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const fs::path& path) { return parse_config(read_text(path)); }

std::string canonical_config(const ExperimentConfig& config) { return config_json(config).dump(); }

namespace {

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string config_hash(const ExperimentConfig& config) { return fnv1a_hex(canonical_config(config)); }

// ---------------------------------------------------------------------------
// Experiment

namespace {

Vector farrell(const Vector& theta) { return theta.cwiseInverse(); }

std::string describe(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return std::string(to_string(err->kind())) + ": " + err->what();
  return e.what();
}

void score_selection(MethodTrial& mt, const dea::DataSet& data, dea::Rts rts, const Vector& true_eff,
                     const std::vector<bool>& true_mask, double tol) {
  if (mt.selected.empty()) {
    mt.warnings.push_back("empty selection: model efficiencies missing");
    return;
  }
  const auto result = dea::radial_output_scores(data, mt.selected, rts);
  if (result.failures() > 0) {
    mt.error = "solver: " + std::to_string(result.failures()) + " DMU LPs failed while scoring the selection";
    return;
  }
  mt.model_efficiency = farrell(result.scores);
  mt.score = metrics::score_metrics(true_eff, mt.model_efficiency);
  mt.identification = metrics::identification_metrics(true_mask, dea::efficient_set(result, tol));
}

TrialRecord run_trial(const ExperimentConfig& config, const datagen::Scenario& sc, std::size_t trial) {
  TrialRecord rec;
  rec.trial = trial;
  rec.seed = datagen::derive_seed(config.master_seed, {static_cast<std::uint64_t>(sc.id),
                                                       sc.rts == dea::Rts::CRS ? 0u : 1u, trial});
  dea::DataSet data;
  datagen::TruthInfo truth;
  std::optional<std::string> setup_error;
  std::vector<bool> true_mask;
  try {
    std::tie(data, truth) = datagen::generate_scenario(sc, rec.seed);
    const auto true_scores = dea::radial_output_scores(data, truth.true_inputs, sc.rts);
    if (true_scores.failures() > 0) throw Error(ErrorKind::Solver, "true-input scoring failed");
    rec.true_efficiency = farrell(true_scores.scores);
    true_mask = dea::efficient_set(true_scores, config.efficiency_tolerance);
  } catch (const std::exception& e) {
    setup_error = describe(e);
  }

  const auto candidates = data.all_inputs();
  for (auto method : config.methods) {
    MethodTrial mt;
    mt.method = method;
    if (method == Method::ECM && config.ecm_max_trials && trial >= *config.ecm_max_trials) {
      mt.skipped = true;
      rec.methods.push_back(std::move(mt));
      continue;
    }
    if (setup_error) {
      mt.error = setup_error;
      rec.methods.push_back(std::move(mt));
      continue;
    }
    try {
      const auto start = std::chrono::steady_clock::now();
      SelectionResult sel;
      if (method == Method::GL) {
        GlParams p = config.gl;
        p.rts = sc.rts;
        auto outcome = gl_select(data, p);
        sel = std::move(outcome.selection);
        if (outcome.tuning) {
          mt.tuning_solves = outcome.tuning->points.size();
          mt.tuning_nonconverged = outcome.tuning->skipped;
        }
      } else if (method == Method::ECM) {
        auto params = config.ecm;
        params.rts = sc.rts;
        sel = bench::ecm_backward_select(data, candidates, params);
      } else {
        auto params = config.rb;
        params.rts = sc.rts;
        sel = bench::rb_select(data, candidates, params);
      }
      mt.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      mt.selected = sel.selected;
      mt.solver_failures = sel.solver_failures;
      mt.warnings = sel.warnings;
      if (method == Method::GL) {
        mt.lambda = sel.lambda;
        mt.converged = sel.converged;
        mt.iterations = sel.iterations;
        mt.primal_residual = sel.primal_residual;
        mt.dual_residual = sel.dual_residual;
      }
      score_selection(mt, data, sc.rts, rec.true_efficiency, true_mask, config.efficiency_tolerance);
    } catch (const std::exception& e) {
      mt.error = describe(e);
    }
    rec.methods.push_back(std::move(mt));
  }
  return rec;
}

struct Mean {
  double sum = 0.0;
  std::size_t count = 0;
  void add(const std::optional<double>& v) {
    if (v && std::isfinite(*v)) {
      sum += *v;
      ++count;
    }
  }
  std::optional<double> value() const {
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
  }
};

}  // namespace

std::vector<Aggregate> aggregate(const std::vector<TrialRecord>& trials, const std::vector<Method>& methods,
                                 const dea::IndexSet& true_inputs) {
  std::vector<Aggregate> out;
  for (auto method : methods) {
    Aggregate a;
    a.method = method;
    Mean mse, pearson, spearman, pct_all, pct_eff, seconds;
    std::size_t exact = 0;
    for (const auto& t : trials) {
      for (const auto& mt : t.methods) {
        if (mt.method != method || mt.skipped) continue;
        ++a.trials;
        if (mt.error) ++a.errors;
        if (mt.selected == true_inputs && !mt.error) ++exact;
        if (method == Method::GL && !mt.error && !mt.converged) ++a.nonconverged;
        a.tuning_nonconverged += mt.tuning_nonconverged;
        if (!mt.error) seconds.add(mt.seconds);
        if (mt.score) {
          ++a.scored;
          mse.add(mt.score->mse);
          pearson.add(mt.score->pearson);
          spearman.add(mt.score->spearman);
        }
        if (mt.identification) {
          pct_all.add(mt.identification->pct_all);
          pct_eff.add(mt.identification->pct_efficient);
        }
      }
    }
    a.mse = mse.value();
    a.pearson = pearson.value();
    a.spearman = spearman.value();
    a.pct_all = pct_all.value();
    a.pct_efficient = pct_eff.value();
    a.seconds = seconds.value();
    a.exact_selection_rate = a.trials ? static_cast<double>(exact) / static_cast<double>(a.trials) : 0.0;
    out.push_back(a);
  }
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  report.config_json = canonical_config(config);
  report.config_hash = fnv1a_hex(report.config_json);
  report.master_seed = config.master_seed;
  report.methods = config.methods;
  report.output_dir = config.output_dir;

  std::vector<std::pair<std::size_t, std::size_t>> units;
  for (std::size_t r = 0; r < config.scenarios.size(); ++r) {
    ScenarioRun run;
    run.scenario = config.scenarios[r];
    for (std::size_t i = 0; i < run.scenario.relevant; ++i) run.true_inputs.push_back(i);
    run.trials.resize(config.trials);
    report.runs.push_back(std::move(run));
    for (std::size_t t = 0; t < config.trials; ++t) units.emplace_back(r, t);
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t u = next++; u < units.size(); u = next++) {
      const auto [r, t] = units[u];
      report.runs[r].trials[t] = run_trial(config, report.runs[r].scenario, t);
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(units.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  for (auto& run : report.runs) run.aggregates = aggregate(run.trials, report.methods, run.true_inputs);
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json score_json(const std::optional<metrics::ScoreMetrics>& s) {
  if (!s) return nullptr;
  return {{"mse", s->mse}, {"pearson", opt_json(s->pearson)}, {"spearman", opt_json(s->spearman)}};
}

json ident_json(const std::optional<metrics::IdentificationMetrics>& m) {
  if (!m) return nullptr;
  return {{"pct_all", m->pct_all}, {"pct_efficient", opt_json(m->pct_efficient)}};
}

json aggregate_json(const Aggregate& a) {
  return {{"method", method_name(a.method)},
          {"trials", a.trials},
          {"scored", a.scored},
          {"errors", a.errors},
          {"mse", opt_json(a.mse)},
          {"pearson", opt_json(a.pearson)},
          {"spearman", opt_json(a.spearman)},
          {"pct_all", opt_json(a.pct_all)},
          {"pct_efficient", opt_json(a.pct_efficient)},
          {"exact_selection_rate", a.exact_selection_rate},
          {"nonconverged", a.nonconverged},
          {"tuning_nonconverged", a.tuning_nonconverged}};
}

json method_json(const MethodTrial& mt) {
  json j;
  j["method"] = method_name(mt.method);
  j["skipped"] = mt.skipped;
  j["error"] = mt.error ? json(*mt.error) : json(nullptr);
  j["selected"] = mt.selected;
  j["model_efficiency"] = mt.model_efficiency.size() ? vector_json(mt.model_efficiency) : json(nullptr);
  j["score"] = score_json(mt.score);
  j["identification"] = ident_json(mt.identification);
  if (mt.method == Method::GL) {
    j["gl"] = {{"lambda", opt_json(mt.lambda)},
               {"converged", mt.converged},
               {"iterations", mt.iterations},
               {"primal_residual", mt.primal_residual},
               {"dual_residual", mt.dual_residual},
               {"tuning_solves", mt.tuning_solves},
               {"tuning_nonconverged", mt.tuning_nonconverged}};
  }
  j["solver_failures"] = mt.solver_failures;
  j["warnings"] = mt.warnings;
  return j;
}

MethodTrial method_from(const json& j) {
  MethodTrial mt;
  mt.method = parse_method(j.at("method").get<std::string>());
  mt.skipped = j.at("skipped").get<bool>();
  if (!j.at("error").is_null()) mt.error = j.at("error").get<std::string>();
  mt.selected = j.at("selected").get<std::vector<std::size_t>>();
  if (!j.at("model_efficiency").is_null()) mt.model_efficiency = vector_from(j.at("model_efficiency"));
  if (const auto& s = j.at("score"); !s.is_null()) {
    mt.score = metrics::ScoreMetrics{s.at("mse").get<double>(), opt_from(s.at("pearson")), opt_from(s.at("spearman"))};
  }
  if (const auto& m = j.at("identification"); !m.is_null()) {
    mt.identification = metrics::IdentificationMetrics{m.at("pct_all").get<double>(), opt_from(m.at("pct_efficient"))};
  }
  if (j.contains("gl")) {
    const auto& g = j.at("gl");
    mt.lambda = opt_from(g.at("lambda"));
    mt.converged = g.at("converged").get<bool>();
    mt.iterations = g.at("iterations").get<int>();
    mt.primal_residual = g.at("primal_residual").get<double>();
    mt.dual_residual = g.at("dual_residual").get<double>();
    mt.tuning_solves = g.at("tuning_solves").get<std::size_t>();
    mt.tuning_nonconverged = g.at("tuning_nonconverged").get<std::size_t>();
  }
  mt.solver_failures = j.at("solver_failures").get<std::size_t>();
  mt.warnings = j.at("warnings").get<std::vector<std::string>>();
  mt.seconds = std::nan("");
  return mt;
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
  json j;
  j["format"] = kReportFormat;
  j["version"] = report.version;
  j["config_hash"] = report.config_hash;
  j["config"] = report.config_json.empty() ? json::object() : json::parse(report.config_json);
  j["master_seed"] = report.master_seed;
  json methods = json::array();
  for (auto m : report.methods) methods.push_back(method_name(m));
  j["methods"] = methods;
  json runs = json::array();
  for (const auto& run : report.runs) {
    json r;
    r["scenario"] = scenario_json(run.scenario);
    r["true_inputs"] = run.true_inputs;
    json aggs = json::array();
    for (const auto& a : run.aggregates) aggs.push_back(aggregate_json(a));
    r["aggregates"] = aggs;
    json trials = json::array();
    for (const auto& t : run.trials) {
      json tj;
      tj["trial"] = t.trial;
      tj["seed"] = t.seed;
      tj["true_efficiency"] = vector_json(t.true_efficiency);
      json ms = json::array();
      for (const auto& mt : t.methods) ms.push_back(method_json(mt));
      tj["methods"] = ms;
      trials.push_back(tj);
    }
    r["trials"] = trials;
    runs.push_back(r);
  }
  j["runs"] = runs;
  return j.dump(1) + "\n";
}

std::string timings_to_json(const ExperimentReport& report) {
  json j;
  j["config_hash"] = report.config_hash;
  json runs = json::array();
  for (const auto& run : report.runs) {
    json r;
    r["scenario"] = run.scenario.id;
    r["rts"] = dea::to_string(run.scenario.rts);
    json secs;
    for (auto m : report.methods) {
      json a = json::array();
      for (const auto& t : run.trials) {
        for (const auto& mt : t.methods) {
          if (mt.method == m) a.push_back(mt.skipped || mt.error ? json(nullptr) : json(mt.seconds));
        }
      }
      secs[method_name(m)] = a;
    }
    r["seconds"] = secs;
    runs.push_back(r);
  }
  j["runs"] = runs;
  return j.dump(1) + "\n";
}

ExperimentReport report_from_json(const std::string& report_json, const std::string* timings_json) {
  try {
    const auto j = json::parse(report_json);
    if (j.at("format").get<std::string>() != kReportFormat) throw Error(ErrorKind::Input, "report: unsupported format");
    ExperimentReport rep;
    rep.version = j.at("version").get<std::string>();
    rep.config_hash = j.at("config_hash").get<std::string>();
    rep.config_json = j.at("config").dump();
    if (fnv1a_hex(rep.config_json) != rep.config_hash) {
      throw Error(ErrorKind::Input, "report: config hash does not match the stored configuration");
    }
    rep.master_seed = j.at("master_seed").get<std::uint64_t>();
    for (const auto& m : j.at("methods")) rep.methods.push_back(parse_method(m.get<std::string>()));
    for (const auto& r : j.at("runs")) {
      ScenarioRun run;
      run.scenario = scenario_from(r.at("scenario"), std::nullopt);
      run.true_inputs = r.at("true_inputs").get<dea::IndexSet>();
      for (const auto& tj : r.at("trials")) {
        TrialRecord t;
        t.trial = tj.at("trial").get<std::size_t>();
        t.seed = tj.at("seed").get<std::uint64_t>();
        t.true_efficiency = vector_from(tj.at("true_efficiency"));
        for (const auto& mj : tj.at("methods")) t.methods.push_back(method_from(mj));
        run.trials.push_back(std::move(t));
      }
      rep.runs.push_back(std::move(run));
    }
    rep.has_timings = false;
    if (timings_json) {
      const auto tj = json::parse(*timings_json);
      if (tj.at("config_hash").get<std::string>() != rep.config_hash) {
        throw Error(ErrorKind::Input, "timings file belongs to a different configuration");
      }
      const auto& truns = tj.at("runs");
      if (truns.size() != rep.runs.size()) throw Error(ErrorKind::Input, "timings file does not match the report");
      for (std::size_t r = 0; r < rep.runs.size(); ++r) {
        const auto& secs = truns[r].at("seconds");
        auto& run = rep.runs[r];
        for (const auto& [name, values] : secs.items()) {
          const auto m = parse_method(name);
          std::size_t t = 0;
          for (auto& trial : run.trials) {
            for (auto& mt : trial.methods) {
              if (mt.method != m) continue;
              if (t >= values.size()) throw Error(ErrorKind::Input, "timings file does not match the report");
              mt.seconds = values[t].is_null() ? std::nan("") : values[t].get<double>();
            }
            ++t;
          }
        }
      }
      rep.has_timings = true;
    }
    for (auto& run : rep.runs) run.aggregates = aggregate(run.trials, rep.methods, run.true_inputs);
    return rep;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Input, std::string("report: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Tables

namespace {

constexpr Method kTableMethods[] = {Method::GL, Method::ECM, Method::RB};

const Aggregate* find_aggregate(const ExperimentReport& report, int id, dea::Rts rts, Method m) {
  for (const auto& run : report.runs) {
    if (run.scenario.id != id || run.scenario.rts != rts) continue;
    for (const auto& a : run.aggregates) {
      if (a.method == m) return &a;
    }
  }
  return nullptr;
}

std::vector<int> scenario_ids(const ExperimentReport& report, std::optional<dea::Rts> rts) {
  std::vector<int> ids;
  for (const auto& run : report.runs) {
    if (rts && run.scenario.rts != *rts) continue;
    if (std::find(ids.begin(), ids.end(), run.scenario.id) == ids.end()) ids.push_back(run.scenario.id);
  }
  return ids;
}

using Field = std::optional<double> (*)(const Aggregate&);

std::optional<double> f_mse(const Aggregate& a) { return a.mse; }
std::optional<double> f_pearson(const Aggregate& a) { return a.pearson; }
std::optional<double> f_spearman(const Aggregate& a) { return a.spearman; }
std::optional<double> f_pct_all(const Aggregate& a) { return a.pct_all; }
std::optional<double> f_pct_eff(const Aggregate& a) { return a.pct_efficient; }
std::optional<double> f_seconds(const Aggregate& a) { return a.seconds; }

struct Column {
  std::string name;
  dea::Rts rts;
  Method method;
  Field field;
};

std::vector<Column> table_columns(int table) {
  std::vector<Column> cols;
  auto add_block = [&](const char* metric, dea::Rts rts, Field f, bool with_rts) {
    for (auto m : kTableMethods) {
      std::string name = std::string(metric) + "_";
      if (with_rts) name += std::string(dea::to_string(rts)) + "_";
      cols.push_back({name + to_string(m), rts, m, f});
    }
  };
  switch (table) {
    case 3:
    case 4: {
      const auto rts = table == 3 ? dea::Rts::CRS : dea::Rts::VRS;
      add_block("mse", rts, f_mse, false);
      add_block("pearson", rts, f_pearson, false);
      add_block("spearman", rts, f_spearman, false);
      break;
    }
    case 5:
      add_block("pct_all", dea::Rts::CRS, f_pct_all, true);
      add_block("pct_all", dea::Rts::VRS, f_pct_all, true);
      add_block("pct_efficient", dea::Rts::CRS, f_pct_eff, true);
      add_block("pct_efficient", dea::Rts::VRS, f_pct_eff, true);
      break;
    case 6:
      add_block("seconds", dea::Rts::CRS, f_seconds, true);
      add_block("seconds", dea::Rts::VRS, f_seconds, true);
      break;
    default: throw Error(ErrorKind::Input, "table number must be 3, 4, 5 or 6");
  }
  return cols;
}

}  // namespace

std::string table_csv(const ExperimentReport& report, int table) {
  const auto cols = table_columns(table);
  std::string out = "experiment";
  for (const auto& c : cols) out += "," + c.name;
  out += '\n';
  std::optional<dea::Rts> filter;
  if (table == 3) filter = dea::Rts::CRS;
  if (table == 4) filter = dea::Rts::VRS;
  for (int id : scenario_ids(report, filter)) {
    out += std::to_string(id);
    for (const auto& c : cols) {
      const auto* a = find_aggregate(report, id, c.rts, c.method);
      out += ",";
      if (a && (table != 6 || report.has_timings)) out += fmt(c.field(*a));
    }
    out += '\n';
  }
  return out;
}

std::string long_csv(const ExperimentReport& report) {
  std::string out = "scenario,rts,method,metric,value\n";
  const std::pair<const char*, Field> fields[] = {{"mse", f_mse},         {"pearson", f_pearson},
                                                  {"spearman", f_spearman}, {"pct_all", f_pct_all},
                                                  {"pct_efficient", f_pct_eff}, {"seconds", f_seconds}};
  for (const auto& run : report.runs) {
    for (const auto& a : run.aggregates) {
      const std::string prefix = std::to_string(run.scenario.id) + "," + dea::to_string(run.scenario.rts) + "," +
                                 to_string(a.method) + ",";
      for (const auto& [name, f] : fields) {
        if (std::string_view(name) == "seconds" && !report.has_timings) continue;
        out += prefix + name + "," + fmt(f(a)) + "\n";
      }
      out += prefix + "exact_selection_rate," + fmt(a.exact_selection_rate) + "\n";
    }
  }
  return out;
}

void emit_report(const ExperimentReport& report, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::Io, "cannot create output directory " + dir.string());
  const auto probe = dir / ".deasel-write-probe";
  {
    std::ofstream p(probe, std::ios::trunc);
    if (!p) throw Error(ErrorKind::Io, "output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);

  write_text(dir / kReportFile, report_to_json(report));
  if (report.has_timings) write_text(dir / kTimingsFile, timings_to_json(report));
  for (int t = 3; t <= 6; ++t) write_text(dir / ("table" + std::to_string(t) + ".csv"), table_csv(report, t));
  write_text(dir / kLongFile, long_csv(report));
}

ExperimentReport load_report(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / kReportFile : path;
  const auto text = read_text(file);
  const auto timings = file.parent_path() / kTimingsFile;
  if (fs::exists(timings)) {
    const auto ttext = read_text(timings);
    auto rep = report_from_json(text, &ttext);
    rep.output_dir = file.parent_path();
    return rep;
  }
  auto rep = report_from_json(text, nullptr);
  rep.output_dir = file.parent_path();
  return rep;
}

}  // namespace deasel::harness
