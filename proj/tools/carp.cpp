// carp: command-line front end for the CARP toolkit.

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <carp/engine.hpp>
#include <carp/graph_metrics.hpp>
#include <carp/influence.hpp>
#include <carp/meanfield.hpp>
#include <carp/mle.hpp>
#include <carp/risk_model.hpp>
#include <carp/synthetic.hpp>
#include <carp/validation.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef CARP_VERSION
#define CARP_VERSION "dev"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace carp;

namespace {

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string num(double v) { return csv::fmt_double(v); }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json params_json(const ModelParams& p) { return {{"alpha", p.alpha}, {"beta", p.beta}, {"gamma", p.gamma}}; }

struct Options {
  std::string command;
  std::string risks, pairs, history, mapping, dir, year, year_a, year_b;
  std::string out = "out";
  std::string manifest;
  std::string experiment;
  std::string aggregation = "sum";
  std::string initial = "passive";
  std::optional<double> alpha, beta, gamma;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs, months;
  std::int64_t horizon = 10000;
  std::size_t replicates = 125;
  double tol = 1e-12;
  std::size_t max_iter = 1'000'000;
  unsigned jobs = 1;
  double scale_max = 5.0;
  double epsilon = 0.5;
  bool prenormalized = false;
  double kappa = 99.0;
  double perturbation = 0.1;
  std::size_t size = 50;
  double density = 0.2;
  std::size_t burn_in = 120;

  LikelihoodScale scale() const { return {scale_max, epsilon, prenormalized}; }
  SteadyStateOptions steady() const { return {tol, max_iter, true}; }
};

// Files produced by a command, written together with the manifest.
class Artifacts {
 public:
  void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }
  void add_json(const std::string& name, const json& j) { add(name, j.dump(2) + "\n"); }

  void add_input(const std::string& role, const std::string& path) {
    if (path.empty()) return;
    inputs_.push_back({{"role", role}, {"path", path}, {"sha256", sha256_hex(slurp(path))}});
  }

  void write(const Options& o, const json& config) const {
    fs::create_directories(o.out);
    json outputs = json::array();
    for (const auto& [name, content] : files_) {
      std::ofstream f(fs::path(o.out) / name, std::ios::binary);
      if (!f) throw DataError("cannot write " + (fs::path(o.out) / name).string());
      f << content;
      outputs.push_back({{"path", name}, {"sha256", sha256_hex(content)}});
    }
    json m;
    m["tool"] = "carp";
    m["version"] = CARP_VERSION;
    m["command"] = o.command;
    m["seed"] = o.seed ? json(std::to_string(*o.seed)) : json(nullptr);
    m["config"] = config;
    m["inputs"] = inputs_;
    m["outputs"] = outputs;
    std::ofstream f(fs::path(o.out) / "manifest.json", std::ios::binary);
    f << m.dump(2) << "\n";
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
  json inputs_ = json::array();
};

// Every setting that can change an artifact, as command-line strings. The
// output directory and worker count are left out: neither affects results.
json config_of(const Options& o) {
  json c;
  auto put = [&](const char* k, const std::string& v) {
    if (!v.empty()) c[k] = v;
  };
  put("risks", o.risks);
  put("pairs", o.pairs);
  put("history", o.history);
  put("mapping", o.mapping);
  put("dir", o.dir);
  put("year", o.year);
  put("year-a", o.year_a);
  put("year-b", o.year_b);
  put("experiment", o.experiment);
  put("aggregation", o.aggregation);
  put("initial", o.initial);
  if (o.alpha) c["alpha"] = num(*o.alpha);
  if (o.beta) c["beta"] = num(*o.beta);
  if (o.gamma) c["gamma"] = num(*o.gamma);
  if (o.seed) c["seed"] = std::to_string(*o.seed);
  if (o.runs) c["runs"] = std::to_string(*o.runs);
  if (o.months) c["months"] = std::to_string(*o.months);
  c["horizon"] = std::to_string(o.horizon);
  c["replicates"] = std::to_string(o.replicates);
  c["tol"] = num(o.tol);
  c["max-iter"] = std::to_string(o.max_iter);
  c["scale-max"] = num(o.scale_max);
  c["epsilon"] = num(o.epsilon);
  c["prenormalized"] = o.prenormalized ? "true" : "false";
  c["kappa"] = num(o.kappa);
  c["perturbation"] = num(o.perturbation);
  c["size"] = std::to_string(o.size);
  c["density"] = num(o.density);
  c["burn-in"] = std::to_string(o.burn_in);
  return c;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw UsageError(what);
}

void require_seed(const Options& o) { require(o.seed.has_value(), o.command + " is stochastic: --seed is required"); }

RiskNetwork load_net(const Options& o, Artifacts& art) {
  require(!o.risks.empty() && !o.pairs.empty(), o.command + " needs --risks and --pairs");
  art.add_input("risks", o.risks);
  art.add_input("pairs", o.pairs);
  return load_network(o.risks, o.pairs, o.scale(), o.year);
}

HistoryMatrix load_hist(const Options& o, const RiskNetwork& net, Artifacts& art) {
  require(!o.history.empty(), o.command + " needs --history");
  art.add_input("history", o.history);
  return load_history(o.history, net);
}

json fit_json(const FitResult& r) {
  json flags = json::array();
  for (const auto& f : r.flags) flags.push_back(f);
  return {{"alpha", r.params.alpha},
          {"beta", r.params.beta},
          {"gamma", r.params.gamma},
          {"loglik", number_or_null(r.log_likelihood)},
          {"converged", r.converged},
          {"boundary_flags", flags},
          {"iterations", r.iterations},
          {"evaluations", r.evaluations},
          {"restarts", r.restarts}};
}

FitConfig fit_config(const Options& o) {
  FitConfig cfg;
  cfg.fixed_alpha = o.alpha;
  cfg.fixed_beta = o.beta;
  cfg.fixed_gamma = o.gamma;
  return cfg;
}

// Explicit --alpha/--beta/--gamma, or a fit of the missing ones to --history.
ModelParams resolve_params(const Options& o, const RiskNetwork& net, Artifacts& art,
                           std::optional<HistoryMatrix>& history, bool record_fit = true) {
  if (o.alpha && o.beta && o.gamma) {
    ModelParams p{*o.alpha, *o.beta, *o.gamma};
    p.validate();
    return p;
  }
  require(!o.history.empty(), o.command + " needs --alpha, --beta and --gamma or a --history to fit");
  if (!history) history = load_hist(o, net, art);
  const auto res = fit(*history, net, fit_config(o));
  if (record_fit) art.add_json("fit.json", fit_json(res));
  if (!res.converged) throw NumericalError("parameter fit did not converge");
  return res.params;
}

// ---------------------------------------------------------------------------

int cmd_fit(const Options& o, Artifacts& art) {
  const auto net = load_net(o, art);
  const auto h = load_hist(o, net, art);
  const auto res = fit(h, net, fit_config(o));
  art.add_json("fit.json", fit_json(res));
  return res.converged ? 0 : 3;
}

int cmd_simulate(const Options& o, Artifacts& art) {
  require_seed(o);
  require(o.horizon >= 1, "--horizon must be at least 1");
  const auto net = load_net(o, art);
  std::optional<HistoryMatrix> h;
  const auto params = resolve_params(o, net, art, h);
  NetworkState init = all_passive(net.size());
  if (o.initial == "last") {
    if (!h) h = load_hist(o, net, art);
    init.active = h->month_state(h->months() - 1);
  } else {
    require(o.initial == "passive", "--initial must be passive or last");
  }
  const std::size_t runs = o.runs.value_or(1000);
  const CarpDynamics dyn(net, params);
  const auto tr = simulate_trajectory(dyn, init, o.horizon, runs, *o.seed, o.jobs);

  std::string traj = "t,risk_id,frequency\n";
  for (std::size_t c = 0; c < tr.checkpoints.size(); ++c)
    for (std::size_t i = 0; i < net.size(); ++i)
      traj += std::to_string(tr.checkpoints[c]) + "," + csv::quote(net.risk(i).id) + "," + num(tr.frequency[c][i]) + "\n";
  art.add("trajectory.csv", traj);

  std::string stats = "risk_id,freq_active,freq_activation\n";
  for (std::size_t i = 0; i < net.size(); ++i) {
    double acts = 0.0;
    for (const auto& run : tr.activations) acts += run[i];
    acts /= static_cast<double>(runs) * static_cast<double>(o.horizon);
    stats += csv::quote(net.risk(i).id) + "," + num(tr.frequency.back()[i]) + "," + num(acts) + "\n";
  }
  art.add("statistics.csv", stats);

  std::string se = "t,risk_id,std_error\n";
  for (std::size_t c = 0; c < tr.checkpoints.size(); ++c)
    for (std::size_t i = 0; i < net.size(); ++i)
      se += std::to_string(tr.checkpoints[c]) + "," + csv::quote(net.risk(i).id) + "," + num(tr.std_error[c][i]) + "\n";
  art.add("trajectory_std_error.csv", se);
  art.add_json("simulate.json", {{"params", params_json(params)},
                                 {"runs", runs},
                                 {"horizon", o.horizon},
                                 {"initial", o.initial},
                                 {"checkpoints", tr.checkpoints}});
  return 0;
}

json steady_json(const SteadyState& st, const ModelParams& p, const Options& o) {
  return {{"params", params_json(p)},
          {"converged", st.converged},
          {"residual", st.residual},
          {"iterations", st.iterations},
          {"tol", o.tol},
          {"monotone", st.monotone},
          {"converged_from_one", st.converged_from_one},
          {"start_discrepancy", st.start_discrepancy},
          {"multiple_fixed_points", st.multiple_fixed_points}};
}

std::string steady_csv(const SteadyState& st, const RiskNetwork& net) {
  std::string s = "risk_id,p_hat\n";
  for (std::size_t i = 0; i < net.size(); ++i) s += csv::quote(net.risk(i).id) + "," + num(st.p_hat[i]) + "\n";
  return s;
}

int cmd_steady(const Options& o, Artifacts& art) {
  const auto net = load_net(o, art);
  std::optional<HistoryMatrix> h;
  const auto params = resolve_params(o, net, art, h);
  const auto st = solve_steady_state(net, params, o.steady());
  art.add("steady_state.csv", steady_csv(st, net));
  art.add_json("steady_state.json", steady_json(st, params, o));
  return st.converged ? 0 : 3;
}

void influence_artifacts(const Options& o, const RiskNetwork& net, const ModelParams& params, Artifacts& art) {
  require(o.aggregation == "sum" || o.aggregation == "mean", "--aggregation must be sum or mean");
  SteadyStateOptions so = o.steady();
  const auto I = risk_influence(net, params, so, o.jobs);
  const auto cats = categories_of(net);
  const auto C = category_influence(I, cats, o.aggregation == "sum" ? CategoryAggregation::sum : CategoryAggregation::mean,
                                    o.kappa);
  std::string inf = "source_id,target_id,influence\n";
  for (std::size_t i = 0; i < net.size(); ++i)
    for (std::size_t j = 0; j < net.size(); ++j)
      if (i != j) inf += csv::quote(net.risk(i).id) + "," + csv::quote(net.risk(j).id) + "," + num(I.at(i, j)) + "\n";
  art.add("influence.csv", inf);

  std::string cat = "source_cat,target_cat,raw,normalized,log_scaled\n";
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = 0; b < 5; ++b)
      cat += std::string(to_string(kAllCategories[a])) + "," + std::string(to_string(kAllCategories[b])) + "," +
             num(C.raw[a][b]) + "," + num(C.normalized[a][b]) + "," + num(C.log_scaled[a][b]) + "\n";
  art.add("category_influence.csv", cat);

  const auto& f = I.baseline;
  std::string fr = "risk_id,A_int,A_ext,A_rec,a_int,a_ext,a_rec\n";
  for (std::size_t i = 0; i < net.size(); ++i)
    fr += csv::quote(net.risk(i).id) + "," + num(f.A_int[i]) + "," + num(f.A_ext[i]) + "," + num(f.A_rec[i]) + "," +
          num(f.a_int[i]) + "," + num(f.a_ext[i]) + "," + num(f.a_rec[i]) + "\n";
  art.add("transition_fractions.csv", fr);
  art.add_json("influence.json", {{"params", params_json(params)},
                                  {"aggregation", o.aggregation},
                                  {"kappa", o.kappa},
                                  {"anomalies", I.anomalies},
                                  {"category_degenerate", C.degenerate}});
}

int cmd_influence(const Options& o, Artifacts& art) {
  const auto net = load_net(o, art);
  std::optional<HistoryMatrix> h;
  const auto params = resolve_params(o, net, art, h);
  influence_artifacts(o, net, params, art);
  return 0;
}

json stats_json(const RiskNetwork& net) {
  const auto p = compute_properties(net);
  return {{"year", net.year()},
          {"node_count", p.node_count},
          {"edge_count", p.edge_count},
          {"density", p.density},
          {"average_degree", p.average_degree},
          {"degree_assortativity", number_or_null(p.degree_assortativity)},
          {"average_clustering", p.average_clustering},
          {"diameter", p.diameter},
          {"average_shortest_path", p.average_shortest_path},
          {"max_clique_size", p.max_clique_size},
          {"connected", p.connected},
          {"largest_component_size", p.largest_component_size}};
}

int cmd_stats(const Options& o, Artifacts& art) {
  const auto net = load_net(o, art);
  art.add_json("stats.json", stats_json(net));
  return 0;
}

json recovery_json(const ValidationReport& r) {
  json warnings = json::array();
  for (const auto& w : r.warnings) warnings.push_back(w);
  return {{"ground_truth", params_json(r.ground_truth)},
          {"ground_truth_a", r.ground_truth_fractions.a},
          {"ground_truth_b", r.ground_truth_fractions.b},
          {"ground_truth_both_fraction", r.ground_truth_fractions.both_fraction},
          {"ground_truth_activation", r.ground_truth_activation},
          {"ground_truth_recovery", r.ground_truth_recovery},
          {"replicates", r.replicates.size()},
          {"failed", r.failed},
          {"retained", r.retained},
          {"discarded", r.discarded},
          {"activation_bound", r.activation_bound},
          {"recovery_bound", r.recovery_bound},
          {"warnings", warnings}};
}

std::string recovery_csv(const ValidationReport& r) {
  std::string s =
      "replicate,ok,alpha,beta,gamma,a,b,both_fraction,activation_param,activation_param_gt_fractions,recovery_param,ks,"
      "retained\n";
  for (std::size_t k = 0; k < r.replicates.size(); ++k) {
    const auto& x = r.replicates[k];
    s += std::to_string(k) + "," + (x.ok ? "1" : "0") + "," + num(x.params.alpha) + "," + num(x.params.beta) + "," +
         num(x.params.gamma) + "," + num(x.fractions.a) + "," + num(x.fractions.b) + "," +
         num(x.fractions.both_fraction) + "," + num(x.activation_parameter) + "," +
         num(x.activation_parameter_gt_fractions) + "," + num(x.recovery_parameter) + "," + num(x.ks) + "," +
         (x.retained ? "1" : "0") + "\n";
  }
  return s;
}

json forward_summary_json(const ForwardSummary& s) {
  return {{"mean", s.mean},
          {"worst_high", s.worst_high},
          {"worst_low", s.worst_low},
          {"worst_relative_deviation", number_or_null(s.worst_relative_deviation)}};
}

json coverage_json(const CoverageSeries& c, const ModelParams& p) {
  json inf = json::array();
  for (auto t : c.infinite_steps) inf.push_back(t);
  return {{"params", params_json(p)},
          {"multiple", number_or_null(c.multiple)},
          {"multiple_infinite", std::isinf(c.multiple)},
          {"infinite_steps", inf}};
}

int cmd_validate(const Options& o, Artifacts& art) {
  require_seed(o);
  const auto& ex = o.experiment;
  require(ex == "recovery" || ex == "forward" || ex == "network-effect" || ex == "sensitivity",
          "--experiment must be recovery, forward, network-effect or sensitivity");
  const auto net = load_net(o, art);
  std::optional<HistoryMatrix> h = load_hist(o, net, art);
  const auto params = resolve_params(o, net, art, h);
  const std::uint64_t seed = *o.seed;

  if (ex == "recovery" || ex == "forward") {
    RecoveryConfig rc;
    rc.replicates = o.replicates;
    rc.seed = derive_seed(seed, 0);
    rc.jobs = o.jobs;
    const auto rep = recovery_experiment(net, *h, params, rc);
    art.add_json("recovery.json", recovery_json(rep));
    art.add("recovery_replicates.csv", recovery_csv(rep));
    if (ex == "forward") {
      const auto sets = rep.retained_params();
      const std::size_t months = o.months.value_or(12), runs = o.runs.value_or(100);
      const auto fw = forward_error_bounds(net, *h, params, sets, months, runs, derive_seed(seed, 1), o.jobs);
      art.add_json("forward.json", {{"months", months},
                                    {"runs", runs},
                                    {"validation_sets", sets.size()},
                                    {"ground_truth_active", fw.ground_truth.mean_active_fraction},
                                    {"ground_truth_activations", fw.ground_truth.mean_activations_per_risk},
                                    {"active", forward_summary_json(fw.active)},
                                    {"activations", forward_summary_json(fw.activations)}});
      std::string s = "set,alpha,beta,gamma,freq_active,freq_activation\n";
      s += "ground_truth," + num(params.alpha) + "," + num(params.beta) + "," + num(params.gamma) + "," +
           num(fw.ground_truth.mean_active_fraction) + "," + num(fw.ground_truth.mean_activations_per_risk) + "\n";
      for (std::size_t k = 0; k < fw.sets.size(); ++k)
        s += "validation_" + std::to_string(k) + "," + num(sets[k].alpha) + "," + num(sets[k].beta) + "," +
             num(sets[k].gamma) + "," + num(fw.sets[k].mean_active_fraction) + "," +
             num(fw.sets[k].mean_activations_per_risk) + "\n";
      art.add("forward.csv", s);
    }
  } else if (ex == "network-effect") {
    const std::size_t runs = o.runs.value_or(100);
    const auto rep = network_effect_comparison(net, *h, params, runs, seed, {}, o.jobs);
    art.add_json("network_effect.json", {{"runs", runs},
                                         {"network", coverage_json(rep.network, rep.network_params)},
                                         {"independent", coverage_json(rep.independent, rep.independent_params)},
                                         {"ratio", number_or_null(rep.ratio)}});
    std::string s = "step,month,historical,network_mean,network_std,independent_mean,independent_std\n";
    for (std::size_t t = 0; t < rep.historical.size(); ++t)
      s += std::to_string(t + 1) + "," + h->month_labels()[t + 1] + "," + num(rep.historical[t]) + "," +
           num(rep.network.mean[t]) + "," + num(rep.network.stddev[t]) + "," + num(rep.independent.mean[t]) + "," +
           num(rep.independent.stddev[t]) + "\n";
    art.add("network_effect.csv", s);
  } else {
    SensitivityConfig sc;
    sc.perturbation = o.perturbation;
    sc.seed = seed;
    sc.jobs = o.jobs;
    sc.steady = o.steady();
    const auto rep = sensitivity_suite(net, *h, params, sc);
    json singles = json::array();
    for (const auto& p : rep.single_history_params) singles.push_back(params_json(p));
    art.add_json("sensitivity.json", {{"perturbation", o.perturbation},
                                      {"params", params_json(params)},
                                      {"all_history_params", params_json(rep.all_history_params)},
                                      {"single_history_params", singles}});
    std::string s = "rank,risk_id,baseline,single_likelihood,single_history,all_likelihood,all_history\n";
    for (std::size_t r = 0; r < rep.order.size(); ++r) {
      const auto i = rep.order[r];
      s += std::to_string(r + 1) + "," + csv::quote(net.risk(i).id) + "," + num(rep.baseline[i]) + "," +
           num(rep.single_likelihood[i]) + "," + num(rep.single_history[i]) + "," + num(rep.all_likelihood[i]) + "," +
           num(rep.all_history[i]) + "\n";
    }
    art.add("sensitivity.csv", s);
  }
  return 0;
}

int cmd_pipeline(const Options& in, Artifacts& art) {
  Options o = in;
  if (!o.dir.empty()) {
    const fs::path d(o.dir);
    if (o.risks.empty()) o.risks = (d / "risks.csv").string();
    if (o.pairs.empty()) o.pairs = (d / "pairs.csv").string();
    if (o.history.empty()) o.history = (d / "history.csv").string();
    if (o.year.empty()) o.year = d.filename().string();
  }
  const auto net = load_net(o, art);
  std::optional<HistoryMatrix> h;
  const auto params = resolve_params(o, net, art, h);
  const auto st = solve_steady_state(net, params, o.steady());
  art.add("steady_state.csv", steady_csv(st, net));
  art.add_json("steady_state.json", steady_json(st, params, o));
  if (!st.converged) return 3;
  influence_artifacts(o, net, params, art);
  art.add_json("stats.json", stats_json(net));
  return 0;
}

int cmd_synth(const Options& o, Artifacts& art) {
  require_seed(o);
  synthetic::NetworkSpec spec;
  spec.risks = o.size;
  spec.density = o.density;
  spec.scale = {o.scale_max, o.epsilon, false};
  spec.year = o.year.empty() ? "synthetic" : o.year;
  ModelParams p = synthetic::kFixtureParams;
  if (o.alpha) p.alpha = *o.alpha;
  if (o.beta) p.beta = *o.beta;
  if (o.gamma) p.gamma = *o.gamma;
  p.validate();
  require(o.months.value_or(156) >= 2, "--months must be at least 2");
  const auto net = synthetic::random_network(spec, *o.seed);
  const auto sim = synthetic::random_history(net, p, o.months.value_or(156), o.burn_in, *o.seed);
  std::ostringstream r, pr, hi;
  write_risks_csv(r, net);
  write_pairs_csv(pr, net);
  write_history_csv(hi, sim.history);
  art.add("risks.csv", r.str());
  art.add("pairs.csv", pr.str());
  art.add("history.csv", hi.str());
  const auto fr = AttributionFractions::from(sim.causes);
  art.add_json("truth.json", {{"params", params_json(p)},
                              {"activations", fr.activations},
                              {"a", fr.a},
                              {"b", fr.b},
                              {"both_fraction", fr.both_fraction}});
  return 0;
}

int cmd_align(const Options& o, Artifacts& art) {
  require(!o.mapping.empty() && !o.year_a.empty() && !o.year_b.empty(), "align needs --mapping, --year-a and --year-b");
  art.add_input("mapping", o.mapping);
  const auto rep = map_cross_year(load_mapping(o.mapping), o.year_a, o.year_b);
  auto groups = [](const std::vector<CodeGroupChange>& g) {
    json a = json::array();
    for (const auto& c : g) a.push_back({{"from", c.from}, {"to", c.to}});
    return a;
  };
  art.add_json("alignment.json", {{"year_a", rep.year_a},
                                  {"year_b", rep.year_b},
                                  {"matched", rep.matched},
                                  {"vanished", rep.vanished},
                                  {"appeared", rep.appeared},
                                  {"merged", groups(rep.merged)},
                                  {"split", groups(rep.split)},
                                  {"renamed", groups(rep.renamed)},
                                  {"regrouped", groups(rep.regrouped)}});
  return 0;
}

int dispatch(const Options& o) {
  require(o.tol > 0.0, "--tol must be positive");
  require(o.max_iter > 0, "--max-iter must be positive");
  require(o.jobs > 0, "--jobs must be positive");
  Artifacts art;
  int status = 0;
  const auto& c = o.command;
  if (c == "fit") status = cmd_fit(o, art);
  else if (c == "simulate") status = cmd_simulate(o, art);
  else if (c == "steady-state") status = cmd_steady(o, art);
  else if (c == "validate") status = cmd_validate(o, art);
  else if (c == "influence") status = cmd_influence(o, art);
  else if (c == "stats") status = cmd_stats(o, art);
  else if (c == "pipeline") status = cmd_pipeline(o, art);
  else if (c == "synth") status = cmd_synth(o, art);
  else if (c == "align") status = cmd_align(o, art);
  else throw UsageError("unknown command " + c);
  art.write(o, config_of(o));
  return status;
}

void add_options(CLI::App& app, Options& o) {
  app.add_option("--risks", o.risks, "risk catalog CSV (id,numeric_code,name,category,likelihood)");
  app.add_option("--pairs", o.pairs, "expert pair counts CSV (risk_a,risk_b,count)");
  app.add_option("--history", o.history, "monthly states CSV, long (month,risk_id,state) or wide form");
  app.add_option("--mapping", o.mapping, "cross-year code mapping CSV (numeric_code,year,year_index)");
  app.add_option("--dir", o.dir, "year directory holding risks.csv, pairs.csv and history.csv (pipeline)");
  app.add_option("--year", o.year, "label of the network snapshot");
  app.add_option("--year-a", o.year_a, "earlier year (align)");
  app.add_option("--year-b", o.year_b, "later year (align)");
  app.add_option("--alpha", o.alpha, "internal activation exponent; fitted when omitted");
  app.add_option("--beta", o.beta, "external activation exponent; fitted when omitted");
  app.add_option("--gamma", o.gamma, "continuation exponent; fitted when omitted");
  app.add_option("--seed", o.seed, "master seed (required by simulate, validate and synth)");
  app.add_option("--runs", o.runs, "Monte Carlo runs (simulate: 1000, validate: 100)");
  app.add_option("--horizon", o.horizon, "simulation horizon in months")->capture_default_str();
  app.add_option("--months", o.months, "forward months (validate forward: 12) or history length (synth: 156)");
  app.add_option("--replicates", o.replicates, "recovery replicates")->capture_default_str();
  app.add_option("--tol", o.tol, "steady-state tolerance")->capture_default_str();
  app.add_option("--max-iter", o.max_iter, "steady-state iteration cap")->capture_default_str();
  app.add_option("--out", o.out, "output directory")->capture_default_str();
  app.add_option("--jobs", o.jobs, "worker threads; results do not depend on it")->capture_default_str();
  app.add_option("--scale-max", o.scale_max, "survey likelihood scale maximum")->capture_default_str();
  app.add_option("--epsilon", o.epsilon, "margin in L = l / (scale_max + epsilon)")->capture_default_str();
  app.add_flag("--prenormalized", o.prenormalized, "catalog likelihoods are already in (0, 1)");
  app.add_option("--experiment", o.experiment, "validate experiment")
      ->check(CLI::IsMember({"recovery", "forward", "network-effect", "sensitivity"}));
  app.add_option("--aggregation", o.aggregation, "category influence aggregation")
      ->check(CLI::IsMember({"sum", "mean"}))
      ->capture_default_str();
  app.add_option("--kappa", o.kappa, "display transform ln(1 + kappa * normalized)")->capture_default_str();
  app.add_option("--perturbation", o.perturbation, "sensitivity cut fraction")->capture_default_str();
  app.add_option("--initial", o.initial, "simulate start: passive or last history month")
      ->check(CLI::IsMember({"passive", "last"}))
      ->capture_default_str();
  app.add_option("--size", o.size, "synth: number of risks")->capture_default_str();
  app.add_option("--density", o.density, "synth: edge density")->capture_default_str();
  app.add_option("--burn-in", o.burn_in, "synth: months discarded before the history")->capture_default_str();
}

// Re-runs the command recorded in a manifest after checking its inputs.
int replay(const std::string& manifest_path, const std::string& out, unsigned jobs, const std::string& argv0) {
  json m;
  try {
    m = json::parse(slurp(manifest_path));
  } catch (const json::exception& e) {
    throw DataError("bad manifest " + manifest_path + ": " + e.what());
  }
  if (!m.contains("command") || !m.contains("config") || !m.contains("inputs"))
    throw DataError("manifest " + manifest_path + " lacks command, config or inputs");
  for (const auto& in : m["inputs"]) {
    const std::string path = in.at("path");
    if (sha256_hex(slurp(path)) != in.at("sha256").get<std::string>())
      throw DataError("input " + path + " changed since the manifest was written");
  }
  std::vector<std::string> args{argv0, m["command"].get<std::string>()};
  for (const auto& [k, v] : m["config"].items()) {
    if (k == "prenormalized") {
      if (v.get<std::string>() == "true") args.push_back("--prenormalized");
      continue;
    }
    args.push_back("--" + k);
    args.push_back(v.get<std::string>());
  }
  args.push_back("--out");
  args.push_back(out);
  args.push_back("--jobs");
  args.push_back(std::to_string(jobs));

  CLI::App app{"carp"};
  Options o;
  add_options(app, o);
  app.require_subcommand(1);
  for (const char* c : {"fit", "simulate", "steady-state", "validate", "influence", "stats", "pipeline", "synth", "align"})
    app.add_subcommand(c)->fallthrough();
  std::vector<const char*> cargs;
  for (const auto& a : args) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    throw DataError(std::string("manifest config does not parse: ") + e.what());
  }
  o.command = app.get_subcommands().front()->get_name();
  return dispatch(o);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"carp: cascading alternating renewal process toolkit for risk networks"};
  app.set_version_flag("--version", CARP_VERSION);
  app.set_config("--config", "", "flat 'key = value' file using the long option names; flags override it");
  Options o;
  add_options(app, o);
  app.require_subcommand(1);
  app.fallthrough();

  struct Cmd {
    const char* name;
    const char* help;
  };
  const Cmd cmds[] = {
      {"fit", "maximum likelihood (alpha, beta, gamma) -> fit.json"},
      {"simulate", "Monte Carlo trajectories -> trajectory.csv, statistics.csv"},
      {"steady-state", "mean-field fixed point -> steady_state.csv, steady_state.json"},
      {"validate", "validation experiment selected by --experiment"},
      {"influence", "risk and category influence -> influence.csv, category_influence.csv"},
      {"stats", "network properties -> stats.json"},
      {"pipeline", "fit, steady state, influence and stats for one year directory"},
      {"synth", "synthetic network and history -> risks.csv, pairs.csv, history.csv"},
      {"align", "cross-year code alignment -> alignment.json"},
  };
  for (const auto& c : cmds) app.add_subcommand(c.name, c.help)->fallthrough();
  std::string manifest;
  auto* rp = app.add_subcommand("replay", "re-run the command recorded in a manifest into --out");
  rp->add_option("--manifest", manifest, "manifest.json of an earlier run")->required();
  rp->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  o.command = app.get_subcommands().front()->get_name();
  try {
    if (o.command == "replay") return replay(manifest, o.out, o.jobs, argv[0]);
    return dispatch(o);
  } catch (const UsageError& e) {
    std::cerr << "carp: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "carp: data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "carp: numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "carp: " << e.what() << "\n";
    return 2;
  }
}
