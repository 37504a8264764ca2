#include "minmarg/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <utility>

#include "minmarg/analysis.hpp"
#include "minmarg/closed_form.hpp"
#include "minmarg/finance.hpp"
#include "minmarg/io.hpp"
#include "minmarg/oracle.hpp"

namespace minmarg {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void require_keys(const json& obj, const std::string& ctx,
                  const std::set<std::string>& allowed) {
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      fail(ctx + ": unknown field \"" + item.key() + "\"");
}

const json& require_field(const json& obj, const std::string& ctx,
                          const std::string& key) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(ctx + ": missing required field \"" + key + "\"");
  return *it;
}

double as_number(const json& v, const std::string& ctx) {
  if (!v.is_number()) fail(ctx + ": expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& ctx) {
  if (!v.is_number_integer()) fail(ctx + ": expected an integer");
  return v.get<int>();
}

std::vector<double> as_number_array(const json& v, const std::string& ctx) {
  if (!v.is_array()) fail(ctx + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(as_number(e, ctx));
  return out;
}

MarginalSpec parse_marginal(const json& j, const std::string& ctx) {
  if (!j.is_object()) fail(ctx + ": expected an object");
  const json& kind_field = require_field(j, ctx, "kind");
  if (!kind_field.is_string()) fail(ctx + ".kind: expected a string");
  const std::string kind = kind_field.get<std::string>();

  MarginalSpec spec;
  if (kind == "uniform") {
    require_keys(j, ctx, {"kind"});
    spec = MarginalSpec::uniform();
  } else if (kind == "gaussian") {
    require_keys(j, ctx, {"kind", "mu", "sigma2"});
    const double mu = as_number(require_field(j, ctx, "mu"), ctx + ".mu");
    const double s2 =
        as_number(require_field(j, ctx, "sigma2"), ctx + ".sigma2");
    if (!(s2 > 0.0)) fail(ctx + ".sigma2: must be > 0");
    spec = MarginalSpec::gaussian(mu, s2);
  } else if (kind == "beta") {
    require_keys(j, ctx, {"kind", "alpha", "beta"});
    const double a = as_number(require_field(j, ctx, "alpha"), ctx + ".alpha");
    const double b = as_number(require_field(j, ctx, "beta"), ctx + ".beta");
    if (!(a > 0.0)) fail(ctx + ".alpha: must be > 0");
    if (!(b > 0.0)) fail(ctx + ".beta: must be > 0");
    spec = MarginalSpec::beta_density(a, b);
  } else if (kind == "tabulated") {
    require_keys(j, ctx, {"kind", "values"});
    spec = MarginalSpec::tabulated(
        as_number_array(require_field(j, ctx, "values"), ctx + ".values"));
  } else {
    fail(ctx + ".kind: unknown kind \"" + kind + "\"");
  }
  // The command line treats every marginal as a density of unit mass.
  spec.normalize = true;
  spec.target_mass = 1.0;
  return spec;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) fail("config: expected a JSON object");
  require_keys(root, "config",
               {"n", "m", "marginals", "p_targets", "solver", "weights",
                "seed", "out_dir"});

  ExperimentConfig config;
  config.n = as_int(require_field(root, "config", "n"), "n");
  if (config.n < 2) fail("n: must be >= 2");
  config.m = as_int(require_field(root, "config", "m"), "m");
  if (config.m < 2) fail("m: must be >= 2");

  const json& marginals = require_field(root, "config", "marginals");
  if (!marginals.is_array()) fail("marginals: expected an array");
  if (marginals.size() != static_cast<std::size_t>(config.n)) {
    std::ostringstream os;
    os << "marginals: expected " << config.n << " entries, got "
       << marginals.size();
    fail(os.str());
  }
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    std::ostringstream ctx;
    ctx << "marginals[" << i << "]";
    config.marginals.push_back(parse_marginal(marginals[i], ctx.str()));
    if (config.marginals.back().kind == MarginalSpec::Kind::Tabulated &&
        config.marginals.back().values.size() !=
            static_cast<std::size_t>(config.m)) {
      std::ostringstream os;
      os << ctx.str() << ".values: expected m=" << config.m << " entries, got "
         << config.marginals.back().values.size();
      fail(os.str());
    }
  }

  config.p_targets =
      as_number_array(require_field(root, "config", "p_targets"), "p_targets");
  if (config.p_targets.empty()) fail("p_targets: must not be empty");
  for (double p : config.p_targets)
    if (!(p > 1.0)) fail("p_targets: every target must be > 1");

  if (root.contains("solver")) {
    const json& solver = root["solver"];
    if (!solver.is_object()) fail("solver: expected an object");
    require_keys(solver, "solver", {"tol", "max_iter", "epsilon", "delta_p"});
    if (solver.contains("tol")) {
      config.solver.tol_residual = as_number(solver["tol"], "solver.tol");
      if (!(config.solver.tol_residual > 0.0)) fail("solver.tol: must be > 0");
    }
    if (solver.contains("max_iter")) {
      config.solver.max_iter = as_int(solver["max_iter"], "solver.max_iter");
      if (config.solver.max_iter < 1) fail("solver.max_iter: must be >= 1");
    }
    if (solver.contains("epsilon")) {
      config.solver.epsilon = as_number(solver["epsilon"], "solver.epsilon");
      if (config.solver.epsilon < 0.0) fail("solver.epsilon: must be >= 0");
    }
    if (solver.contains("delta_p")) {
      config.solver.delta_p = as_number(solver["delta_p"], "solver.delta_p");
      if (!(config.solver.delta_p > 0.0)) fail("solver.delta_p: must be > 0");
    }
  }

  if (root.contains("weights")) {
    const json& weights = root["weights"];
    if (!weights.is_object()) fail("weights: expected an object");
    const json& kind_field = require_field(weights, "weights", "kind");
    if (!kind_field.is_string()) fail("weights.kind: expected a string");
    const std::string kind = kind_field.get<std::string>();
    WeightsConfig wc;
    if (kind == "product") {
      require_keys(weights, "weights", {"kind", "factors"});
      const json& factors = require_field(weights, "weights", "factors");
      if (!factors.is_array() ||
          factors.size() != static_cast<std::size_t>(config.n))
        fail("weights.factors: expected one factor per axis");
      wc.is_product = true;
      for (std::size_t i = 0; i < factors.size(); ++i) {
        std::ostringstream ctx;
        ctx << "weights.factors[" << i << "]";
        wc.factors.push_back(parse_marginal(factors[i], ctx.str()));
      }
    } else if (kind == "tensor") {
      require_keys(weights, "weights", {"kind", "values"});
      wc.is_product = false;
      wc.tensor_values = as_number_array(
          require_field(weights, "weights", "values"), "weights.values");
    } else {
      fail("weights.kind: must be \"product\" or \"tensor\"");
    }
    config.weights = std::move(wc);
  }

  if (root.contains("seed")) {
    const json& seed = root["seed"];
    if (!seed.is_number_integer() || seed.get<long long>() < 0)
      fail("seed: expected a non-negative integer");
    config.seed = seed.get<std::uint64_t>();
  }

  const json& out_dir = require_field(root, "config", "out_dir");
  if (!out_dir.is_string() || out_dir.get<std::string>().empty())
    fail("out_dir: expected a non-empty string");
  config.out_dir = out_dir.get<std::string>();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::optional<std::string>& out_dir_override) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();

  json root;
  try {
    root = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  if (out_dir_override) {
    if (!root.is_object()) fail("config: expected a JSON object");
    root["out_dir"] = *out_dir_override;
  }
  return parse_config(root.dump());
}

namespace {

struct Instance {
  Mesh mesh;
  std::vector<MarginalTable> marginals;
  std::optional<MeasureWeights> weights;
};

Instance realize(const ExperimentConfig& config) {
  try {
    Instance inst{build_mesh(config.n, config.m), {}, {}};
    for (const auto& spec : config.marginals)
      inst.marginals.push_back(sample_marginal(spec, inst.mesh));
    if (config.weights) {
      if (config.weights->is_product) {
        std::vector<MarginalTable> factors;
        for (const auto& spec : config.weights->factors)
          factors.push_back(sample_marginal(spec, inst.mesh));
        inst.weights =
            WeightSpec::product(std::move(factors)).materialize(inst.mesh);
      } else {
        inst.weights = WeightSpec::tensor(config.weights->tensor_values)
                           .materialize(inst.mesh);
      }
    }
    return inst;
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

std::string p_repr(double p) { return json(p).dump(); }

json summary_json(const SolveReport& report, const ExperimentConfig& config,
                  double p) {
  json s;
  s["p"] = p;
  s["n"] = config.n;
  s["m"] = config.m;
  s["bound"] = report.bound;
  s["residual_inf"] = report.residual_inf;
  s["gauge_inf"] = report.gauge_inf;
  s["iterations"] = report.iterations;
  s["converged"] = report.converged;
  return s;
}

std::filesystem::path prepare_out_dir(const ExperimentConfig& config) {
  const std::filesystem::path dir = config.out_dir;
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<SolveReport> run_targets(const Instance& inst,
                                     const ExperimentConfig& config) {
  return continuation_sweep_weighted(
      inst.marginals, inst.mesh, config.p_targets, config.solver,
      inst.weights ? &*inst.weights : nullptr);
}

void dump_json(const std::filesystem::path& path, const json& value) {
  write_text_file(path, value.dump(2) + "\n");
}

}  // namespace

int run_solve(const ExperimentConfig& config) {
  if (config.p_targets.size() != 1)
    fail("solve expects a single entry in p_targets; use sweep for several");
  const Instance inst = realize(config);
  const SolveReport report = run_targets(inst, config).front();
  const double p = config.p_targets.front();

  const auto dir = prepare_out_dir(config);
  write_potentials_csv(dir / ("potentials_p" + p_repr(p) + ".csv"), inst.mesh,
                       report.potentials);
  dump_json(dir / "summary.json", summary_json(report, config, p));
  return report.converged ? 0 : 2;
}

int run_sweep(const ExperimentConfig& config) {
  const Instance inst = realize(config);
  const std::vector<SolveReport> reports = run_targets(inst, config);
  const auto dir = prepare_out_dir(config);

  json index;
  index["runs"] = json::array();
  std::ostringstream long_csv;
  long_csv << "p,axis,xi,phi\n";
  bool all_converged = true;
  for (std::size_t r = 0; r < reports.size(); ++r) {
    const double p = config.p_targets[r];
    const SolveReport& report = reports[r];
    const std::string csv_name = "potentials_p" + p_repr(p) + ".csv";
    write_potentials_csv(dir / csv_name, inst.mesh, report.potentials);

    json entry = summary_json(report, config, p);
    entry["potentials_csv"] = csv_name;
    index["runs"].push_back(std::move(entry));
    all_converged = all_converged && report.converged;

    for (int axis = 0; axis < inst.mesh.dim(); ++axis)
      for (int k = 0; k < inst.mesh.cells(); ++k)
        long_csv << p_repr(p) << ',' << (axis + 1) << ','
                 << format_double(inst.mesh.centers()[k]) << ','
                 << format_double(report.potentials.phis[axis][k]) << '\n';
  }
  index["all_converged"] = all_converged;
  write_text_file(dir / "sweep_long.csv", long_csv.str());
  dump_json(dir / "index.json", index);
  return all_converged ? 0 : 2;
}

int run_verify(const ExperimentConfig& config, bool inject_corruption) {
  if (config.weights)
    fail("verify checks the unweighted problem; remove \"weights\"");
  const Instance inst = realize(config);
  const std::vector<SolveReport> reports = run_targets(inst, config);
  const auto dir = prepare_out_dir(config);

  json report_doc;
  report_doc["runs"] = json::array();
  bool all_passed = true;

  for (std::size_t r = 0; r < reports.size(); ++r) {
    const double p = config.p_targets[r];
    PotentialSet potentials = reports[r].potentials;
    if (inject_corruption)
      for (double& v : potentials.phis[0]) v += 0.1;

    json run;
    run["p"] = p;
    run["checks"] = json::array();
    auto add_check = [&](const std::string& name, bool passed, double value,
                         double threshold, const std::string& note = "") {
      json c;
      c["name"] = name;
      c["passed"] = passed;
      c["value"] = value;
      c["threshold"] = threshold;
      if (!note.empty()) c["note"] = note;
      run["checks"].push_back(std::move(c));
      all_passed = all_passed && passed;
    };

    add_check("solver_converged", reports[r].converged,
              reports[r].residual_inf, config.solver.tol_residual);

    {
      const std::vector<double> res =
          residual_vector(potentials, inst.marginals, inst.mesh, 0.0);
      double sup = 0.0;
      for (double v : res) sup = std::max(sup, std::abs(v));
      add_check("residual_inf", sup <= config.solver.tol_residual, sup,
                config.solver.tol_residual);
    }

    try {
      const BoundReport bound = sharp_bound(potentials, inst.mesh);
      add_check("attainment_identity", bound.attainment_rel_error <= 1e-12,
                bound.attainment_rel_error, 1e-12);
    } catch (const std::logic_error& e) {
      add_check("attainment_identity", false, 1.0, 1e-12, e.what());
    }

    {
      GridTable product(inst.mesh.cell_count());
      std::vector<int> idx(inst.mesh.dim(), 0);
      for (std::size_t flat = 0; flat < product.size(); ++flat) {
        double v = 1.0;
        for (int i = 0; i < inst.mesh.dim(); ++i)
          v *= inst.marginals[i].values[idx[i]];
        product[flat] = v;
        for (int a = inst.mesh.dim() - 1; a >= 0; --a) {
          if (++idx[a] < inst.mesh.cells()) break;
          idx[a] = 0;
        }
      }
      try {
        const DualityRecord rec =
            duality_check(potentials, product, inst.mesh);
        add_check("duality_product_joint", rec.passed, rec.gap,
                  -kDualityGapTolerance);
      } catch (const std::invalid_argument& e) {
        add_check("duality_product_joint", false,
                  std::numeric_limits<double>::quiet_NaN(),
                  -kDualityGapTolerance, e.what());
      }
    }

    {
      const ProbeResult probe =
          minimality_probe(potentials, inst.mesh, 100, 1e-3, config.seed);
      add_check("minimality_probe_drop", probe.min_drop >= -1e-9,
                probe.min_drop, -1e-9);
      add_check("minimality_probe_pairing", probe.max_abs_pairing <= 1e-9,
                probe.max_abs_pairing, 1e-9);
    }

    if (inst.mesh.cells() <= PrimalProblem::kMaxCells &&
        inst.mesh.dim() <= PrimalProblem::kMaxDim) {
      const CrossValidation cv =
          cross_validate(inst.marginals, p, inst.mesh, 1e-6);
      add_check("oracle_density_sup_diff", cv.density_sup_diff <= 1e-4,
                cv.density_sup_diff, 1e-4);
      add_check("oracle_objective_rel_diff", cv.objective_rel_diff <= 1e-6,
                cv.objective_rel_diff, 1e-6);
    }

    report_doc["runs"].push_back(std::move(run));
  }

  report_doc["all_passed"] = all_passed;
  dump_json(dir / "verify_report.json", report_doc);
  return all_passed ? 0 : 3;
}

int run_decompose(const std::filesystem::path& payoff_csv,
                  std::optional<double> k0, const std::string& out_dir) {
  PayoffTable table;
  PayoffDecomposition dec;
  try {
    table = read_payoff_csv(payoff_csv);
    const double split = k0 ? *k0 : table.strikes[table.strikes.size() / 2];
    dec = carr_madan_decompose(table.strikes, table.values, split);
  } catch (const std::exception& e) {
    fail(e.what());
  }

  const std::vector<double> recon = reconstruct(dec, table.strikes);
  double sup_error = 0.0;
  for (std::size_t j = 1; j + 1 < table.strikes.size(); ++j)
    sup_error = std::max(sup_error, std::abs(recon[j] - table.values[j]));

  const std::filesystem::path dir = out_dir;
  std::filesystem::create_directories(dir);

  std::ostringstream weights_csv;
  weights_csv << "strike,leg,weight\n";
  for (std::size_t j = 0; j < dec.put_strikes.size(); ++j)
    weights_csv << format_double(dec.put_strikes[j]) << ",put,"
                << format_double(dec.put_weights[j]) << '\n';
  weights_csv << format_double(dec.k0) << ",k0,"
              << format_double(dec.k0_convexity) << '\n';
  for (std::size_t j = 0; j < dec.call_strikes.size(); ++j)
    weights_csv << format_double(dec.call_strikes[j]) << ",call,"
                << format_double(dec.call_weights[j]) << '\n';
  write_text_file(dir / "weights.csv", weights_csv.str());

  json doc;
  doc["k0"] = dec.k0;
  doc["k0_index"] = dec.k0_index;
  doc["bond_units"] = dec.bond_units;
  doc["forward_units"] = dec.forward_units;
  doc["k0_convexity"] = dec.k0_convexity;
  doc["put_count"] = dec.put_strikes.size();
  doc["call_count"] = dec.call_strikes.size();
  doc["reconstruction_sup_error"] = sup_error;
  doc["weights_csv"] = "weights.csv";
  dump_json(dir / "decomposition.json", doc);
  return 0;
}

}  // namespace minmarg
