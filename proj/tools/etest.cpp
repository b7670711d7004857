// etest command-line interface.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "etest/bootstrap.hpp"
#include "etest/calibrate.hpp"
#include "etest/config_io.hpp"
#include "etest/embedding_io.hpp"
#include "etest/harness.hpp"
#include "etest/power.hpp"
#include "etest/sweep.hpp"
#include "etest/tensor_io.hpp"

namespace {

using nlohmann::json;
using namespace etest;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + path);
  out << text;
  require(static_cast<bool>(out), ErrorCode::IoError, "write failed: " + path);
}

json decisions_json(const std::vector<evalue::LevelDecision>& ds) {
  json a = json::array();
  for (const auto& d : ds) {
    a.push_back({{"alpha", d.alpha}, {"reject", d.decision == evalue::Decision::Reject}});
  }
  return a;
}

Exec exec_from(bool serial) { return serial ? Exec::Serial : Exec::Parallel; }

std::uint64_t default_seed() {
  if (const char* s = std::getenv("ETEST_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      fail(ErrorCode::ConfigError, "ETEST_SEED must be an unsigned integer");
    }
  }
  return 1;
}

struct Options {
  // split
  std::string config, in, out1, out2;
  // test
  std::string emb, image_id, q0_id, q1_id;
  double lambda = 1.0;
  std::vector<double> levels = {0.02, 0.05, 0.1, 0.15, 0.2};
  // calibrate
  std::string scores;
  double target = calib::kDefaultTarget;
  double lambda_max = calib::kDefaultLambdaMax;
  // power
  std::string spec, mode = "closed", fidelity = "linearized";
  std::uint64_t trials = 100000;
  // bootstrap
  std::size_t k = 200;
  double kappa = 0.0;
  // run / sweep
  std::string scenario, csv;
  std::vector<double> taus;
  std::size_t sweep_trials = 2000;
  bool with_runtime = false;
  // shared
  std::string out;
  std::uint64_t seed = 1;
  bool serial = false;
};

void cmd_split(const Options& o) {
  const Tensor t = read_tensor(o.in);
  const Vector y = t.to_vector();
  const auto cfg = split_config_from_json(read_json(o.config), static_cast<std::size_t>(y.size()));
  const NoiseFamily family =
      std::holds_alternative<split::PoissonConfig>(cfg) ? NoiseFamily::ScaledPoisson : NoiseFamily::Gaussian;
  Rng rng(o.seed);
  const auto pair = split::apply(cfg, MeasurementVec(y, family), rng);
  Tensor t1 = t, t2 = t;
  t1.values.assign(pair.y1.data().begin(), pair.y1.data().end());
  t2.values.assign(pair.y2.data().begin(), pair.y2.data().end());
  write_tensor(o.out1, t1);
  write_tensor(o.out2, t2);
}

void cmd_test(const Options& o) {
  const auto table = read_embeddings(o.emb);
  const HypothesisPair hyp(lookup(table, o.q0_id), lookup(table, o.q1_id), o.q0_id, o.q1_id);
  const auto& phi = lookup(table, o.image_id);
  const evalue::Temperature lambda(o.lambda);
  const auto e = evalue::evaluate(phi, hyp, lambda, o.levels);
  const auto soft = evalue::softmax_baseline(phi, hyp, lambda, o.levels);
  json j;
  j["image_id"] = o.image_id;
  j["q0_id"] = o.q0_id;
  j["q1_id"] = o.q1_id;
  j["lambda"] = o.lambda;
  j["raw_score"] = e.raw_score;
  j["t"] = e.t;
  j["e_value"] = e.e_value;
  j["log_e_value"] = e.log_e_value;
  j["p_value"] = e.p_value;
  j["decisions"] = decisions_json(e.decisions);
  j["softmax"] = {{"p0", soft.p0}, {"p1", soft.p1}, {"decisions", decisions_json(soft.decisions)}};
  write_text(o.out, j.dump(2) + "\n");
}

void cmd_calibrate(const Options& o) {
  std::ifstream in(o.scores);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + o.scores);
  std::vector<double> scores;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      scores.push_back(std::stod(line, &used));
      require(line.find_first_not_of(" \t\r", used) == std::string::npos, ErrorCode::ParseError,
              "trailing text");
    } catch (const std::exception&) {
      fail(ErrorCode::ParseError, o.scores + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  const auto res = calib::calibrate_lambda(calib::CalibrationSet(scores, o.target), o.lambda_max);
  json j = {{"lambda", res.lambda.value},
            {"mean_e", res.mean_e},
            {"target", o.target},
            {"lambda_max", o.lambda_max},
            {"hit_lambda_max", res.hit_lambda_max},
            {"n_scores", scores.size()}};
  write_text(o.out, j.dump(2) + "\n");
}

void cmd_power(const Options& o) {
  const auto spec = power_spec_from_json(read_json(o.spec));
  json j;
  j["mode"] = o.mode;
  if (o.mode == "closed") {
    const auto lin = power::linearize(spec);
    j["power"] = power::closed_form_power(spec);
    j["mean"] = lin.mean;
    j["stddev"] = lin.stddev;
  } else {
    const power::Fidelity f = o.fidelity == "linearized" ? power::Fidelity::Linearized
                              : o.fidelity == "exact"    ? power::Fidelity::ExactStatistic
                                                         : power::Fidelity::FullPipeline;
    const auto mc = power::mc_power(spec, o.trials, f, o.seed, exec_from(o.serial));
    j["fidelity"] = o.fidelity;
    j["power"] = mc.power;
    j["std_error"] = mc.std_error;
    j["rejections"] = mc.rejections;
    j["trials"] = mc.trials;
    j["seed"] = o.seed;
  }
  write_text(o.out, j.dump(2) + "\n");
}

void cmd_bootstrap(const Options& o, bool lambda_given) {
  harness::ScenarioConfig cfg = harness::load_scenario(o.config);
  require(cfg.noise.family == NoiseFamily::Gaussian, ErrorCode::ConfigError,
          "the bootstrap resamples Gaussian noise only");
  const harness::BootstrapSpec bs = cfg.bootstrap.value_or(harness::BootstrapSpec{});
  const harness::Scenario sc = harness::synth_scenario(cfg);
  const Tensor t = read_tensor(o.in);
  const MeasurementVec y2(t.to_vector(), NoiseFamily::Gaussian);

  double lambda = o.lambda;
  if (!lambda_given) {
    if (cfg.lambda.mode == harness::LambdaSpec::Mode::Fixed) {
      lambda = cfg.lambda.value;
    } else {
      const auto holdout = static_cast<std::size_t>(
          std::ceil(cfg.lambda.holdout_fraction * static_cast<double>(cfg.trials_null)));
      const calib::CalibrationSet set(
          harness::null_scores(sc, holdout, derive_seed(derive_seed(o.seed, 0), 0)),
          cfg.lambda.target);
      lambda = calib::calibrate_lambda(set, cfg.lambda.lambda_max).lambda.value;
    }
  }
  const ops::CyclicShift2D group{bs.max_dx, bs.max_dy};
  const auto samples = boot::equivariant_bootstrap(y2, sc.forward, sc.y2_cov, sc.estimator, group,
                                                   o.k, o.seed, exec_from(o.serial));
  const auto stats = boot::bootstrap_statistics(samples, sc.encoder, sc.hypotheses,
                                                evalue::Temperature(lambda), bs.sim_floor);
  const auto res = boot::sign_test(stats.t_tilde, o.kappa, o.levels);
  json j = {{"k", o.k},
            {"kappa", o.kappa},
            {"lambda", lambda},
            {"seed", o.seed},
            {"below", res.below},
            {"p_value", res.p_value},
            {"clamped", stats.clamped},
            {"decisions", decisions_json(res.decisions)},
            {"t_tilde", res.t_tilde}};
  write_text(o.out, j.dump(2) + "\n");
}

void cmd_run(const Options& o) {
  harness::ScenarioConfig cfg = harness::load_scenario(o.scenario);
  cfg.master_seed = o.seed;
  harness::ReportTable table = harness::run_experiment(cfg, exec_from(o.serial));
  if (!o.with_runtime) table.runtime_s.reset();
  // Both files are rendered before either is written, so a failure leaves nothing partial.
  const std::string json_text = harness::report_to_json(table).dump(2) + "\n";
  const std::string csv_text = harness::report_to_csv(table);
  write_text(o.out, json_text);
  if (!o.csv.empty()) write_text(o.csv, csv_text);
}

void cmd_sweep(const Options& o) {
  const harness::ScenarioConfig cfg = harness::load_scenario(o.scenario);
  const auto taus = o.taus.empty() ? calib::default_tau_grid() : o.taus;
  const auto table = calib::tau_sweep(cfg, taus, o.sweep_trials, o.seed, exec_from(o.serial));
  write_text(o.out, calib::sweep_to_json(table).dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic e-value hypothesis testing for imaging inverse problems"};
  app.require_subcommand(1);
  Options o;
  try {
    o.seed = default_seed();
  } catch (const etest::Error& e) {
    std::cerr << "etest: " << e.what() << '\n';
    return 2;
  }

  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "master seed (default: $ETEST_SEED or 1)");
  };
  auto add_serial = [&](CLI::App* sub) {
    sub->add_flag("--serial", o.serial, "run the serial reference kernels");
  };
  auto add_levels = [&](CLI::App* sub) {
    sub->add_option("--levels", o.levels, "significance levels")->delimiter(',');
  };

  auto* split = app.add_subcommand("split", "split one measurement into (y1, y2)");
  split->add_option("--config", o.config, "split config JSON")->required()->check(CLI::ExistingFile);
  split->add_option("--in", o.in, "input EMT1 tensor")->required()->check(CLI::ExistingFile);
  split->add_option("--out1", o.out1, "output y1 tensor")->required();
  split->add_option("--out2", o.out2, "output y2 tensor")->required();
  add_seed(split);

  auto* test = app.add_subcommand("test", "e-value test for one stored image embedding");
  test->add_option("--emb", o.emb, "EMB1 embedding file")->required()->check(CLI::ExistingFile);
  test->add_option("--image-id", o.image_id)->required();
  test->add_option("--q0-id", o.q0_id)->required();
  test->add_option("--q1-id", o.q1_id)->required();
  test->add_option("--lambda", o.lambda, "temperature")->check(CLI::PositiveNumber);
  add_levels(test);
  test->add_option("--out", o.out, "outcome JSON (default: stdout)");

  auto* cal = app.add_subcommand("calibrate", "calibrate the temperature on null scores");
  cal->add_option("--scores", o.scores, "one raw score per line")->required()->check(CLI::ExistingFile);
  cal->add_option("--target", o.target, "target null mean of E");
  cal->add_option("--lambda-max", o.lambda_max, "upper end of the search range");
  cal->add_option("--out", o.out, "result JSON (default: stdout)");

  auto* pow = app.add_subcommand("power", "closed-form or Monte Carlo power");
  pow->add_option("--spec", o.spec, "power spec JSON")->required()->check(CLI::ExistingFile);
  pow->add_option("--mode", o.mode)->check(CLI::IsMember({"closed", "mc"}));
  pow->add_option("--fidelity", o.fidelity)->check(CLI::IsMember({"linearized", "exact", "full"}));
  pow->add_option("--trials", o.trials, "Monte Carlo trials");
  pow->add_option("--out", o.out, "result JSON (default: stdout)");
  add_seed(pow);
  add_serial(pow);

  auto* bs = app.add_subcommand("bootstrap", "equivariant bootstrap and sign test on y2");
  bs->add_option("--config", o.config, "scenario JSON")->required()->check(CLI::ExistingFile);
  bs->add_option("--in", o.in, "y2 EMT1 tensor")->required()->check(CLI::ExistingFile);
  bs->add_option("--k", o.k, "bootstrap samples")->check(CLI::PositiveNumber);
  bs->add_option("--kappa", o.kappa, "sign-test threshold");
  auto* bs_lambda = bs->add_option("--lambda", o.lambda, "temperature (default: from scenario)");
  add_levels(bs);
  bs->add_option("--out", o.out, "result JSON (default: stdout)");
  add_seed(bs);
  add_serial(bs);

  auto* run = app.add_subcommand("run", "run a Monte Carlo experiment");
  run->add_option("--scenario", o.scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", o.out, "report JSON")->required();
  run->add_option("--csv", o.csv, "also write a CSV report");
  run->add_flag("--with-runtime", o.with_runtime, "include wall-clock runtime in the report");
  add_seed(run);
  add_serial(run);

  auto* sweep = app.add_subcommand("sweep", "tau trade-off sweep");
  sweep->add_option("--scenario", o.scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("--taus", o.taus, "tau grid (default 1/8..8)")->delimiter(',');
  sweep->add_option("--trials", o.sweep_trials, "trials per tau");
  sweep->add_option("--out", o.out, "sweep JSON (default: stdout)");
  add_seed(sweep);
  add_serial(sweep);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*split) cmd_split(o);
    if (*test) cmd_test(o);
    if (*cal) cmd_calibrate(o);
    if (*pow) cmd_power(o);
    if (*bs) cmd_bootstrap(o, bs_lambda->count() > 0);
    if (*run) cmd_run(o);
    if (*sweep) cmd_sweep(o);
  } catch (const etest::Error& e) {
    std::cerr << "etest: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "etest: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
