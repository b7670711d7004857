#include "etest/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "etest/bootstrap.hpp"
#include "etest/calibrate.hpp"

namespace etest::harness {

using nlohmann::json;

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Proposed:
      return "proposed";
    case Method::SoftmaxBaseline:
      return "softmax";
    case Method::BootstrapSignTest:
      return "bootstrap_sign";
  }
  return "?";
}

Method method_from_string(std::string_view s) {
  if (s == "proposed") return Method::Proposed;
  if (s == "softmax") return Method::SoftmaxBaseline;
  if (s == "bootstrap_sign") return Method::BootstrapSignTest;
  fail(ErrorCode::ConfigError, "unknown method '" + std::string(s) + "'");
}

double psnr(const Vector& estimate, const Vector& truth) {
  require(estimate.size() == truth.size() && truth.size() > 0, ErrorCode::DimensionMismatch,
          "psnr needs equal, non-empty vectors");
  const double mse = (estimate - truth).squaredNorm() / static_cast<double>(truth.size());
  return 10.0 * std::log10(1.0 / std::max(mse, 1e-30));
}

namespace {

struct Pipeline {
  Vector x_star;
  split::SplitPair pair;
  ImageVec x_hat;
  UnitEmbedding phi;
};

Pipeline simulate(const Scenario& sc, int cls, Rng& rng) {
  Vector x_star = sc.draw_ground_truth(cls, rng);
  const MeasurementVec y = sc.measure(x_star, rng);
  split::SplitPair pair = split::apply(sc.split, y, rng);
  ImageVec x_hat = sc.estimator.estimate(pair.y2);
  UnitEmbedding phi = sc.encoder.encode(x_hat);
  return {std::move(x_star), std::move(pair), std::move(x_hat), std::move(phi)};
}

}  // namespace

TrialOutcome run_trial(const Scenario& sc, int cls, double lambda, Rng& rng, Exec bootstrap_exec) {
  const auto& levels = sc.config.levels;
  Pipeline p = simulate(sc, cls, rng);
  const evalue::Temperature temp(lambda);

  TrialOutcome out;
  out.raw_score = evalue::raw_score(p.phi, sc.hypotheses);
  out.psnr_y1 = psnr(p.pair.y1.data(), sc.forward.apply(p.x_star));
  const auto e = evalue::evaluate_statistic(lambda * out.raw_score, out.raw_score, levels);
  const auto soft = evalue::softmax_baseline(p.phi, sc.hypotheses, temp, levels);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    out.proposed.push_back(e.decisions[i].decision == evalue::Decision::Reject);
    out.softmax.push_back(soft.decisions[i].decision == evalue::Decision::Reject);
  }

  if (const auto& bs = sc.config.bootstrap) {
    const ops::CyclicShift2D group{bs->max_dx, bs->max_dy};
    const std::uint64_t seed = rng.next_u64();
    const auto samples = boot::equivariant_bootstrap(p.pair.y2, sc.forward, sc.y2_cov,
                                                     sc.estimator, group, bs->k, seed,
                                                     bootstrap_exec);
    const auto stats =
        boot::bootstrap_statistics(samples, sc.encoder, sc.hypotheses, temp, bs->sim_floor);
    const auto res = boot::sign_test(stats.t_tilde, bs->kappa, levels);
    for (const auto& d : res.decisions) {
      out.bootstrap.push_back(d.decision == evalue::Decision::Reject);
    }
    out.bootstrap_clamped = stats.clamped;
  }
  return out;
}

std::vector<double> null_scores(const Scenario& sc, std::size_t count, std::uint64_t stream,
                                Exec exec) {
  std::vector<double> scores(count);
  for_each_trial(exec, count, [&](std::size_t j) {
    Rng rng = Rng::child(stream, j);
    scores[j] = evalue::raw_score(simulate(sc, 0, rng).phi, sc.hypotheses);
  });
  return scores;
}

const MethodRates& ReportTable::rates(Method m) const {
  for (const auto& r : methods) {
    if (r.method == m) return r;
  }
  fail(ErrorCode::InvalidArgument, "method not in report: " + std::string(to_string(m)));
}

namespace {

// Rejection counts of one batch of trials, per method and level.
struct Counts {
  std::vector<std::uint64_t> proposed, softmax, bootstrap;
  std::size_t trials = 0;
  std::size_t clamped = 0;
  std::vector<double> raw_scores;
};

Counts run_batch(const Scenario& sc, int cls, std::size_t count, std::uint64_t stream,
                 double lambda, Exec exec) {
  const std::size_t nl = sc.config.levels.size();
  std::vector<TrialOutcome> outcomes(count);
  for_each_trial(exec, count, [&](std::size_t j) {
    Rng rng = Rng::child(stream, j);
    outcomes[j] = run_trial(sc, cls, lambda, rng);
  });
  Counts c;
  c.trials = count;
  c.proposed.assign(nl, 0);
  c.softmax.assign(nl, 0);
  if (sc.config.bootstrap) c.bootstrap.assign(nl, 0);
  c.raw_scores.reserve(count);
  for (const auto& o : outcomes) {
    for (std::size_t i = 0; i < nl; ++i) {
      c.proposed[i] += o.proposed[i];
      c.softmax[i] += o.softmax[i];
      if (!c.bootstrap.empty()) c.bootstrap[i] += o.bootstrap[i];
    }
    c.clamped += o.bootstrap_clamped;
    c.raw_scores.push_back(o.raw_score);
  }
  return c;
}

std::vector<double> frequencies(const std::vector<std::uint64_t>& counts, std::size_t trials) {
  std::vector<double> f;
  for (auto k : counts) f.push_back(static_cast<double>(k) / static_cast<double>(trials));
  return f;
}

Rate summarize(const std::vector<double>& values) {
  Rate r;
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return r;
}

}  // namespace

ReportTable run_experiment(const ScenarioConfig& cfg, Exec exec) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  const Scenario sc = synth_scenario(cfg);
  const std::size_t nl = cfg.levels.size();

  std::vector<Method> methods = {Method::Proposed, Method::SoftmaxBaseline};
  if (cfg.bootstrap) methods.push_back(Method::BootstrapSignTest);

  // type1[method][level][repeat], power likewise
  auto make = [&] {
    return std::vector<std::vector<std::vector<double>>>(
        methods.size(), std::vector<std::vector<double>>(nl));
  };
  auto type1 = make();
  auto power = make();

  ReportTable table;
  table.config = to_json(cfg);
  table.config_hash = config_hash(cfg);
  table.master_seed = cfg.master_seed;
  table.levels = cfg.levels;
  table.trials_null = cfg.trials_null;
  table.trials_alt = cfg.trials_alt;
  table.repeats = cfg.repeats;

  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    const std::uint64_t seed_r = derive_seed(cfg.master_seed, r);
    RepeatInfo info;
    if (cfg.lambda.mode == LambdaSpec::Mode::Fixed) {
      info.lambda = cfg.lambda.value;
    } else {
      const auto holdout = static_cast<std::size_t>(
          std::ceil(cfg.lambda.holdout_fraction * static_cast<double>(cfg.trials_null)));
      const calib::CalibrationSet set(null_scores(sc, holdout, derive_seed(seed_r, 0), exec),
                                      cfg.lambda.target);
      const auto res = calib::calibrate_lambda(set, cfg.lambda.lambda_max);
      info.lambda = res.lambda.value;
      info.lambda_calibrated = true;
      info.hit_lambda_max = res.hit_lambda_max;
      info.calibration_mean_e = res.mean_e;
    }

    const Counts null = run_batch(sc, 0, cfg.trials_null, derive_seed(seed_r, 1), info.lambda, exec);
    info.null_mean_e = calib::CalibrationSet(null.raw_scores).mean_e(info.lambda);
    info.bootstrap_clamped = null.clamped;
    std::optional<Counts> alt;
    if (cfg.trials_alt > 0) {
      alt = run_batch(sc, 1, cfg.trials_alt, derive_seed(seed_r, 2), info.lambda, exec);
      info.bootstrap_clamped += alt->clamped;
    }

    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      auto pick = [&](const Counts& c) -> const std::vector<std::uint64_t>& {
        switch (methods[mi]) {
          case Method::Proposed:
            return c.proposed;
          case Method::SoftmaxBaseline:
            return c.softmax;
          case Method::BootstrapSignTest:
            break;
        }
        return c.bootstrap;
      };
      const auto f0 = frequencies(pick(null), null.trials);
      for (std::size_t i = 0; i < nl; ++i) type1[mi][i].push_back(f0[i]);
      if (alt) {
        const auto f1 = frequencies(pick(*alt), alt->trials);
        for (std::size_t i = 0; i < nl; ++i) power[mi][i].push_back(f1[i]);
      }
    }
    table.repeat_info.push_back(info);
  }

  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    MethodRates mr;
    mr.method = methods[mi];
    for (std::size_t i = 0; i < nl; ++i) {
      mr.type1.push_back(summarize(type1[mi][i]));
      if (cfg.trials_alt > 0) mr.power.push_back(summarize(power[mi][i]));
    }
    table.methods.push_back(std::move(mr));
  }
  table.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return table;
}

// --- serialization -------------------------------------------------------------

namespace {

json rates_to_json(const std::vector<Rate>& rates) {
  json a = json::array();
  for (const auto& r : rates) {
    a.push_back({{"mean", r.mean}, {"std", r.std ? json(*r.std) : json(nullptr)}});
  }
  return a;
}

std::vector<Rate> rates_from_json(const json& a) {
  std::vector<Rate> out;
  for (const auto& r : a) {
    Rate x;
    x.mean = r.at("mean").get<double>();
    if (!r.at("std").is_null()) x.std = r.at("std").get<double>();
    out.push_back(x);
  }
  return out;
}

}  // namespace

json report_to_json(const ReportTable& t) {
  json j;
  j["schema"] = kReportSchema;
  j["config_hash"] = t.config_hash;
  j["master_seed"] = t.master_seed;
  j["levels"] = t.levels;
  j["trials_null"] = t.trials_null;
  j["trials_alt"] = t.trials_alt;
  j["repeats"] = t.repeats;
  j["baseline_type1"] = t.baseline_type1;
  j["methods"] = json::array();
  for (const auto& m : t.methods) {
    j["methods"].push_back({{"method", std::string(to_string(m.method))},
                            {"type1", rates_to_json(m.type1)},
                            {"power", rates_to_json(m.power)}});
  }
  j["repeat_info"] = json::array();
  for (const auto& r : t.repeat_info) {
    j["repeat_info"].push_back({{"lambda", r.lambda},
                                {"lambda_calibrated", r.lambda_calibrated},
                                {"hit_lambda_max", r.hit_lambda_max},
                                {"calibration_mean_e", r.calibration_mean_e},
                                {"null_mean_e", r.null_mean_e},
                                {"bootstrap_clamped", r.bootstrap_clamped}});
  }
  j["config"] = t.config;
  if (t.runtime_s) j["runtime_s"] = *t.runtime_s;
  return j;
}

ReportTable report_from_json(const json& j) {
  try {
    require(j.at("schema").get<std::string>() == kReportSchema, ErrorCode::ConfigError,
            "unsupported report schema");
    ReportTable t;
    t.config = j.at("config");
    t.config_hash = j.at("config_hash").get<std::string>();
    t.master_seed = j.at("master_seed").get<std::uint64_t>();
    t.levels = j.at("levels").get<std::vector<double>>();
    t.trials_null = j.at("trials_null").get<std::size_t>();
    t.trials_alt = j.at("trials_alt").get<std::size_t>();
    t.repeats = j.at("repeats").get<std::size_t>();
    t.baseline_type1 = j.at("baseline_type1").get<double>();
    for (const auto& m : j.at("methods")) {
      t.methods.push_back({method_from_string(m.at("method").get<std::string>()),
                           rates_from_json(m.at("type1")), rates_from_json(m.at("power"))});
    }
    for (const auto& r : j.at("repeat_info")) {
      RepeatInfo info;
      info.lambda = r.at("lambda").get<double>();
      info.lambda_calibrated = r.at("lambda_calibrated").get<bool>();
      info.hit_lambda_max = r.at("hit_lambda_max").get<bool>();
      info.calibration_mean_e = r.at("calibration_mean_e").get<double>();
      info.null_mean_e = r.at("null_mean_e").get<double>();
      info.bootstrap_clamped = r.at("bootstrap_clamped").get<std::size_t>();
      t.repeat_info.push_back(info);
    }
    if (j.contains("runtime_s")) t.runtime_s = j.at("runtime_s").get<double>();
    return t;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("malformed report: ") + e.what());
  }
}

std::string report_to_csv(const ReportTable& t) {
  const bool with_std = t.repeats > 1;
  std::ostringstream out;
  out << "method,metric,level,mean" << (with_std ? ",std" : "") << '\n';
  // Shortest round-trip form, as in the JSON report.
  auto num = [](double v) { return json(v).dump(); };
  for (const auto& m : t.methods) {
    auto rows = [&](const char* metric, const std::vector<Rate>& rates) {
      for (std::size_t i = 0; i < rates.size(); ++i) {
        out << to_string(m.method) << ',' << metric << ',' << num(t.levels[i]) << ','
            << num(rates[i].mean);
        if (with_std) out << ',' << (rates[i].std ? num(*rates[i].std) : std::string());
        out << '\n';
      }
    };
    rows("type1", m.type1);
    rows("power", m.power);
  }
  return out.str();
}

void emit_report(const ReportTable& table, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + path.string());
  if (format == ReportFormat::Json) {
    out << report_to_json(table).dump(2) << '\n';
  } else {
    out << report_to_csv(table);
  }
  require(static_cast<bool>(out), ErrorCode::IoError, "write failed: " + path.string());
}

}  // namespace etest::harness
