#include "etest/evalue.hpp"

#include <cmath>
#include <string>

namespace etest::evalue {

Temperature::Temperature(double v) : value(v) {
  require(std::isfinite(v) && v > 0.0, ErrorCode::InvalidArgument,
          "temperature must be positive and finite");
}

bool EValueOutcome::rejects(double alpha) const {
  for (const auto& d : decisions) {
    if (d.alpha == alpha) return d.decision == Decision::Reject;
  }
  return markov_rejects(t, alpha);
}

void validate_levels(std::span<const double> levels) {
  for (double a : levels) {
    require(a > 0.0 && a < 1.0, ErrorCode::InvalidArgument,
            "significance level " + std::to_string(a) + " is outside (0, 1)");
  }
}

double raw_score(const Vector& phi, const Vector& delta_q) {
  require(phi.size() == delta_q.size(), ErrorCode::DimensionMismatch,
          "embedding and hypothesis dimensions differ");
  return phi.dot(delta_q);
}

double raw_score(const UnitEmbedding& phi, const HypothesisPair& hyp) {
  require(phi.dim() == hyp.dim(), ErrorCode::DimensionMismatch,
          "embedding and hypothesis dimensions differ");
  return phi.dot(hyp.q0) - phi.dot(hyp.q1);
}

double statistic(const UnitEmbedding& phi, const HypothesisPair& hyp, Temperature lambda) {
  return lambda.value * raw_score(phi, hyp);
}

bool markov_rejects(double t, double alpha) { return -t >= -std::log(alpha); }

EValueOutcome evaluate_statistic(double t, double raw, std::span<const double> levels) {
  validate_levels(levels);
  EValueOutcome out;
  out.raw_score = raw;
  out.t = t;
  out.log_e_value = -t;
  out.e_value = std::exp(-t);
  // min(1, 1/E) = exp(min(0, t)), evaluated in log space.
  out.p_value = std::exp(std::min(0.0, t));
  out.decisions.reserve(levels.size());
  for (double a : levels) {
    out.decisions.push_back({a, markov_rejects(t, a) ? Decision::Reject : Decision::FailToReject});
  }
  return out;
}

EValueOutcome evaluate(const UnitEmbedding& phi, const HypothesisPair& hyp, Temperature lambda,
                       std::span<const double> levels) {
  const double raw = raw_score(phi, hyp);
  return evaluate_statistic(lambda.value * raw, raw, levels);
}

SoftmaxOutcome softmax_from_logits(double d0, double d1, std::span<const double> levels) {
  validate_levels(levels);
  SoftmaxOutcome out;
  // Logistic form of exp(d0) / (exp(d0) + exp(d1)), stable for large logits.
  const double diff = d0 - d1;
  if (diff >= 0.0) {
    const double e = std::exp(-diff);
    out.p0 = 1.0 / (1.0 + e);
    out.p1 = e / (1.0 + e);
  } else {
    const double e = std::exp(diff);
    out.p0 = e / (1.0 + e);
    out.p1 = 1.0 / (1.0 + e);
  }
  out.decisions.reserve(levels.size());
  for (double a : levels) {
    out.decisions.push_back({a, out.p0 <= a ? Decision::Reject : Decision::FailToReject});
  }
  return out;
}

SoftmaxOutcome softmax_baseline(const UnitEmbedding& phi, const HypothesisPair& hyp,
                                Temperature lambda, std::span<const double> levels) {
  require(phi.dim() == hyp.dim(), ErrorCode::DimensionMismatch,
          "embedding and hypothesis dimensions differ");
  return softmax_from_logits(lambda.value * phi.dot(hyp.q0), lambda.value * phi.dot(hyp.q1),
                             levels);
}

}  // namespace etest::evalue
