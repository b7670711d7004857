#pragma once

#include <span>
#include <vector>

#include "etest/types.hpp"

namespace etest::evalue {

enum class Decision { FailToReject, Reject };

struct LevelDecision {
  double alpha;
  Decision decision;
};

struct Temperature {
  explicit Temperature(double value);
  double value;
};

/// Outcome of the semantic e-value test for one measurement.
struct EValueOutcome {
  double raw_score;  // phi^T (q0 - q1), in [-2, 2]
  double t;          // lambda * raw_score
  double e_value;    // exp(-t)
  double log_e_value;
  double p_value;    // min(1, 1 / e_value)
  std::vector<LevelDecision> decisions;

  bool rejects(double alpha) const;
};

struct SoftmaxOutcome {
  double p0;
  double p1;
  std::vector<LevelDecision> decisions;
};

/// Checks that every level lies strictly inside (0, 1).
void validate_levels(std::span<const double> levels);

/// phi^T q0 - phi^T q1.
double raw_score(const UnitEmbedding& phi, const HypothesisPair& hyp);
double raw_score(const Vector& phi, const Vector& delta_q);

/// t = lambda * (phi^T q0 - phi^T q1); positive when phi agrees with q0.
double statistic(const UnitEmbedding& phi, const HypothesisPair& hyp, Temperature lambda);

/// Markov rule: reject at alpha iff E >= 1 / alpha, i.e. -t >= -log(alpha).
bool markov_rejects(double t, double alpha);

EValueOutcome evaluate_statistic(double t, double raw_score, std::span<const double> levels);
EValueOutcome evaluate(const UnitEmbedding& phi, const HypothesisPair& hyp, Temperature lambda,
                       std::span<const double> levels);

/// Temperature-scaled two-class softmax; reject at alpha iff p0 <= alpha.
SoftmaxOutcome softmax_baseline(const UnitEmbedding& phi, const HypothesisPair& hyp,
                                Temperature lambda, std::span<const double> levels);
SoftmaxOutcome softmax_from_logits(double d0, double d1, std::span<const double> levels);

}  // namespace etest::evalue
