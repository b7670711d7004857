#pragma once

#include <filesystem>

#include <json.hpp>

#include "etest/power.hpp"
#include "etest/split.hpp"

namespace etest {

// JSON forms used by the CLI.
//   matrix:      [[row0...], [row1...], ...]
//   forward:     {"kind": "identity"} | {"kind": "mask", "mask": [0, 1, ...]}
//                | {"kind": "dense", "a": matrix}
//   covariance:  {"variance": v} | {"diagonal": [...]} | {"dense": matrix}

Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Matrix& m);
Vector vector_from_json(const nlohmann::json& j);

ForwardModel forward_from_json(const nlohmann::json& j);
/// `dim` sizes the {"variance": v} form.
CovModel covariance_from_json(const nlohmann::json& j, std::size_t dim);

/// {"family": "gaussian", "sigma": s, "tau": t} (or "beta" instead of "tau"),
/// or {"family": "poisson", "gamma": g, "beta": b}. Covers measurements of size `dim`.
split::SplitConfig split_config_from_json(const nlohmann::json& j, std::size_t dim);

/// {"phi", "forward", "sigma", "tau", "x_star", "offset", "gain", "delta_q",
///  "lambda", "alpha", "mode": "paper" | "exact"}. offset defaults to zero.
power::PowerSpec power_spec_from_json(const nlohmann::json& j);
nlohmann::json power_spec_to_json(const power::PowerSpec& spec);

nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace etest
