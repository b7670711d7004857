#include "etest/config_io.hpp"

#include <fstream>

namespace etest {

using nlohmann::json;

namespace {

template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string(what) + ": " + e.what());
  }
}

}  // namespace

Matrix matrix_from_json(const json& j) {
  return guarded("matrix", [&] {
    require(j.is_array() && !j.empty(), ErrorCode::ConfigError, "matrix must be a non-empty array");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.at(0).size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto& row = j.at(static_cast<std::size_t>(r));
      require(row.is_array() && static_cast<Eigen::Index>(row.size()) == cols,
              ErrorCode::ConfigError, "matrix rows must have equal length");
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
  });
}

json matrix_to_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(std::move(row));
  }
  return a;
}

Vector vector_from_json(const json& j) {
  return guarded("vector", [&] {
    const auto v = j.get<std::vector<double>>();
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  });
}

namespace {

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

ForwardModel forward_from_json(const json& j) {
  return guarded("forward", [&] {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "identity") return ForwardModel::identity();
    if (kind == "mask") return ForwardModel::binary_mask(j.at("mask").get<std::vector<std::uint8_t>>());
    if (kind == "dense") return ForwardModel::dense(matrix_from_json(j.at("a")));
    fail(ErrorCode::ConfigError, "forward.kind must be identity, mask or dense");
  });
}

CovModel covariance_from_json(const json& j, std::size_t dim) {
  return guarded("covariance", [&] {
    if (j.is_number()) return CovModel::scaled_identity(dim, j.get<double>());
    if (j.contains("variance")) return CovModel::scaled_identity(dim, j.at("variance").get<double>());
    auto sized = [dim](CovModel c) {
      require(c.dim() == dim, ErrorCode::DimensionMismatch,
              "covariance has dimension " + std::to_string(c.dim()) + ", expected " +
                  std::to_string(dim));
      return c;
    };
    if (j.contains("diagonal")) return sized(CovModel::diagonal(vector_from_json(j.at("diagonal"))));
    if (j.contains("dense")) return sized(CovModel::dense(matrix_from_json(j.at("dense"))));
    fail(ErrorCode::ConfigError, "covariance needs variance, diagonal or dense");
  });
}

split::SplitConfig split_config_from_json(const json& j, std::size_t dim) {
  return guarded("split config", [&]() -> split::SplitConfig {
    const auto family = j.at("family").get<std::string>();
    split::require_supported_family(family);
    if (family == "poisson") {
      split::PoissonConfig c{j.at("beta").get<double>(), j.at("gamma").get<double>()};
      split::validate(c);
      return c;
    }
    require(!(j.contains("tau") && j.contains("beta")), ErrorCode::ConfigError,
            "give either tau or beta");
    const double tau = j.contains("beta") ? split::beta_to_tau(j.at("beta").get<double>())
                                          : j.value("tau", 1.0);
    const double sigma = j.at("sigma").get<double>();
    split::SplitConfig c = split::GaussianConfig{tau, CovModel::scaled_identity(dim, sigma * sigma)};
    split::validate(c);
    return c;
  });
}

power::PowerSpec power_spec_from_json(const json& j) {
  return guarded("power spec", [&] {
    const Matrix phi = matrix_from_json(j.at("phi"));
    const Vector x_star = vector_from_json(j.at("x_star"));
    ForwardModel forward =
        j.contains("forward") ? forward_from_json(j.at("forward")) : ForwardModel::identity();
    const std::size_t m = forward.output_dim(static_cast<std::size_t>(x_star.size()));
    const auto mode = j.value("mode", std::string("exact"));
    require(mode == "exact" || mode == "paper", ErrorCode::ConfigError,
            "power mode must be exact or paper");
    const Vector offset =
        j.contains("offset") ? vector_from_json(j.at("offset")) : Vector::Zero(x_star.size());
    power::PowerSpec spec{phi,
                          std::move(forward),
                          covariance_from_json(j.at("sigma"), m),
                          j.value("tau", 1.0),
                          x_star,
                          offset,
                          matrix_from_json(j.at("gain")),
                          vector_from_json(j.at("delta_q")),
                          j.value("lambda", 1.0),
                          j.value("alpha", 0.05),
                          mode == "paper" ? power::Mode::PaperConsistent : power::Mode::ExactAffine};
    spec.validate();
    return spec;
  });
}

json power_spec_to_json(const power::PowerSpec& s) {
  json j;
  j["phi"] = matrix_to_json(s.phi);
  const auto& fk = s.forward.kind();
  if (std::holds_alternative<ForwardModel::Identity>(fk)) {
    j["forward"] = {{"kind", "identity"}};
  } else if (const auto* mask = std::get_if<ForwardModel::BinaryMask>(&fk)) {
    j["forward"] = {{"kind", "mask"}, {"mask", mask->mask}};
  } else {
    j["forward"] = {{"kind", "dense"}, {"a", matrix_to_json(std::get<ForwardModel::Dense>(fk).a)}};
  }
  const auto& ck = s.sigma.kind();
  if (const auto* si = std::get_if<CovModel::ScaledIdentity>(&ck)) {
    j["sigma"] = {{"variance", si->variance}};
  } else if (const auto* dg = std::get_if<CovModel::Diagonal>(&ck)) {
    j["sigma"] = {{"diagonal", vector_to_json(dg->variances)}};
  } else {
    j["sigma"] = {{"dense", matrix_to_json(std::get<CovModel::DenseSPD>(ck).sigma)}};
  }
  j["tau"] = s.tau;
  j["x_star"] = vector_to_json(s.x_star);
  j["offset"] = vector_to_json(s.offset);
  j["gain"] = matrix_to_json(s.gain);
  j["delta_q"] = vector_to_json(s.delta_q);
  j["lambda"] = s.lambda;
  j["alpha"] = s.alpha;
  j["mode"] = s.mode == power::Mode::PaperConsistent ? "paper" : "exact";
  return j;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace etest
