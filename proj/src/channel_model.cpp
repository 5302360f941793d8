#include "irs/channel_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "irs/errors.hpp"

namespace irs {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double ScenarioConfig::p0_watts() const { return dbm_to_watts(p0_dbm); }
double ScenarioConfig::sigma2_watts() const { return dbm_to_watts(sigma2_dbm); }

void ScenarioConfig::validate() const {
  if (nx < 1 || nz < 1) throw DomainError("Nx and Nz must be at least 1");
  if (beta_bu < 0 || beta_bi < 0 || beta_iu < 0) throw DomainError("Rician factors must be nonnegative");
  if (!(alpha_bu > 0) || !(alpha_bi > 0) || !(alpha_iu > 0)) throw DomainError("path-loss exponents must be positive");
  if (b < 1 || b > 5) throw DomainError("phase-shift bits must be in 1..5");
  for (int i = 0; i < 3; ++i) {
    if (user_region.min[i] > user_region.max[i]) throw DomainError("user_region min exceeds max");
  }
}

namespace {

Point3 point_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw DomainError("expected a 3-element coordinate array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

double norm3(const Point3& a, const Point3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j) {
  ScenarioConfig c;
  if (j.contains("bs_position")) c.bs_position = point_from(j.at("bs_position"));
  if (j.contains("irs_position")) c.irs_position = point_from(j.at("irs_position"));
  if (j.contains("user_region")) {
    const auto& r = j.at("user_region");
    c.user_region.min = point_from(r.at("min"));
    c.user_region.max = point_from(r.at("max"));
  }
  read_opt(j, "Nx", c.nx);
  read_opt(j, "Nz", c.nz);
  read_opt(j, "C0_bu_db", c.c0_bu_db);
  read_opt(j, "C0_bi_db", c.c0_bi_db);
  read_opt(j, "C0_iu_db", c.c0_iu_db);
  read_opt(j, "alpha_bu", c.alpha_bu);
  read_opt(j, "alpha_bi", c.alpha_bi);
  read_opt(j, "alpha_iu", c.alpha_iu);
  read_opt(j, "beta_bu", c.beta_bu);
  read_opt(j, "beta_bi", c.beta_bi);
  read_opt(j, "beta_iu", c.beta_iu);
  read_opt(j, "p0_dbm", c.p0_dbm);
  read_opt(j, "sigma2_dbm", c.sigma2_dbm);
  read_opt(j, "b", c.b);
  read_opt(j, "seed", c.seed);
  c.validate();
  return c;
}

nlohmann::json ScenarioConfig::to_json() const {
  return {
      {"bs_position", bs_position},
      {"irs_position", irs_position},
      {"user_region", {{"min", user_region.min}, {"max", user_region.max}}},
      {"Nx", nx},
      {"Nz", nz},
      {"C0_bu_db", c0_bu_db},
      {"C0_bi_db", c0_bi_db},
      {"C0_iu_db", c0_iu_db},
      {"alpha_bu", alpha_bu},
      {"alpha_bi", alpha_bi},
      {"alpha_iu", alpha_iu},
      {"beta_bu", beta_bu},
      {"beta_bi", beta_bi},
      {"beta_iu", beta_iu},
      {"p0_dbm", p0_dbm},
      {"sigma2_dbm", sigma2_dbm},
      {"b", b},
      {"seed", seed},
  };
}

double path_loss(double d, double c0_db, double alpha) {
  if (!(d > 0.0)) throw DomainError("path_loss distance must be positive");
  return db_to_linear(c0_db) * std::pow(d, -alpha);
}

CVector steering_vector(int nx, int nz, double omega, double psi) {
  const double pi = std::numbers::pi;
  const double phx = std::cos(omega) * std::sin(psi);
  const double phz = std::cos(psi);
  CVector out(static_cast<Eigen::Index>(nx) * nz);
  for (int ix = 0; ix < nx; ++ix) {
    for (int iz = 0; iz < nz; ++iz) {
      out(ix * nz + iz) = std::polar(1.0, pi * (ix * phx + iz * phz));
    }
  }
  return out;
}

std::array<double, 2> direction_angles(const Point3& from, const Point3& to) {
  const double d = norm3(from, to);
  if (!(d > 0.0)) throw DomainError("degenerate geometry: zero-length link");
  const double ux = (to[0] - from[0]) / d;
  const double uz = (to[2] - from[2]) / d;
  const double psi = std::acos(std::clamp(uz, -1.0, 1.0));
  const double s = std::sin(psi);
  const double omega = s > 1e-12 ? std::acos(std::clamp(ux / s, -1.0, 1.0)) : 0.0;
  return {omega, psi};
}

Point3 sample_user_position(const ScenarioConfig& cfg, Rng& rng) {
  Point3 p{};
  for (int i = 0; i < 3; ++i) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double lo = cfg.user_region.min[i], hi = cfg.user_region.max[i];
    p[i] = lo + (hi - lo) * u(rng);
  }
  return p;
}

namespace {

CVector rician_vector(const CVector& los, double eta, double beta, Rng& rng) {
  const double w_los = std::sqrt(beta / (1.0 + beta));
  const double w_nlos = std::sqrt(1.0 / (1.0 + beta));
  const double amp = std::sqrt(eta);
  CVector out(los.size());
  for (Eigen::Index i = 0; i < los.size(); ++i) {
    out(i) = amp * (w_los * los(i) + w_nlos * complex_normal(rng, 1.0));
  }
  return out;
}

}  // namespace

ChannelRealization assemble_channel(const CVector& g, const CVector& h_r, cdouble h_d) {
  if (g.size() != h_r.size()) throw DomainError("g and h_r lengths differ");
  const Eigen::Index n_irs = g.size();
  CVector h_bar(n_irs + 1);
  for (Eigen::Index i = 0; i < n_irs; ++i) h_bar(i) = g(i) * std::conj(h_r(i));
  h_bar(n_irs) = std::conj(h_d);
  ChannelRealization ch{g, h_r, h_d, h_bar, HermitianMatrix::outer(h_bar), {}};
  return ch;
}

ChannelRealization sample_channels(const ScenarioConfig& cfg, const Point3& user_position, Rng& rng) {
  cfg.validate();
  const double d_bi = norm3(cfg.bs_position, cfg.irs_position);
  const double d_iu = norm3(cfg.irs_position, user_position);
  const double d_bu = norm3(cfg.bs_position, user_position);
  const double eta_bi = path_loss(d_bi, cfg.c0_bi_db, cfg.alpha_bi);
  const double eta_iu = path_loss(d_iu, cfg.c0_iu_db, cfg.alpha_iu);
  const double eta_bu = path_loss(d_bu, cfg.c0_bu_db, cfg.alpha_bu);

  const auto ang_bi = direction_angles(cfg.irs_position, cfg.bs_position);
  const auto ang_iu = direction_angles(cfg.irs_position, user_position);
  const CVector los_bi = steering_vector(cfg.nx, cfg.nz, ang_bi[0], ang_bi[1]);
  const CVector los_iu = steering_vector(cfg.nx, cfg.nz, ang_iu[0], ang_iu[1]);

  const CVector g = rician_vector(los_bi, eta_bi, cfg.beta_bi, rng);
  const CVector h_r = rician_vector(los_iu, eta_iu, cfg.beta_iu, rng);
  const CVector h_d = rician_vector(CVector::Ones(1), eta_bu, cfg.beta_bu, rng);

  ChannelRealization ch = assemble_channel(g, h_r, h_d(0));
  ch.user_position = user_position;
  return ch;
}

}  // namespace irs
