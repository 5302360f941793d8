#pragma once

#include <array>
#include <cstdint>

#include <json.hpp>

#include "irs/hermitian_space.hpp"
#include "irs/rng.hpp"

namespace irs {

using Point3 = std::array<double, 3>;

struct Box3 {
  Point3 min{0.0, 0.0, 0.0};
  Point3 max{10.0, 10.0, 0.0};
};

struct ScenarioConfig {
  Point3 bs_position{50.0, -150.0, 20.0};
  Point3 irs_position{-2.0, -1.0, 0.0};
  Box3 user_region{};
  int nx = 4;
  int nz = 4;
  double c0_bu_db = -33.0;
  double c0_bi_db = -30.0;
  double c0_iu_db = -30.0;
  double alpha_bu = 3.7;
  double alpha_bi = 2.0;
  double alpha_iu = 2.0;
  double beta_bu = 0.0;
  double beta_bi = 10.0;
  double beta_iu = 1.0;
  double p0_dbm = 30.0;
  double sigma2_dbm = -90.0;
  int b = 1;
  std::uint64_t seed = 1;

  int n_irs() const { return nx * nz; }
  int n() const { return n_irs() + 1; }
  double p0_watts() const;
  double sigma2_watts() const;
  void validate() const;

  static ScenarioConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct ChannelRealization {
  CVector g;
  CVector h_r;
  cdouble h_d;
  CVector h_bar;
  HermitianMatrix H_bar;
  Point3 user_position{};
};

double dbm_to_watts(double dbm);
double watts_to_dbm(double w);
double db_to_linear(double db);

double path_loss(double d, double c0_db, double alpha);

// a_Nx(cos(omega) sin(psi)) kron a_Nz(cos(psi)); element (ix, iz) sits at ix*Nz + iz.
CVector steering_vector(int nx, int nz, double omega, double psi);

// Azimuth/elevation of a direction vector in the IRS frame (x-z plane array).
std::array<double, 2> direction_angles(const Point3& from, const Point3& to);

Point3 sample_user_position(const ScenarioConfig& cfg, Rng& rng);
ChannelRealization sample_channels(const ScenarioConfig& cfg, const Point3& user_position, Rng& rng);
ChannelRealization assemble_channel(const CVector& g, const CVector& h_r, cdouble h_d);

}  // namespace irs
