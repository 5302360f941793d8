#pragma once

#include <optional>

#include "irs/hermitian_space.hpp"
#include "irs/measurement.hpp"

namespace irs {

struct DesignOutcome {
  ReflectionVector v;
  double gain = 0.0;
  std::optional<double> gain_fraction_of_ub;
};

// Maximizes |x^H v| over v in Phi_b^N with v_N = 1.
ReflectionVector discrete_align(const CVector& x, int b);

ReflectionVector design_from_estimate(const HermitianMatrix& est, int b);

DesignOutcome upper_bound_gain(const CVector& h_bar, int b);

ReflectionVector rms_design(const MeasurementSet& ms);
ReflectionVector csm_design(const MeasurementSet& ms, int b);

double effective_gain(const CVector& h_bar, const ReflectionVector& v);

}  // namespace irs
