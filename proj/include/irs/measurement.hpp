#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "irs/channel_model.hpp"
#include "irs/hermitian_space.hpp"
#include "irs/rng.hpp"

namespace irs {

// Unit-modulus discrete phases stored as indices k in 0..2^b-1, value exp(j 2 pi k / 2^b).
// The last entry is fixed to index 0 (value 1).
class ReflectionVector {
 public:
  ReflectionVector() = default;
  ReflectionVector(int bits, std::vector<std::uint8_t> phase_indices);

  static ReflectionVector ones(int n, int bits);

  int dim() const { return static_cast<int>(idx_.size()); }
  int bits() const { return bits_; }
  int levels() const { return 1 << bits_; }
  const std::vector<std::uint8_t>& phase_indices() const { return idx_; }
  std::uint8_t phase_index(int i) const { return idx_[static_cast<size_t>(i)]; }
  cdouble operator[](int i) const;
  CVector values() const;
  // Real +-1 entries, only meaningful for b = 1.
  RVector real_values() const;
  std::string to_digits() const;
  static ReflectionVector from_digits(const std::string& s, int bits);

  bool operator==(const ReflectionVector& o) const { return bits_ == o.bits_ && idx_ == o.idx_; }

 private:
  int bits_ = 1;
  std::vector<std::uint8_t> idx_;
};

cdouble unit_phase(int bits, int k);

ReflectionVector random_reflection(int n_irs, int b, Rng& rng);

double exact_power(const HermitianMatrix& H_bar, const ReflectionVector& v, double p0);
double noisy_power(const CVector& h_bar, const ReflectionVector& v, double p0, double sigma2, int n0, Rng& rng);

inline constexpr double kQuantTopDbm = -44.0;
inline constexpr double kQuantBottomDbm = -156.0;
inline constexpr double kQuantSpanDb = 112.0;

struct QuantizerConfig {
  int levels = 112;

  double width_db() const { return kQuantSpanDb / levels; }
  static QuantizerConfig from_width(double d_db);
};

struct QuantizedLevel {
  int level = 0;
  double lower = 0.0;
  double upper = 0.0;

  double midpoint() const { return 0.5 * (lower + upper); }
};

QuantizedLevel quantize(double q, const QuantizerConfig& cfg);
QuantizedLevel level_bounds(int level, const QuantizerConfig& cfg);

enum class MeasurementKind { exact, noisy, quantized };

const char* to_string(MeasurementKind k);

struct MeasurementSet {
  std::vector<ReflectionVector> reflections;
  MeasurementKind kind = MeasurementKind::exact;
  std::vector<double> powers;
  std::vector<QuantizedLevel> levels;
  double p0 = 1.0;
  double sigma2 = 0.0;
  int n0 = 1;
  std::optional<QuantizerConfig> quantizer;

  int size() const { return static_cast<int>(reflections.size()); }
  int dim() const { return reflections.empty() ? 0 : reflections.front().dim(); }
  int bits() const { return reflections.empty() ? 0 : reflections.front().bits(); }
  // Power surrogate per record: the recorded power, or the interval midpoint.
  std::vector<double> representative_powers() const;
  void validate() const;
};

struct DesignMatrix {
  RMatrix C;
  int rank = 0;
};

// Column t = p0 * vectorize(v_t v_t^H).
DesignMatrix build_design_matrix(const std::vector<ReflectionVector>& reflections, double p0);

// Random training set. With enforce_rank, a reflection whose lifting does not
// raise the rank is redrawn (up to max_retries per column) until the rank
// reaches min(T_p, D_N^(b)).
std::vector<ReflectionVector> generate_training(int n_irs, int b, int t_p, Rng& rng, bool enforce_rank,
                                                int max_retries = 1000);

MeasurementSet measure_exact(const ChannelRealization& ch, const std::vector<ReflectionVector>& refl, double p0);
MeasurementSet measure_noisy(const ChannelRealization& ch, const std::vector<ReflectionVector>& refl, double p0,
                             double sigma2, int n0, Rng& rng);
MeasurementSet quantize_set(const MeasurementSet& noisy, const QuantizerConfig& cfg);

void write_csv(std::ostream& os, const MeasurementSet& ms);
MeasurementSet read_csv(std::istream& is, int bits, double p0, double sigma2, int n0,
                        std::optional<QuantizerConfig> quantizer = std::nullopt);

}  // namespace irs
