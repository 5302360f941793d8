#include "irs/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "irs/errors.hpp"
#include "irs/format.hpp"

namespace irs {

namespace {

const char kDigits[] = "0123456789abcdefghijklmnopqrstuvwxyz";

void check_bits(int bits) {
  if (bits < 1 || bits > 5) throw DomainError("phase-shift bits must be in 1..5");
}

}  // namespace

cdouble unit_phase(int bits, int k) {
  const int levels = 1 << bits;
  k = ((k % levels) + levels) % levels;
  if ((4 * k) % levels == 0) {
    switch ((4 * k) / levels) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, 1.0};
      case 2: return {-1.0, 0.0};
      default: return {0.0, -1.0};
    }
  }
  return std::polar(1.0, 2.0 * std::numbers::pi * k / levels);
}

ReflectionVector::ReflectionVector(int bits, std::vector<std::uint8_t> phase_indices)
    : bits_(bits), idx_(std::move(phase_indices)) {
  check_bits(bits);
  if (idx_.empty()) throw DomainError("reflection vector must be nonempty");
  for (auto k : idx_) {
    if (k >= (1 << bits)) throw DomainError("phase index out of range");
  }
  if (idx_.back() != 0) throw DomainError("last reflection entry must equal 1");
}

ReflectionVector ReflectionVector::ones(int n, int bits) {
  return ReflectionVector(bits, std::vector<std::uint8_t>(static_cast<size_t>(n), 0));
}

cdouble ReflectionVector::operator[](int i) const { return unit_phase(bits_, idx_[static_cast<size_t>(i)]); }

CVector ReflectionVector::values() const {
  CVector v(dim());
  for (int i = 0; i < dim(); ++i) v(i) = (*this)[i];
  return v;
}

RVector ReflectionVector::real_values() const {
  RVector v(dim());
  for (int i = 0; i < dim(); ++i) v(i) = (*this)[i].real();
  return v;
}

std::string ReflectionVector::to_digits() const {
  std::string s;
  s.reserve(idx_.size());
  for (auto k : idx_) s.push_back(kDigits[k]);
  return s;
}

ReflectionVector ReflectionVector::from_digits(const std::string& s, int bits) {
  std::vector<std::uint8_t> idx;
  idx.reserve(s.size());
  for (char c : s) {
    const char* p = std::find(kDigits, kDigits + 36, c);
    if (p == kDigits + 36) throw DomainError(std::string("bad phase digit '") + c + "'");
    idx.push_back(static_cast<std::uint8_t>(p - kDigits));
  }
  return ReflectionVector(bits, std::move(idx));
}

ReflectionVector random_reflection(int n_irs, int b, Rng& rng) {
  check_bits(b);
  if (n_irs < 1) throw DomainError("IRS must have at least one element");
  std::uniform_int_distribution<int> pick(0, (1 << b) - 1);
  std::vector<std::uint8_t> idx(static_cast<size_t>(n_irs) + 1, 0);
  for (int i = 0; i < n_irs; ++i) idx[static_cast<size_t>(i)] = static_cast<std::uint8_t>(pick(rng));
  return ReflectionVector(b, std::move(idx));
}

double exact_power(const HermitianMatrix& H_bar, const ReflectionVector& v, double p0) {
  if (H_bar.dim() != v.dim()) throw DomainError("dimension mismatch between H and v");
  const CVector x = v.values();
  const double p = p0 * std::real(x.dot(H_bar.matrix() * x));
  if (p < -1e-12 * p0 * std::abs(H_bar.trace())) throw PsdViolation("negative received power");
  return std::max(p, 0.0);
}

double noisy_power(const CVector& h_bar, const ReflectionVector& v, double p0, double sigma2, int n0, Rng& rng) {
  if (n0 < 1) throw DomainError("N0 must be at least 1");
  if (h_bar.size() != v.dim()) throw DomainError("dimension mismatch between h and v");
  const cdouble s = v.values().dot(h_bar) * std::sqrt(p0);
  if (sigma2 == 0.0) return std::norm(s);
  double acc = 0.0;
  for (int i = 0; i < n0; ++i) acc += std::norm(s + complex_normal(rng, sigma2));
  return acc / n0;
}

QuantizerConfig QuantizerConfig::from_width(double d_db) {
  if (!(d_db > 0)) throw DomainError("quantizer width must be positive");
  const double m = kQuantSpanDb / d_db;
  const int levels = static_cast<int>(std::lround(m));
  if (levels < 1 || std::abs(m - levels) > 1e-9 * m) {
    throw DomainError("quantizer width must divide 112 dB");
  }
  return QuantizerConfig{levels};
}

QuantizedLevel level_bounds(int level, const QuantizerConfig& cfg) {
  const double d = cfg.width_db();
  return {level, std::pow(10.0, -7.4 - (level + 1) * d / 10.0), std::pow(10.0, -7.4 - level * d / 10.0)};
}

QuantizedLevel quantize(double q, const QuantizerConfig& cfg) {
  if (cfg.levels < 1) throw DomainError("quantizer needs at least one level");
  if (!(q > 0.0)) throw DomainError("quantize requires a positive power");
  const double d = cfg.width_db();
  const double q_dbm = watts_to_dbm(q);
  int l = static_cast<int>(std::floor((kQuantTopDbm - q_dbm) / d));
  l = std::clamp(l, 0, cfg.levels - 1);
  QuantizedLevel out = level_bounds(l, cfg);
  // Rounding in the log domain can put q one level off near a boundary.
  while (q > out.upper && out.level > 0) out = level_bounds(out.level - 1, cfg);
  while (q < out.lower && out.level < cfg.levels - 1) out = level_bounds(out.level + 1, cfg);
  return out;
}

const char* to_string(MeasurementKind k) {
  switch (k) {
    case MeasurementKind::exact: return "exact";
    case MeasurementKind::noisy: return "noisy";
    case MeasurementKind::quantized: return "quantized";
  }
  return "?";
}

std::vector<double> MeasurementSet::representative_powers() const {
  if (kind != MeasurementKind::quantized) return powers;
  std::vector<double> out;
  out.reserve(levels.size());
  for (const auto& l : levels) out.push_back(l.midpoint());
  return out;
}

void MeasurementSet::validate() const {
  if (reflections.empty()) throw DomainError("measurement set is empty");
  const int n = dim();
  for (const auto& r : reflections) {
    if (r.dim() != n) throw DomainError("reflections have inconsistent dimensions");
  }
  if (kind == MeasurementKind::quantized) {
    if (levels.size() != reflections.size()) throw DomainError("level count differs from T_p");
    for (const auto& l : levels) {
      if (!(l.lower < l.upper)) throw DomainError("quantized bounds must satisfy zeta < xi");
    }
  } else {
    if (powers.size() != reflections.size()) throw DomainError("power count differs from T_p");
    if (kind == MeasurementKind::exact) {
      for (double p : powers) {
        if (p < 0) throw DomainError("exact powers must be nonnegative");
      }
    }
  }
}

DesignMatrix build_design_matrix(const std::vector<ReflectionVector>& reflections, double p0) {
  if (reflections.empty()) throw DomainError("no reflections");
  const int n = reflections.front().dim();
  RMatrix c(static_cast<Eigen::Index>(n) * n, static_cast<Eigen::Index>(reflections.size()));
  for (size_t t = 0; t < reflections.size(); ++t) {
    if (reflections[t].dim() != n) throw DomainError("reflections have inconsistent dimensions");
    c.col(static_cast<Eigen::Index>(t)) = p0 * vectorize_outer(reflections[t].values());
  }
  DesignMatrix out{std::move(c), 0};
  out.rank = numerical_rank(out.C);
  return out;
}

std::vector<ReflectionVector> generate_training(int n_irs, int b, int t_p, Rng& rng, bool enforce_rank,
                                                int max_retries) {
  if (t_p < 1) throw DomainError("T_p must be at least 1");
  std::vector<ReflectionVector> out;
  out.reserve(static_cast<size_t>(t_p));
  if (!enforce_rank) {
    for (int t = 0; t < t_p; ++t) out.push_back(random_reflection(n_irs, b, rng));
    return out;
  }
  const int n = n_irs + 1;
  const int target = std::min(t_p, dimension_bound(n, b));
  std::vector<RVector> q;  // orthonormal basis of the accepted liftings
  for (int t = 0; t < t_p; ++t) {
    if (static_cast<int>(q.size()) >= target) {
      out.push_back(random_reflection(n_irs, b, rng));
      continue;
    }
    bool accepted = false;
    for (int attempt = 0; attempt <= max_retries && !accepted; ++attempt) {
      ReflectionVector v = random_reflection(n_irs, b, rng);
      const RVector w = vectorize_outer(v.values());
      RVector r = w;
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& e : q) r -= e.dot(r) * e;
      }
      const double nr = r.norm();
      if (nr > 1e-7 * w.norm()) {
        q.push_back(r / nr);
        out.push_back(std::move(v));
        accepted = true;
      }
    }
    if (!accepted) {
      throw RankDeficiency("could not raise the design rank within the retry budget",
                           static_cast<int>(q.size()));
    }
  }
  return out;
}

MeasurementSet measure_exact(const ChannelRealization& ch, const std::vector<ReflectionVector>& refl, double p0) {
  MeasurementSet ms;
  ms.reflections = refl;
  ms.kind = MeasurementKind::exact;
  ms.p0 = p0;
  ms.powers.reserve(refl.size());
  for (const auto& v : refl) {
    ms.powers.push_back(p0 * std::norm(v.values().dot(ch.h_bar)));
  }
  return ms;
}

MeasurementSet measure_noisy(const ChannelRealization& ch, const std::vector<ReflectionVector>& refl, double p0,
                             double sigma2, int n0, Rng& rng) {
  MeasurementSet ms;
  ms.reflections = refl;
  ms.kind = MeasurementKind::noisy;
  ms.p0 = p0;
  ms.sigma2 = sigma2;
  ms.n0 = n0;
  ms.powers.reserve(refl.size());
  for (const auto& v : refl) ms.powers.push_back(noisy_power(ch.h_bar, v, p0, sigma2, n0, rng));
  return ms;
}

MeasurementSet quantize_set(const MeasurementSet& noisy, const QuantizerConfig& cfg) {
  if (noisy.kind == MeasurementKind::quantized) throw DomainError("measurement set is already quantized");
  MeasurementSet ms = noisy;
  ms.kind = MeasurementKind::quantized;
  ms.quantizer = cfg;
  ms.levels.clear();
  for (double q : noisy.powers) ms.levels.push_back(quantize(q, cfg));
  ms.powers.clear();
  return ms;
}

void write_csv(std::ostream& os, const MeasurementSet& ms) {
  switch (ms.kind) {
    case MeasurementKind::exact: os << "t,v,p_watts\n"; break;
    case MeasurementKind::noisy: os << "t,v,q_watts\n"; break;
    case MeasurementKind::quantized: os << "t,v,level,zeta_watts,xi_watts\n"; break;
  }
  for (int t = 0; t < ms.size(); ++t) {
    os << t << ',' << ms.reflections[static_cast<size_t>(t)].to_digits() << ',';
    if (ms.kind == MeasurementKind::quantized) {
      const auto& l = ms.levels[static_cast<size_t>(t)];
      os << l.level << ',' << format_double(l.lower) << ',' << format_double(l.upper) << '\n';
    } else {
      os << format_double(ms.powers[static_cast<size_t>(t)]) << '\n';
    }
  }
}

MeasurementSet read_csv(std::istream& is, int bits, double p0, double sigma2, int n0,
                        std::optional<QuantizerConfig> quantizer) {
  std::string header;
  if (!std::getline(is, header)) throw DomainError("empty measurement CSV");
  MeasurementSet ms;
  ms.p0 = p0;
  ms.sigma2 = sigma2;
  ms.n0 = n0;
  if (header == "t,v,p_watts") {
    ms.kind = MeasurementKind::exact;
  } else if (header == "t,v,q_watts") {
    ms.kind = MeasurementKind::noisy;
  } else if (header == "t,v,level,zeta_watts,xi_watts") {
    ms.kind = MeasurementKind::quantized;
    ms.quantizer = quantizer;
  } else {
    throw DomainError("unrecognized measurement CSV header: " + header);
  }
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    const size_t want = ms.kind == MeasurementKind::quantized ? 5 : 3;
    if (cells.size() != want) throw DomainError("malformed measurement CSV row: " + line);
    ms.reflections.push_back(ReflectionVector::from_digits(cells[1], bits));
    if (ms.kind == MeasurementKind::quantized) {
      ms.levels.push_back({std::stoi(cells[2]), parse_double(cells[3]), parse_double(cells[4])});
    } else {
      ms.powers.push_back(parse_double(cells[2]));
    }
  }
  ms.validate();
  return ms;
}

}  // namespace irs
