// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dqan {

using Complex = std::complex<double>;
using ComplexVec = std::vector<Complex>;
using RealVec = std::vector<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kDefaultCoreIndex = 1.468;

// ---------------------------------------------------------------------------
// Error hierarchy. ConfigError maps to CLI exit code 2, everything else to 3.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class WeakModulationError : public Error {
 public:
  using Error::Error;
};

class LockFailure : public Error {
 public:
  using Error::Error;
};

class NoDetection : public Error {
 public:
  NoDetection(const std::string& what, double peak) : Error(what), peak_(peak) {}
  double peak() const noexcept { return peak_; }

 private:
  double peak_;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, double last_gap, int iterations)
      : Error(what), last_gap_(last_gap), iterations_(iterations) {}
  double last_gap() const noexcept { return last_gap_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double last_gap_;
  int iterations_;
};

// ---------------------------------------------------------------------------
// Seed splitting.
//
// A stage seed is splitmix64(master ^ fnv1a64(stage) ^ golden * (index + 1)).
// Streams are std::mt19937_64 seeded with the derived value, so two runs with
// the same master seed see the same per-stage streams regardless of the order
// in which stages execute.

std::uint64_t fnv1a64(std::string_view text) noexcept;
std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage,
                          std::uint64_t index = 0) noexcept;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

}  // namespace dqan
