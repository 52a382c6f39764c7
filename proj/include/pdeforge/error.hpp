// Copyright 2026 The pdeforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pdeforge {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
  using Error::Error;
};

/// Non-positive diffusion/permeability coefficient.
class EllipticityError : public Error {
  using Error::Error;
};

class ParameterError : public Error {
  using Error::Error;
};

class SingularityError : public Error {
  using Error::Error;
};

class SizeError : public Error {
  using Error::Error;
};

/// NaN/Inf encountered inside an iterative solve.
class NumericalBreakdown : public Error {
  using Error::Error;
};

class PreconditionError : public Error {
  using Error::Error;
};

class NotSpdError : public Error {
  using Error::Error;
};

class BasisConstructionError : public Error {
 public:
  BasisConstructionError(std::size_t index, const std::string& what)
      : Error("basis " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class DegenerateWeightsError : public Error {
  using Error::Error;
};

class GenerationError : public Error {
  using Error::Error;
};

class SequencingError : public Error {
  using Error::Error;
};

class IoError : public Error {
  using Error::Error;
};

/// Dataset corruption. Carries the offending file and the byte offset at
/// which the mismatch was detected.
class IntegrityError : public Error {
 public:
  IntegrityError(std::string file, std::uint64_t offset, const std::string& what)
      : Error(file + " @ byte " + std::to_string(offset) + ": " + what),
        file_(std::move(file)),
        offset_(offset) {}
  const std::string& file() const noexcept { return file_; }
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::string file_;
  std::uint64_t offset_;
};

class VersionError : public Error {
  using Error::Error;
};

/// Measured phase below clock resolution.
class ResolutionError : public Error {
  using Error::Error;
};

class UsageError : public Error {
  using Error::Error;
};

}  // namespace pdeforge
