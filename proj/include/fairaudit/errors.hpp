#pragma once

#include <stdexcept>
#include <string>

namespace fairaudit {

// Base class for every error raised by this library. Catching FairauditError
// is sufficient to intercept any library-level failure.
class FairauditError : public std::runtime_error {
 public:
  explicit FairauditError(const std::string& what) : std::runtime_error(what) {}
};

// --- input / ingestion ------------------------------------------------------

class IOError : public FairauditError {
 public:
  using FairauditError::FairauditError;
};

class FormatError : public FairauditError {
 public:
  using FairauditError::FairauditError;
};

class SchemaError : public FairauditError {
 public:
  using FairauditError::FairauditError;
};

class MappingError : public FairauditError {
 public:
  using FairauditError::FairauditError;
};

class BinError : public FairauditError {
 public:
  using FairauditError::FairauditError;
};

class DegenerateError : public FairauditError {
 public:
  using FairauditError::FairauditError;
};

// --- metrics ----------------------------------------------------------------

class EmptyGroupError : public FairauditError {
 public:
  using FairauditError::FairauditError;
};

class UnknownStratumError : public FairauditError {
 public:
  using FairauditError::FairauditError;
};

class LengthMismatchError : public FairauditError {
 public:
  using FairauditError::FairauditError;
};

class AllStrataUndefinedError : public FairauditError {
 public:
  using FairauditError::FairauditError;
};

// --- stats ------------------------------------------------------------------

class ZeroMarginError : public FairauditError {
 public:
  using FairauditError::FairauditError;
};

// --- training ---------------------------------------------------------------

class DimensionError : public FairauditError {
 public:
  using FairauditError::FairauditError;
};

class InfeasibleError : public FairauditError {
 public:
  using FairauditError::FairauditError;
};

class NonConvergenceError : public FairauditError {
 public:
  using FairauditError::FairauditError;
};

// --- reporting --------------------------------------------------------------

class DuplicateCellError : public FairauditError {
 public:
  using FairauditError::FairauditError;
};

}  // namespace fairaudit
