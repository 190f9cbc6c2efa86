#pragma once

#include <stdexcept>
#include <string>

namespace ndtex {

/// Base class for all ndtex errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Mismatched extents, tuple arity, or matrix orders.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Argument outside its valid domain.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Normalization requested for a matrix with no co-occurrence pairs.
class EmptyMatrixError : public DomainError {
public:
  using DomainError::DomainError;
};

/// File parsing or filesystem failure.
class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace ndtex
