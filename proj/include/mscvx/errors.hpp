// Copyright (c) 2026 the mscvx authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mscvx {

// Thrown when an input leaves the mathematical domain of an operation,
// e.g. an inverse retraction at (or numerically near) a cut point, or a
// point that fails the manifold membership check.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown for structurally invalid arguments: dimension mismatches,
// tangent coordinates paired with the wrong base point, bad option values.
class ArgumentError : public std::runtime_error {
 public:
  explicit ArgumentError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a numerical procedure cannot continue (factorization
// breakdown, loss of positivity in a cone scaling, non-finite data).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown by file and config readers on malformed input.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mscvx
