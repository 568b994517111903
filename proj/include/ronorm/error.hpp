// Copyright the ronorm contributors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ronorm
{

/// Broad error category. The CLI maps each category to its own exit code.
enum class ErrorCategory
{
  Config,
  Data,
  Numerics,
};

class Error : public std::runtime_error
{
public:
  Error(ErrorCategory category, const std::string &what)
    : std::runtime_error(what), category_(category)
  {
  }

  ErrorCategory category() const noexcept { return category_; }

private:
  ErrorCategory category_;
};

class ConfigError : public Error
{
public:
  explicit ConfigError(const std::string &what) : Error(ErrorCategory::Config, what) {}
};

/// Shape, dimension, I/O and dataset-consistency failures.
class DataError : public Error
{
public:
  explicit DataError(const std::string &what) : Error(ErrorCategory::Data, what) {}
};

class NumericsError : public Error
{
public:
  explicit NumericsError(const std::string &what) : Error(ErrorCategory::Numerics, what) {}
};

class DimensionError : public DataError
{
public:
  using DataError::DataError;
};

}  // namespace ronorm
