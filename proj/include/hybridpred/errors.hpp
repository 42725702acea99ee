// Copyright 2026 The hybridpred Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HYBRIDPRED__ERRORS_HPP_
#define HYBRIDPRED__ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace hybridpred
{

/// Base of every error raised by the library. `kind()` is a short stable tag
/// used by the CLI in its machine-parseable failure line.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
  virtual const char * kind() const noexcept { return "error"; }
};

class ShapeError : public Error
{
public:
  using Error::Error;
  const char * kind() const noexcept override { return "shape"; }
};

class NumericError : public Error
{
public:
  using Error::Error;
  const char * kind() const noexcept override { return "numeric"; }
};

class ParseError : public Error
{
public:
  using Error::Error;
  const char * kind() const noexcept override { return "parse"; }
};

class ValidationError : public Error
{
public:
  using Error::Error;
  const char * kind() const noexcept override { return "validation"; }
};

class ContractError : public Error
{
public:
  using Error::Error;
  const char * kind() const noexcept override { return "contract"; }
};

}  // namespace hybridpred

#endif  // HYBRIDPRED__ERRORS_HPP_
