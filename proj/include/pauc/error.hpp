// Copyright 2026 The pauc-embed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace pauc {

// Structured error carrying a machine-readable code ("empty-class",
// "empty-pauc-window", ...) plus key/value details for reporting.
class Error : public std::runtime_error {
 public:
  using Details = std::map<std::string, std::string>;

  Error(std::string code, const std::string& message, Details details = {})
      : std::runtime_error(code + ": " + message),
        code_(std::move(code)),
        details_(std::move(details)) {}

  const std::string& code() const noexcept { return code_; }
  const Details& details() const noexcept { return details_; }

  Error& with(const std::string& key, const std::string& value) {
    details_[key] = value;
    return *this;
  }

 private:
  std::string code_;
  Details details_;
};

namespace detail {

template <typename T>
std::string to_detail(const T& value) {
  std::ostringstream os;
  os.precision(17);
  os << value;
  return os.str();
}

}  // namespace detail

}  // namespace pauc
