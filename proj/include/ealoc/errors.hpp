#pragma once

#include <stdexcept>
#include <string>

namespace ealoc {

// Bad user input: config values, dataset files, record CSVs. The CLI maps it
// (and std::invalid_argument from validate()) to exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ealoc
