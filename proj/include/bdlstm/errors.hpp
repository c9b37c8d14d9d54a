#pragma once

#include <stdexcept>

namespace bdlstm {

// Malformed, missing or inconsistent input (files, configs, datasets).
// The CLI maps this to exit code 2; other runtime failures map to 1.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bdlstm
