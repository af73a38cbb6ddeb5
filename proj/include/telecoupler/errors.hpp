#pragma once

#include <stdexcept>
#include <string>

namespace telecoupler {

// Invalid parameters raise std::invalid_argument directly.

// A sampler or rejection loop exceeded its hard iteration cap.
class resource_limit_error : public std::runtime_error {
 public:
  explicit resource_limit_error(const std::string& what) : std::runtime_error(what) {}
};

// A tabulated numerical object is under-resolved (e.g. density grid loses mass).
class numeric_resolution_error : public std::runtime_error {
 public:
  explicit numeric_resolution_error(const std::string& what) : std::runtime_error(what) {}
};

class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// An experiment produced a non-finite or inconsistent result row.
class experiment_failure : public std::runtime_error {
 public:
  explicit experiment_failure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace telecoupler
