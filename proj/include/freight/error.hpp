#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace freight {

class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class config_error : public error {
public:
  using error::error;
};

class io_error : public error {
public:
  using error::error;
};

class parse_error : public error {
public:
  using error::error;
};

// Not enough samples (or populated bins) for a calibration detector.
class insufficient_data_error : public error {
public:
  using error::error;
};

class fit_error : public error {
public:
  using error::error;
};

// Raised when every sample is identical and the log spread would be zero.
class degenerate_fit_error : public fit_error {
public:
  using fit_error::fit_error;
};

class domain_error : public error {
public:
  using error::error;
};

// Two records that cannot form a speed/acceleration pair.
class rejected_pair_error : public error {
public:
  using error::error;
};

class radius_unreachable_error : public error {
public:
  using error::error;
};

class consistency_error : public error {
public:
  using error::error;
};

class plan_error : public error {
public:
  using error::error;
};

class ambiguity_error : public error {
public:
  ambiguity_error(const std::string& what, std::vector<std::string> candidates)
      : error(what), candidates_(std::move(candidates)) {}

  const std::vector<std::string>& candidates() const noexcept { return candidates_; }

private:
  std::vector<std::string> candidates_;
};

} // namespace freight
