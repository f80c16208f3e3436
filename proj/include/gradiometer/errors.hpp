#pragma once

#include <stdexcept>
#include <string>

namespace gradiometer {

struct SingularPoint : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroField : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TooFewPoints : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateConic : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotAnEllipse : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AmbiguousUnwrap : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularFrame : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingComponent : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateEigenvalues : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroDenominator : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gradiometer
