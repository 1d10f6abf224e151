#pragma once

#include <stdexcept>
#include <string>

namespace mflab {

struct MalformedDomain : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Point outside the open domain where an interior point was required.
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Collision, boundary contact or an evaluation on the singular set.
struct SingularConfiguration : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsafeRegion : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MeshingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RegimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mflab
