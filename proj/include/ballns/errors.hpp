#pragma once

#include <stdexcept>
#include <string>

namespace ballns {

/// Raised when an argument violates an operation's precondition (odd n, |m| > l, ...).
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Evaluation point outside the domain of a series.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A per-mode linear system could not be solved (pivot below the rank threshold).
class SingularSystem : public std::runtime_error {
 public:
  SingularSystem(int l, int m, std::string kind, const std::string& what)
      : std::runtime_error(what + " (l=" + std::to_string(l) + ", m=" + std::to_string(m) +
                           ", bc=" + kind + ")"),
        l_(l),
        m_(m),
        kind_(std::move(kind)) {}

  int l() const noexcept { return l_; }
  int m() const noexcept { return m_; }
  const std::string& kind() const noexcept { return kind_; }

 private:
  int l_;
  int m_;
  std::string kind_;
};

/// Internal invariant broken, e.g. a coefficient-space division left a remainder.
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input field violates a structural precondition (e.g. not solenoidal-tangent).
class NotSolenoidalTangent : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration, boundary-potential or snapshot files that cannot be accepted.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ballns
