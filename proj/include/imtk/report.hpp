// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace imtk {

/// One named residual against its tolerance.
struct CheckResult {
  std::string name;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  std::string note;
};

/// Outcome of a sampled verification.
struct Report {
  std::string command;
  std::uint64_t seed = 0;
  int samples = 0;
  int discarded = 0;
  std::vector<CheckResult> checks;
  std::vector<std::string> notes;
  std::map<std::string, bool> flags;  ///< named predicates that do not gate `pass`

  /// Records `residual` under `name`; passes when residual < tol.
  CheckResult& add(const std::string& name, double residual, double tol,
                   const std::string& note = {});
  void append(const Report& other, const std::string& prefix = {});
  bool pass() const;
  const CheckResult* find(const std::string& name) const;
  double residual(const std::string& name) const;  ///< throws if absent
  std::string summary() const;
};

/// A construction was refused; the report names the offending residuals.
class PreconditionError : public std::runtime_error {
 public:
  PreconditionError(const std::string& what, Report r)
      : std::runtime_error(what), report_(std::move(r)) {}
  const Report& report() const { return report_; }

 private:
  Report report_;
};

/// Sizes of the inputs do not match.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical rank changed across the sample set.
class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace imtk
