// SPDX-License-Identifier: Apache-2.0
#include "imtk/report.hpp"

#include <cmath>
#include <sstream>

namespace imtk {

CheckResult& Report::add(const std::string& name, double residual, double tol,
                         const std::string& note) {
  CheckResult c;
  c.name = name;
  c.max_residual = residual;
  c.tolerance = tol;
  c.pass = std::isfinite(residual) && residual < tol;
  c.note = note;
  checks.push_back(c);
  return checks.back();
}

void Report::append(const Report& other, const std::string& prefix) {
  for (CheckResult c : other.checks) {
    c.name = prefix + c.name;
    checks.push_back(std::move(c));
  }
  discarded += other.discarded;
  for (const auto& n : other.notes) notes.push_back(n);
  for (const auto& [k, v] : other.flags) flags[prefix + k] = v;
}

bool Report::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

const CheckResult* Report::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

double Report::residual(const std::string& name) const {
  if (const CheckResult* c = find(name)) return c->max_residual;
  throw std::out_of_range("report has no check named " + name);
}

std::string Report::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << (c.pass ? "ok   " : "FAIL ") << c.name << "  residual=" << c.max_residual
       << "  tol=" << c.tolerance;
    if (!c.note.empty()) os << "  (" << c.note << ")";
    os << '\n';
  }
  return os.str();
}

}  // namespace imtk
