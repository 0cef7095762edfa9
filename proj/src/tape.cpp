#include "sdfdiff/tape.hpp"

#include <cmath>

#include "sdfdiff/errors.hpp"

namespace sdfdiff::ad {

double Var::value() const { return tape_->value(*this); }

Var Tape::input(double value) {
  nodes_.push_back({value, {0, 0}, {0.0, 0.0}, 0});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(double value, const Var& a, double da) {
  nodes_.push_back({value, {a.id(), 0}, {da, 0.0}, 1});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(double value, const Var& a, double da, const Var& b, double db) {
  nodes_.push_back({value, {a.id(), b.id()}, {da, db}, 2});
  return Var(this, nodes_.size() - 1);
}

std::vector<double> Tape::gradient(const Var& output) const {
  std::vector<double> adj(nodes_.size(), 0.0);
  adj[output.id()] = 1.0;
  for (std::size_t q = output.id() + 1; q-- > 0;) {
    const Node& n = nodes_[q];
    if (adj[q] == 0.0) continue;
    for (int e = 0; e < n.arity; ++e) adj[n.parent[e]] += adj[q] * n.partial[e];
  }
  return adj;
}

namespace {
Tape& same_tape(const Var& a, const Var& b) {
  if (a.tape() != b.tape() || a.tape() == nullptr) throw InvalidArgument("ad::Var operands from different tapes");
  return *a.tape();
}
}  // namespace

Var operator+(const Var& a, const Var& b) { return same_tape(a, b).record(a.value() + b.value(), a, 1.0, b, 1.0); }
Var operator-(const Var& a, const Var& b) { return same_tape(a, b).record(a.value() - b.value(), a, 1.0, b, -1.0); }
Var operator*(const Var& a, const Var& b) {
  return same_tape(a, b).record(a.value() * b.value(), a, b.value(), b, a.value());
}
Var operator/(const Var& a, const Var& b) {
  const double inv = 1.0 / b.value();
  return same_tape(a, b).record(a.value() * inv, a, inv, b, -a.value() * inv * inv);
}
Var operator*(const Var& a, double s) { return a.tape()->record(a.value() * s, a, s); }
Var operator*(double s, const Var& a) { return a * s; }
Var operator+(const Var& a, double s) { return a.tape()->record(a.value() + s, a, 1.0); }
Var sqrt(const Var& a) {
  const double r = std::sqrt(a.value());
  return a.tape()->record(r, a, r > 0.0 ? 0.5 / r : 0.0);
}
Var relu(const Var& a) {
  const double v = a.value();
  return a.tape()->record(v > 0.0 ? v : 0.0, a, v > 0.0 ? 1.0 : 0.0);
}

}  // namespace sdfdiff::ad
