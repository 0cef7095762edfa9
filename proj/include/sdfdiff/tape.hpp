#pragma once

#include <cstddef>
#include <vector>

namespace sdfdiff::ad {

class Tape;

/// Scalar handle recorded on a Tape.
class Var {
 public:
  Var() = default;
  double value() const;
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Minimal reverse-mode tape: every node has at most two parents.
class Tape {
 public:
  Var input(double value);
  Var constant(double value) { return input(value); }
  Var record(double value, const Var& a, double da);
  Var record(double value, const Var& a, double da, const Var& b, double db);

  double value(const Var& v) const { return nodes_[v.id()].value; }

  /// Adjoints of every node with respect to `output`.
  std::vector<double> gradient(const Var& output) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    double value;
    std::size_t parent[2];
    double partial[2];
    int arity;
  };
  std::vector<Node> nodes_;
};

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator*(const Var& a, double s);
Var operator*(double s, const Var& a);
Var operator+(const Var& a, double s);
Var sqrt(const Var& a);
/// max(0, a) with derivative 0 at and below zero.
Var relu(const Var& a);

}  // namespace sdfdiff::ad
