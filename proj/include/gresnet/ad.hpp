#pragma once

// Minimal reverse-mode differentiation. A Tape is a Wengert list: every node
// has at most two parents and stores the local partials. Nodes are appended in
// evaluation order, so a single reverse sweep over the list is a valid
// topological order.
//
// Subgradient conventions: d|u|/du = 0 at u = 0; min/max pass the whole
// gradient to the argument std::min/std::max return on ties (their first).

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace gresnet::ad {

class Tape {
 public:
  struct Node {
    int lhs = -1;
    int rhs = -1;
    double dlhs = 0.0;
    double drhs = 0.0;
  };

  int leaf() { return push(-1, 0.0, -1, 0.0); }
  int push(int lhs, double dlhs, int rhs, double drhs) {
    nodes_.push_back({lhs, rhs, dlhs, drhs});
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  void clear() noexcept { nodes_.clear(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

  // Propagates the seeded adjoints (one per node, in place) back to the leaves.
  void backward(std::span<double> adjoint) const;

 private:
  std::vector<Node> nodes_;
};

class Var {
 public:
  Var() = default;
  Var(double value) : value_(value) {}  // NOLINT: constants convert implicitly
  Var(Tape& tape, double value) : value_(value), index_(tape.leaf()), tape_(&tape) {}
  Var(double value, int index, Tape* tape) : value_(value), index_(index), tape_(tape) {}

  double value() const noexcept { return value_; }
  int index() const noexcept { return index_; }
  Tape* tape() const noexcept { return tape_; }
  bool is_constant() const noexcept { return index_ < 0; }

 private:
  double value_ = 0.0;
  int index_ = -1;
  Tape* tape_ = nullptr;
};

inline double value_of(const Var& v) noexcept { return v.value(); }

namespace detail {

inline Var unary(const Var& a, double value, double da) {
  if (a.is_constant()) return Var(value);
  return Var(value, a.tape()->push(a.index(), da, -1, 0.0), a.tape());
}

inline Var binary(const Var& a, const Var& b, double value, double da, double db) {
  if (a.is_constant() && b.is_constant()) return Var(value);
  if (a.is_constant()) return Var(value, b.tape()->push(b.index(), db, -1, 0.0), b.tape());
  if (b.is_constant()) return Var(value, a.tape()->push(a.index(), da, -1, 0.0), a.tape());
  return Var(value, a.tape()->push(a.index(), da, b.index(), db), a.tape());
}

}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
  return detail::binary(a, b, a.value() + b.value(), 1.0, 1.0);
}
inline Var operator-(const Var& a, const Var& b) {
  return detail::binary(a, b, a.value() - b.value(), 1.0, -1.0);
}
inline Var operator*(const Var& a, const Var& b) {
  return detail::binary(a, b, a.value() * b.value(), b.value(), a.value());
}
inline Var operator/(const Var& a, const Var& b) {
  const double q = a.value() / b.value();
  return detail::binary(a, b, q, 1.0 / b.value(), -q / b.value());
}
inline Var operator-(const Var& a) { return detail::unary(a, -a.value(), -1.0); }

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }
inline Var& operator/=(Var& a, const Var& b) { return a = a / b; }

inline bool operator<(const Var& a, const Var& b) { return a.value() < b.value(); }
inline bool operator>(const Var& a, const Var& b) { return a.value() > b.value(); }
inline bool operator<=(const Var& a, const Var& b) { return a.value() <= b.value(); }
inline bool operator>=(const Var& a, const Var& b) { return a.value() >= b.value(); }

inline Var tanh(const Var& a) {
  const double t = std::tanh(a.value());
  return detail::unary(a, t, 1.0 - t * t);
}

inline Var abs(const Var& a) {
  const double v = a.value();
  const double d = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  return detail::unary(a, std::fabs(v), d);
}

}  // namespace gresnet::ad
