#pragma once

#include <limits>

#include "mopg/errors.hpp"

namespace mopg {

// Value in R ∪ {+infinity}.  Nonsmooth objective terms (indicator
// functions in particular) evaluate to this type; +infinity is an
// explicit state rather than an IEEE special so that accidental
// arithmetic on infinite values cannot slip through silently.
template <typename Scalar>
class Extended {
 public:
  Extended() = default;
  Extended(Scalar v) : value_(v) {}  // NOLINT: implicit by design

  static Extended infinity() {
    Extended e;
    e.finite_ = false;
    return e;
  }

  bool is_finite() const { return finite_; }

  // Finite value; throws on +infinity.
  Scalar value() const {
    if (!finite_) throw ArgumentError("Extended: value() on +infinity");
    return value_;
  }

  // IEEE view, +inf mapped to std::numeric_limits::infinity().
  Scalar as_ieee() const {
    return finite_ ? value_ : std::numeric_limits<Scalar>::infinity();
  }

  Extended& operator+=(const Extended& o) {
    if (!finite_ || !o.finite_) {
      finite_ = false;
    } else {
      value_ += o.value_;
    }
    return *this;
  }

  friend Extended operator+(Extended a, const Extended& b) { return a += b; }

  friend bool operator==(const Extended& a, const Extended& b) {
    if (a.finite_ != b.finite_) return false;
    return !a.finite_ || a.value_ == b.value_;
  }

  friend bool operator<(const Extended& a, const Extended& b) {
    if (!a.finite_) return false;           // +inf < anything is false
    if (!b.finite_) return true;            // finite < +inf
    return a.value_ < b.value_;
  }

  friend bool operator<=(const Extended& a, const Extended& b) {
    return a < b || a == b;
  }

 private:
  Scalar value_{};
  bool finite_ = true;
};

}  // namespace mopg
