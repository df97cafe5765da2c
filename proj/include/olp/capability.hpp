#pragma once

#include <algorithm>
#include <string>

#include "olp/errors.hpp"

namespace olp {

// Capability level: a positive integer or infinity.
class Capability {
 public:
  static Capability infinity() { return Capability(); }

  explicit Capability(int value) : finite_(true), value_(value) {
    if (value < 1) throw InvalidInput("capability level must be >= 1");
  }

  bool is_inf() const { return !finite_; }

  int value() const {
    if (!finite_) throw InvalidInput("capability level is infinite");
    return value_;
  }

  // Level actually used when perceiving: min with a finite bound.
  int clamp(int bound) const { return finite_ ? std::min(value_, bound) : bound; }

  friend bool operator==(const Capability& a, const Capability& b) {
    return a.finite_ == b.finite_ && (!a.finite_ || a.value_ == b.value_);
  }
  friend bool operator<=(const Capability& a, const Capability& b) {
    if (!a.finite_) return !b.finite_;
    if (!b.finite_) return true;
    return a.value_ <= b.value_;
  }
  friend bool operator<(const Capability& a, const Capability& b) {
    return a <= b && !(a == b);
  }

  friend Capability min(const Capability& a, const Capability& b) { return a <= b ? a : b; }
  friend Capability max(const Capability& a, const Capability& b) { return a <= b ? b : a; }

  std::string str() const { return finite_ ? std::to_string(value_) : "inf"; }

 private:
  Capability() : finite_(false), value_(0) {}
  bool finite_;
  int value_;
};

}  // namespace olp
