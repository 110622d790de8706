#pragma once

#include <functional>
#include <limits>
#include <memory>

namespace pdmp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// One-dimensional autonomous flow x' = b(x). Every axis of a mode carries one
// (or none, when the coordinate is frozen).
class AxisFlow {
 public:
  virtual ~AxisFlow() = default;
  virtual double velocity(double x) const = 0;
  virtual double advance(double t, double x) const = 0;
  // J_t(x) = b(phi_t x) / b(x), i.e. exp of the integrated divergence.
  virtual double jacobian(double t, double x) const;
  // Smallest s >= 0 with advance(direction * s, x) == level, or kInf.
  virtual double time_to_reach(double x, double level, int direction) const = 0;
  // True when advance/time_to_reach are closed-form rather than integrated.
  virtual bool exact() const { return true; }

 protected:
  // Direction test shared by monotone 1D flows: can the orbit move from x
  // towards level in the given time direction?
  bool heads_towards(double x, double level, int direction) const;
};

class TranslationFlow final : public AxisFlow {
 public:
  explicit TranslationFlow(double speed) : speed_(speed) {}
  double velocity(double) const override { return speed_; }
  double advance(double t, double x) const override { return x + speed_ * t; }
  double jacobian(double, double) const override { return 1.0; }
  double time_to_reach(double x, double level, int direction) const override;

 private:
  double speed_;
};

// x' = rate * x
class LinearFlow final : public AxisFlow {
 public:
  explicit LinearFlow(double rate) : rate_(rate) {}
  double velocity(double x) const override { return rate_ * x; }
  double advance(double t, double x) const override;
  double jacobian(double t, double x) const override;
  double time_to_reach(double x, double level, int direction) const override;

 private:
  double rate_;
};

// Integrated with classical RK4 at a fixed step; hitting times by marching
// then bisection.
class NumericFlow final : public AxisFlow {
 public:
  NumericFlow(std::function<double(double)> b, double step, double max_time);
  double velocity(double x) const override { return b_(x); }
  double advance(double t, double x) const override;
  double time_to_reach(double x, double level, int direction) const override;
  bool exact() const override { return false; }

 private:
  std::function<double(double)> b_;
  double step_;
  double max_time_;
};

using AxisFlowPtr = std::shared_ptr<const AxisFlow>;

}  // namespace pdmp
