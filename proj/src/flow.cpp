#include "pdmp/flow.hpp"

#include <cmath>
#include <utility>

#include "pdmp/error.hpp"

namespace pdmp {

double AxisFlow::jacobian(double t, double x) const {
  const double b0 = velocity(x);
  if (b0 != 0.0) return velocity(advance(t, x)) / b0;
  // Rest point: J_t = exp(t b'(x)).
  const double h = 1e-6 * std::max(1.0, std::abs(x));
  const double db = (velocity(x + h) - velocity(x - h)) / (2.0 * h);
  return std::exp(t * db);
}

bool AxisFlow::heads_towards(double x, double level, int direction) const {
  if (x == level) return true;
  const double v = velocity(x) * direction;
  if (v > 0.0) return level > x;
  if (v < 0.0) return level < x;
  return false;
}

double TranslationFlow::time_to_reach(double x, double level,
                                      int direction) const {
  if (x == level) return 0.0;
  if (!heads_towards(x, level, direction)) return kInf;
  return std::abs(level - x) / std::abs(speed_);
}

double LinearFlow::advance(double t, double x) const {
  return x * std::exp(rate_ * t);
}

double LinearFlow::jacobian(double t, double) const {
  return std::exp(rate_ * t);
}

double LinearFlow::time_to_reach(double x, double level, int direction) const {
  if (x == level) return 0.0;
  if (!heads_towards(x, level, direction)) return kInf;
  if (level == 0.0 || (level > 0.0) != (x > 0.0)) return kInf;
  return std::abs(std::log(level / x) / rate_);
}

NumericFlow::NumericFlow(std::function<double(double)> b, double step,
                         double max_time)
    : b_(std::move(b)), step_(step), max_time_(max_time) {
  if (!(step_ > 0.0) || !(max_time_ > 0.0))
    fail(ErrorCode::Config, "numeric flow needs positive step and horizon");
}

namespace {

double rk4(const std::function<double(double)>& b, double x, double h) {
  const double k1 = b(x);
  const double k2 = b(x + 0.5 * h * k1);
  const double k3 = b(x + 0.5 * h * k2);
  const double k4 = b(x + h * k3);
  return x + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
}

}  // namespace

double NumericFlow::advance(double t, double x) const {
  if (!std::isfinite(t)) fail(ErrorCode::InvalidArgument, "non-finite time");
  if (t == 0.0) return x;
  const auto n = static_cast<long>(std::ceil(std::abs(t) / step_));
  const double h = t / static_cast<double>(n);
  for (long i = 0; i < n; ++i) x = rk4(b_, x, h);
  return x;
}

double NumericFlow::time_to_reach(double x, double level, int direction) const {
  if (x == level) return 0.0;
  if (!heads_towards(x, level, direction)) return kInf;
  const double side = x < level ? -1.0 : 1.0;
  // A non-finite state means the orbit left the region where b is defined.
  auto crossed = [&](double v) { return !std::isfinite(v) || (v - level) * side <= 0.0; };
  double t = 0.0;
  double y = x;
  while (t < max_time_) {
    const double next = rk4(b_, y, direction * step_);
    if (crossed(next)) {
      double lo = 0.0;
      double hi = step_;
      while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (crossed(advance(direction * mid, y)))
          hi = mid;
        else
          lo = mid;
      }
      return t + hi;
    }
    y = next;
    t += step_;
  }
  return kInf;
}

}  // namespace pdmp
