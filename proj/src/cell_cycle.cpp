#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "pdmp/error.hpp"
#include "pdmp/models.hpp"

namespace pdmp {

using Kind = ScalarLaw::Kind;

double CellCycleParams::Q(double x) const {
  const double a = growth.coef;
  const double c = entry.coef;
  if (c == 0.0) return 0.0;
  if (growth.kind == Kind::Constant) {
    if (entry.kind == Kind::Constant) return c * x / a;
    if (entry.kind == Kind::Linear) return c * x * x / (2.0 * a);
    if (entry.power != -1.0) return c * std::pow(x, entry.power + 1.0) / (a * (entry.power + 1.0));
  }
  if (growth.kind == Kind::Linear) {
    if (entry.kind == Kind::Constant) return x > 0.0 ? (c / a) * std::log(x) : -kInf;
    if (entry.kind == Kind::Linear) return (c / a) * x;
    if (entry.power != 0.0) return (c / (a * entry.power)) * std::pow(x, entry.power);
  }
  if (x <= 0.0) return -kInf;
  auto integrand = [this](double z) { return phi(z) / g(z); };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 1.0, x, 12, 1e-12);
}

double CellCycleParams::back(double x, double t) const {
  switch (growth.kind) {
    case Kind::Constant: return x - growth.coef * t;
    case Kind::Linear: return x * std::exp(-growth.coef * t);
    case Kind::Power: break;
  }
  const auto n = static_cast<long>(std::ceil(t / flow_step));
  const double h = -t / static_cast<double>(n);
  for (long i = 0; i < n && x > 0.0; ++i) {
    const double k1 = g(x);
    const double k2 = g(std::max(0.0, x + 0.5 * h * k1));
    const double k3 = g(std::max(0.0, x + 0.5 * h * k2));
    const double k4 = g(std::max(0.0, x + h * k3));
    x += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
  }
  return x;
}

double CellCycleParams::newborn_slope(double x) const {
  const double n = newborn(x);
  return n > 0.0 ? 2.0 * g(n) / g(2.0 * x) : 0.0;
}

void CellCycleParams::validate() const {
  if (!(t2 > 0.0)) fail(ErrorCode::Config, "phase II duration must be positive");
  if (!(x_max > 0.0) || size_cells < 2 || phase2_cells < 2)
    fail(ErrorCode::Config, "cell-cycle grid too small");
  const double h = size_width();
  for (std::size_t k = 0; k < size_cells; ++k) {
    const double x = (static_cast<double>(k) + 0.5) * h;
    if (!(g(x) > 0.0)) fail(ErrorCode::Config, "growth rate must be positive on the grid");
    if (!(phi(x) >= 0.0)) fail(ErrorCode::Config, "phase-exit rate must be nonnegative");
  }
  if (!(newborn(x_max) > 0.0))
    fail(ErrorCode::Config, "size grid does not cover the division range");
}

namespace {

using GL = boost::math::quadrature::gauss<double, 8>;

// Cumulative transforms on the size grid for piecewise-constant f1:
// M(u) = int_0^u f1 and D(u) = int_0^u exp(Q(z) - Q(u)) f1(z) dz.
class SizeTransform {
 public:
  struct Probe {
    bool below = false;
    bool beyond = false;
    std::size_t cell = 0;
    double offset = 0.0;   // u - left edge of its cell
    double decay = 0.0;    // exp(Q(edge) - Q(u))
    double partial = 0.0;  // int_{edge}^{u} exp(Q(z) - Q(u)) dz
  };

  explicit SizeTransform(const CellCycleParams& p) : p_(p), h_(p.size_width()), n_(p.size_cells) {
    qe_.resize(n_ + 1);
    for (std::size_t k = 0; k <= n_; ++k) qe_[k] = p.Q(edge(k));
    decay_.resize(n_);
    inner_.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      decay_[k] = std::exp(qe_[k] - qe_[k + 1]);
      const double q1 = qe_[k + 1];
      inner_[k] = GL::integrate([&](double z) { return std::exp(p.Q(z) - q1); }, edge(k), edge(k + 1));
    }
  }

  double edge(std::size_t k) const { return k == n_ ? p_.x_max : static_cast<double>(k) * h_; }

  Probe probe(double u) const {
    Probe pr;
    if (u <= 0.0) {
      pr.below = true;
      return pr;
    }
    const double qu = p_.Q(u);
    if (u >= p_.x_max) {
      pr.beyond = true;
      pr.decay = std::exp(qe_[n_] - qu);
      return pr;
    }
    pr.cell = std::min(n_ - 1, static_cast<std::size_t>(u / h_));
    pr.offset = u - edge(pr.cell);
    pr.decay = std::exp(qe_[pr.cell] - qu);
    if (pr.offset > 0.0)
      pr.partial = GL::integrate([&](double z) { return std::exp(p_.Q(z) - qu); }, edge(pr.cell), u);
    return pr;
  }

  void cumulate(ValueView f, Values& M, Values& D) const {
    M.assign(n_ + 1, 0.0);
    D.assign(n_ + 1, 0.0);
    for (std::size_t k = 0; k < n_; ++k) {
      M[k + 1] = M[k] + f[k] * h_;
      D[k + 1] = decay_[k] * D[k] + f[k] * inner_[k];
    }
  }

  double d_at(const Probe& pr, ValueView f, const Values& D) const {
    if (pr.below) return 0.0;
    if (pr.beyond) return pr.decay * D[n_];
    return pr.decay * D[pr.cell] + f[pr.cell] * pr.partial;
  }

  double phi_at(const Probe& pr, ValueView f, const Values& M, const Values& D) const {
    if (pr.below) return 0.0;
    const double m = pr.beyond ? M[n_] : M[pr.cell] + f[pr.cell] * pr.offset;
    return m - d_at(pr, f, D);
  }

 private:
  const CellCycleParams& p_;
  double h_;
  std::size_t n_;
  Values qe_;
  Values decay_;
  Values inner_;
};

class P1Operator {
 public:
  explicit P1Operator(const CellCycleParams& p) : t_(p), n_(p.size_cells), h_(p.size_width()) {
    for (std::size_t k = 0; k <= n_; ++k) probes_.push_back(t_.probe(p.newborn(t_.edge(k))));
  }

  // Cell mass of P1 f on [a, b] is Phi(newborn(b)) - Phi(newborn(a)).
  Values apply(ValueView f) const {
    Values M, D;
    t_.cumulate(f, M, D);
    Values out(n_);
    double prev = t_.phi_at(probes_[0], f, M, D);
    for (std::size_t k = 0; k < n_; ++k) {
      const double next = t_.phi_at(probes_[k + 1], f, M, D);
      out[k] = std::max(0.0, next - prev) / h_;
      prev = next;
    }
    return out;
  }

 private:
  SizeTransform t_;
  std::size_t n_;
  double h_;
  std::vector<SizeTransform::Probe> probes_;
};

double size_mass(const CellCycleParams& p, ValueView f) {
  double s = 0.0;
  for (double v : f) s += v;
  return s * p.size_width();
}

}  // namespace

Values p1_apply(const CellCycleParams& p, ValueView f1) {
  p.validate();
  if (f1.size() != p.size_cells) fail(ErrorCode::InvalidArgument, "size density has wrong length");
  return P1Operator(p).apply(f1);
}

double uniqueness_value(const CellCycleParams& p) {
  double best = kInf;
  const double h = p.size_width();
  for (std::size_t k = p.size_cells / 2; k <= p.size_cells; ++k) {
    const double x = static_cast<double>(k) * h;
    const double n = p.newborn(x);
    if (n <= 0.0) continue;
    best = std::min(best, p.Q(n) - p.Q(x));
  }
  return best;
}

P1Invariant p1_invariant(const CellCycleParams& p, double tol, std::size_t max_iters) {
  p.validate();
  const P1Operator op(p);
  const double h = p.size_width();
  P1Invariant r;
  r.f1.assign(p.size_cells, 1.0 / p.x_max);
  for (r.iterations = 1; r.iterations <= max_iters; ++r.iterations) {
    Values next = op.apply(r.f1);
    const double mass = size_mass(p, next);
    if (!(mass > 0.0)) fail(ErrorCode::Numeric, "size density lost all mass");
    double inc = 0.0;
    for (std::size_t k = 0; k < next.size(); ++k) {
      next[k] /= mass;
      inc += std::abs(next[k] - r.f1[k]) * h;
    }
    r.f1 = std::move(next);
    r.increment = inc;
    if (inc < tol) {
      r.converged = true;
      break;
    }
  }
  if (r.iterations > max_iters) r.iterations = max_iters;
  const Values image = op.apply(r.f1);
  for (std::size_t k = 0; k < image.size(); ++k) r.residual += std::abs(image[k] - r.f1[k]) * h;
  r.mass_defect = std::abs(size_mass(p, image) - size_mass(p, r.f1));
  r.unique_value = uniqueness_value(p);
  return r;
}

double mean_phase_one(const CellCycleParams& p, double z) {
  const double qz = p.Q(z);
  auto f = [&](double x) { return std::exp(qz - p.Q(x)) / p.g(x); };
  try {
    boost::math::quadrature::exp_sinh<double> integrator;
    const double v = integrator.integrate(f, z, kInf);
    return std::isfinite(v) ? v : kInf;
  } catch (const std::exception&) {
    return kInf;
  }
}

CellCycleLift cell_cycle_lift(const CellCycleParams& p, const PdmpModel& model, ValueView f1) {
  p.validate();
  if (f1.size() != p.size_cells) fail(ErrorCode::InvalidArgument, "size density has wrong length");
  const Grid& grid = model.grid();
  if (grid.num_modes() != 2 || grid.mode_end(0) - grid.mode_begin(0) != p.size_cells)
    fail(ErrorCode::InvalidArgument, "model grid does not match the cell-cycle parameters");
  const SizeTransform t(p);
  Values M, D;
  t.cumulate(f1, M, D);
  const double h = p.size_width();
  Values values(grid.size(), 0.0);
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const StatePoint x = grid.center(c);
    if (x.mode == 0) {
      values[c] = t.d_at(t.probe(x.coords[0]), f1, D) / p.g(x.coords[0]);
    } else {
      // Entered phase II at size xe, time y ago; the factor g(xe)/g(x) is the flow Jacobian.
      const double xe = p.back(x.coords[0], x.coords[1]);
      if (xe > 0.0) values[c] = p.phi(xe) * t.d_at(t.probe(xe), f1, D) / p.g(x.coords[0]);
    }
  }
  CellCycleLift r;
  r.f_bar = GridDensity::from_values(grid, std::move(values));
  r.mean_ti.resize(p.size_cells);
  double tail = 0.0;
  const std::size_t tail_from = p.size_cells - p.size_cells / 10;
  for (std::size_t k = 0; k < p.size_cells; ++k) {
    const double z = (static_cast<double>(k) + 0.5) * h;
    r.mean_ti[k] = mean_phase_one(p, z);
    if (f1[k] == 0.0) continue;
    const double part = (r.mean_ti[k] + p.t2) * f1[k] * h;
    r.mass += part;
    if (k >= tail_from) tail += part;
  }
  r.integrable = std::isfinite(r.mass);
  r.tail_share = r.integrable && r.mass > 0.0 ? tail / r.mass : 1.0;
  if (r.tail_share > 1e-3) r.integrable = false;
  return r;
}

}  // namespace pdmp
