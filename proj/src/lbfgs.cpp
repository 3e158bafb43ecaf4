#include "morph/lbfgs.hpp"

#include <cmath>
#include <deque>

#include "morph/errors.hpp"

namespace morph {

namespace {

Eigen::VectorXd clamp(const Eigen::VectorXd &x, const Eigen::VectorXd &lo,
                      const Eigen::VectorXd &hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Variables pinned at a bound with the gradient pushing outward.
std::vector<char> active_set(const Eigen::VectorXd &x, const Eigen::VectorXd &g,
                             const Eigen::VectorXd &lo, const Eigen::VectorXd &hi) {
  std::vector<char> a(x.size(), 0);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double span = std::max(hi[i] - lo[i], 1e-300);
    const bool at_lo = x[i] <= lo[i] + 1e-12 * span && g[i] > 0.0;
    const bool at_hi = x[i] >= hi[i] - 1e-12 * span && g[i] < 0.0;
    a[i] = at_lo || at_hi || hi[i] <= lo[i];
  }
  return a;
}

struct Pair {
  Eigen::VectorXd s, y;
  double rho;
};

Eigen::VectorXd two_loop(const std::deque<Pair> &mem, Eigen::VectorXd q) {
  std::vector<double> a(mem.size());
  for (std::size_t m = mem.size(); m-- > 0;) {
    a[m] = mem[m].rho * mem[m].s.dot(q);
    q -= a[m] * mem[m].y;
  }
  const Pair &last = mem.back();
  q *= last.s.dot(last.y) / last.y.squaredNorm();
  for (std::size_t m = 0; m < mem.size(); ++m) {
    const double b = mem[m].rho * mem[m].y.dot(q);
    q += (a[m] - b) * mem[m].s;
  }
  return q;
}

}  // namespace

double projected_gradient_norm(const Eigen::VectorXd &x, const Eigen::VectorXd &g,
                               const Eigen::VectorXd &lo, const Eigen::VectorXd &hi) {
  if (x.size() == 0) return 0.0;
  return (clamp(x - g, lo, hi) - x).cwiseAbs().maxCoeff();
}

BoxLbfgsResult minimize_box_lbfgs(const BoxObjective &f, Eigen::VectorXd x0,
                                  const Eigen::VectorXd &lo, const Eigen::VectorXd &hi,
                                  const BoxLbfgsOptions &opts,
                                  const std::function<void(const BoxLbfgsIterate &)> &on_iterate) {
  BoxLbfgsResult res;
  res.x = clamp(x0, lo, hi);
  const auto f0 = f.value(res.x);
  if (!f0) throw InvalidInput("objective cannot be evaluated at the start point");
  res.f = *f0;
  Eigen::VectorXd g = f.gradient(res.x);
  res.projected_gradient = projected_gradient_norm(res.x, g, lo, hi);
  if (on_iterate) on_iterate({0, res.f, res.projected_gradient, &res.x});

  std::deque<Pair> mem;
  while (true) {
    if (res.projected_gradient < opts.gradient_tolerance) {
      res.converged = true;
      break;
    }
    if (res.iterations >= opts.max_iterations) break;

    const std::vector<char> active = active_set(res.x, g, lo, hi);
    Eigen::VectorXd gf = g;
    for (Eigen::Index i = 0; i < gf.size(); ++i) {
      if (active[i]) gf[i] = 0.0;
    }
    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      Eigen::VectorXd d;
      if (!mem.empty()) {
        d = -two_loop(mem, gf);
        for (Eigen::Index i = 0; i < d.size(); ++i) {
          if (active[i]) d[i] = 0.0;
        }
        if (!(d.dot(gf) < 0.0)) {
          mem.clear();
          d.resize(0);
        }
      }
      if (d.size() == 0) {
        const double gmax = gf.cwiseAbs().maxCoeff();
        if (!(gmax > 0.0)) break;
        d = -(opts.initial_step / gmax) * gf;
      }

      double t = 1.0;
      for (int ls = 0; ls < opts.max_line_search; ++ls, t *= 0.5) {
        const Eigen::VectorXd xt = clamp(res.x + t * d, lo, hi);
        const Eigen::VectorXd step = xt - res.x;
        if (step.cwiseAbs().maxCoeff() == 0.0) break;
        const auto ft = f.value(xt);
        if (!ft) continue;
        if (*ft <= res.f + opts.armijo * g.dot(step)) {
          const Eigen::VectorXd g_new = f.gradient(xt);
          const Eigen::VectorXd y = g_new - g;
          const double sy = step.dot(y);
          if (sy > 1e-10 * step.norm() * y.norm()) {
            mem.push_back({step, y, 1.0 / sy});
            if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
          }
          res.x = xt;
          res.f = *ft;
          g = g_new;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        if (mem.empty()) break;
        mem.clear();
      }
    }
    if (!accepted) break;
    ++res.iterations;
    res.projected_gradient = projected_gradient_norm(res.x, g, lo, hi);
    if (on_iterate) on_iterate({res.iterations, res.f, res.projected_gradient, &res.x});
  }
  return res;
}

}  // namespace morph
