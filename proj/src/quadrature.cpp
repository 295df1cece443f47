#include "brar/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "brar/errors.hpp"

namespace brar {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw DomainError("gauss_legendre: n must be >= 1");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
  }
}

namespace {

struct Rules {
  std::vector<double> x7, w7, x15, w15;
  Rules() {
    gauss_legendre(7, x7, w7);
    gauss_legendre(15, x15, w15);
  }
};

const Rules& rules() {
  static const Rules r;
  return r;
}

struct Interval {
  double a, b, value, error;
};

struct ByError {
  bool operator()(const Interval& l, const Interval& r) const { return l.error < r.error; }
};

Interval eval_interval(const std::function<double(double)>& f, double a, double b) {
  const Rules& r = rules();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s15 = 0.0;
  for (int i = 0; i < 15; ++i) s15 += r.w15[i] * f(c + h * r.x15[i]);
  s15 *= h;
  double s7 = 0.0;
  for (int i = 0; i < 7; ++i) s7 += r.w7[i] * f(c + h * r.x7[i]);
  s7 *= h;
  return {a, b, s15, std::fabs(s15 - s7)};
}

}  // namespace

QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double abs_tol, int max_intervals) {
  if (!(abs_tol > 0.0)) throw DomainError("integrate_adaptive: abs_tol must be positive");
  double sign = 1.0;
  if (a == b) return {0.0, 0.0, true, 0};
  if (a > b) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::priority_queue<Interval, std::vector<Interval>, ByError> heap;
  Interval whole = eval_interval(f, a, b);
  double total = whole.value, err = whole.error;
  heap.push(whole);
  int count = 1;
  while (err > abs_tol && count < max_intervals) {
    Interval worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      heap.push(worst);  // interval at floating-point resolution
      break;
    }
    Interval left = eval_interval(f, worst.a, mid);
    Interval right = eval_interval(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++count;
  }
  return {sign * total, err, err <= abs_tol, count};
}

}  // namespace brar
