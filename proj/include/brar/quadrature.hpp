#pragma once

#include <functional>
#include <vector>

namespace brar {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error
  bool converged = false;
  int intervals = 0;
};

// Globally adaptive quadrature: 15-point Gauss rule per interval with a
// 7-point companion for the error estimate, always splitting the interval
// with the largest estimated error.  Handles a > b by orientation.
QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double abs_tol, int max_intervals = 20000);

// Gauss-Legendre nodes/weights on [-1,1], computed by Newton iteration.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace brar
