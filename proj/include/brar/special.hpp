#pragma once

#include <cstddef>
#include <memory>
#include <vector>

namespace brar {

// ln B(a,b) for a, b > 0.
double log_beta(double a, double b);

// Regularized incomplete beta I_x(a,b), continued-fraction evaluation.
double reg_inc_beta(double x, double a, double b);

double std_normal_cdf(double z);
double std_normal_pdf(double z);
double std_normal_quantile(double p);

// Dense ln B(a,b) table for integer arguments 1..max_arg; arguments outside
// the table fall back to lgamma.  Immutable after construction, safe to share
// across threads.
class LogBetaCache {
public:
  explicit LogBetaCache(int max_arg);

  double operator()(int a, int b) const {
    if (a <= max_ && b <= max_ && a > 0 && b > 0)
      return tab_[static_cast<size_t>(a) * (max_ + 1) + b];
    return log_beta(a, b);
  }

  int max_arg() const { return max_; }

private:
  int max_;
  std::vector<double> tab_;
};

using LogBetaCachePtr = std::shared_ptr<const LogBetaCache>;

}  // namespace brar
