#include "brar/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "brar/errors.hpp"

namespace brar {

namespace {

constexpr int kMaxArms = 20;
constexpr int kCheckInterval = 64;
constexpr double kRebuildTol = 1e-6;

double lb_free(const LogBetaCache* cache, int a, int b) {
  if (cache) return (*cache)(a, b);
  return log_beta(static_cast<double>(a), static_cast<double>(b));
}

// Closed-form sum with fa terms via the multiplicative term recurrence.  The
// occasional log-space re-anchor keeps long runs of tiny terms from sticking
// at zero after underflow.
double two_arm_direct(int fa, int fb, int oa, int ob, const LogBetaCache* cache) {
  auto term_log = [&](int i) {
    return lb_free(cache, oa + i, ob + fb) - std::log(static_cast<double>(fb + i)) -
           lb_free(cache, 1 + i, fb) - lb_free(cache, oa, ob);
  };
  double sum = 0.0;
  double t = std::exp(term_log(0));
  for (int i = 0;;) {
    sum += t;
    if (++i >= fa) break;
    t *= static_cast<double>(oa + i - 1) * (fb + i - 1) /
         (static_cast<double>(oa + ob + fb + i - 1) * i);
    if (t < 1e-290) {
      const double lt = term_log(i);
      t = lt < -700.0 ? 0.0 : std::exp(lt);
    }
  }
  return sum;
}

}  // namespace

TrialState::TrialState(int k_, std::vector<int> x_) : k(k_), x(std::move(x_)) {
  validate_state(*this);
}

TrialState TrialState::uniform_priors(int k) {
  TrialState s;
  s.k = k;
  s.x.assign(static_cast<size_t>(2) * k, 1);
  validate_state(s);
  return s;
}

TrialState TrialState::swapped() const {
  TrialState s;
  s.k = k;
  s.x.resize(x.size());
  for (int j = 0; j < k; ++j) {
    s.x[2 * j] = x[2 * j + 1];
    s.x[2 * j + 1] = x[2 * j];
  }
  return s;
}

void validate_state(const TrialState& s) {
  if (s.k < 2) throw DomainError("TrialState: k must be >= 2");
  if (static_cast<int>(s.x.size()) != 2 * s.k)
    throw DomainError("TrialState: expected 2k parameters");
  for (int v : s.x)
    if (v < 1) throw DomainError("TrialState: parameters must be positive integers");
}

double pps_two_arm(int x0, int x1, int x2, int x3, const LogBetaCache* cache) {
  if (x0 < 1 || x1 < 1 || x2 < 1 || x3 < 1)
    throw DomainError("pps_two_arm: parameters must be positive integers");
  const int m = std::min(std::min(x0, x1), std::min(x2, x3));
  if (x2 == m) return two_arm_direct(x2, x3, x0, x1, cache);
  if (x0 == m) return 1.0 - two_arm_direct(x0, x1, x2, x3, cache);
  if (x1 == m) return two_arm_direct(x1, x0, x3, x2, cache);
  return 1.0 - two_arm_direct(x3, x2, x1, x0, cache);
}

SubsetTable::SubsetTable(int k, LogBetaCachePtr cache) : k_(k), cache_(std::move(cache)) {
  if (k < 2 || k > kMaxArms) throw DomainError("SubsetTable: k must lie in [2,20]");
  full_ = (uint32_t(1) << k) - 1;
  order_.reserve(full_ - 1);
  for (int size = 1; size < k_; ++size)
    for (uint32_t m = 1; m < full_; ++m)
      if (std::popcount(m) == size) order_.push_back(m);
  init_uniform();
}

SubsetTable SubsetTable::at_state(const TrialState& s, LogBetaCachePtr cache) {
  validate_state(s);
  SubsetTable t(s.k, std::move(cache));
  t.advance_to(s);
  return t;
}

double SubsetTable::lb(int a, int b) const { return lb_free(cache_.get(), a, b); }

namespace {

// P(merged arm beats all i opponents) at the all-ones state, where the merged
// arm pools j single arms.
double all_ones_prob(int i, int j) {
  double f = 1.0 / (i + 1);
  if (j <= 1 || i == 0) return j >= 1 ? f : 1.0;
  double acc = 0.0;
  for (int jp = 1; jp <= j - 1; ++jp) {
    const double t1 =
        std::exp(log_beta(i + jp, jp + 2) - log_beta(jp, jp + 1)) / static_cast<double>(jp);
    const double t2 =
        std::exp(log_beta(i + jp, jp + 1) - log_beta(jp, jp)) / static_cast<double>(jp);
    acc += t1 - t2;
  }
  return f + i * acc;
}

}  // namespace

void SubsetTable::init_uniform() {
  state_ = TrialState::uniform_priors(k_);
  probs_.assign(static_cast<size_t>(full_) + 1, 1.0);
  sum_a_.assign(static_cast<size_t>(full_) + 1, 0);
  sum_b_.assign(static_cast<size_t>(full_) + 1, 0);
  for (uint32_t m = 1; m <= full_; ++m) {
    const int pc = std::popcount(m);
    sum_a_[m] = pc;
    sum_b_[m] = pc;
    if (m != full_) probs_[m] = all_ones_prob(k_ - pc, pc);
  }
  since_check_ = 0;
}

void SubsetTable::increment_core(int arm, int slot) {
  const uint32_t bj = uint32_t(1) << arm;
  const int xa = state_.x[2 * arm];
  const int xb = state_.x[2 * arm + 1];
  const double xjs = static_cast<double>(slot == 0 ? xa : xb);
  const double sign_in = slot == 0 ? 1.0 : -1.0;
  for (uint32_t mask : order_) {
    const int sa = sum_a_[mask];
    const int sb = sum_b_[mask];
    const double ln_merged = lb(sa, sb);
    double& p = probs_[mask];
    if (mask & bj) {
      double acc = 0.0;
      uint32_t rest = full_ & ~mask;
      while (rest) {
        const uint32_t bit = rest & (~rest + 1u);
        rest ^= bit;
        const int j2 = std::countr_zero(bit);
        const int a2 = state_.x[2 * j2];
        const int b2 = state_.x[2 * j2 + 1];
        const double coeff = std::exp(lb(a2 + sa, b2 + sb) - lb(a2, b2) - ln_merged);
        acc += coeff * probs_[mask | bit];
      }
      const double denom = static_cast<double>(slot == 0 ? sa : sb);
      p += sign_in * acc / denom;
    } else {
      const double coeff = std::exp(lb(xa + sa, xb + sb) - lb(xa, xb) - ln_merged);
      p -= sign_in * coeff * probs_[mask | bj] / xjs;
    }
  }
  state_.x[2 * arm + slot] += 1;
  auto& sums = slot == 0 ? sum_a_ : sum_b_;
  for (uint32_t m = bj; m <= full_; ++m)
    if (m & bj) ++sums[m];
}

void SubsetTable::apply_increment(Increment inc) {
  if (inc.arm < 0 || inc.arm >= k_) throw DomainError("apply_increment: arm out of range");
  if (inc.slot != 0 && inc.slot != 1) throw DomainError("apply_increment: slot must be 0 or 1");
  increment_core(inc.arm, inc.slot);
  if (++since_check_ >= kCheckInterval) {
    since_check_ = 0;
    const double drift = std::fabs(singleton_sum() - 1.0);
    max_drift_ = std::max(max_drift_, drift);
    if (drift > kRebuildTol) rebuild();
  }
}

void SubsetTable::advance_to(const TrialState& target) {
  if (target.k != k_) throw DomainError("advance_to: arm count mismatch");
  for (size_t i = 0; i < target.x.size(); ++i)
    if (target.x[i] < state_.x[i])
      throw DomainError("advance_to: target below current state");
  for (int j = 0; j < k_; ++j)
    for (int slot = 0; slot < 2; ++slot)
      while (state_.x[2 * j + slot] < target.x[2 * j + slot]) apply_increment({j, slot});
}

void SubsetTable::rebuild() {
  const TrialState target = state_;
  init_uniform();
  for (int j = 0; j < k_; ++j)
    for (int slot = 0; slot < 2; ++slot)
      while (state_.x[2 * j + slot] < target.x[2 * j + slot]) increment_core(j, slot);
  ++rebuilds_;
  if (std::fabs(singleton_sum() - 1.0) > kRebuildTol)
    throw ConsistencyError("SubsetTable: singleton sum violated after rebuild");
}

double SubsetTable::prob(uint32_t mask) const {
  if (mask == 0 || mask > full_) throw DomainError("SubsetTable::prob: invalid subset mask");
  return probs_[mask];
}

std::vector<double> SubsetTable::singletons() const {
  std::vector<double> out(k_);
  for (int j = 0; j < k_; ++j) out[j] = probs_[uint32_t(1) << j];
  return out;
}

double SubsetTable::singleton_sum() const {
  double s = 0.0;
  for (int j = 0; j < k_; ++j) s += probs_[uint32_t(1) << j];
  return s;
}

SubsetTable subset_table_uniform(int k, LogBetaCachePtr cache) {
  return SubsetTable(k, std::move(cache));
}

void run_path(const TrialState& start, std::span<const Increment> path,
              const std::function<void(int, std::span<const double>)>& emit,
              LogBetaCachePtr cache) {
  SubsetTable table = SubsetTable::at_state(start, std::move(cache));
  std::vector<double> vals = table.singletons();
  emit(0, vals);
  for (size_t i = 0; i < path.size(); ++i) {
    table.apply_increment(path[i]);
    vals = table.singletons();
    emit(static_cast<int>(i) + 1, vals);
  }
}

std::vector<std::vector<double>> run_path(const TrialState& start, std::span<const Increment> path,
                                          LogBetaCachePtr cache) {
  std::vector<std::vector<double>> out;
  out.reserve(path.size() + 1);
  run_path(
      start, path,
      [&out](int, std::span<const double> vals) { out.emplace_back(vals.begin(), vals.end()); },
      std::move(cache));
  return out;
}

double pps_single(const TrialState& s, int arm, LogBetaCachePtr cache) {
  validate_state(s);
  if (arm < 0 || arm >= s.k) throw DomainError("pps_single: arm out of range");
  if (s.k == 2) {
    const int o = 1 - arm;
    return pps_two_arm(s.a(o), s.b(o), s.a(arm), s.b(arm), cache.get());
  }
  return SubsetTable::at_state(s, std::move(cache)).singleton(arm);
}

std::vector<double> pps_all(const TrialState& s, LogBetaCachePtr cache) {
  validate_state(s);
  if (s.k == 2) {
    return {pps_two_arm(s.a(1), s.b(1), s.a(0), s.b(0), cache.get()),
            pps_two_arm(s.a(0), s.b(0), s.a(1), s.b(1), cache.get())};
  }
  return SubsetTable::at_state(s, std::move(cache)).singletons();
}

double inferiority_pps(const TrialState& s, int arm, LogBetaCachePtr cache) {
  return pps_single(s.swapped(), arm, std::move(cache));
}

std::vector<double> inferiority_all(const TrialState& s, LogBetaCachePtr cache) {
  return pps_all(s.swapped(), std::move(cache));
}

}  // namespace brar
