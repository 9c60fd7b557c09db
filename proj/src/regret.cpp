#include "semibandit/regret.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace semibandit {

namespace {

constexpr int kOuterCap = 200;
constexpr int kInnerCap = 100;
constexpr double kInnerTol = 1e-12;
constexpr double kSumTol = 1e-11;
// log p is confined to a range where exp(-u)/nu cannot overflow; outside it
// the sign of the stationarity residual is determined anyway.
constexpr double kLogFloor = -600.0;
constexpr double kLogCeil = 30.0;

// Stationarity residual of coordinate i at p = e^u for multiplier lambda:
//   shifted_cost + lambda + (1/eta)(u + 1) - e^(-u)/nu.
// Strictly increasing in u.
double stationarity(double shifted_cost, double lambda, double u, double eta,
                    double nu) {
  return shifted_cost + lambda + (u + 1.0) / eta - std::exp(-u) / nu;
}

// Solves stationarity(u) = 0 for one coordinate by safeguarded Newton with a
// bracket, warm-started from *u_inout. Returns p = e^u; saturates at the
// range ends when the root lies outside (only happens while the outer search
// still holds a bad multiplier).
double solve_coordinate(double shifted_cost, double lambda, double eta,
                        double nu, double* u_inout) {
  double lo = kLogFloor, hi = kLogCeil;
  if (stationarity(shifted_cost, lambda, hi, eta, nu) < 0.0) {
    *u_inout = hi;
    return std::exp(hi);
  }
  if (stationarity(shifted_cost, lambda, lo, eta, nu) > 0.0) {
    *u_inout = lo;
    return std::exp(lo);
  }
  // The residual is evaluated with cancellation between terms of size
  // |shifted_cost + lambda|, so the reachable accuracy is a few ulps of that
  // scale; demanding more would strand the iteration at the noise floor.
  const double tol = std::max(
      kInnerTol, 8.0 * std::numeric_limits<double>::epsilon() *
                     std::max(1.0, std::abs(shifted_cost + lambda)));
  double u = std::clamp(*u_inout, lo, hi);
  double h = stationarity(shifted_cost, lambda, u, eta, nu);
  for (int iter = 0; iter < kInnerCap; ++iter) {
    if (std::abs(h) <= tol) break;
    if (h > 0.0)
      hi = u;
    else
      lo = u;
    const double slope = 1.0 / eta + std::exp(-u) / nu;
    double next = u - h / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == u) break;  // bracket collapsed to one ulp: converged
    u = next;
    h = stationarity(shifted_cost, lambda, u, eta, nu);
  }
  *u_inout = u;
  return std::exp(u);
}

}  // namespace

FtrlState FtrlState::init(std::size_t n_policies, double eta, double nu) {
  FtrlState state;
  state.cumulative_loss.assign(n_policies, 0.0);
  // With no losses the regularized objective is symmetric, so the minimizer
  // is the uniform distribution.
  state.p = SimplexWeights::uniform(n_policies);
  state.eta = eta;
  state.nu = nu;
  state.round = 0;
  return state;
}

void ftrl_step(FtrlState& state, const std::vector<double>& loss_estimate) {
  if (loss_estimate.size() != state.cumulative_loss.size())
    throw std::invalid_argument("ftrl_step: estimate size mismatch");
  for (std::size_t i = 0; i < loss_estimate.size(); ++i)
    state.cumulative_loss[i] += loss_estimate[i];
  state.p = ftrl_solve(state.cumulative_loss, state.eta, state.nu);
  state.round += 1;
}

SimplexWeights ftrl_solve(const std::vector<double>& cumulative_loss,
                          double eta, double nu) {
  if (cumulative_loss.empty()) throw std::invalid_argument("ftrl_solve: empty loss vector");
  if (!(eta > 0.0) || !(nu > 0.0))
    throw std::invalid_argument("ftrl_solve: need eta > 0 and nu > 0");
  for (double c : cumulative_loss)
    if (!std::isfinite(c)) throw std::invalid_argument("ftrl_solve: non-finite loss");
  const std::size_t n = cumulative_loss.size();
  if (n == 1) return SimplexWeights({1.0});

  // Shift costs so the smallest is zero; this only translates the multiplier.
  const double c_min = *std::min_element(cumulative_loss.begin(), cumulative_loss.end());
  std::vector<double> cost(n);
  for (std::size_t i = 0; i < n; ++i) cost[i] = cumulative_loss[i] - c_min;

  std::vector<double> u(n, std::log(1.0 / static_cast<double>(n)));
  std::vector<double> p(n);
  const auto eval_sum = [&](double lambda) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = solve_coordinate(cost[i], lambda, eta, nu, &u[i]);
      sum += p[i];
    }
    return sum;
  };

  // The simplex-sum residual is strictly decreasing in lambda. Bracket it,
  // then drive it to zero with bisection plus Newton acceleration.
  double lambda = -(1.0 / eta) * (u[0] + 1.0) +
                  std::exp(-u[0]) / nu;  // exact for a uniform, zero-cost solution
  double sum = eval_sum(lambda);
  double step = std::max(1.0, std::abs(lambda));
  double lambda_lo = lambda, lambda_hi = lambda;
  int outer = 0;
  if (sum > 1.0) {
    while (sum > 1.0) {
      if (++outer > kOuterCap) throw std::runtime_error("ftrl_solve: bracketing failed");
      lambda_lo = lambda_hi;
      lambda_hi += step;
      step *= 2.0;
      sum = eval_sum(lambda_hi);
    }
    lambda = lambda_hi;
  } else {
    while (sum < 1.0) {
      if (++outer > kOuterCap) throw std::runtime_error("ftrl_solve: bracketing failed");
      lambda_hi = lambda_lo;
      lambda_lo -= step;
      step *= 2.0;
      sum = eval_sum(lambda_lo);
    }
    lambda = lambda_lo;
  }

  for (; outer < kOuterCap; ++outer) {
    if (std::abs(sum - 1.0) <= kSumTol) break;
    if (sum > 1.0)
      lambda_lo = lambda;
    else
      lambda_hi = lambda;
    double slope = 0.0;  // d(sum)/d(lambda) = -sum_i 1 / phi_i'(p_i)
    for (std::size_t i = 0; i < n; ++i)
      slope -= 1.0 / (1.0 / (eta * p[i]) + 1.0 / (nu * p[i] * p[i]));
    double next = lambda - (sum - 1.0) / slope;
    if (!(next > lambda_lo && next < lambda_hi)) next = 0.5 * (lambda_lo + lambda_hi);
    lambda = next;
    sum = eval_sum(lambda);
  }
  if (std::abs(sum - 1.0) > kSumTol)
    throw std::runtime_error("ftrl_solve: no convergence within iteration cap");
  return SimplexWeights(p);
}

double ftrl_objective(const std::vector<double>& cumulative_loss, double eta,
                      double nu, const SimplexWeights& p) {
  if (p.size() != cumulative_loss.size())
    throw std::invalid_argument("ftrl_objective: size mismatch");
  double value = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double w = p[i];
    if (!(w > 0.0)) return std::numeric_limits<double>::infinity();
    value += cumulative_loss[i] * w + (w * std::log(w)) / eta - std::log(w) / nu;
  }
  return value;
}

std::vector<double> loss_estimate(
    const SimplexWeights& p, const PolicyClass& cls, Context x,
    const ActionSubset& a,
    const std::vector<std::pair<int, double>>& observed_losses) {
  if (p.size() != cls.size())
    throw std::invalid_argument("loss_estimate: simplex size mismatch");
  if (static_cast<int>(observed_losses.size()) != a.size())
    throw std::invalid_argument("loss_estimate: feedback must cover the played subset");
  std::vector<double> chat(cls.size(), 0.0);
  for (const auto& [y, loss] : observed_losses) {
    if (!a.contains(y))
      throw std::invalid_argument("loss_estimate: observed action not in played subset");
    if (!(loss >= -1.0 && loss <= 0.0))
      throw std::invalid_argument("loss_estimate: loss outside [-1, 0]");
    const double q = marginal_probability(p, cls, x, y);
    if (!(q > 0.0))
      throw std::invalid_argument("loss_estimate: zero marginal for an observed action");
    if (loss == 0.0) continue;
    const double w = loss / q;
    for (std::size_t j = 0; j < cls.size(); ++j)
      if (cls[j].action(x).contains(y)) chat[j] += w;
  }
  return chat;
}

bool InstanceLossStream::next(Context& x, std::vector<double>& losses) {
  auto [ctx, reward] = sample_round(inst_, rng_);
  x = ctx;
  losses.resize(reward.values().size());
  for (std::size_t y = 0; y < losses.size(); ++y) losses[y] = -reward.values()[y];
  return true;
}

bool FixedLossStream::next(Context& x, std::vector<double>& losses) {
  if (pos_ >= rounds_.size()) return false;
  x = rounds_[pos_].first;
  losses = rounds_[pos_].second;
  ++pos_;
  return true;
}

namespace {

// Shared protocol loop; the updater ingests the round's loss estimate and
// returns the next distribution.
RegretResult run_regret_loop(LossStream& env, const PolicyClass& cls,
                             int horizon, Rng& rng,
                             const std::function<SimplexWeights(
                                 const std::vector<double>&)>& update) {
  if (horizon < 0) throw std::invalid_argument("regret loop: negative horizon");
  RegretResult result;
  result.actions.reserve(static_cast<std::size_t>(horizon));
  result.trace.reserve(static_cast<std::size_t>(horizon));
  const std::size_t n = cls.size();
  std::vector<double> policy_loss(n, 0.0);
  SimplexWeights p = SimplexWeights::uniform(n);
  double learner_loss = 0.0;
  Context x;
  std::vector<double> losses;
  for (int t = 1; t <= horizon; ++t) {
    if (!env.next(x, losses))
      throw std::runtime_error("regret loop: stream exhausted before horizon");
    if (static_cast<int>(losses.size()) != cls.capacity())
      throw std::invalid_argument("regret loop: loss vector dimension mismatch");
    for (double l : losses)
      if (!(l >= -1.0 && l <= 0.0))
        throw std::invalid_argument("regret loop: loss outside [-1, 0]");

    const std::size_t j = sample_policy_index(p, rng);
    const ActionSubset& a = cls[j].action(x);
    std::vector<std::pair<int, double>> observed;
    observed.reserve(a.members().size());
    double inst_loss = 0.0;
    for (int y : a.members()) {
      observed.emplace_back(y, losses[static_cast<std::size_t>(y)]);
      inst_loss += losses[static_cast<std::size_t>(y)];
    }
    learner_loss += inst_loss;
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      for (int y : cls[i].action(x).members()) v += losses[static_cast<std::size_t>(y)];
      policy_loss[i] += v;
    }

    const std::vector<double> chat = loss_estimate(p, cls, x, a, observed);
    const SimplexWeights p_next = update(chat);

    double min_p = 1.0, max_ratio = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      min_p = std::min(min_p, p[i]);
      if (p[i] > 0.0) max_ratio = std::max(max_ratio, p_next[i] / p[i]);
    }
    const double best = *std::min_element(policy_loss.begin(), policy_loss.end());
    result.actions.push_back(a);
    result.trace.push_back({t, inst_loss, learner_loss - best, min_p, max_ratio});
    p = p_next;
  }
  result.terminal_regret = result.trace.empty() ? 0.0 : result.trace.back().cumulative_regret;
  return result;
}

}  // namespace

RegretResult exp4_comb_sparse(LossStream& env, const PolicyClass& cls,
                              int horizon, double eta, double nu, Rng& rng) {
  if (!(nu > 0.0 && nu <= 1.0)) throw std::invalid_argument("exp4_comb_sparse: need nu in (0, 1]");
  if (!(eta > 0.0)) throw std::invalid_argument("exp4_comb_sparse: need eta > 0");
  FtrlState state = FtrlState::init(cls.size(), eta, nu);
  return run_regret_loop(env, cls, horizon, rng,
                         [&state](const std::vector<double>& chat) {
                           ftrl_step(state, chat);
                           return state.p;
                         });
}

RegretResult exp4_entropy_baseline(LossStream& env, const PolicyClass& cls,
                                   int horizon, double eta, Rng& rng) {
  std::vector<double> cumulative(cls.size(), 0.0);
  return run_regret_loop(env, cls, horizon, rng,
                         [&](const std::vector<double>& chat) {
                           for (std::size_t i = 0; i < cumulative.size(); ++i)
                             cumulative[i] += chat[i];
                           return SimplexWeights(entropy_weights(cumulative, eta));
                         });
}

std::vector<double> entropy_weights(const std::vector<double>& cumulative_loss,
                                    double eta) {
  if (cumulative_loss.empty()) throw std::invalid_argument("entropy_weights: empty");
  if (!(eta > 0.0)) throw std::invalid_argument("entropy_weights: need eta > 0");
  const double c_min = *std::min_element(cumulative_loss.begin(), cumulative_loss.end());
  std::vector<double> w(cumulative_loss.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(-eta * (cumulative_loss[i] - c_min));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

double theorem_eta(std::size_t n_policies, int subset_size, double sparsity,
                   int horizon) {
  return std::sqrt(std::log(static_cast<double>(n_policies)) /
                   (static_cast<double>(subset_size) * sparsity * horizon));
}

double baseline_eta(std::size_t n_policies, int subset_size, int capacity,
                    int horizon) {
  return std::sqrt(std::log(static_cast<double>(n_policies)) /
                   (static_cast<double>(subset_size) * capacity *
                    static_cast<double>(horizon)));
}

}  // namespace semibandit
