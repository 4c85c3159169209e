#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace bpatch {

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// q'_j = sigma2 * q_j / (1 - q_j), the first shape of the q~ prior.
inline double q_prime(double q_j, double sigma2) {
  if (!(q_j > 0.0 && q_j < 1.0))
    throw std::invalid_argument("q_prime: q must lie in (0,1)");
  return sigma2 * q_j / (1.0 - q_j);
}

// log Pr(w_:bj | q_j): the Beta-Binomial marginal of one influence column
// after integrating q~_bj out,
//   B(q' + c, sigma2 + N - c) / B(q', sigma2),  c = #{i : w_ibj = 1}.
// Evaluated through log-gamma differences; the Beta function itself would
// overflow long before realistic N.
inline double log_marginal_w_column(int ones_count, int column_length, double q_j,
                                    double sigma2) {
  if (column_length < 1) throw std::invalid_argument("log_marginal_w_column: empty column");
  if (ones_count < 0 || ones_count > column_length)
    throw std::invalid_argument("log_marginal_w_column: count out of range");
  const double qp = q_prime(q_j, sigma2);
  return log_beta(qp + ones_count, sigma2 + column_length - ones_count) - log_beta(qp, sigma2);
}

inline double log_marginal_w_column(std::span<const std::uint8_t> w_column, double q_j,
                                    double sigma2) {
  int c = 0;
  for (auto v : w_column) c += v;
  return log_marginal_w_column(c, static_cast<int>(w_column.size()), q_j, sigma2);
}

// Posterior mean of q~_bj given its column: (q' + c) / (q' + sigma2 + N).
inline double posterior_mean_qtilde(int ones_count, int column_length, double q_j,
                                    double sigma2) {
  if (ones_count < 0 || ones_count > column_length)
    throw std::invalid_argument("posterior_mean_qtilde: count out of range");
  const double qp = q_prime(q_j, sigma2);
  return (qp + ones_count) / (qp + sigma2 + column_length);
}

// Collapsed feature predictive Pr(x_ij | w, z) = (g(x) + 1) / (sum_v g(v) + 1),
// implemented exactly as published. The textbook Dirichlet-Categorical form
// g(x)/sum_v g(v) can be swapped in for comparison builds only:
#if defined(BPATCH_TEXTBOOK_DCM)
inline double dcm_predictive(double score_at_value, double score_total) {
  return score_at_value / score_total;
}
#else
inline double dcm_predictive(double score_at_value, double score_total) {
  return (score_at_value + 1.0) / (score_total + 1.0);
}
#endif

inline double predictive_x(std::span<const double> g, int x_val) {
  if (x_val < 0 || x_val >= static_cast<int>(g.size()))
    throw std::invalid_argument("predictive_x: value out of range");
  double total = 0.0;
  for (double v : g) {
    if (!(v > 0.0)) throw std::invalid_argument("predictive_x: scores must be positive");
    total += v;
  }
  return dcm_predictive(g[x_val], total);
}

// Collapsed label predictive Pr(y_i | z) with the same form over M classes.
inline double predictive_y(std::span<const double> h, int y_val) {
  return predictive_x(h, y_val);
}

}  // namespace bpatch
