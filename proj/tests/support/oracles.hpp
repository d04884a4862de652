#pragma once

#include <functional>
#include <span>
#include <vector>

// Reference solutions used to check the production solvers. Nothing here is
// shared with the solver code paths.
namespace mecsim::oracle {

/// max sum value_i x_i  s.t. 0 <= x_i <= cap_i, sum x_i <= budget, found by
/// enumerating every vertex of the polytope (n <= 16).
struct LpSolution {
  double value = 0.0;
  std::vector<double> x;
};
LpSolution box_knapsack_lp(std::span<const double> value, std::span<const double> cap, double budget);

/// Minimum of f over an evenly spaced grid on [lo, hi]. For convex f the true
/// minimum lies in [value - grid_error, value].
struct GridMinimum {
  double x = 0.0;
  double value = 0.0;
  double grid_error = 0.0;
};
GridMinimum grid_minimize(const std::function<double(double)>& f, double lo, double hi, int points);

double shannon_rate(double power_w, double gain, double bandwidth_hz, double noise_psd);

struct LocalInstance {
  std::vector<double> backlog_cycles;
  double capacity_hz = 0.0;
  double weight = 0.0;        // U^l
  double energy_coeff = 0.0;  // delta
  double tau = 0.0;
};
double local_value(const LocalInstance& in, std::span<const double> local_hz);
GridMinimum local_reference(const LocalInstance& in, int points = 2000);

struct TransmissionInstance {
  std::vector<double> backlog_bits;
  double p_max = 0.0;
  double gain = 0.0;
  double bandwidth_hz = 0.0;
  double noise_psd = 0.0;
  double weight = 0.0;  // U^t
  double tau = 0.0;
};
double transmission_value(const TransmissionInstance& in, std::span<const double> rate_bps, double power_w);
GridMinimum transmission_reference(const TransmissionInstance& in, int points = 2000);

struct EdgeInstance {
  std::vector<double> backlog_cycles;
  double capacity_hz = 0.0;
  double tau = 0.0;
};
double edge_value(const EdgeInstance& in, std::span<const double> edge_hz);
LpSolution edge_reference(const EdgeInstance& in);

/// Checks stationarity, complementary slackness and feasibility of (f, lambda)
/// for min -tau sum Q_i f_i. Returns the worst violation scaled by tau max Q.
double edge_kkt_violation(const EdgeInstance& in, std::span<const double> edge_hz, double lambda);

/// Central differences (f(x + h e_j) - f(x - h e_j)) / 2h.
std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x, double h);

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
double relative_error(std::span<const double> a, std::span<const double> b);

}  // namespace mecsim::oracle
