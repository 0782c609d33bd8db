#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ceres_causal/numeric.hpp"
#include "ceres_causal/rng.hpp"

namespace ceres {

/// min_{a in simplex}  -2 b^T a + a^T G a
///
/// G must be symmetric (1e-12) and positive semidefinite; eigenvalues down to
/// -1e-10 are accepted and clipped to zero on construction.
class QpProblem {
 public:
  static constexpr double kSymmetryTolerance = 1e-12;
  static constexpr double kPsdFloor = -1e-10;

  QpProblem(Matrix gram, Vector linear, std::string name = {});

  /// G_ij = <m_i, m_j>, b_j = <mu, m_j>.
  static QpProblem from_tokens(std::span<const Vector> tokens, const Vector& target_mean);

  [[nodiscard]] const Matrix& gram() const { return gram_; }
  [[nodiscard]] const Vector& linear() const { return linear_; }
  [[nodiscard]] std::size_t size() const { return linear_.dim(); }
  [[nodiscard]] const std::string& name() const { return name_; }
  /// Token norms gamma_j = G_jj.
  [[nodiscard]] std::vector<double> token_norms() const;
  [[nodiscard]] double min_eigenvalue() const { return min_eigenvalue_; }

  [[nodiscard]] double objective(std::span<const double> alpha) const;
  /// objective - tau * H(alpha), with H the Shannon entropy.
  [[nodiscard]] double entropic_objective(std::span<const double> alpha, double tau) const;
  /// 2 G alpha - 2 b.
  [[nodiscard]] std::vector<double> gradient(std::span<const double> alpha) const;

 private:
  Matrix gram_;
  Vector linear_;
  std::string name_;
  double min_eigenvalue_ = 0.0;
};

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double power_iteration_max_eigenvalue(const Matrix& m, int iterations = 100, double tol = 1e-10);

/// First-order optimality residuals at a simplex point.
///
/// lambda is the mean of b_j-terms over the support {alpha_j > 0}:
/// lambda = mean_j (2 b_j - 2 (G alpha)_j); eta_j = 2 (G alpha)_j - 2 b_j + lambda.
/// `stationarity` is max |eta_j| on the support together with max(0, -eta_j)
/// off it (dual feasibility).
struct KktReport {
  double stationarity = 0.0;
  double complementary_slackness = 0.0;  // max_j |eta_j alpha_j|
  double primal_feasibility = 0.0;       // max(|sum - 1|, max_j -alpha_j)
  double lambda = 0.0;
  std::vector<double> eta;
};

KktReport kkt_residual(const QpProblem& problem, const SimplexWeights& alpha);

struct QpCertificate {
  std::size_t points = 0;
  std::size_t beaten = 0;  // random points whose objective is >= the solution's
  double best_random_objective = 0.0;
  [[nodiscard]] bool passed() const { return beaten == points; }
};

/// Compares `alpha` against `points` Dirichlet(1) draws.
QpCertificate certify_against_random_points(const QpProblem& problem, const SimplexWeights& alpha,
                                            std::size_t points, Rng& rng);

struct QpSolution {
  SimplexWeights weights;
  KktReport kkt;
  std::size_t iterations = 0;
  double objective = 0.0;
  double step = 0.0;
  QpCertificate certificate;
};

struct QpOptions {
  double tol = 1e-10;
  std::size_t max_iter = 500000;
  std::size_t certificate_points = 1000;
  std::uint64_t certificate_seed = 0;
};

/// Projected gradient with step 1 / (2 lambda_max(G) + 1e-12); stops once
/// the KKT stationarity residual is <= tol. Throws MaxIterations otherwise.
QpSolution solve_simplex_qp(const QpProblem& problem, const QpOptions& options = {});

struct EntropicSolution {
  SimplexWeights weights;
  std::size_t iterations = 0;
  double residual = 0.0;  // ||F(alpha) - alpha||_inf at the returned point
  double damping = 0.5;
};

/// F(alpha) = softmax((2b - 2 G alpha) / tau).
std::vector<double> entropic_fixed_point_map(const QpProblem& problem, std::span<const double> alpha, double tau);

/// Damped iteration alpha <- (1 - eta) alpha + eta F(alpha) from the uniform
/// point until ||F(alpha) - alpha||_inf <= tol. eta = 0.5 unless the map's
/// Lipschitz bound 2 lambda_max(G) / tau calls for smaller damping, in which
/// case eta = 1 / (1 + 2 lambda_max(G) / tau).
EntropicSolution solve_entropic_qp(const QpProblem& problem, double tau, double tol = 1e-12,
                                   std::size_t max_iter = 2000000);

struct EntropicArgmax {
  SimplexWeights weights;         // softmax(scores / lambda)
  std::vector<double> mirror;     // mirror-descent maximizer of <w, s> + lambda H(w)
  double agreement = 0.0;         // ||weights - mirror||_inf
  std::size_t mirror_iterations = 0;
};

/// Maximizer of <w, scores> + lambda H(w) over the simplex, checked against
/// an independent mirror-descent run.
EntropicArgmax entropic_linear_argmax(const Vector& scores, double lambda);

struct GammaSweepRow {
  double tau = 0.0;
  double distance = 0.0;            // ||alpha_tau - reference||_inf
  double entropic_objective = 0.0;  // optimal value of the entropic problem at tau
};

struct GammaSweep {
  std::vector<GammaSweepRow> rows;
  SimplexWeights reference;  // QP solution, or the smallest-tau entropic point if degenerate
  bool degenerate = false;
  bool distance_monotone = true;   // nonincreasing within 1e-9 along the grid
  bool objective_monotone = true;  // nondecreasing within 1e-9 as tau decreases
};

/// Distances from entropic solutions to the QP solution along a descending
/// temperature grid.
GammaSweep gamma_convergence_sweep(const QpProblem& problem, std::span<const double> tau_grid,
                                   const QpOptions& options = {});

/// lambda_min of G restricted to the tangent space of the face supported by
/// {alpha_j > support_tol}; +inf for a vertex.
double face_min_eigenvalue(const QpProblem& problem, const SimplexWeights& alpha, double support_tol = 1e-9);

// JSON: {"name", "G": [[...]], "b": [...]}.
std::string problem_to_json(const QpProblem& problem);
QpProblem problem_from_json(std::string_view text);
std::string kkt_to_json(const KktReport& report);

}  // namespace ceres
