#include "ceres_causal/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <json.hpp>

#include "ceres_causal/error.hpp"

namespace ceres {

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c);
  return out;
}

Matrix from_eigen(const Eigen::MatrixXd& m) {
  std::vector<double> e(static_cast<std::size_t>(m.rows() * m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) e[static_cast<std::size_t>(r * m.cols() + c)] = m(r, c);
  return Matrix(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), std::move(e));
}

double entropy(std::span<const double> alpha) {
  double h = 0.0;
  for (double a : alpha)
    if (a > 0.0) h -= a * std::log(a);
  return h;
}

std::vector<double> normalize_exp(std::vector<double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& x : logits) {
    x = std::exp(x - peak);
    total += x;
  }
  for (double& x : logits) x /= total;
  return logits;
}

}  // namespace

QpProblem::QpProblem(Matrix gram, Vector linear, std::string name)
    : gram_(std::move(gram)), linear_(std::move(linear)), name_(std::move(name)) {
  const std::size_t n = linear_.dim();
  if (n == 0) throw InvalidProblem("QpProblem: empty problem");
  if (gram_.rows() != n || gram_.cols() != n) throw InvalidProblem("QpProblem: G must be L x L with L = dim(b)");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(gram_(i, j) - gram_(j, i)) > kSymmetryTolerance) throw InvalidProblem("QpProblem: G not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(to_eigen(gram_));
  const Eigen::VectorXd values = eig.eigenvalues();
  min_eigenvalue_ = values.minCoeff();
  if (min_eigenvalue_ < kPsdFloor) {
    throw InvalidProblem("QpProblem: G has eigenvalue " + std::to_string(min_eigenvalue_) + " below the PSD floor");
  }
  if (min_eigenvalue_ < 0.0) {
    const Eigen::VectorXd clipped = values.cwiseMax(0.0);
    Eigen::MatrixXd rebuilt = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
    rebuilt = 0.5 * (rebuilt + rebuilt.transpose());
    gram_ = from_eigen(rebuilt);
    min_eigenvalue_ = 0.0;
  }
}

QpProblem QpProblem::from_tokens(std::span<const Vector> tokens, const Vector& target_mean) {
  const std::size_t n = tokens.size();
  Matrix g(n, n);
  std::vector<double> b(n);
  for (std::size_t i = 0; i < n; ++i) {
    b[i] = dot(target_mean, tokens[i]);
    for (std::size_t j = 0; j < n; ++j) g.set(i, j, dot(tokens[i], tokens[j]));
  }
  return QpProblem(std::move(g), Vector(std::move(b)));
}

std::vector<double> QpProblem::token_norms() const {
  std::vector<double> out(size());
  for (std::size_t j = 0; j < size(); ++j) out[j] = gram_(j, j);
  return out;
}

double QpProblem::objective(std::span<const double> alpha) const {
  double value = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    double gi = 0.0;
    for (std::size_t j = 0; j < size(); ++j) gi += gram_(i, j) * alpha[j];
    value += alpha[i] * gi - 2.0 * linear_[i] * alpha[i];
  }
  return value;
}

double QpProblem::entropic_objective(std::span<const double> alpha, double tau) const {
  return objective(alpha) - tau * entropy(alpha);
}

std::vector<double> QpProblem::gradient(std::span<const double> alpha) const {
  std::vector<double> g(size());
  for (std::size_t i = 0; i < size(); ++i) {
    double gi = 0.0;
    for (std::size_t j = 0; j < size(); ++j) gi += gram_(i, j) * alpha[j];
    g[i] = 2.0 * gi - 2.0 * linear_[i];
  }
  return g;
}

double power_iteration_max_eigenvalue(const Matrix& m, int iterations, double tol) {
  const std::size_t n = m.rows();
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.1 * static_cast<double>(i) / static_cast<double>(n);
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    double nrm = 0.0;
    for (double x : v) nrm += x * x;
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) return 0.0;
    for (double& x : v) x /= nrm;
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) w[i] += m(i, j) * v[j];
    double rayleigh = 0.0;
    for (std::size_t i = 0; i < n; ++i) rayleigh += v[i] * w[i];
    const bool done = std::abs(rayleigh - estimate) <= tol * std::max(1.0, std::abs(rayleigh));
    estimate = rayleigh;
    v = std::move(w);
    if (done && it > 0) break;
  }
  return std::max(estimate, 0.0);
}

KktReport kkt_residual(const QpProblem& problem, const SimplexWeights& alpha) {
  const std::size_t n = problem.size();
  if (alpha.size() != n) throw DimensionMismatch("kkt_residual: alpha length vs problem size");
  const auto grad = problem.gradient(alpha.span());
  KktReport r;
  double lambda_sum = 0.0;
  std::size_t support = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (alpha[j] > 0.0) {
      lambda_sum -= grad[j];
      ++support;
    }
  }
  r.lambda = support == 0 ? 0.0 : lambda_sum / static_cast<double>(support);
  r.eta.resize(n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    r.eta[j] = grad[j] + r.lambda;
    if (alpha[j] > 0.0) {
      r.stationarity = std::max(r.stationarity, std::abs(r.eta[j]));
    } else {
      r.stationarity = std::max(r.stationarity, std::max(0.0, -r.eta[j]));
    }
    r.complementary_slackness = std::max(r.complementary_slackness, std::abs(r.eta[j] * alpha[j]));
    r.primal_feasibility = std::max(r.primal_feasibility, std::max(0.0, -alpha[j]));
    total += alpha[j];
  }
  r.primal_feasibility = std::max(r.primal_feasibility, std::abs(total - 1.0));
  return r;
}

QpCertificate certify_against_random_points(const QpProblem& problem, const SimplexWeights& alpha,
                                            std::size_t points, Rng& rng) {
  QpCertificate c;
  c.points = points;
  c.best_random_objective = std::numeric_limits<double>::infinity();
  const double value = problem.objective(alpha.span());
  std::vector<double> p(problem.size());
  for (std::size_t k = 0; k < points; ++k) {
    double total = 0.0;
    for (double& x : p) {
      x = rng.exponential();
      total += x;
    }
    for (double& x : p) x /= total;
    const double v = problem.objective(p);
    c.best_random_objective = std::min(c.best_random_objective, v);
    if (value <= v) ++c.beaten;
  }
  return c;
}

QpSolution solve_simplex_qp(const QpProblem& problem, const QpOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidInput("solve_simplex_qp: tol must be positive");
  const std::size_t n = problem.size();
  const double lmax = power_iteration_max_eigenvalue(problem.gram());
  const double step = 1.0 / (2.0 * lmax + 1e-12);

  SimplexWeights alpha(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  KktReport kkt = kkt_residual(problem, alpha);
  SimplexWeights best = alpha;
  double best_residual = kkt.stationarity;
  std::size_t it = 0;
  std::vector<double> trial(n);
  while (kkt.stationarity > options.tol) {
    if (it >= options.max_iter) {
      throw MaxIterations("solve_simplex_qp: no convergence after " + std::to_string(it) + " iterations",
                          best.values(), best_residual);
    }
    const auto grad = problem.gradient(alpha.span());
    for (std::size_t j = 0; j < n; ++j) trial[j] = alpha[j] - step * grad[j];
    alpha = simplex_project(trial);
    kkt = kkt_residual(problem, alpha);
    if (kkt.stationarity < best_residual) {
      best_residual = kkt.stationarity;
      best = alpha;
    }
    ++it;
  }

  QpSolution sol{alpha, kkt, it, problem.objective(alpha.span()), step, {}};
  Rng rng = Rng::stream(options.certificate_seed, n);
  sol.certificate = certify_against_random_points(problem, alpha, options.certificate_points, rng);
  return sol;
}

std::vector<double> entropic_fixed_point_map(const QpProblem& problem, std::span<const double> alpha, double tau) {
  auto grad = problem.gradient(alpha);  // 2 G a - 2 b
  for (double& g : grad) g = -g;
  return softmax(grad, tau).values();
}

EntropicSolution solve_entropic_qp(const QpProblem& problem, double tau, double tol, std::size_t max_iter) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidInput("solve_entropic_qp: tau must be positive");
  if (!(tol > 0.0)) throw InvalidInput("solve_entropic_qp: tol must be positive");
  const std::size_t n = problem.size();
  const double lipschitz = 2.0 * power_iteration_max_eigenvalue(problem.gram()) / tau;
  const double eta = std::min(0.5, 1.0 / (1.0 + lipschitz));

  std::vector<double> alpha(n, 1.0 / static_cast<double>(n));
  std::vector<double> mapped = entropic_fixed_point_map(problem, alpha, tau);
  double residual = max_abs_diff(mapped, alpha);
  std::size_t it = 0;
  while (residual > tol) {
    if (it >= max_iter) {
      throw MaxIterations("solve_entropic_qp: no convergence after " + std::to_string(it) + " iterations", alpha,
                          residual);
    }
    for (std::size_t j = 0; j < n; ++j) alpha[j] = (1.0 - eta) * alpha[j] + eta * mapped[j];
    mapped = entropic_fixed_point_map(problem, alpha, tau);
    residual = max_abs_diff(mapped, alpha);
    ++it;
  }
  const double total = stable_sum(alpha);
  for (double& a : alpha) a /= total;
  return EntropicSolution{SimplexWeights(std::move(alpha)), it, residual, eta};
}

EntropicArgmax entropic_linear_argmax(const Vector& scores, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInput("entropic_linear_argmax: lambda must be positive");
  if (scores.empty()) throw InvalidInput("entropic_linear_argmax: empty scores");
  EntropicArgmax out{softmax(scores, lambda), {}, 0.0, 0};

  // Entropic mirror ascent on <w, s> + lambda H(w) with step 1 / (2 lambda):
  // log w <- (1 - step lambda) log w + step s, renormalized.
  const double step = 1.0 / (2.0 * lambda);
  const std::size_t n = scores.dim();
  std::vector<double> logw(n, -std::log(static_cast<double>(n)));
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  for (std::size_t it = 0; it < 400; ++it) {
    for (std::size_t j = 0; j < n; ++j) logw[j] = (1.0 - step * lambda) * logw[j] + step * scores[j];
    auto next = normalize_exp(logw);
    for (std::size_t j = 0; j < n; ++j) logw[j] = std::log(std::max(next[j], std::numeric_limits<double>::min()));
    const double change = max_abs_diff(next, w);
    w = std::move(next);
    out.mirror_iterations = it + 1;
    if (change == 0.0) break;
  }
  out.mirror = std::move(w);
  out.agreement = max_abs_diff(out.weights.span(), out.mirror);
  return out;
}

double face_min_eigenvalue(const QpProblem& problem, const SimplexWeights& alpha, double support_tol) {
  std::vector<std::size_t> support;
  for (std::size_t j = 0; j < alpha.size(); ++j)
    if (alpha[j] > support_tol) support.push_back(j);
  const auto k = static_cast<Eigen::Index>(support.size());
  if (k <= 1) return std::numeric_limits<double>::infinity();
  Eigen::MatrixXd g(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) g(i, j) = problem.gram()(support[i], support[j]);
  // Orthonormal basis of {v : sum v = 0} from the QR of [1 | I].
  Eigen::MatrixXd a(k, k);
  a.setIdentity();
  a.col(0).setOnes();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd basis = q.rightCols(k - 1);
  const Eigen::MatrixXd restricted = basis.transpose() * g * basis;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(restricted);
  return eig.eigenvalues().minCoeff();
}

GammaSweep gamma_convergence_sweep(const QpProblem& problem, std::span<const double> tau_grid,
                                   const QpOptions& options) {
  if (tau_grid.empty()) throw InvalidInput("gamma_convergence_sweep: empty grid");
  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    if (!(tau_grid[i] > 0.0)) throw InvalidInput("gamma_convergence_sweep: temperatures must be positive");
    if (i > 0 && !(tau_grid[i] < tau_grid[i - 1])) throw InvalidInput("gamma_convergence_sweep: grid must descend");
  }
  const QpSolution qp = solve_simplex_qp(problem, options);
  std::vector<EntropicSolution> entropic;
  entropic.reserve(tau_grid.size());
  for (double tau : tau_grid) entropic.push_back(solve_entropic_qp(problem, tau));

  GammaSweep sweep;
  sweep.degenerate = face_min_eigenvalue(problem, qp.weights) < 1e-8;
  sweep.reference = sweep.degenerate ? entropic.back().weights : qp.weights;
  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    GammaSweepRow row;
    row.tau = tau_grid[i];
    row.distance = max_abs_diff(entropic[i].weights.span(), sweep.reference.span());
    row.entropic_objective = problem.entropic_objective(entropic[i].weights.span(), tau_grid[i]);
    if (i > 0) {
      const auto& prev = sweep.rows.back();
      if (row.distance > prev.distance + 1e-9) sweep.distance_monotone = false;
      if (row.entropic_objective < prev.entropic_objective - 1e-9) sweep.objective_monotone = false;
    }
    sweep.rows.push_back(row);
  }
  return sweep;
}

std::string problem_to_json(const QpProblem& problem) {
  nlohmann::ordered_json doc;
  doc["name"] = problem.name();
  nlohmann::ordered_json g = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < problem.size(); ++r) {
    auto row = problem.gram().row(r);
    g.push_back(std::vector<double>(row.begin(), row.end()));
  }
  doc["G"] = g;
  doc["b"] = problem.linear().values();
  return doc.dump(2) + "\n";
}

QpProblem problem_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    const auto rows = doc.at("G").get<std::vector<std::vector<double>>>();
    std::vector<double> flat;
    for (const auto& r : rows) {
      if (r.size() != rows.size()) throw InvalidProblem("QP JSON: G must be square");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return QpProblem(Matrix(rows.size(), rows.size(), std::move(flat)), Vector(doc.at("b").get<std::vector<double>>()),
                     doc.value("name", std::string{}));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("QP JSON: ") + e.what());
  }
}

std::string kkt_to_json(const KktReport& report) {
  nlohmann::ordered_json doc;
  doc["stationarity"] = report.stationarity;
  doc["complementary_slackness"] = report.complementary_slackness;
  doc["primal_feasibility"] = report.primal_feasibility;
  doc["lambda"] = report.lambda;
  doc["eta"] = report.eta;
  return doc.dump(2) + "\n";
}

}  // namespace ceres
