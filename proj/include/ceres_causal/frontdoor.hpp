#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ceres_causal/numeric.hpp"
#include "ceres_causal/rng.hpp"
#include "ceres_causal/scm.hpp"

namespace ceres {

/// Nonempty set of token vectors sharing one dimension.
class TokenSet {
 public:
  explicit TokenSet(std::vector<Vector> tokens);

  [[nodiscard]] std::size_t size() const { return tokens_.size(); }
  [[nodiscard]] std::size_t dim() const { return tokens_.front().dim(); }
  [[nodiscard]] const Vector& operator[](std::size_t i) const { return tokens_[i]; }
  [[nodiscard]] std::span<const Vector> tokens() const { return tokens_; }
  /// Unweighted token mean.
  [[nodiscard]] Vector mean() const;

 private:
  std::vector<Vector> tokens_;
};

/// Projections and temperature of one attention layer.
///
/// `query_proj` / `key_proj` are the per-modality maps used by token
/// aggregation; `w_q` / `w_k` are the cross-attention maps. All are d x d.
struct AttentionParams {
  Matrix w_q;
  Matrix w_k;
  Matrix query_proj;
  Matrix key_proj;
  double temperature = 1.0;

  /// Identity projections with temperature sqrt(d).
  static AttentionParams identity(std::size_t dim);
  static AttentionParams identity(std::size_t dim, double temperature);
  /// Gaussian projections with entries N(0, 1/d), temperature sqrt(d).
  static AttentionParams random(std::size_t dim, Rng& rng);

  [[nodiscard]] std::size_t dim() const { return w_q.rows(); }
  void validate() const;
};

struct AttentionOutput {
  Vector value;
  SimplexWeights weights;
};

/// Query embedding derived from a frame's tokens: projection of their mean.
Vector default_query(const TokenSet& tokens, const Matrix& projection);

/// Self-normalizing aggregation: softmax over <query_proj q, key_proj m_j> / tau,
/// then the convex combination of the raw tokens.
AttentionOutput aggregate_tokens(const Vector& query, const TokenSet& tokens, const AttentionParams& params);

/// Cross-attention with the aggregated depth feature as query and the
/// visual tokens as keys and values.
AttentionOutput alf_attention(const Vector& depth_query, const TokenSet& visual_tokens,
                              const AttentionParams& params);

struct MediatorStack {
  std::vector<Vector> depth_aggregates;  // per layer
  std::vector<Vector> mediators;         // per layer
  std::vector<SimplexWeights> weights;   // cross-attention weights per layer

  /// Mediator of the last processed layer.
  [[nodiscard]] const Vector& final_mediator() const { return mediators.back(); }
};

/// Per layer: aggregate depth tokens with that layer's query, then attend over
/// that layer's visual tokens.
MediatorStack dattn_stack(std::span<const TokenSet> visual_layers, std::span<const TokenSet> depth_layers,
                          std::span<const Vector> depth_queries, std::span<const AttentionParams> params);

/// Two-layer map with a ReLU hidden layer and a scalar gate in [0, 1].
struct GatedFusionParams {
  Matrix w1;  // hidden x 2d
  Vector b1;  // hidden
  Matrix w2;  // d x hidden
  Vector b2;  // d
  double gate = 0.5;

  /// Hidden width 2d, weights N(0, 1/fan_in), zero biases.
  static GatedFusionParams random(std::size_t dim, double gate, Rng& rng);
  /// Weights realizing (m + x) / 2 on nonnegative inputs.
  static GatedFusionParams averaging(std::size_t dim, double gate);

  [[nodiscard]] std::size_t dim() const { return w2.rows(); }
  void validate() const;
};

/// relu(W1 [m; x] + b1) -> W2 h + b2.
Vector fusion_mlp(const Vector& mediator, const Vector& context, const GatedFusionParams& params);

/// gate * MLP([mediator; context]) + (1 - gate) * frame.
Vector gated_fuse(const Vector& mediator, const Vector& context, const Vector& frame,
                  const GatedFusionParams& params);

/// Exact front-door estimand
///   P(Y | do(X=x)) = sum_m P(m | x) sum_x' P(Y | m, x') P(x').
/// `y_given_mx` has parents (M, X); `m_given_x` has parent X.
Distribution frontdoor_adjust(const ConditionalTable& y_given_mx, const ConditionalTable& m_given_x,
                              const Distribution& p_x, std::size_t x);

/// Tables the front-door formula needs, extracted exactly from a spec.
struct FrontdoorTables {
  ConditionalTable y_given_mx;
  ConditionalTable m_given_x;
  Distribution p_x;
};
FrontdoorTables extract_frontdoor_tables(const ScmSpec& spec);

struct RobustnessRow {
  std::uint64_t seed = 0;
  double rho = 0.0;
  std::size_t n_samples = 0;
  double err_visual_only = 0.0;
  double err_depth_guided = 0.0;
  /// Some X state or (X, M) cell was never observed.
  bool support_flag = false;

  [[nodiscard]] bool depth_wins() const { return err_depth_guided <= err_visual_only; }
  [[nodiscard]] std::string winner() const;
};

struct RobustnessReport {
  std::vector<RobustnessRow> rows;
  double depth_win_fraction = 0.0;
  std::size_t flagged = 0;
};

/// For each seed, draws `n_samples` from the spec with Mv corrupted at `rho`,
/// estimates P(m | x) by add-one-smoothed counts through the Mv and the Md
/// channels, plugs each into the front-door formula with the shared smoothed
/// estimates of P(y | m, x') and P(x'), and records the L-infinity error
/// against the exact interventional distribution over all (x, y).
/// Seeds run on `jobs` threads; rows are merged in seed order.
RobustnessReport mediator_robustness_experiment(const ScmSpec& spec, double rho, std::size_t n_samples,
                                                std::span<const std::uint64_t> seeds, std::size_t jobs = 1);

// AttentionParams JSON (matrices row-major):
// {"dim", "temperature", "w_q", "w_k", "query_proj", "key_proj"}.
std::string attention_params_to_json(const AttentionParams& params);
AttentionParams attention_params_from_json(std::string_view text);

}  // namespace ceres
