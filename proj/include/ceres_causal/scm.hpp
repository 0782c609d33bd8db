#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ceres_causal/numeric.hpp"
#include "ceres_causal/rng.hpp"

namespace ceres {

/// Variables of the egocentric SCM, listed in a topological order.
enum class Var : int { Z = 0, U, T, X, Mv, Md, M, Y };
inline constexpr std::size_t kVarCount = 8;
inline constexpr std::array<Var, kVarCount> kAllVars = {Var::Z,  Var::U,  Var::T, Var::X,
                                                        Var::Mv, Var::Md, Var::M, Var::Y};

std::string_view var_name(Var v);
/// Inverse of var_name; throws InvalidInput for unknown names.
Var parse_var(std::string_view name);
inline std::size_t index_of(Var v) { return static_cast<std::size_t>(v); }

/// Probability vector over a finite support.
class Distribution {
 public:
  static constexpr double kSumTolerance = 1e-12;

  Distribution() = default;
  explicit Distribution(std::vector<double> probs);

  /// Point mass at `state` over `support` states.
  static Distribution point_mass(std::size_t support, std::size_t state);

  [[nodiscard]] std::size_t support() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  [[nodiscard]] std::span<const double> span() const { return probs_; }
  [[nodiscard]] const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

/// P(child | parents) stored row-major over the parent states, with the child
/// as the innermost axis.
struct ConditionalTable {
  std::vector<std::size_t> parent_cards;
  std::size_t child_card = 0;
  std::vector<double> probs;

  [[nodiscard]] std::size_t row_count() const;
  [[nodiscard]] std::size_t row_index(std::span<const std::size_t> parent_states) const;
  [[nodiscard]] std::span<const double> row(std::size_t r) const {
    return std::span<const double>(probs).subspan(r * child_card, child_card);
  }
  [[nodiscard]] std::span<const double> row(std::span<const std::size_t> parent_states) const {
    return row(row_index(parent_states));
  }
  [[nodiscard]] Distribution distribution(std::size_t r) const {
    auto rw = row(r);
    return Distribution(std::vector<double>(rw.begin(), rw.end()));
  }
};

/// A structural table attached to a variable.
struct Cpt {
  Var child = Var::Z;
  std::vector<Var> parents;
  std::vector<double> probs;  // row-major over parents, child innermost
};

/// Parents each variable must have. Y gains X when `direct_x_to_y` is set.
std::vector<Var> required_parents(Var v, bool direct_x_to_y);

/// Discrete SCM:
///   Z -> T,   U -> X,   (X,U) -> Mv,   X -> Md,   X -> M,   (T,M,Z,U[,X]) -> Y.
/// Mv and Md are readouts of the mediator state (same support as M); Md is
/// U-free by construction while Mv mixes a U-dependent corruption into the
/// U-free base table with strength `corruption_rho`.
struct ScmSpec {
  std::array<std::size_t, kVarCount> card{};
  std::array<Cpt, kVarCount> tables;
  /// Optional U-dependent corruption table for Mv, parents (X, U).
  std::optional<Cpt> mv_corruption;
  std::size_t embedding_dim = 4;
  std::uint64_t embedding_seed = 0;
  double corruption_rho = 0.0;
  bool direct_x_to_y = false;

  [[nodiscard]] std::size_t cardinality(Var v) const { return card[index_of(v)]; }
  [[nodiscard]] const Cpt& table(Var v) const { return tables[index_of(v)]; }
  Cpt& table(Var v) { return tables[index_of(v)]; }
};

/// Rebuilds the Mv table as (1 - rho) * P(M | X) + rho * corruption(X, U).
/// Requires `mv_corruption` and card(Mv) == card(M).
ScmSpec with_corruption(ScmSpec spec, double rho);

/// One violation of the ScmSpec invariants.
struct Violation {
  std::string where;
  std::string message;
};

/// Empty iff the spec is valid. Rows must sum to one within `row_tolerance`.
std::vector<Violation> validate_spec(const ScmSpec& spec, double row_tolerance = 1e-12);
/// Throws SpecError listing the violations.
void require_valid(const ScmSpec& spec);

/// Partial assignment of states to variables.
class Assignment {
 public:
  Assignment() { values_.fill(-1); }
  Assignment(std::initializer_list<std::pair<Var, std::size_t>> items);

  Assignment& set(Var v, std::size_t state);
  [[nodiscard]] bool has(Var v) const { return values_[index_of(v)] >= 0; }
  [[nodiscard]] std::size_t get(Var v) const { return static_cast<std::size_t>(values_[index_of(v)]); }
  [[nodiscard]] bool empty() const;

 private:
  std::array<long, kVarCount> values_;
};

struct ScmSample {
  std::size_t z = 0, u = 0, t = 0, x = 0, m_v = 0, m_d = 0, m = 0, y = 0;

  [[nodiscard]] std::size_t get(Var v) const;
  void set(Var v, std::size_t s);
  friend bool operator==(const ScmSample&, const ScmSample&) = default;
};

/// Ancestral sampling in the order Z,U -> T,X -> Mv,Md,M -> Y.
std::vector<ScmSample> sample(const ScmSpec& spec, Rng& rng, std::size_t n);
/// Convenience overload drawing from `Rng::stream(seed, 0)`.
std::vector<ScmSample> sample(const ScmSpec& spec, std::uint64_t seed, std::size_t n);

/// Unnormalized P(keep..., evidence) by summing the factored joint over all
/// other ancestors of `keep` and `evidence`. Result is row-major over `keep`.
std::vector<double> joint_marginal(const ScmSpec& spec, std::span<const Var> keep,
                                   const Assignment& evidence = {});

/// Exact P(target | condition).
Distribution observational(const ScmSpec& spec, Var target, const Assignment& condition = {});

/// Exact P(target | parents) as a table; rows of zero-probability parent
/// configurations are filled uniformly.
ConditionalTable conditional_table(const ScmSpec& spec, Var target, std::span<const Var> parents);

/// Spec with every intervened variable's table replaced by a point mass.
ScmSpec mutilate(const ScmSpec& spec, const Assignment& do_assignment);

/// Exact P(target | do(assignment)) by graph mutilation and enumeration.
Distribution intervene(const ScmSpec& spec, const Assignment& do_assignment, Var target);

/// Per-state unit-normalized embeddings, derived from the spec's seed.
struct ScmEmbeddings {
  std::vector<Vector> t, x, m_v, m_d;
};
ScmEmbeddings make_embeddings(const ScmSpec& spec);

struct RandomSpecOptions {
  std::size_t min_card = 2;
  std::size_t max_card = 8;
  bool direct_x_to_y = false;
  double corruption_rho = 0.0;
  /// Force card(Z) = card(U) = 1.
  bool no_confounders = false;
};

/// Random valid spec with strictly positive tables.
ScmSpec random_spec(Rng& rng, const RandomSpecOptions& options = {});

// JSON I/O. Tables are keyed "<child>_given_<parents>" (e.g. "Y_given_TMZU"),
// nested row-major with the child innermost.

std::string spec_to_json(const ScmSpec& spec);
/// Parses and checks row sums to 1 +/- 1e-9; throws SpecError naming the
/// offending path.
ScmSpec spec_from_json(std::string_view text);
ScmSpec load_spec(const std::filesystem::path& path);

}  // namespace ceres
