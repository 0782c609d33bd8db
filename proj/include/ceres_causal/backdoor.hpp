#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ceres_causal/numeric.hpp"
#include "ceres_causal/scm.hpp"

namespace ceres {

/// Object-action confounder key, e.g. ("cut", "knife").
struct VerbNoun {
  std::string verb;
  std::string noun;

  friend auto operator<=>(const VerbNoun&, const VerbNoun&) = default;
};

/// Maps a query to its (verb, noun) pair, or nullopt when it cannot parse.
using ParseRule = std::function<std::optional<VerbNoun>(std::string_view)>;
/// Maps a confounder key to its embedding.
using Embedder = std::function<Vector(const VerbNoun&)>;

/// Lower-cases the query and reads the first two whitespace-delimited tokens
/// as verb and noun. Fails when fewer than two tokens are present.
std::optional<VerbNoun> default_parse_rule(std::string_view query);

/// Exact-match overrides consulted before `fallback`.
ParseRule rule_table_parser(std::map<std::string, VerbNoun> overrides,
                            ParseRule fallback = default_parse_rule);

/// Deterministic unit-normalized Gaussian embedding keyed by FNV-1a of
/// "verb noun" mixed with `seed`.
Embedder seeded_embedder(std::size_t dim, std::uint64_t seed = 0);

struct ConfounderEntry {
  VerbNoun key;
  Vector embedding;
  double prior = 0.0;
  /// Occurrences in the corpus the entry was built from (0 when unknown).
  std::size_t count = 0;
};

/// Confounder dictionary {f_Z(z_i), P(z_i)}.
class ConfounderDictionary {
 public:
  ConfounderDictionary() = default;
  explicit ConfounderDictionary(std::vector<ConfounderEntry> entries);

  [[nodiscard]] const std::vector<ConfounderEntry>& entries() const { return entries_; }
  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] std::vector<double> priors() const;

 private:
  std::vector<ConfounderEntry> entries_;
  std::size_t dim_ = 0;
};

/// One entry per unique pair in first-appearance order; prior = count / |corpus|,
/// so the integer counts sum to |corpus| exactly.
ConfounderDictionary build_dictionary(std::span<const std::string> corpus, const Embedder& embedder,
                                      const ParseRule& parse_rule = default_parse_rule);

/// sum_i P(z_i) f_Z(z_i).
Vector expected_confounder_embedding(const ConfounderDictionary& dict);

/// f_T + scale * E[f_Z]. The default scale of 1 adds the expectation unweighted.
Vector debias_text(const Vector& text_feature, const ConfounderDictionary& dict, double scale = 1.0);

/// s_T + sum_z P(z) s_Z(z) for scalar per-confounder scores.
Vector deconfounded_score(const Vector& text_scores, std::span<const double> confounder_scores,
                          std::span<const double> priors);
/// Per-class variant: s_Z has one row per class and one column per confounder.
Vector deconfounded_score(const Vector& text_scores, const Matrix& confounder_scores,
                          std::span<const double> priors);

/// P(Y | do(T=t)) = sum_z P(Y | t, z) P(z); `y_given_z[z]` holds P(Y | t, z).
Distribution backdoor_adjust(std::span<const Distribution> y_given_z, const Distribution& prior_z);

/// Logit table s_Y(class, z) with optional additive parts.
class ScoreTable {
 public:
  explicit ScoreTable(Matrix scores);
  /// scores(k, z) = s_T(k) + s_Z(z).
  static ScoreTable additive(const Vector& text_scores, const Vector& confounder_scores);
  /// scores(k, z) = s_T(k) + s_Z(k, z).
  static ScoreTable additive(const Vector& text_scores, const Matrix& confounder_scores);

  [[nodiscard]] const Matrix& scores() const { return scores_; }
  [[nodiscard]] std::size_t classes() const { return scores_.rows(); }
  [[nodiscard]] std::size_t confounders() const { return scores_.cols(); }
  [[nodiscard]] Vector column(std::size_t z) const;
  [[nodiscard]] const std::optional<Vector>& text_part() const { return text_; }
  [[nodiscard]] const std::optional<Matrix>& confounder_part() const { return confounder_; }

 private:
  Matrix scores_;
  std::optional<Vector> text_;
  std::optional<Matrix> confounder_;  // one row (scalar per z) or one row per class
};

struct NwgmGapReport {
  std::vector<double> exact;          // sum_z P(z) softmax(s(., z) / tau)
  std::vector<double> approximation;  // softmax(sum_z P(z) s(., z) / tau)
  double max_gap = 0.0;               // L-infinity over classes
  double mean_gap = 0.0;              // mean over classes of |exact - approximation|
  double prior_weighted_gap = 0.0;    // sum_z P(z) ||softmax(s(., z)) - approximation||_inf
  double tv_spread = 0.0;             // max_{z,z'} TV(softmax(s(., z)), softmax(s(., z')))
  bool within_tv_spread = true;       // max_gap <= tv_spread (reported, not guaranteed)
};

NwgmGapReport nwgm_gap(const ScoreTable& table, std::span<const double> priors, double temperature = 1.0);

// Dictionary JSON: {"entries": [{"verb", "noun", "prior", "embedding": [...]}]}.
std::string dictionary_to_json(const ConfounderDictionary& dict);
ConfounderDictionary dictionary_from_json(std::string_view text);
/// One query per line; blank lines skipped.
std::vector<std::string> read_corpus(std::string_view text);

}  // namespace ceres
