#include "ceres_causal/frontdoor.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "ceres_causal/error.hpp"
#include "ceres_causal/parallel.hpp"

namespace ceres {

namespace {

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw DimensionMismatch(std::string(what) + ": dim " + std::to_string(got) + " vs " + std::to_string(want));
  }
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  std::vector<double> e(rows * cols);
  for (double& x : e) x = stddev * rng.normal();
  return Matrix(rows, cols, std::move(e));
}

void require_rows_valid(const ConditionalTable& t, const char* what) {
  if (t.probs.size() != t.row_count() * t.child_card || t.child_card == 0) {
    throw InvalidInput(std::string(what) + ": table size does not match its cardinalities");
  }
  for (std::size_t r = 0; r < t.row_count(); ++r) {
    auto row = t.row(r);
    for (double p : row)
      if (!std::isfinite(p) || p < 0.0) throw InvalidInput(std::string(what) + ": negative probability");
    if (std::abs(stable_sum(row) - 1.0) > 1e-9) throw InvalidInput(std::string(what) + ": row does not sum to one");
  }
}

std::vector<double> scaled_dot_scores(const Vector& query, const Matrix& query_map, const TokenSet& tokens,
                                      const Matrix& key_map) {
  const Vector q = query_map * query;
  std::vector<double> scores(tokens.size());
  for (std::size_t j = 0; j < tokens.size(); ++j) scores[j] = dot(q, key_map * tokens[j]);
  return scores;
}

}  // namespace

TokenSet::TokenSet(std::vector<Vector> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty()) throw InvalidInput("TokenSet: empty");
  const std::size_t d = tokens_.front().dim();
  if (d == 0) throw InvalidInput("TokenSet: zero-dimensional tokens");
  for (const auto& t : tokens_) require_dim(t.dim(), d, "TokenSet");
}

Vector TokenSet::mean() const {
  Vector acc(dim());
  for (const auto& t : tokens_) acc += t;
  return (1.0 / static_cast<double>(size())) * acc;
}

AttentionParams AttentionParams::identity(std::size_t dim) {
  return identity(dim, std::sqrt(static_cast<double>(dim)));
}

AttentionParams AttentionParams::identity(std::size_t dim, double temperature) {
  const Matrix id = Matrix::identity(dim);
  return AttentionParams{id, id, id, id, temperature};
}

AttentionParams AttentionParams::random(std::size_t dim, Rng& rng) {
  const double sd = 1.0 / std::sqrt(static_cast<double>(dim));
  AttentionParams p;
  p.w_q = gaussian_matrix(dim, dim, sd, rng);
  p.w_k = gaussian_matrix(dim, dim, sd, rng);
  p.query_proj = gaussian_matrix(dim, dim, sd, rng);
  p.key_proj = gaussian_matrix(dim, dim, sd, rng);
  p.temperature = std::sqrt(static_cast<double>(dim));
  return p;
}

void AttentionParams::validate() const {
  const std::size_t d = w_q.rows();
  for (const Matrix* m : {&w_q, &w_k, &query_proj, &key_proj}) {
    if (!m->is_square() || m->rows() != d) throw DimensionMismatch("AttentionParams: projections must be d x d");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidInput("AttentionParams: temperature must be positive");
  }
}

Vector default_query(const TokenSet& tokens, const Matrix& projection) {
  require_dim(projection.cols(), tokens.dim(), "default_query");
  return projection * tokens.mean();
}

AttentionOutput aggregate_tokens(const Vector& query, const TokenSet& tokens, const AttentionParams& params) {
  params.validate();
  require_dim(query.dim(), params.dim(), "aggregate_tokens query");
  require_dim(tokens.dim(), params.dim(), "aggregate_tokens tokens");
  auto weights = softmax(scaled_dot_scores(query, params.query_proj, tokens, params.key_proj), params.temperature);
  Vector value = convex_combine(weights, tokens.tokens());
  return {std::move(value), std::move(weights)};
}

AttentionOutput alf_attention(const Vector& depth_query, const TokenSet& visual_tokens,
                              const AttentionParams& params) {
  params.validate();
  require_dim(depth_query.dim(), params.dim(), "alf_attention query");
  require_dim(visual_tokens.dim(), params.dim(), "alf_attention tokens");
  auto weights = softmax(scaled_dot_scores(depth_query, params.w_q, visual_tokens, params.w_k), params.temperature);
  Vector value = convex_combine(weights, visual_tokens.tokens());
  return {std::move(value), std::move(weights)};
}

MediatorStack dattn_stack(std::span<const TokenSet> visual_layers, std::span<const TokenSet> depth_layers,
                          std::span<const Vector> depth_queries, std::span<const AttentionParams> params) {
  const std::size_t n = visual_layers.size();
  if (n == 0) throw InvalidInput("dattn_stack: no layers");
  if (depth_layers.size() != n || depth_queries.size() != n || params.size() != n) {
    throw DimensionMismatch("dattn_stack: layer counts differ");
  }
  MediatorStack stack;
  for (std::size_t l = 0; l < n; ++l) {
    auto depth = aggregate_tokens(depth_queries[l], depth_layers[l], params[l]);
    auto mediator = alf_attention(depth.value, visual_layers[l], params[l]);
    stack.depth_aggregates.push_back(std::move(depth.value));
    stack.mediators.push_back(std::move(mediator.value));
    stack.weights.push_back(std::move(mediator.weights));
  }
  return stack;
}

GatedFusionParams GatedFusionParams::random(std::size_t dim, double gate, Rng& rng) {
  const std::size_t hidden = 2 * dim;
  GatedFusionParams p;
  p.w1 = gaussian_matrix(hidden, 2 * dim, 1.0 / std::sqrt(static_cast<double>(2 * dim)), rng);
  p.b1 = Vector(hidden);
  p.w2 = gaussian_matrix(dim, hidden, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  p.b2 = Vector(dim);
  p.gate = gate;
  return p;
}

GatedFusionParams GatedFusionParams::averaging(std::size_t dim, double gate) {
  GatedFusionParams p;
  p.w1 = Matrix::identity(2 * dim);
  p.b1 = Vector(2 * dim);
  p.w2 = Matrix(dim, 2 * dim);
  for (std::size_t i = 0; i < dim; ++i) {
    p.w2.set(i, i, 0.5);
    p.w2.set(i, dim + i, 0.5);
  }
  p.b2 = Vector(dim);
  p.gate = gate;
  return p;
}

void GatedFusionParams::validate() const {
  const std::size_t d = w2.rows();
  const std::size_t hidden = w1.rows();
  if (w1.cols() != 2 * d || b1.dim() != hidden || w2.cols() != hidden || b2.dim() != d) {
    throw DimensionMismatch("GatedFusionParams: inconsistent weight shapes");
  }
  if (!(gate >= 0.0 && gate <= 1.0)) throw InvalidInput("GatedFusionParams: gate outside [0, 1]");
}

Vector fusion_mlp(const Vector& mediator, const Vector& context, const GatedFusionParams& params) {
  params.validate();
  require_dim(mediator.dim(), params.dim(), "fusion_mlp mediator");
  require_dim(context.dim(), params.dim(), "fusion_mlp context");
  Vector h = params.w1 * concat(mediator, context) + params.b1;
  std::vector<double> relu(h.begin(), h.end());
  for (double& x : relu) x = std::max(0.0, x);
  return params.w2 * Vector(std::move(relu)) + params.b2;
}

Vector gated_fuse(const Vector& mediator, const Vector& context, const Vector& frame,
                  const GatedFusionParams& params) {
  require_dim(frame.dim(), params.dim(), "gated_fuse frame");
  const Vector mlp = fusion_mlp(mediator, context, params);
  std::vector<double> out(frame.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = params.gate * mlp[i] + (1.0 - params.gate) * frame[i];
  return Vector(std::move(out));
}

Distribution frontdoor_adjust(const ConditionalTable& y_given_mx, const ConditionalTable& m_given_x,
                              const Distribution& p_x, std::size_t x) {
  require_rows_valid(y_given_mx, "frontdoor_adjust P(Y|M,X)");
  require_rows_valid(m_given_x, "frontdoor_adjust P(M|X)");
  const std::size_t cx = p_x.support();
  const std::size_t cm = m_given_x.child_card;
  if (m_given_x.parent_cards != std::vector<std::size_t>{cx}) {
    throw InvalidInput("frontdoor_adjust: P(M|X) must have the single parent X");
  }
  if (y_given_mx.parent_cards != std::vector<std::size_t>{cm, cx}) {
    throw InvalidInput("frontdoor_adjust: P(Y|M,X) must have parents (M, X)");
  }
  if (x >= cx) throw InvalidInput("frontdoor_adjust: x out of range");
  const std::size_t cy = y_given_mx.child_card;
  std::vector<double> out(cy, 0.0);
  const auto pm = m_given_x.row(x);
  for (std::size_t m = 0; m < cm; ++m) {
    if (pm[m] == 0.0) continue;
    for (std::size_t xp = 0; xp < cx; ++xp) {
      const double w = pm[m] * p_x[xp];
      const auto py = y_given_mx.row(m * cx + xp);
      for (std::size_t y = 0; y < cy; ++y) out[y] += w * py[y];
    }
  }
  const double total = stable_sum(out);
  for (double& p : out) p /= total;
  return Distribution(std::move(out));
}

FrontdoorTables extract_frontdoor_tables(const ScmSpec& spec) {
  const std::array<Var, 2> mx = {Var::M, Var::X};
  const std::array<Var, 1> x = {Var::X};
  return FrontdoorTables{conditional_table(spec, Var::Y, mx), conditional_table(spec, Var::M, x),
                         observational(spec, Var::X)};
}

std::string RobustnessRow::winner() const {
  if (err_depth_guided < err_visual_only) return "depth_guided";
  if (err_visual_only < err_depth_guided) return "visual_only";
  return "tie";
}

RobustnessReport mediator_robustness_experiment(const ScmSpec& base, double rho, std::size_t n_samples,
                                                std::span<const std::uint64_t> seeds, std::size_t jobs) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidInput("mediator_robustness_experiment: rho outside [0, 1]");
  if (n_samples == 0) throw InvalidInput("mediator_robustness_experiment: n_samples must be positive");
  const ScmSpec spec = with_corruption(base, rho);
  require_valid(spec);
  if (spec.cardinality(Var::Md) != spec.cardinality(Var::M)) {
    throw SpecError("mediator_robustness_experiment: card(Md) must equal card(M)");
  }
  const std::size_t cx = spec.cardinality(Var::X);
  const std::size_t cm = spec.cardinality(Var::M);
  const std::size_t cy = spec.cardinality(Var::Y);

  std::vector<Distribution> truth;
  for (std::size_t x = 0; x < cx; ++x) truth.push_back(intervene(spec, Assignment{{Var::X, x}}, Var::Y));

  RobustnessReport report;
  report.rows.resize(seeds.size());
  parallel_for(seeds.size(), jobs, [&](std::size_t i) {
    Rng rng = Rng::stream(seeds[i], 0);
    const auto draws = sample(spec, rng, n_samples);

    std::vector<double> count_x(cx, 0.0), count_mv(cx * cm, 0.0), count_md(cx * cm, 0.0), count_m(cx * cm, 0.0);
    std::vector<double> count_mxy(cm * cx * cy, 0.0);
    for (const auto& s : draws) {
      count_x[s.x] += 1.0;
      count_mv[s.x * cm + s.m_v] += 1.0;
      count_md[s.x * cm + s.m_d] += 1.0;
      count_m[s.x * cm + s.m] += 1.0;
      count_mxy[(s.m * cx + s.x) * cy + s.y] += 1.0;
    }
    RobustnessRow row;
    row.seed = seeds[i];
    row.rho = rho;
    row.n_samples = n_samples;
    row.support_flag = std::any_of(count_x.begin(), count_x.end(), [](double c) { return c == 0.0; }) ||
                       std::any_of(count_m.begin(), count_m.end(), [](double c) { return c == 0.0; });

    std::vector<double> px(cx);
    for (std::size_t x = 0; x < cx; ++x) {
      px[x] = (count_x[x] + 1.0) / (static_cast<double>(n_samples) + static_cast<double>(cx));
    }
    ConditionalTable y_given_mx{{cm, cx}, cy, std::vector<double>(cm * cx * cy)};
    for (std::size_t r = 0; r < cm * cx; ++r) {
      double total = 0.0;
      for (std::size_t y = 0; y < cy; ++y) total += count_mxy[r * cy + y];
      for (std::size_t y = 0; y < cy; ++y) {
        y_given_mx.probs[r * cy + y] = (count_mxy[r * cy + y] + 1.0) / (total + static_cast<double>(cy));
      }
    }
    auto smoothed_m_given_x = [&](const std::vector<double>& counts) {
      ConditionalTable t{{cx}, cm, std::vector<double>(cx * cm)};
      for (std::size_t x = 0; x < cx; ++x)
        for (std::size_t m = 0; m < cm; ++m) {
          t.probs[x * cm + m] = (counts[x * cm + m] + 1.0) / (count_x[x] + static_cast<double>(cm));
        }
      return t;
    };
    const Distribution p_x = [&] {
      const double total = stable_sum(px);
      for (double& p : px) p /= total;
      return Distribution(px);
    }();
    auto error_of = [&](const ConditionalTable& m_given_x) {
      double err = 0.0;
      for (std::size_t x = 0; x < cx; ++x) {
        const auto est = frontdoor_adjust(y_given_mx, m_given_x, p_x, x);
        err = std::max(err, max_abs_diff(est.span(), truth[x].span()));
      }
      return err;
    };
    row.err_visual_only = error_of(smoothed_m_given_x(count_mv));
    row.err_depth_guided = error_of(smoothed_m_given_x(count_md));
    report.rows[i] = row;
  });

  std::size_t wins = 0;
  for (const auto& r : report.rows) {
    wins += r.depth_wins() ? 1 : 0;
    report.flagged += r.support_flag ? 1 : 0;
  }
  report.depth_win_fraction =
      seeds.empty() ? 0.0 : static_cast<double>(wins) / static_cast<double>(seeds.size());
  return report;
}

std::string attention_params_to_json(const AttentionParams& params) {
  nlohmann::ordered_json doc;
  doc["dim"] = params.dim();
  doc["temperature"] = params.temperature;
  doc["w_q"] = params.w_q.values();
  doc["w_k"] = params.w_k.values();
  doc["query_proj"] = params.query_proj.values();
  doc["key_proj"] = params.key_proj.values();
  return doc.dump(2) + "\n";
}

AttentionParams attention_params_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    const auto d = doc.at("dim").get<std::size_t>();
    auto mat = [&](const char* key) { return Matrix(d, d, doc.at(key).get<std::vector<double>>()); };
    AttentionParams p{mat("w_q"), mat("w_k"), mat("query_proj"), mat("key_proj"),
                      doc.at("temperature").get<double>()};
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("attention params JSON: ") + e.what());
  }
}

}  // namespace ceres
