#include "ceres_causal/backdoor.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "ceres_causal/error.hpp"
#include "ceres_causal/rng.hpp"

namespace ceres {

std::optional<VerbNoun> default_parse_rule(std::string_view query) {
  std::string lowered(query);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::istringstream in(lowered);
  VerbNoun out;
  if (!(in >> out.verb >> out.noun)) return std::nullopt;
  return out;
}

ParseRule rule_table_parser(std::map<std::string, VerbNoun> overrides, ParseRule fallback) {
  return [overrides = std::move(overrides), fallback = std::move(fallback)](
             std::string_view query) -> std::optional<VerbNoun> {
    if (auto it = overrides.find(std::string(query)); it != overrides.end()) return it->second;
    return fallback(query);
  };
}

Embedder seeded_embedder(std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw InvalidInput("seeded_embedder: dim must be positive");
  return [dim, seed](const VerbNoun& key) {
    Rng rng = Rng::stream(seed, fnv1a64(key.verb + " " + key.noun));
    std::vector<double> e(dim);
    double nrm = 0.0;
    for (double& x : e) {
      x = rng.normal();
      nrm += x * x;
    }
    nrm = std::sqrt(nrm);
    for (double& x : e) x /= nrm;
    return Vector(std::move(e));
  };
}

ConfounderDictionary::ConfounderDictionary(std::vector<ConfounderEntry> entries)
    : entries_(std::move(entries)) {
  if (entries_.empty()) throw InvalidInput("ConfounderDictionary: no entries");
  dim_ = entries_.front().embedding.dim();
  std::vector<VerbNoun> keys;
  std::vector<double> priors;
  for (const auto& e : entries_) {
    if (e.embedding.dim() != dim_) throw DimensionMismatch("ConfounderDictionary: embedding dims differ");
    if (!std::isfinite(e.prior) || e.prior < 0.0) throw InvalidInput("ConfounderDictionary: negative prior");
    keys.push_back(e.key);
    priors.push_back(e.prior);
  }
  std::sort(keys.begin(), keys.end());
  if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) {
    throw InvalidInput("ConfounderDictionary: duplicate key");
  }
  if (std::abs(stable_sum(priors) - 1.0) > 1e-12) throw InvalidInput("ConfounderDictionary: priors do not sum to one");
}

std::vector<double> ConfounderDictionary::priors() const {
  std::vector<double> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.prior);
  return out;
}

ConfounderDictionary build_dictionary(std::span<const std::string> corpus, const Embedder& embedder,
                                      const ParseRule& parse_rule) {
  if (corpus.empty()) throw InvalidInput("build_dictionary: empty corpus");
  std::vector<VerbNoun> order;
  std::map<VerbNoun, std::size_t> counts;
  for (const auto& query : corpus) {
    auto parsed = parse_rule(query);
    if (!parsed) throw ParseError("build_dictionary: cannot parse query '" + query + "'");
    if (counts[*parsed]++ == 0) order.push_back(*parsed);
  }
  const double total = static_cast<double>(corpus.size());
  std::vector<ConfounderEntry> entries;
  entries.reserve(order.size());
  for (const auto& key : order) {
    entries.push_back({key, embedder(key), static_cast<double>(counts[key]) / total, counts[key]});
  }
  return ConfounderDictionary(std::move(entries));
}

Vector expected_confounder_embedding(const ConfounderDictionary& dict) {
  std::vector<double> acc(dict.dim(), 0.0);
  for (const auto& e : dict.entries())
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += e.prior * e.embedding[i];
  return Vector(std::move(acc));
}

Vector debias_text(const Vector& text_feature, const ConfounderDictionary& dict, double scale) {
  if (text_feature.dim() != dict.dim()) {
    throw DimensionMismatch("debias_text: text feature dim " + std::to_string(text_feature.dim()) +
                            " vs dictionary dim " + std::to_string(dict.dim()));
  }
  return text_feature + scale * expected_confounder_embedding(dict);
}

Vector deconfounded_score(const Vector& text_scores, std::span<const double> confounder_scores,
                          std::span<const double> priors) {
  if (confounder_scores.size() != priors.size()) {
    throw DimensionMismatch("deconfounded_score: s_Z and priors differ in length");
  }
  double shift = 0.0;
  for (std::size_t z = 0; z < priors.size(); ++z) shift += priors[z] * confounder_scores[z];
  std::vector<double> out(text_scores.begin(), text_scores.end());
  for (double& s : out) s += shift;
  return Vector(std::move(out));
}

Vector deconfounded_score(const Vector& text_scores, const Matrix& confounder_scores,
                          std::span<const double> priors) {
  if (confounder_scores.cols() != priors.size()) {
    throw DimensionMismatch("deconfounded_score: s_Z columns and priors differ");
  }
  if (confounder_scores.rows() == 1) return deconfounded_score(text_scores, confounder_scores.row(0), priors);
  if (confounder_scores.rows() != text_scores.dim()) {
    throw DimensionMismatch("deconfounded_score: s_Z rows must match the class count");
  }
  std::vector<double> out(text_scores.begin(), text_scores.end());
  for (std::size_t k = 0; k < out.size(); ++k)
    for (std::size_t z = 0; z < priors.size(); ++z) out[k] += priors[z] * confounder_scores(k, z);
  return Vector(std::move(out));
}

Distribution backdoor_adjust(std::span<const Distribution> y_given_z, const Distribution& prior_z) {
  if (y_given_z.size() != prior_z.support()) {
    throw InvalidInput("backdoor_adjust: need one P(Y|t,z) row per confounder state");
  }
  const std::size_t card_y = y_given_z.front().support();
  std::vector<double> out(card_y, 0.0);
  for (std::size_t z = 0; z < y_given_z.size(); ++z) {
    if (y_given_z[z].support() != card_y) throw InvalidInput("backdoor_adjust: ragged conditional rows");
    for (std::size_t y = 0; y < card_y; ++y) out[y] += y_given_z[z][y] * prior_z[z];
  }
  return Distribution(std::move(out));
}

ScoreTable::ScoreTable(Matrix scores) : scores_(std::move(scores)) {
  if (scores_.rows() == 0 || scores_.cols() == 0) throw InvalidInput("ScoreTable: empty table");
}

ScoreTable ScoreTable::additive(const Vector& text_scores, const Vector& confounder_scores) {
  Matrix s(text_scores.dim(), confounder_scores.dim());
  for (std::size_t k = 0; k < s.rows(); ++k)
    for (std::size_t z = 0; z < s.cols(); ++z) s.set(k, z, text_scores[k] + confounder_scores[z]);
  ScoreTable t(std::move(s));
  t.text_ = text_scores;
  t.confounder_ = Matrix(1, confounder_scores.dim(), confounder_scores.values());
  return t;
}

ScoreTable ScoreTable::additive(const Vector& text_scores, const Matrix& confounder_scores) {
  if (confounder_scores.rows() != text_scores.dim()) {
    throw DimensionMismatch("ScoreTable::additive: s_Z rows must match the class count");
  }
  Matrix s(text_scores.dim(), confounder_scores.cols());
  for (std::size_t k = 0; k < s.rows(); ++k)
    for (std::size_t z = 0; z < s.cols(); ++z) s.set(k, z, text_scores[k] + confounder_scores(k, z));
  ScoreTable t(std::move(s));
  t.text_ = text_scores;
  t.confounder_ = confounder_scores;
  return t;
}

Vector ScoreTable::column(std::size_t z) const {
  std::vector<double> col(scores_.rows());
  for (std::size_t k = 0; k < col.size(); ++k) col[k] = scores_(k, z);
  return Vector(std::move(col));
}

NwgmGapReport nwgm_gap(const ScoreTable& table, std::span<const double> priors, double temperature) {
  if (priors.size() != table.confounders()) throw DimensionMismatch("nwgm_gap: priors length vs confounders");
  (void)Distribution(std::vector<double>(priors.begin(), priors.end()));
  const std::size_t classes = table.classes();
  std::vector<SimplexWeights> per_z;
  per_z.reserve(priors.size());
  for (std::size_t z = 0; z < priors.size(); ++z) per_z.push_back(softmax(table.column(z), temperature));

  NwgmGapReport r;
  r.exact.assign(classes, 0.0);
  std::vector<double> mean_scores(classes, 0.0);
  for (std::size_t z = 0; z < priors.size(); ++z) {
    for (std::size_t k = 0; k < classes; ++k) {
      r.exact[k] += priors[z] * per_z[z][k];
      mean_scores[k] += priors[z] * table.scores()(k, z);
    }
  }
  r.approximation = softmax(mean_scores, temperature).values();
  for (std::size_t k = 0; k < classes; ++k) {
    const double g = std::abs(r.exact[k] - r.approximation[k]);
    r.max_gap = std::max(r.max_gap, g);
    r.mean_gap += g / static_cast<double>(classes);
  }
  for (std::size_t z = 0; z < priors.size(); ++z) {
    r.prior_weighted_gap += priors[z] * max_abs_diff(per_z[z].span(), r.approximation);
    for (std::size_t w = z + 1; w < priors.size(); ++w) {
      double tv = 0.0;
      for (std::size_t k = 0; k < classes; ++k) tv += 0.5 * std::abs(per_z[z][k] - per_z[w][k]);
      r.tv_spread = std::max(r.tv_spread, tv);
    }
  }
  r.within_tv_spread = r.max_gap <= r.tv_spread + 1e-15;
  return r;
}

std::string dictionary_to_json(const ConfounderDictionary& dict) {
  nlohmann::ordered_json doc;
  doc["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : dict.entries()) {
    nlohmann::ordered_json item;
    item["verb"] = e.key.verb;
    item["noun"] = e.key.noun;
    item["prior"] = e.prior;
    item["embedding"] = e.embedding.values();
    doc["entries"].push_back(item);
  }
  return doc.dump(2) + "\n";
}

ConfounderDictionary dictionary_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(std::string("dictionary JSON: ") + e.what());
  }
  if (!doc.contains("entries") || !doc["entries"].is_array()) throw InvalidInput("dictionary JSON: missing entries");
  std::vector<ConfounderEntry> entries;
  for (const auto& item : doc["entries"]) {
    try {
      entries.push_back({{item.at("verb").get<std::string>(), item.at("noun").get<std::string>()},
                         Vector(item.at("embedding").get<std::vector<double>>()),
                         item.at("prior").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw InvalidInput(std::string("dictionary JSON: ") + e.what());
    }
  }
  return ConfounderDictionary(std::move(entries));
}

std::vector<std::string> read_corpus(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(line);
  }
  return out;
}

}  // namespace ceres
