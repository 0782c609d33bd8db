#include "ceres_causal/scm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "ceres_causal/error.hpp"

namespace ceres {

namespace {

constexpr std::array<std::string_view, kVarCount> kNames = {"Z", "U", "T", "X", "Mv", "Md", "M", "Y"};
constexpr std::string_view kCorruptionKey = "Mv_corrupt_given_XU";

std::size_t product(std::span<const std::size_t> xs) {
  return std::accumulate(xs.begin(), xs.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<std::size_t> cards_of(const ScmSpec& spec, std::span<const Var> vars) {
  std::vector<std::size_t> out;
  out.reserve(vars.size());
  for (Var v : vars) out.push_back(spec.cardinality(v));
  return out;
}

std::string parents_label(std::span<const Var> parents) {
  std::string s;
  for (Var p : parents) s += var_name(p);
  return s;
}

std::string table_key(const Cpt& cpt) {
  if (cpt.parents.empty()) return std::string(var_name(cpt.child));
  return std::string(var_name(cpt.child)) + "_given_" + parents_label(cpt.parents);
}

void check_rows(std::span<const double> probs, std::size_t child_card, double tol,
                const std::string& where, std::vector<Violation>& out) {
  if (child_card == 0) return;
  const std::size_t rows = probs.size() / child_card;
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = probs.subspan(r * child_card, child_card);
    const std::string at = where + "[" + std::to_string(r) + "]";
    bool bad_entry = false;
    for (double p : row) bad_entry |= !std::isfinite(p) || p < 0.0;
    if (bad_entry) {
      out.push_back({at, "negative or non-finite entry"});
      continue;
    }
    const double s = stable_sum(row);
    if (std::abs(s - 1.0) > tol) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "row sums to " << s;
      out.push_back({at, msg.str()});
    }
  }
}

void check_cpt(const ScmSpec& spec, const Cpt& cpt, Var expected_child,
               const std::vector<Var>& expected_parents, double tol, const std::string& where,
               std::vector<Violation>& out) {
  if (cpt.child != expected_child) {
    out.push_back({where, "table child is " + std::string(var_name(cpt.child))});
    return;
  }
  if (cpt.parents != expected_parents) {
    out.push_back({where, "structural: parents {" + parents_label(cpt.parents) + "} but expected {" +
                              parents_label(expected_parents) + "}"});
  }
  const std::size_t expected_size =
      product(cards_of(spec, cpt.parents)) * spec.cardinality(cpt.child);
  if (cpt.probs.size() != expected_size) {
    out.push_back({where, "expected " + std::to_string(expected_size) + " entries, got " +
                              std::to_string(cpt.probs.size())});
    return;
  }
  check_rows(cpt.probs, spec.cardinality(cpt.child), tol, where, out);
}

std::vector<double> random_rows(Rng& rng, std::size_t rows, std::size_t card) {
  std::vector<double> out(rows * card);
  for (std::size_t r = 0; r < rows; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < card; ++c) {
      out[r * card + c] = rng.exponential() + 1e-3;
      total += out[r * card + c];
    }
    for (std::size_t c = 0; c < card; ++c) out[r * card + c] /= total;
  }
  return out;
}

/// Depth-first enumeration of the factored joint over a fixed variable order.
class Enumerator {
 public:
  Enumerator(const ScmSpec& spec, std::span<const Var> keep, const Assignment& evidence)
      : spec_(spec), evidence_(evidence) {
    std::array<bool, kVarCount> needed{};
    std::vector<Var> frontier(keep.begin(), keep.end());
    for (Var v : kAllVars)
      if (evidence.has(v)) frontier.push_back(v);
    while (!frontier.empty()) {
      const Var v = frontier.back();
      frontier.pop_back();
      if (needed[index_of(v)]) continue;
      needed[index_of(v)] = true;
      for (Var p : spec.table(v).parents) frontier.push_back(p);
    }
    // Topological order restricted to the ancestral closure.
    std::array<bool, kVarCount> placed{};
    while (order_.size() < static_cast<std::size_t>(std::count(needed.begin(), needed.end(), true))) {
      bool progressed = false;
      for (Var v : kAllVars) {
        if (!needed[index_of(v)] || placed[index_of(v)]) continue;
        const auto& ps = spec.table(v).parents;
        if (std::all_of(ps.begin(), ps.end(), [&](Var p) { return placed[index_of(p)]; })) {
          order_.push_back(v);
          placed[index_of(v)] = true;
          progressed = true;
        }
      }
      if (!progressed) throw SpecError("enumeration: cyclic parent structure");
    }
    for (Var v : order_) {
      Step step;
      step.var = v;
      step.card = spec.cardinality(v);
      step.probs = spec.table(v).probs.data();
      std::size_t stride = step.card;
      const auto& ps = spec.table(v).parents;
      step.parents.resize(ps.size());
      step.strides.resize(ps.size());
      for (std::size_t k = ps.size(); k-- > 0;) {
        step.parents[k] = index_of(ps[k]);
        step.strides[k] = stride;
        stride *= spec.cardinality(ps[k]);
      }
      step.fixed = evidence.has(v) ? static_cast<long>(evidence.get(v)) : -1;
      steps_.push_back(std::move(step));
    }
    keep_.assign(keep.begin(), keep.end());
    keep_strides_.resize(keep_.size());
    std::size_t stride = 1;
    for (std::size_t k = keep_.size(); k-- > 0;) {
      keep_strides_[k] = stride;
      stride *= spec.cardinality(keep_[k]);
    }
    result_.assign(stride, 0.0);
  }

  std::vector<double> run() {
    state_.fill(0);
    visit(0, 1.0);
    return std::move(result_);
  }

 private:
  struct Step {
    Var var;
    std::size_t card;
    const double* probs;
    std::vector<std::size_t> parents;
    std::vector<std::size_t> strides;
    long fixed;
  };

  void visit(std::size_t depth, double weight) {
    if (depth == steps_.size()) {
      std::size_t idx = 0;
      for (std::size_t k = 0; k < keep_.size(); ++k) idx += state_[index_of(keep_[k])] * keep_strides_[k];
      result_[idx] += weight;
      return;
    }
    const Step& s = steps_[depth];
    std::size_t offset = 0;
    for (std::size_t k = 0; k < s.parents.size(); ++k) offset += state_[s.parents[k]] * s.strides[k];
    const std::size_t slot = index_of(s.var);
    if (s.fixed >= 0) {
      const double p = s.probs[offset + static_cast<std::size_t>(s.fixed)];
      if (p == 0.0) return;
      state_[slot] = static_cast<std::size_t>(s.fixed);
      visit(depth + 1, weight * p);
      return;
    }
    for (std::size_t c = 0; c < s.card; ++c) {
      const double p = s.probs[offset + c];
      if (p == 0.0) continue;
      state_[slot] = c;
      visit(depth + 1, weight * p);
    }
  }

  const ScmSpec& spec_;
  const Assignment& evidence_;
  std::vector<Var> order_;
  std::vector<Step> steps_;
  std::vector<Var> keep_;
  std::vector<std::size_t> keep_strides_;
  std::vector<double> result_;
  std::array<std::size_t, kVarCount> state_{};
};

void check_assignment(const ScmSpec& spec, const Assignment& a, const char* what) {
  for (Var v : kAllVars) {
    if (a.has(v) && a.get(v) >= spec.cardinality(v)) {
      throw InvalidInput(std::string(what) + ": state " + std::to_string(a.get(v)) +
                         " out of range for " + std::string(var_name(v)));
    }
  }
}

Distribution normalized(std::vector<double> probs) {
  const double total = stable_sum(probs);
  for (double& p : probs) p /= total;
  return Distribution(std::move(probs));
}

}  // namespace

std::string_view var_name(Var v) { return kNames[index_of(v)]; }

Var parse_var(std::string_view name) {
  for (Var v : kAllVars)
    if (kNames[index_of(v)] == name) return v;
  throw InvalidInput("unknown variable '" + std::string(name) + "'");
}

Distribution::Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw InvalidInput("Distribution: empty support");
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) throw InvalidInput("Distribution: negative or non-finite mass");
  }
  if (std::abs(stable_sum(probs_) - 1.0) > kSumTolerance) {
    throw InvalidInput("Distribution: mass does not sum to one");
  }
}

Distribution Distribution::point_mass(std::size_t support, std::size_t state) {
  std::vector<double> p(support, 0.0);
  p.at(state) = 1.0;
  return Distribution(std::move(p));
}

std::size_t ConditionalTable::row_count() const { return product(parent_cards); }

std::size_t ConditionalTable::row_index(std::span<const std::size_t> parent_states) const {
  if (parent_states.size() != parent_cards.size()) {
    throw DimensionMismatch("ConditionalTable: wrong number of parent states");
  }
  std::size_t idx = 0;
  for (std::size_t k = 0; k < parent_cards.size(); ++k) {
    if (parent_states[k] >= parent_cards[k]) throw InvalidInput("ConditionalTable: parent state out of range");
    idx = idx * parent_cards[k] + parent_states[k];
  }
  return idx;
}

std::vector<Var> required_parents(Var v, bool direct_x_to_y) {
  switch (v) {
    case Var::Z:
    case Var::U:
      return {};
    case Var::T:
      return {Var::Z};
    case Var::X:
      return {Var::U};
    case Var::Mv:
      return {Var::X, Var::U};
    case Var::Md:
    case Var::M:
      return {Var::X};
    case Var::Y:
      if (direct_x_to_y) return {Var::T, Var::M, Var::Z, Var::U, Var::X};
      return {Var::T, Var::M, Var::Z, Var::U};
  }
  return {};
}

ScmSpec with_corruption(ScmSpec spec, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidInput("with_corruption: rho outside [0, 1]");
  if (!spec.mv_corruption) throw SpecError("with_corruption: spec has no Mv corruption table");
  const std::size_t cm = spec.cardinality(Var::M);
  if (spec.cardinality(Var::Mv) != cm) throw SpecError("with_corruption: card(Mv) must equal card(M)");
  const std::size_t cx = spec.cardinality(Var::X);
  const std::size_t cu = spec.cardinality(Var::U);
  const auto& base = spec.table(Var::M).probs;
  const auto& corrupt = spec.mv_corruption->probs;
  if (base.size() != cx * cm || corrupt.size() != cx * cu * cm) {
    throw SpecError("with_corruption: table sizes do not match cardinalities");
  }
  std::vector<double> mv(cx * cu * cm);
  for (std::size_t x = 0; x < cx; ++x)
    for (std::size_t u = 0; u < cu; ++u)
      for (std::size_t m = 0; m < cm; ++m) {
        const std::size_t i = (x * cu + u) * cm + m;
        mv[i] = (1.0 - rho) * base[x * cm + m] + rho * corrupt[i];
      }
  spec.table(Var::Mv) = Cpt{Var::Mv, {Var::X, Var::U}, std::move(mv)};
  spec.corruption_rho = rho;
  return spec;
}

std::vector<Violation> validate_spec(const ScmSpec& spec, double row_tolerance) {
  std::vector<Violation> out;
  for (Var v : kAllVars) {
    if (spec.cardinality(v) == 0) out.push_back({"cards." + std::string(var_name(v)), "must be positive"});
  }
  if (!out.empty()) return out;
  for (Var v : kAllVars) {
    const Cpt& cpt = spec.table(v);
    check_cpt(spec, cpt, v, required_parents(v, spec.direct_x_to_y), row_tolerance,
              "tables." + table_key(cpt), out);
  }
  if (spec.mv_corruption) {
    check_cpt(spec, *spec.mv_corruption, Var::Mv, {Var::X, Var::U}, row_tolerance,
              std::string("tables.") + std::string(kCorruptionKey), out);
  }
  if (spec.embedding_dim == 0) out.push_back({"embedding_dim", "must be positive"});
  if (!(spec.corruption_rho >= 0.0 && spec.corruption_rho <= 1.0)) {
    out.push_back({"corruption_rho", "must lie in [0, 1]"});
  }
  return out;
}

void require_valid(const ScmSpec& spec) {
  const auto violations = validate_spec(spec);
  if (violations.empty()) return;
  std::string msg = "invalid ScmSpec:";
  for (const auto& v : violations) msg += " [" + v.where + ": " + v.message + "]";
  throw SpecError(msg);
}

Assignment::Assignment(std::initializer_list<std::pair<Var, std::size_t>> items) : Assignment() {
  for (const auto& [v, s] : items) set(v, s);
}

Assignment& Assignment::set(Var v, std::size_t state) {
  values_[index_of(v)] = static_cast<long>(state);
  return *this;
}

bool Assignment::empty() const {
  return std::all_of(values_.begin(), values_.end(), [](long x) { return x < 0; });
}

std::size_t ScmSample::get(Var v) const {
  switch (v) {
    case Var::Z: return z;
    case Var::U: return u;
    case Var::T: return t;
    case Var::X: return x;
    case Var::Mv: return m_v;
    case Var::Md: return m_d;
    case Var::M: return m;
    case Var::Y: return y;
  }
  return 0;
}

void ScmSample::set(Var v, std::size_t s) {
  switch (v) {
    case Var::Z: z = s; break;
    case Var::U: u = s; break;
    case Var::T: t = s; break;
    case Var::X: x = s; break;
    case Var::Mv: m_v = s; break;
    case Var::Md: m_d = s; break;
    case Var::M: m = s; break;
    case Var::Y: y = s; break;
  }
}

std::vector<ScmSample> sample(const ScmSpec& spec, Rng& rng, std::size_t n) {
  require_valid(spec);
  std::vector<ScmSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ScmSample s;
    for (Var v : kAllVars) {
      const Cpt& cpt = spec.table(v);
      std::size_t row = 0;
      for (Var p : cpt.parents) row = row * spec.cardinality(p) + s.get(p);
      const std::size_t c = spec.cardinality(v);
      s.set(v, rng.categorical(std::span<const double>(cpt.probs).subspan(row * c, c)));
    }
    out.push_back(s);
  }
  return out;
}

std::vector<ScmSample> sample(const ScmSpec& spec, std::uint64_t seed, std::size_t n) {
  Rng rng = Rng::stream(seed, 0);
  return sample(spec, rng, n);
}

std::vector<double> joint_marginal(const ScmSpec& spec, std::span<const Var> keep,
                                   const Assignment& evidence) {
  check_assignment(spec, evidence, "joint_marginal evidence");
  return Enumerator(spec, keep, evidence).run();
}

Distribution observational(const ScmSpec& spec, Var target, const Assignment& condition) {
  require_valid(spec);
  const std::array<Var, 1> keep = {target};
  std::vector<double> joint = joint_marginal(spec, keep, condition);
  const double total = stable_sum(joint);
  if (!(total > 0.0)) {
    throw ConditionUnsupported("observational: conditioning event has probability zero");
  }
  return normalized(std::move(joint));
}

ConditionalTable conditional_table(const ScmSpec& spec, Var target, std::span<const Var> parents) {
  require_valid(spec);
  std::vector<Var> keep(parents.begin(), parents.end());
  keep.push_back(target);
  std::vector<double> joint = joint_marginal(spec, keep);
  ConditionalTable table;
  table.parent_cards = cards_of(spec, parents);
  table.child_card = spec.cardinality(target);
  const std::size_t rows = table.row_count();
  for (std::size_t r = 0; r < rows; ++r) {
    std::span<double> row(joint.data() + r * table.child_card, table.child_card);
    const double total = stable_sum(row);
    for (double& p : row) p = total > 0.0 ? p / total : 1.0 / static_cast<double>(table.child_card);
  }
  table.probs = std::move(joint);
  return table;
}

ScmSpec mutilate(const ScmSpec& spec, const Assignment& do_assignment) {
  check_assignment(spec, do_assignment, "mutilate");
  ScmSpec out = spec;
  for (Var v : kAllVars) {
    if (!do_assignment.has(v)) continue;
    std::vector<double> point(spec.cardinality(v), 0.0);
    point[do_assignment.get(v)] = 1.0;
    out.table(v) = Cpt{v, {}, std::move(point)};
  }
  return out;
}

Distribution intervene(const ScmSpec& spec, const Assignment& do_assignment, Var target) {
  require_valid(spec);
  if (do_assignment.empty()) throw InvalidInput("intervene: empty do-assignment");
  const ScmSpec mutilated = mutilate(spec, do_assignment);
  const std::array<Var, 1> keep = {target};
  return normalized(joint_marginal(mutilated, keep));
}

ScmEmbeddings make_embeddings(const ScmSpec& spec) {
  auto draw = [&](Var v) {
    Rng rng = Rng::stream(spec.embedding_seed, index_of(v));
    std::vector<Vector> out;
    for (std::size_t s = 0; s < spec.cardinality(v); ++s) {
      std::vector<double> e(spec.embedding_dim);
      double nrm = 0.0;
      for (double& x : e) {
        x = rng.normal();
        nrm += x * x;
      }
      nrm = std::sqrt(nrm);
      for (double& x : e) x /= nrm;
      out.emplace_back(std::move(e));
    }
    return out;
  };
  return ScmEmbeddings{draw(Var::T), draw(Var::X), draw(Var::Mv), draw(Var::Md)};
}

ScmSpec random_spec(Rng& rng, const RandomSpecOptions& options) {
  if (options.min_card == 0 || options.min_card > options.max_card) {
    throw InvalidInput("random_spec: invalid cardinality range");
  }
  ScmSpec spec;
  auto draw_card = [&] {
    return options.min_card + rng.uniform_int(options.max_card - options.min_card + 1);
  };
  for (Var v : {Var::Z, Var::U, Var::T, Var::X, Var::M, Var::Y}) spec.card[index_of(v)] = draw_card();
  if (options.no_confounders) {
    spec.card[index_of(Var::Z)] = 1;
    spec.card[index_of(Var::U)] = 1;
  }
  spec.card[index_of(Var::Mv)] = spec.cardinality(Var::M);
  spec.card[index_of(Var::Md)] = spec.cardinality(Var::M);
  spec.direct_x_to_y = options.direct_x_to_y;
  spec.embedding_dim = 4;
  spec.embedding_seed = rng.next_u64();

  for (Var v : kAllVars) {
    if (v == Var::Mv || v == Var::Md) continue;
    auto parents = required_parents(v, spec.direct_x_to_y);
    const std::size_t rows = product(cards_of(spec, parents));
    spec.table(v) = Cpt{v, parents, random_rows(rng, rows, spec.cardinality(v))};
  }
  spec.table(Var::Md) = Cpt{Var::Md, {Var::X}, spec.table(Var::M).probs};
  const std::size_t corrupt_rows = spec.cardinality(Var::X) * spec.cardinality(Var::U);
  spec.mv_corruption = Cpt{Var::Mv, {Var::X, Var::U}, random_rows(rng, corrupt_rows, spec.cardinality(Var::M))};
  return with_corruption(std::move(spec), options.corruption_rho);
}

// JSON

namespace {

using json = nlohmann::ordered_json;

json nest(std::span<const double> flat, std::span<const std::size_t> dims) {
  if (dims.size() == 1) return json(std::vector<double>(flat.begin(), flat.end()));
  const std::size_t block = flat.size() / dims[0];
  json arr = json::array();
  for (std::size_t i = 0; i < dims[0]; ++i) arr.push_back(nest(flat.subspan(i * block, block), dims.subspan(1)));
  return arr;
}

void flatten(const json& node, std::span<const std::size_t> dims, const std::string& path,
             std::vector<double>& out) {
  if (!node.is_array() || node.size() != dims[0]) {
    throw SpecError(path + ": expected an array of length " + std::to_string(dims[0]));
  }
  if (dims.size() == 1) {
    double total = 0.0;
    for (std::size_t i = 0; i < node.size(); ++i) {
      if (!node[i].is_number()) throw SpecError(path + "[" + std::to_string(i) + "]: expected a number");
      const double p = node[i].get<double>();
      if (!std::isfinite(p) || p < 0.0) {
        throw SpecError(path + "[" + std::to_string(i) + "]: negative or non-finite probability");
      }
      out.push_back(p);
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      std::ostringstream msg;
      msg.precision(17);
      msg << path << ": probability row sums to " << total;
      throw SpecError(msg.str());
    }
    return;
  }
  for (std::size_t i = 0; i < node.size(); ++i) {
    flatten(node[i], dims.subspan(1), path + "[" + std::to_string(i) + "]", out);
  }
}

std::vector<Var> parse_parents(std::string_view label, const std::string& key) {
  std::vector<Var> out;
  std::size_t i = 0;
  while (i < label.size()) {
    if (label.substr(i, 2) == "Mv" || label.substr(i, 2) == "Md") {
      out.push_back(parse_var(label.substr(i, 2)));
      i += 2;
      continue;
    }
    try {
      out.push_back(parse_var(label.substr(i, 1)));
    } catch (const InvalidInput&) {
      throw SpecError("tables." + key + ": unknown parent variable in key");
    }
    ++i;
  }
  return out;
}

Cpt parse_table(const ScmSpec& spec, Var child, std::vector<Var> parents, const json& node,
                const std::string& path) {
  std::vector<std::size_t> dims = cards_of(spec, parents);
  dims.push_back(spec.cardinality(child));
  Cpt cpt{child, std::move(parents), {}};
  cpt.probs.reserve(product(dims));
  flatten(node, dims, path, cpt.probs);
  return cpt;
}

}  // namespace

std::string spec_to_json(const ScmSpec& spec) {
  json doc;
  json cards = json::object();
  for (Var v : kAllVars) cards[std::string(var_name(v))] = spec.cardinality(v);
  doc["cards"] = cards;
  json priors = json::object();
  for (Var v : {Var::Z, Var::U}) {
    priors[std::string(var_name(v))] = spec.table(v).probs;
  }
  doc["priors"] = priors;
  json tables = json::object();
  auto emit = [&](const Cpt& cpt, const std::string& key) {
    std::vector<std::size_t> dims = cards_of(spec, cpt.parents);
    dims.push_back(spec.cardinality(cpt.child));
    tables[key] = nest(cpt.probs, dims);
  };
  for (Var v : {Var::T, Var::X, Var::Mv, Var::Md, Var::M, Var::Y}) emit(spec.table(v), table_key(spec.table(v)));
  if (spec.mv_corruption) emit(*spec.mv_corruption, std::string(kCorruptionKey));
  doc["tables"] = tables;
  doc["embedding_dim"] = spec.embedding_dim;
  doc["embedding_seed"] = spec.embedding_seed;
  doc["corruption_rho"] = spec.corruption_rho;
  doc["direct_x_to_y"] = spec.direct_x_to_y;
  return doc.dump(2) + "\n";
}

ScmSpec spec_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("spec JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SpecError("spec JSON: top level must be an object");
  for (const char* key : {"cards", "priors", "tables"}) {
    if (!doc.contains(key) || !doc[key].is_object()) throw SpecError(std::string(key) + ": missing object");
  }
  ScmSpec spec;
  for (Var v : kAllVars) {
    const std::string name(var_name(v));
    const auto& c = doc["cards"];
    if (!c.contains(name) || !c[name].is_number_integer() || c[name].get<long long>() <= 0) {
      throw SpecError("cards." + name + ": expected a positive integer");
    }
    spec.card[index_of(v)] = c[name].get<std::size_t>();
  }
  spec.direct_x_to_y = doc.value("direct_x_to_y", false);
  spec.embedding_dim = doc.value("embedding_dim", std::size_t{4});
  spec.embedding_seed = doc.value("embedding_seed", std::uint64_t{0});
  spec.corruption_rho = doc.value("corruption_rho", 0.0);

  for (Var v : {Var::Z, Var::U}) {
    const std::string name(var_name(v));
    if (!doc["priors"].contains(name)) throw SpecError("priors." + name + ": missing");
    spec.table(v) = parse_table(spec, v, {}, doc["priors"][name], "priors." + name);
  }
  std::array<bool, kVarCount> seen{};
  seen[index_of(Var::Z)] = seen[index_of(Var::U)] = true;
  for (const auto& [key, node] : doc["tables"].items()) {
    const std::string path = "tables." + key;
    if (key == kCorruptionKey) {
      spec.mv_corruption = parse_table(spec, Var::Mv, {Var::X, Var::U}, node, path);
      continue;
    }
    const auto sep = key.find("_given_");
    if (sep == std::string::npos) throw SpecError(path + ": key must read <child>_given_<parents>");
    Var child;
    try {
      child = parse_var(std::string_view(key).substr(0, sep));
    } catch (const InvalidInput&) {
      throw SpecError(path + ": unknown child variable");
    }
    if (seen[index_of(child)]) throw SpecError(path + ": duplicate table for " + std::string(var_name(child)));
    seen[index_of(child)] = true;
    spec.table(child) = parse_table(spec, child, parse_parents(std::string_view(key).substr(sep + 7), key), node, path);
  }
  for (Var v : kAllVars) {
    if (!seen[index_of(v)]) throw SpecError("tables: missing table for " + std::string(var_name(v)));
  }
  return spec;
}

ScmSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open spec file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return spec_from_json(buf.str());
}

}  // namespace ceres
