#include "ceres_causal/membank.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "ceres_causal/error.hpp"
#include "ceres_causal/parallel.hpp"

namespace ceres {

MemoryBank::MemoryBank(std::size_t capacity, double kappa) : capacity_(capacity), kappa_(kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw InvalidInput("MemoryBank: kappa must be positive and finite");
}

void MemoryBank::push(Vector embedding, std::int64_t time) {
  if (newest_ && time <= *newest_) {
    throw TimeOrderError("MemoryBank::push: time " + std::to_string(time) + " not after " + std::to_string(*newest_));
  }
  if (!slots_.empty() && embedding.dim() != slots_.front().embedding.dim()) {
    throw DimensionMismatch("MemoryBank::push: embedding dim differs from stored slots");
  }
  newest_ = time;
  if (capacity_ == 0) return;
  slots_.push_back({time, std::move(embedding)});
  if (slots_.size() > capacity_) slots_.pop_front();
}

std::vector<std::int64_t> MemoryBank::times() const {
  std::vector<std::int64_t> out;
  out.reserve(slots_.size());
  for (const auto& s : slots_) out.push_back(s.time);
  return out;
}

std::vector<Vector> MemoryBank::embeddings() const {
  std::vector<Vector> out;
  out.reserve(slots_.size());
  for (const auto& s : slots_) out.push_back(s.embedding);
  return out;
}

std::vector<double> MemoryBank::scores(const Vector& current, std::span<const double> offsets) const {
  if (!offsets.empty() && offsets.size() != slots_.size()) {
    throw DimensionMismatch("MemoryBank::scores: one offset per slot required");
  }
  std::vector<double> out;
  out.reserve(slots_.size());
  for (std::size_t j = 0; j < slots_.size(); ++j) {
    if (slots_[j].embedding.dim() != current.dim()) throw DimensionMismatch("MemoryBank::scores: current dim");
    double s = dot(current, slots_[j].embedding);
    if (!offsets.empty()) s += offsets[j];
    out.push_back(std::clamp(s, -kappa_, kappa_));
  }
  return out;
}

MemoryContext context(const MemoryBank& bank, const Vector& current, std::span<const double> offsets) {
  if (bank.empty()) return {current, SimplexWeights{}};
  const auto sims = bank.scores(current, offsets);
  SimplexWeights w = softmax(sims);
  const auto frames = bank.embeddings();
  return {convex_combine(w, frames), std::move(w)};
}

DeviationReport weight_deviation(const MemoryBank& bank, const Vector& current) {
  if (bank.capacity() == 0 || !bank.full()) {
    throw InvalidState("weight_deviation: bank holds " + std::to_string(bank.size()) + " of " +
                       std::to_string(bank.capacity()) + " slots");
  }
  const auto w = softmax(bank.scores(current));
  const double n = static_cast<double>(bank.capacity());
  const double uniform = 1.0 / n;
  const double spread = std::expm1(2.0 * bank.kappa());

  DeviationReport r;
  r.weights = w.values();
  r.coordinate_bound = spread / n;
  r.l1_bound = 2.0 * spread / n;
  const double lo = std::exp(-2.0 * bank.kappa()) / n;
  const double hi = std::exp(2.0 * bank.kappa()) / n;
  r.ratio_pass = true;
  for (double x : r.weights) {
    const double d = std::abs(x - uniform);
    r.l1_deviation += d;
    r.max_deviation = std::max(r.max_deviation, d);
    // One ulp-scale allowance for the softmax normalization.
    if (x < lo * (1.0 - 1e-12) || x > hi * (1.0 + 1e-12)) r.ratio_pass = false;
  }
  r.coordinate_pass = r.max_deviation <= r.coordinate_bound * (1.0 + 1e-12) + 1e-15;
  r.l1_pass = r.l1_deviation <= r.l1_bound;
  return r;
}

std::string deviation_to_json(const DeviationReport& r) {
  nlohmann::ordered_json doc;
  doc["weights"] = r.weights;
  doc["l1_deviation"] = r.l1_deviation;
  doc["max_deviation"] = r.max_deviation;
  doc["coordinate_bound"] = r.coordinate_bound;
  doc["l1_bound"] = r.l1_bound;
  doc["coordinate_pass"] = r.coordinate_pass;
  doc["ratio_pass"] = r.ratio_pass;
  doc["l1_pass"] = r.l1_pass;
  return doc.dump(2) + "\n";
}

FrameGenerator FrameGenerator::point_mass(Vector value) {
  FrameGenerator g;
  g.mean = value;
  g.draw = [value = std::move(value)](Rng&) { return value; };
  return g;
}

FrameGenerator FrameGenerator::isotropic_gaussian(Vector mean) {
  FrameGenerator g;
  g.mean = mean;
  g.draw = [mean = std::move(mean)](Rng& rng) {
    std::vector<double> x(mean.dim());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = mean[i] + rng.normal();
    return Vector(std::move(x));
  };
  return g;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("loglog_slope: x and y lengths differ");
  if (x.size() < 2) throw InvalidInput("loglog_slope: need at least two points");
  if (std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; })) return 0.0;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidInput("loglog_slope: values must be positive");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double n = static_cast<double>(lx.size());
  const double mx = stable_sum(lx) / n;
  const double my = stable_sum(ly) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) throw InvalidInput("loglog_slope: x values must not all be equal");
  return sxy / sxx;
}

ConvergenceTable convergence_experiment(const FrameGenerator& generator, std::span<const std::size_t> w_grid,
                                        std::span<const std::uint64_t> seeds, double kappa, std::size_t jobs) {
  if (w_grid.size() < 2) throw InvalidInput("convergence_experiment: need at least two window sizes");
  if (seeds.empty()) throw InvalidInput("convergence_experiment: no seeds");
  for (std::size_t i = 0; i < w_grid.size(); ++i) {
    if (w_grid[i] == 0) throw InvalidInput("convergence_experiment: window sizes must be positive");
    if (i > 0 && w_grid[i] <= w_grid[i - 1]) throw InvalidInput("convergence_experiment: W grid must ascend");
  }

  struct Trial {
    double err_unweighted, err_weighted, gap, max_norm;
  };
  const std::size_t cells = w_grid.size() * seeds.size();
  std::vector<Trial> trials(cells);
  parallel_for(cells, jobs, [&](std::size_t idx) {
    const std::size_t wi = idx / seeds.size();
    const std::size_t si = idx % seeds.size();
    const std::size_t window = w_grid[wi];
    Rng rng = Rng::stream(seeds[si], window);
    MemoryBank bank(window, kappa);
    Vector sum(generator.mean.dim());
    double max_norm = 0.0;
    for (std::size_t t = 0; t < window; ++t) {
      Vector x = generator.draw(rng);
      sum += x;
      max_norm = std::max(max_norm, norm2(x));
      bank.push(std::move(x), static_cast<std::int64_t>(t));
    }
    const Vector current = generator.draw(rng);
    const Vector xbar = (1.0 / static_cast<double>(window)) * sum;
    const Vector xhat = context(bank, current).value;
    trials[idx] = {norm2(xbar - generator.mean), norm2(xhat - generator.mean), norm2(xhat - xbar), max_norm};
  });

  ConvergenceTable table;
  table.kappa = kappa;
  const double spread = std::expm1(2.0 * kappa);
  const double count = static_cast<double>(seeds.size());
  std::vector<double> ws, eu, ew;
  for (std::size_t wi = 0; wi < w_grid.size(); ++wi) {
    ConvergenceRow row;
    row.window = w_grid[wi];
    row.seed_count = seeds.size();
    std::vector<double> a, b, c, d;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const Trial& t = trials[wi * seeds.size() + si];
      a.push_back(t.err_unweighted);
      b.push_back(t.err_weighted);
      c.push_back(t.gap);
      d.push_back(t.max_norm);
    }
    row.mean_err_unweighted = stable_sum(a) / count;
    row.mean_err_weighted = stable_sum(b) / count;
    row.mean_weighting_gap = stable_sum(c) / count;
    row.mean_max_norm = stable_sum(d) / count;
    if (row.mean_weighting_gap > spread * row.mean_max_norm * (1.0 + 1e-12) + 1e-15) table.envelope_pass = false;
    if (!table.rows.empty() && row.mean_weighting_gap > table.rows.back().mean_weighting_gap + 1e-9) {
      table.gap_nonincreasing = false;
    }
    ws.push_back(static_cast<double>(row.window));
    eu.push_back(row.mean_err_unweighted);
    ew.push_back(row.mean_err_weighted);
    table.rows.push_back(row);
  }
  // Errors at rounding level (point-mass frames) have no measurable slope.
  auto slope = [&ws](const std::vector<double>& e) {
    return *std::max_element(e.begin(), e.end()) <= 1e-12 ? 0.0 : loglog_slope(ws, e);
  };
  table.slope_unweighted = slope(eu);
  table.slope_weighted = slope(ew);
  return table;
}

}  // namespace ceres
