#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ceres_causal/numeric.hpp"
#include "ceres_causal/rng.hpp"

namespace ceres {

struct MemorySlot {
  std::int64_t time = 0;
  Vector embedding;
};

/// Fixed-capacity FIFO of recent frame embeddings.
///
/// Capacity 0 is the no-memory ablation: pushes are accepted and dropped, and
/// context() passes the current frame through.
class MemoryBank {
 public:
  static constexpr std::size_t kDefaultCapacity = 5;

  explicit MemoryBank(std::size_t capacity = kDefaultCapacity, double kappa = 1.0);

  /// Appends a frame, evicting the oldest slot once capacity is exceeded.
  void push(Vector embedding, std::int64_t time);

  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  [[nodiscard]] double kappa() const { return kappa_; }
  [[nodiscard]] std::size_t size() const { return slots_.size(); }
  [[nodiscard]] bool empty() const { return slots_.empty(); }
  [[nodiscard]] bool full() const { return slots_.size() == capacity_; }
  [[nodiscard]] const std::deque<MemorySlot>& slots() const { return slots_; }
  [[nodiscard]] std::vector<std::int64_t> times() const;
  [[nodiscard]] std::vector<Vector> embeddings() const;
  /// Most recent time pushed, including pushes dropped at capacity 0.
  [[nodiscard]] std::optional<std::int64_t> newest_time() const { return newest_; }

  /// clamp(<current, x_j> + offset_j, -kappa, kappa), oldest slot first.
  [[nodiscard]] std::vector<double> scores(const Vector& current, std::span<const double> offsets = {}) const;

 private:
  std::size_t capacity_;
  double kappa_;
  std::deque<MemorySlot> slots_;
  std::optional<std::int64_t> newest_;
};

struct MemoryContext {
  Vector value;
  SimplexWeights weights;
};

/// Softmax-weighted average of the stored frames. An empty bank returns
/// `current` with empty weights. `offsets` are optional per-slot score shifts
/// (e.g. temporal encodings); the clamp applies to the shifted score.
MemoryContext context(const MemoryBank& bank, const Vector& current, std::span<const double> offsets = {});

struct DeviationReport {
  std::vector<double> weights;
  double l1_deviation = 0.0;         // ||w - 1/W||_1
  double max_deviation = 0.0;        // max_j |w_j - 1/W|
  double coordinate_bound = 0.0;     // (e^{2 kappa} - 1) / W
  double l1_bound = 0.0;       // 2 (e^{2 kappa} - 1) / W
  bool coordinate_pass = false;
  bool ratio_pass = false;           // e^{-2 kappa}/W <= w_j <= e^{2 kappa}/W
  bool l1_pass = false;        // reported only
};

/// Throws InvalidState unless the bank is full.
DeviationReport weight_deviation(const MemoryBank& bank, const Vector& current);

std::string deviation_to_json(const DeviationReport& report);

/// Seeded frame source with an analytically known mean.
struct FrameGenerator {
  std::function<Vector(Rng&)> draw;
  Vector mean;

  static FrameGenerator point_mass(Vector value);
  /// mean + N(0, I).
  static FrameGenerator isotropic_gaussian(Vector mean);
};

struct ConvergenceRow {
  std::size_t window = 0;
  std::size_t seed_count = 0;
  double mean_err_unweighted = 0.0;  // mean ||Xbar - mu||
  double mean_err_weighted = 0.0;    // mean ||Xhat - mu||
  double mean_weighting_gap = 0.0;   // mean ||Xhat - Xbar||
  double mean_max_norm = 0.0;        // mean max_j ||x_j||
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double slope_unweighted = 0.0;
  double slope_weighted = 0.0;
  double kappa = 0.0;
  /// mean gap <= (e^{2 kappa} - 1) * mean max-norm at every W.
  bool envelope_pass = true;
  /// mean gap nonincreasing in W; reported only.
  bool gap_nonincreasing = true;
};

/// Least-squares slope of log(y) against log(x). Needs >= 2 points with y > 0;
/// returns 0 when every y is 0.
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Per (W, seed): W frames plus one current frame from Rng::stream(seed, W);
/// compares the plain and the bank-weighted means to the generator mean.
/// Seeds run on `jobs` threads.
ConvergenceTable convergence_experiment(const FrameGenerator& generator, std::span<const std::size_t> w_grid,
                                        std::span<const std::uint64_t> seeds, double kappa, std::size_t jobs = 1);

}  // namespace ceres
