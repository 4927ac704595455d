#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "mcsim/error.hpp"

namespace mcsim {

enum class Criterion { Benefit, Cost };

using DecisionMatrix = std::vector<std::vector<double>>;  // alternatives x criteria

namespace detail {

inline void validate_madm(const DecisionMatrix& m, const std::vector<double>& weights,
                          const std::vector<Criterion>& kinds) {
  if (m.empty()) throw ValidationError("MADM: empty decision matrix");
  const std::size_t n_crit = kinds.size();
  if (n_crit == 0) throw ValidationError("MADM: no criteria");
  if (weights.size() != n_crit) throw ValidationError("MADM: weights/criteria size mismatch");
  double sum = 0;
  for (double w : weights) {
    if (!(w >= 0)) throw ValidationError("MADM: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("MADM: weights must sum to 1");
  for (const auto& row : m) {
    if (row.size() != n_crit) throw ValidationError("MADM: ragged matrix row");
    for (double x : row) {
      if (!(x > 0) || !std::isfinite(x)) {
        throw ValidationError("MADM: matrix entries must be positive finite");
      }
    }
  }
}

// Best-first indices; ties keep the lower alternative index.
inline std::vector<std::size_t> rank_descending(const std::vector<double>& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace detail

// Simple Additive Weighting: max-normalize benefit columns (x/max),
// min-normalize cost columns (min/x), then weighted sum.
inline std::vector<double> saw_scores(const DecisionMatrix& m,
                                      const std::vector<double>& weights,
                                      const std::vector<Criterion>& kinds) {
  detail::validate_madm(m, weights, kinds);
  const std::size_t n_crit = kinds.size();
  std::vector<double> scores(m.size(), 0.0);
  for (std::size_t j = 0; j < n_crit; ++j) {
    double best = m[0][j];
    for (const auto& row : m) {
      best = kinds[j] == Criterion::Benefit ? std::max(best, row[j]) : std::min(best, row[j]);
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double norm =
          kinds[j] == Criterion::Benefit ? m[i][j] / best : best / m[i][j];
      scores[i] += weights[j] * norm;
    }
  }
  return scores;
}

inline std::vector<std::size_t> saw_rank(const DecisionMatrix& m,
                                         const std::vector<double>& weights,
                                         const std::vector<Criterion>& kinds) {
  return detail::rank_descending(saw_scores(m, weights, kinds));
}

// TOPSIS: vector-normalize columns, weight, measure Euclidean distance to the
// ideal and anti-ideal points; closeness = d-/(d+ + d-), 0.5 when degenerate.
inline std::vector<double> topsis_closeness(const DecisionMatrix& m,
                                            const std::vector<double>& weights,
                                            const std::vector<Criterion>& kinds) {
  detail::validate_madm(m, weights, kinds);
  const std::size_t n_alt = m.size();
  const std::size_t n_crit = kinds.size();

  DecisionMatrix v(n_alt, std::vector<double>(n_crit, 0.0));
  for (std::size_t j = 0; j < n_crit; ++j) {
    double ss = 0;
    for (const auto& row : m) ss += row[j] * row[j];
    const double norm = std::sqrt(ss);
    for (std::size_t i = 0; i < n_alt; ++i) v[i][j] = weights[j] * m[i][j] / norm;
  }

  std::vector<double> ideal(n_crit), anti(n_crit);
  for (std::size_t j = 0; j < n_crit; ++j) {
    double lo = v[0][j], hi = v[0][j];
    for (std::size_t i = 1; i < n_alt; ++i) {
      lo = std::min(lo, v[i][j]);
      hi = std::max(hi, v[i][j]);
    }
    ideal[j] = kinds[j] == Criterion::Benefit ? hi : lo;
    anti[j] = kinds[j] == Criterion::Benefit ? lo : hi;
  }

  std::vector<double> closeness(n_alt);
  for (std::size_t i = 0; i < n_alt; ++i) {
    double dp = 0, dm = 0;
    for (std::size_t j = 0; j < n_crit; ++j) {
      dp += (v[i][j] - ideal[j]) * (v[i][j] - ideal[j]);
      dm += (v[i][j] - anti[j]) * (v[i][j] - anti[j]);
    }
    dp = std::sqrt(dp);
    dm = std::sqrt(dm);
    closeness[i] = dp + dm > 0 ? dm / (dp + dm) : 0.5;
  }
  return closeness;
}

inline std::vector<std::size_t> topsis_rank(const DecisionMatrix& m,
                                            const std::vector<double>& weights,
                                            const std::vector<Criterion>& kinds) {
  return detail::rank_descending(topsis_closeness(m, weights, kinds));
}

}  // namespace mcsim
