// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

// Reference computations used only by tests. None of these call into the
// library code they check; they recompute from definitions.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "lapeig/attention_stack.hpp"

namespace oracle {

/// Dense T x T copy of one packed head.
inline Eigen::MatrixXd dense_head(const lapeig::HeadView& head) {
  const auto T = static_cast<Eigen::Index>(head.num_tokens());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(T, T);
  for (Eigen::Index i = 0; i < T; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) A(i, j) = head(i, j);
  }
  return A;
}

/// L = D - A with d_ii = (column i sum of A) / (T - i).
inline Eigen::MatrixXd dense_laplacian(const Eigen::MatrixXd& A) {
  const auto T = A.rows();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(T, T);
  for (Eigen::Index i = 0; i < T; ++i) D(i, i) = A.col(i).sum() / static_cast<double>(T - i);
  return D - A;
}

/// Sorted real parts of the eigenvalues of a general dense matrix (no use of triangularity).
inline std::vector<double> general_eigenvalues(const Eigen::MatrixXd& M) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(M, /*computeEigenvectors=*/false);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < M.rows(); ++i) out.push_back(solver.eigenvalues()(i).real());
  std::sort(out.begin(), out.end());
  return out;
}

/// Pairwise AUROC: P(score_pos > score_neg) + 0.5 P(tie).
inline double pairwise_auroc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      if (s[i] > s[j]) wins += 1.0;
      if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// U statistic of x against y by pair counting.
inline double pairwise_u(const std::vector<double>& x, const std::vector<double>& y) {
  double u = 0.0;
  for (double a : x) {
    for (double b : y) u += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  }
  return u;
}

/// Exact two-sided Mann-Whitney p for tie-free samples: enumerates every
/// assignment of n1 of the n1 + n2 ranks to x.
inline double exact_mann_whitney_p(std::size_t n1, std::size_t n2, double u_observed) {
  const std::size_t n = n1 + n2;
  std::vector<int> pick(n, 0);
  std::fill(pick.end() - static_cast<std::ptrdiff_t>(n1), pick.end(), 1);
  const double mean = static_cast<double>(n1 * n2) / 2.0;
  const double dev = std::abs(u_observed - mean);
  double extreme = 0.0;
  double total = 0.0;
  do {
    double rank_sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) rank_sum += pick[r] ? static_cast<double>(r + 1) : 0.0;
    const double u = rank_sum - static_cast<double>(n1 * (n1 + 1)) / 2.0;
    total += 1.0;
    if (std::abs(u - mean) >= dev - 1e-9) extreme += 1.0;
  } while (std::next_permutation(pick.begin(), pick.end()));
  return extreme / total;
}

/// Cohen's kappa from a square confusion table (rows rater a, cols rater b).
inline double kappa_from_table(const std::vector<std::vector<double>>& table) {
  double n = 0.0;
  double agree = 0.0;
  const std::size_t k = table.size();
  std::vector<double> row(k, 0.0), col(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      n += table[i][j];
      row[i] += table[i][j];
      col[j] += table[i][j];
      if (i == j) agree += table[i][j];
    }
  }
  double pe = 0.0;
  for (std::size_t i = 0; i < k; ++i) pe += (row[i] / n) * (col[i] / n);
  return (agree / n - pe) / (1.0 - pe);
}

/// Row-stochastic causal head drawn with std::mt19937_64, independent of the library generator.
inline lapeig::AttentionStack random_stack(std::uint64_t seed, std::uint32_t L, std::uint32_t H,
                                           std::uint32_t T) {
  std::mt19937_64 gen(seed);
  std::exponential_distribution<double> expo(1.0);
  lapeig::AttentionStack s("oracle", L, H, T);
  for (std::uint32_t l = 0; l < L; ++l) {
    for (std::uint32_t h = 0; h < H; ++h) {
      auto head = s.mutable_head(l, h);
      for (std::uint32_t i = 0; i < T; ++i) {
        std::vector<double> row(i + 1);
        for (auto& v : row) v = expo(gen);
        const double sum = std::accumulate(row.begin(), row.end(), 0.0);
        for (std::uint32_t j = 0; j <= i; ++j) {
          head[lapeig::packed_index(i, j)] = static_cast<float>(row[j] / sum);
        }
      }
    }
  }
  return s;
}

/// Head whose every row puts all mass on the diagonal.
inline lapeig::AttentionStack identity_stack(std::uint32_t L, std::uint32_t H, std::uint32_t T) {
  lapeig::AttentionStack s("identity", L, H, T);
  for (std::uint32_t l = 0; l < L; ++l) {
    for (std::uint32_t h = 0; h < H; ++h) {
      auto head = s.mutable_head(l, h);
      for (std::uint32_t i = 0; i < T; ++i) head[lapeig::packed_index(i, i)] = 1.0f;
    }
  }
  return s;
}

}  // namespace oracle
