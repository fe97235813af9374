// Copyright 2026 The traffic-shaping Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace shaping {

/// Dense two-phase simplex for small programs:
///   maximize c'x  subject to  Ax <= b, x >= 0.
/// Classic tableau scheme with lexicographic (Bland-style) tie-breaking.
/// Returns the objective, -inf when infeasible, +inf when unbounded.
class DenseSimplex {
 public:
  DenseSimplex(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
               const std::vector<double>& c)
      : m_(static_cast<int>(b.size())),
        n_(static_cast<int>(c.size())),
        basis_n_(static_cast<std::size_t>(n_) + 1),
        basis_b_(static_cast<std::size_t>(m_)),
        tab_(static_cast<std::size_t>(m_) + 2,
             std::vector<double>(static_cast<std::size_t>(n_) + 2, 0.0)) {
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < n_; ++j) tab_[i][j] = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      basis_b_[static_cast<std::size_t>(i)] = n_ + i;
      tab_[i][n_] = -1.0;
      tab_[i][n_ + 1] = b[static_cast<std::size_t>(i)];
    }
    for (int j = 0; j < n_; ++j) {
      basis_n_[static_cast<std::size_t>(j)] = j;
      tab_[m_][j] = -c[static_cast<std::size_t>(j)];
    }
    basis_n_[static_cast<std::size_t>(n_)] = -1;
    tab_[m_ + 1][n_] = 1.0;
  }

  double solve(std::vector<double>& x) {
    int r = 0;
    for (int i = 1; i < m_; ++i) {
      if (tab_[i][n_ + 1] < tab_[r][n_ + 1]) r = i;
    }
    if (m_ > 0 && tab_[r][n_ + 1] < -kEps) {
      pivot(r, n_);
      if (!run(2) || tab_[m_ + 1][n_ + 1] < -kEps) {
        return -std::numeric_limits<double>::infinity();
      }
      for (int i = 0; i < m_; ++i) {
        if (basis_b_[static_cast<std::size_t>(i)] == -1) {
          int s = 0;
          for (int j = 1; j <= n_; ++j) {
            if (better(i, j, s)) s = j;
          }
          pivot(i, s);
        }
      }
    }
    const bool bounded = run(1);
    x.assign(static_cast<std::size_t>(n_), 0.0);
    for (int i = 0; i < m_; ++i) {
      const int v = basis_b_[static_cast<std::size_t>(i)];
      if (v >= 0 && v < n_) x[static_cast<std::size_t>(v)] = tab_[i][n_ + 1];
    }
    return bounded ? tab_[m_][n_ + 1] : std::numeric_limits<double>::infinity();
  }

 private:
  static constexpr double kEps = 1e-11;

  bool better(int row, int j, int s) const {
    return std::pair(tab_[row][j], basis_n_[static_cast<std::size_t>(j)]) <
           std::pair(tab_[row][s], basis_n_[static_cast<std::size_t>(s)]);
  }

  void pivot(int r, int s) {
    auto& row = tab_[r];
    const double inv = 1.0 / row[s];
    for (int i = 0; i < m_ + 2; ++i) {
      if (i == r || std::abs(tab_[i][s]) <= kEps) continue;
      auto& other = tab_[i];
      const double factor = other[s] * inv;
      for (int j = 0; j < n_ + 2; ++j) other[j] -= row[j] * factor;
      other[s] = row[s] * factor;
    }
    for (int j = 0; j < n_ + 2; ++j) {
      if (j != s) row[j] *= inv;
    }
    for (int i = 0; i < m_ + 2; ++i) {
      if (i != r) tab_[i][s] *= -inv;
    }
    row[s] = inv;
    std::swap(basis_b_[static_cast<std::size_t>(r)], basis_n_[static_cast<std::size_t>(s)]);
  }

  bool run(int phase) {
    const int obj_row = m_ + phase - 1;
    for (;;) {
      int s = -1;
      for (int j = 0; j <= n_; ++j) {
        if (basis_n_[static_cast<std::size_t>(j)] == -phase) continue;
        if (s == -1 || better(obj_row, j, s)) s = j;
      }
      if (tab_[obj_row][s] >= -kEps) return true;
      int r = -1;
      for (int i = 0; i < m_; ++i) {
        if (tab_[i][s] <= kEps) continue;
        if (r == -1 ||
            std::pair(tab_[i][n_ + 1] / tab_[i][s], basis_b_[static_cast<std::size_t>(i)]) <
                std::pair(tab_[r][n_ + 1] / tab_[r][s], basis_b_[static_cast<std::size_t>(r)])) {
          r = i;
        }
      }
      if (r == -1) return false;  // unbounded direction
      pivot(r, s);
    }
  }

  int m_ = 0;
  int n_ = 0;
  std::vector<int> basis_n_;
  std::vector<int> basis_b_;
  std::vector<std::vector<double>> tab_;
};

}  // namespace shaping
