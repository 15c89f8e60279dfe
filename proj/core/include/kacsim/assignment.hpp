#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "kacsim/errors.hpp"
#include "kacsim/vec3.hpp"

namespace kacsim {

struct Assignment {
  std::vector<std::int32_t> col_of_row;  // bijection: column matched to each row
  double mean_cost = 0.0;                // (1/n) * sum of matched costs
};

// Exact dense linear assignment: Jonker-Volgenant column reduction, reduction
// transfer, two augmenting-row-reduction sweeps, then Dijkstra shortest
// augmenting paths. cost(i, j) is evaluated on demand and must be finite.
// Deterministic: ties resolve by scan order, so equal inputs give equal outputs.
template <class Cost>
Assignment solve_assignment(std::size_t n, const Cost& cost) {
  if (n == 0) throw NumericalError("solve_assignment: empty problem");
  constexpr double kBig = std::numeric_limits<double>::infinity();
  constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::vector<double> v(n, 0.0), d(n);
  std::vector<std::int32_t> rowsol(n, -1), colsol(n, -1), pred(n), collist(n);
  std::vector<std::int32_t> free_rows, next_free;
  free_rows.reserve(n);
  next_free.reserve(n);

  {  // column reduction, scanning columns backwards
    std::vector<std::int32_t> matches(n, 0);
    for (std::size_t j = n; j-- > 0;) {
      double mn = cost(0, j);
      std::size_t imin = 0;
      for (std::size_t i = 1; i < n; ++i) {
        const double h = cost(i, j);
        if (h < mn) {
          mn = h;
          imin = i;
        }
      }
      v[j] = mn;
      if (++matches[imin] == 1) {
        rowsol[imin] = static_cast<std::int32_t>(j);
        colsol[j] = static_cast<std::int32_t>(imin);
      }
    }

    // reduction transfer from single-minimum rows
    for (std::size_t i = 0; i < n; ++i) {
      if (matches[i] == 0) {
        free_rows.push_back(static_cast<std::int32_t>(i));
      } else if (matches[i] == 1) {
        const std::size_t j1 = static_cast<std::size_t>(rowsol[i]);
        double mn = kBig;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == j1) continue;
          const double h = cost(i, j) - v[j];
          if (h < mn) mn = h;
        }
        if (mn < kBig) v[j1] -= mn;
      }
    }
  }

  // augmenting row reduction; the budget guards against price ping-pong stalling
  // under rounding, deferring leftovers to the exact path phase below
  std::size_t budget = 60 * n + 1000;
  for (int sweep = 0; sweep < 2 && !free_rows.empty(); ++sweep) {
    next_free.clear();
    std::size_t k = 0;
    while (k < free_rows.size()) {
      if (budget == 0) {
        next_free.insert(next_free.end(), free_rows.begin() + k, free_rows.end());
        break;
      }
      --budget;
      const std::int32_t i = free_rows[k++];
      double umin = cost(i, 0) - v[0];
      double usubmin = kBig;
      std::size_t j1 = 0, j2 = npos;
      for (std::size_t j = 1; j < n; ++j) {
        const double h = cost(i, j) - v[j];
        if (h < usubmin) {
          if (h >= umin) {
            usubmin = h;
            j2 = j;
          } else {
            usubmin = umin;
            j2 = j1;
            umin = h;
            j1 = j;
          }
        }
      }
      std::int32_t i0 = colsol[j1];
      if (umin < usubmin && usubmin < kBig) {
        v[j1] -= usubmin - umin;
      } else if (i0 >= 0 && j2 != npos) {
        j1 = j2;
        i0 = colsol[j1];
      }
      rowsol[i] = static_cast<std::int32_t>(j1);
      colsol[j1] = i;
      if (i0 >= 0) {
        if (umin < usubmin) {
          free_rows[--k] = i0;  // retry the displaced row immediately
        } else {
          next_free.push_back(i0);
        }
      }
    }
    free_rows.swap(next_free);
  }

  // shortest augmenting path for each remaining free row
  for (const std::int32_t freerow : free_rows) {
    for (std::size_t j = 0; j < n; ++j) {
      d[j] = cost(freerow, j) - v[j];
      pred[j] = freerow;
      collist[j] = static_cast<std::int32_t>(j);
    }
    std::size_t low = 0, up = 0;
    std::ptrdiff_t last = -1;
    double mn = 0.0;
    std::int32_t endofpath = -1;
    bool found = false;
    do {
      if (up == low) {  // open a new group of minimal-distance columns
        last = static_cast<std::ptrdiff_t>(low) - 1;
        mn = d[collist[up++]];
        for (std::size_t k = up; k < n; ++k) {
          const std::int32_t j = collist[k];
          const double h = d[j];
          if (h <= mn) {
            if (h < mn) {
              up = low;
              mn = h;
            }
            collist[k] = collist[up];
            collist[up++] = j;
          }
        }
        for (std::size_t k = low; k < up; ++k) {
          if (colsol[collist[k]] < 0) {
            endofpath = collist[k];
            found = true;
            break;
          }
        }
      }
      if (!found) {  // scan the next minimal column and relax through its row
        const std::int32_t j1 = collist[low++];
        const std::int32_t i = colsol[j1];
        const double h = cost(i, j1) - v[j1] - mn;
        for (std::size_t k = up; k < n; ++k) {
          const std::int32_t j = collist[k];
          const double v2 = cost(i, j) - v[j] - h;
          if (v2 < d[j]) {
            d[j] = v2;
            pred[j] = i;
            if (v2 == mn) {
              if (colsol[j] < 0) {
                endofpath = j;
                found = true;
                break;
              }
              collist[k] = collist[up];
              collist[up++] = j;
            }
          }
        }
      }
    } while (!found);

    for (std::ptrdiff_t k = 0; k <= last; ++k) {
      const std::int32_t j1 = collist[k];
      v[j1] += d[j1] - mn;
    }
    std::int32_t eop = endofpath;
    for (;;) {
      const std::int32_t i = pred[eop];
      colsol[eop] = i;
      const std::int32_t nxt = rowsol[i];
      rowsol[i] = eop;
      eop = nxt;
      if (i == freerow) break;
    }
  }

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += cost(i, rowsol[i]);
  return Assignment{std::move(rowsol), total / static_cast<double>(n)};
}

// squared-Euclidean matching between equal-size clouds, costs computed on the fly
Assignment assign_squared(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

}  // namespace kacsim
