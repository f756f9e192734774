#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "hpm/error.hpp"
#include "hpm/rng.hpp"

namespace hpm {

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  double value = 0.0;  // leaf mean
  std::int32_t left = -1, right = -1;
  bool is_leaf() const { return feature < 0; }
};

struct TreeParams {
  int max_depth = -1;        // -1: grow until leaves are pure or hold < 2 samples
  std::string mtry = "all";  // all | sqrt | log
};

inline std::size_t mtry_count(const std::string& rule, std::size_t p) {
  if (rule == "all") return p;
  if (rule == "sqrt") return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p)))));
  if (rule == "log") return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::log2(static_cast<double>(p)))));
  fail(Errc::usage, "unknown features-per-node rule '" + rule + "'");
}

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(const double* row) const {
    std::int32_t cur = 0;
    while (!nodes[cur].is_leaf())
      cur = row[nodes[cur].feature] <= nodes[cur].threshold ? nodes[cur].left : nodes[cur].right;
    return nodes[cur].value;
  }
};

namespace detail {

struct TreeBuilder {
  const double* x;
  std::size_t p;
  const std::vector<double>& y;
  const TreeParams& params;
  Rng& rng;
  RegressionTree& tree;
  std::vector<std::uint32_t> idx;       // working sample, partitioned in place
  std::vector<std::uint32_t> sort_buf;  // per-feature sort scratch
  std::vector<std::uint32_t> pool;      // feature sampling scratch

  // Candidate features for one node, ascending so the lowest-index split wins ties.
  void sample_features(std::vector<std::uint32_t>& out) {
    const std::size_t m = mtry_count(params.mtry, p);
    out.clear();
    if (m >= p) {
      for (std::size_t j = 0; j < p; ++j) out.push_back(static_cast<std::uint32_t>(j));
      return;
    }
    pool.resize(p);
    std::iota(pool.begin(), pool.end(), 0u);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(static_cast<std::uint64_t>(p - i)));
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    std::sort(out.begin(), out.end());
  }

  std::int32_t build(std::size_t lo, std::size_t hi, int depth) {
    const std::size_t n = hi - lo;
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double v = y[idx[i]];
      sum += v;
      sumsq += v * v;
    }
    const double mean = sum / static_cast<double>(n);
    const std::int32_t node_id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{-1, 0.0, mean, -1, -1});

    if (n < 2) return node_id;
    if (params.max_depth >= 0 && depth >= params.max_depth) return node_id;
    bool pure = true;
    for (std::size_t i = lo + 1; i < hi; ++i)
      if (y[idx[i]] != y[idx[lo]]) {
        pure = false;
        break;
      }
    if (pure) return node_id;

    const double parent_sse = sumsq - sum * sum / static_cast<double>(n);
    std::vector<std::uint32_t> features;
    sample_features(features);

    std::int32_t best_feature = -1;
    double best_threshold = 0.0, best_sse = parent_sse;
    for (std::uint32_t f : features) {
      sort_buf.assign(idx.begin() + static_cast<std::ptrdiff_t>(lo), idx.begin() + static_cast<std::ptrdiff_t>(hi));
      std::sort(sort_buf.begin(), sort_buf.end(),
                [&](std::uint32_t a, std::uint32_t b) { return x[a * p + f] < x[b * p + f]; });
      double lsum = 0.0, lsumsq = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const double v = y[sort_buf[i]];
        lsum += v;
        lsumsq += v * v;
        const double xa = x[sort_buf[i] * p + f];
        const double xb = x[sort_buf[i + 1] * p + f];
        if (xa == xb) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = static_cast<double>(n - i - 1);
        const double rsum = sum - lsum;
        const double rsumsq = sumsq - lsumsq;
        const double sse = (lsumsq - lsum * lsum / nl) + (rsumsq - rsum * rsum / nr);
        if (sse < best_sse) {
          const double mid = xa + (xb - xa) / 2.0;
          if (!(xa < mid && mid < xb)) continue;  // rounding collapsed the midpoint
          best_sse = sse;
          best_feature = static_cast<std::int32_t>(f);
          best_threshold = mid;
        }
      }
    }
    if (best_feature < 0) return node_id;

    auto mid_it = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                                 idx.begin() + static_cast<std::ptrdiff_t>(hi), [&](std::uint32_t a) {
                                   return x[a * p + static_cast<std::size_t>(best_feature)] <= best_threshold;
                                 });
    const std::size_t mid = static_cast<std::size_t>(mid_it - idx.begin());
    if (mid == lo || mid == hi) return node_id;  // degenerate split, keep the leaf

    tree.nodes[node_id].feature = best_feature;
    tree.nodes[node_id].threshold = best_threshold;
    const std::int32_t left = build(lo, mid, depth + 1);
    tree.nodes[node_id].left = left;
    const std::int32_t right = build(mid, hi, depth + 1);
    tree.nodes[node_id].right = right;
    return node_id;
  }
};

}  // namespace detail

// Fits one regression tree on the given sample (indices into x/y rows, with
// repeats allowed for bootstrap use). Splits minimize the summed child SSE;
// ties resolve to the lowest feature index, then the lowest threshold.
inline RegressionTree fit_tree(const double* x, std::size_t p, const std::vector<double>& y,
                               std::vector<std::uint32_t> sample, const TreeParams& params, Rng& rng) {
  if (sample.empty()) fail(Errc::data, "cannot fit a tree on an empty sample");
  if (p == 0) fail(Errc::data, "cannot fit a tree with zero features");
  RegressionTree tree;
  detail::TreeBuilder builder{x, p, y, params, rng, tree, std::move(sample), {}, {}};
  builder.build(0, builder.idx.size(), 0);
  return tree;
}

}  // namespace hpm
