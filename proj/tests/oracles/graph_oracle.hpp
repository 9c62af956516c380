#pragma once

// Brute-force reference values for weighted digraphs: every simple path and
// simple loop is produced by enumerating node sequences directly.

#include <Eigen/Dense>

#include <algorithm>
#include <functional>
#include <vector>

namespace oracle {

// T*(i, j): sum of weights of all paths i -> j without repeated nodes,
// including the empty path on the diagonal.
inline Eigen::MatrixXd simple_path_sums(const Eigen::MatrixXd& W) {
  const int n = static_cast<int>(W.rows());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
  std::vector<int> seq;
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  std::function<void(double)> extend = [&](double w) {
    T(seq.front(), seq.back()) += w;
    for (int v = 0; v < n; ++v) {
      if (used[static_cast<std::size_t>(v)]) continue;
      used[static_cast<std::size_t>(v)] = 1;
      const int last = seq.back();
      seq.push_back(v);
      extend(w * W(last, v));
      seq.pop_back();
      used[static_cast<std::size_t>(v)] = 0;
    }
  };
  for (int s = 0; s < n; ++s) {
    seq = {s};
    used.assign(static_cast<std::size_t>(n), 0);
    used[static_cast<std::size_t>(s)] = 1;
    extend(1.0);
  }
  return T;
}

// Sum of weights of all simple loops, counted once per starting node
// (the loop a->b->a and b->a->b are distinct).
inline double simple_loop_weight(const Eigen::MatrixXd& W) {
  const int n = static_cast<int>(W.rows());
  double total = 0;
  std::vector<int> seq;
  std::vector<char> used;
  std::function<void(double)> extend = [&](double w) {
    const int last = seq.back();
    total += w * W(last, seq.front());  // close the loop
    for (int v = 0; v < n; ++v) {
      if (used[static_cast<std::size_t>(v)]) continue;
      used[static_cast<std::size_t>(v)] = 1;
      seq.push_back(v);
      extend(w * W(last, v));
      seq.pop_back();
      used[static_cast<std::size_t>(v)] = 0;
    }
  };
  for (int s = 0; s < n; ++s) {
    seq = {s};
    used.assign(static_cast<std::size_t>(n), 0);
    used[static_cast<std::size_t>(s)] = 1;
    extend(1.0);
  }
  return total;
}

// All node sequences of length L+1 from a to b in the complete graph on n nodes.
inline std::vector<std::vector<int>> all_walks(int n, int a, int b, int L) {
  std::vector<std::vector<int>> out;
  std::vector<int> seq{a};
  std::function<void()> rec = [&] {
    if (static_cast<int>(seq.size()) == L + 1) {
      if (seq.back() == b) out.push_back(seq);
      return;
    }
    for (int v = 0; v < n; ++v) {
      seq.push_back(v);
      rec();
      seq.pop_back();
    }
  };
  rec();
  return out;
}

}  // namespace oracle
