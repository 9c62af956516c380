#pragma once

// Paths, loop extraction and simple-path sums on complete weighted digraphs.
// Nodes are 0-based; path positions (splice, first_loop) are 1-based so that
// p[l, m) reads the same way as in the usual path-algebra notation.

#include "helm/common.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

namespace helm {

inline constexpr int kMaxEnumNodes = 12;

using Edge = std::pair<int, int>;

struct Path {
  std::vector<Edge> edges;

  Path() = default;
  explicit Path(std::vector<Edge> e) : edges(std::move(e)) {}

  // Builds the path visiting the given node sequence (at least one node).
  static Path from_nodes(const std::vector<int>& nodes) {
    Path p;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) p.edges.emplace_back(nodes[i], nodes[i + 1]);
    return p;
  }

  int size() const { return static_cast<int>(edges.size()); }
  bool empty() const { return edges.empty(); }

  // p(1), ..., p(|p|+1); empty for the empty path.
  std::vector<int> nodes() const {
    std::vector<int> v;
    if (edges.empty()) return v;
    v.reserve(edges.size() + 1);
    for (const auto& e : edges) v.push_back(e.first);
    v.push_back(edges.back().second);
    return v;
  }

  bool is_chained() const {
    for (std::size_t i = 1; i < edges.size(); ++i)
      if (edges[i - 1].second != edges[i].first) return false;
    return true;
  }

  bool is_loop() const { return !edges.empty() && edges.front().first == edges.back().second; }

  friend bool operator==(const Path& a, const Path& b) { return a.edges == b.edges; }
  friend bool operator<(const Path& a, const Path& b) { return a.edges < b.edges; }
};

inline Path concat(const Path& a, const Path& b) {
  Path r = a;
  r.edges.insert(r.edges.end(), b.edges.begin(), b.edges.end());
  return r;
}

// Edges l .. m-1 of p (1-based, half-open).
inline Path splice(const Path& p, int l, int m) {
  if (l < 1 || m < l || m > p.size() + 1) throw std::out_of_range("splice: indices out of range");
  return Path(std::vector<Edge>(p.edges.begin() + (l - 1), p.edges.begin() + (m - 1)));
}

inline bool is_non_intersecting(const Path& p) {
  auto v = p.nodes();
  std::sort(v.begin(), v.end());
  return std::adjacent_find(v.begin(), v.end()) == v.end();
}

inline bool is_simple_loop(const Path& p) {
  if (!p.is_loop()) return false;
  auto v = p.nodes();
  v.pop_back();
  std::sort(v.begin(), v.end());
  return std::adjacent_find(v.begin(), v.end()) == v.end();
}

struct FirstLoop {
  Path loop;                 // L(p), empty when p is non-intersecting
  Path remainder;            // E(p)
  std::optional<int> start;  // l0, the position where L is re-inserted
};

inline FirstLoop first_loop(const Path& p) {
  const auto v = p.nodes();
  for (int lx = 2; lx <= static_cast<int>(v.size()); ++lx) {
    for (int l0 = 1; l0 < lx; ++l0) {
      if (v[l0 - 1] != v[lx - 1]) continue;
      FirstLoop r;
      r.loop = splice(p, l0, lx);
      r.remainder = concat(splice(p, 1, l0), splice(p, lx, p.size() + 1));
      r.start = l0;
      return r;
    }
  }
  return FirstLoop{Path{}, p, std::nullopt};
}

struct LoopDecomposition {
  Path spine;
  std::vector<Path> loops;  // extraction order

  friend bool operator==(const LoopDecomposition& a, const LoopDecomposition& b) {
    return a.spine == b.spine && a.loops == b.loops;
  }
  friend bool operator<(const LoopDecomposition& a, const LoopDecomposition& b) {
    if (a.spine == b.spine) return a.loops < b.loops;
    return a.spine < b.spine;
  }
};

inline LoopDecomposition loop_decompose(const Path& p) {
  LoopDecomposition d;
  d.spine = p;
  for (;;) {
    FirstLoop fl = first_loop(d.spine);
    if (!fl.start) break;
    d.loops.push_back(std::move(fl.loop));
    d.spine = std::move(fl.remainder);
  }
  return d;
}

template <typename Scalar = double>
struct WeightedDigraph {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix W;

  WeightedDigraph() = default;
  explicit WeightedDigraph(Matrix w) : W(std::move(w)) {
    if (W.rows() != W.cols()) throw std::invalid_argument("weight matrix must be square");
    if ((W.array() < Scalar(0)).any() || !W.allFinite())
      throw std::invalid_argument("weights must be finite and nonnegative");
  }

  int n() const { return static_cast<int>(W.rows()); }

  Scalar weight(const Path& p) const {
    Scalar w(1);
    for (const auto& e : p.edges) w *= W(e.first, e.second);
    return w;
  }
};

namespace detail {

inline void require_enumerable(int n) {
  if (n > kMaxEnumNodes)
    throw DomainError("graph has " + std::to_string(n) + " nodes; exhaustive enumeration is limited to " +
                      std::to_string(kMaxEnumNodes));
}

// Depth-first walk over paths without repeated nodes starting at `start`,
// following only positive-weight edges. `visit(node, weight, stack)` is called
// for every reachable node including the start itself.
template <typename Scalar, typename Visit>
void walk_simple(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& W, int start, Visit&& visit) {
  const int n = static_cast<int>(W.rows());
  std::vector<char> on(n, 0);
  std::vector<int> stack{start};
  on[start] = 1;
  auto rec = [&](auto&& self, int u, Scalar w) -> void {
    visit(u, w, stack);
    for (int v = 0; v < n; ++v) {
      if (on[v] || !(W(u, v) > Scalar(0))) continue;
      on[v] = 1;
      stack.push_back(v);
      self(self, v, w * W(u, v));
      stack.pop_back();
      on[v] = 0;
    }
  };
  rec(rec, start, Scalar(1));
}

}  // namespace detail

template <typename Scalar>
struct SimpleLoops {
  std::vector<Path> loops;
  Scalar c{0};
};

// Every simple loop, counted once per base point (so (1,2)(2,1) and (2,1)(1,2)
// are both listed), together with the total weight c of the list.
template <typename Scalar>
SimpleLoops<Scalar> enumerate_simple_loops(const WeightedDigraph<Scalar>& g) {
  detail::require_enumerable(g.n());
  SimpleLoops<Scalar> out;
  for (int s = 0; s < g.n(); ++s) {
    detail::walk_simple<Scalar>(g.W, s, [&](int u, Scalar w, const std::vector<int>& stack) {
      if (g.W(u, s) > Scalar(0)) {
        std::vector<int> nodes = stack;
        nodes.push_back(s);
        out.loops.push_back(Path::from_nodes(nodes));
        out.c += w * g.W(u, s);
      }
    });
  }
  return out;
}

template <typename Scalar>
Scalar simple_loop_sum(const WeightedDigraph<Scalar>& g) {
  detail::require_enumerable(g.n());
  Scalar c(0);
  for (int s = 0; s < g.n(); ++s)
    detail::walk_simple<Scalar>(g.W, s, [&](int u, Scalar w, const std::vector<int>&) { c += w * g.W(u, s); });
  return c;
}

template <typename Scalar>
typename WeightedDigraph<Scalar>::Matrix simple_path_matrix(const WeightedDigraph<Scalar>& g) {
  detail::require_enumerable(g.n());
  using Matrix = typename WeightedDigraph<Scalar>::Matrix;
  Matrix T = Matrix::Zero(g.n(), g.n());
  for (int i = 0; i < g.n(); ++i)
    detail::walk_simple<Scalar>(g.W, i, [&](int u, Scalar w, const std::vector<int>&) { T(i, u) += w; });
  return T;
}

enum class CertStatus { Certified, BoundViolated, ConditionFailed };

template <typename Scalar>
struct CertResult {
  using Matrix = typename WeightedDigraph<Scalar>::Matrix;
  int n = 0;
  Scalar c{0};
  Matrix T_star;
  Matrix S;
  int terms_used = 0;
  Scalar max_violation{0};
  CertStatus status = CertStatus::ConditionFailed;
  bool pass() const { return status == CertStatus::Certified; }
};

struct CertOptions {
  int n_terms = 200;
  double increment_tol = 1e-14;
  double tol_abs = 1e-9;
};

template <typename Scalar>
CertResult<Scalar> certify_bound(const WeightedDigraph<Scalar>& g, const CertOptions& opt = {}) {
  using Matrix = typename WeightedDigraph<Scalar>::Matrix;
  CertResult<Scalar> r;
  r.n = g.n();
  r.c = simple_loop_sum(g);
  r.T_star = simple_path_matrix(g);

  Matrix term = Matrix::Identity(g.n(), g.n());
  r.S = term;
  for (int m = 1; m <= opt.n_terms; ++m) {
    term = term * g.W;
    r.S += term;
    r.terms_used = m;
    if (term.cwiseAbs().maxCoeff() < Scalar(opt.increment_tol)) break;
  }
  if (!(r.c < Scalar(1))) {
    r.status = CertStatus::ConditionFailed;
    return r;
  }
  const Matrix upper = r.T_star / (Scalar(1) - r.c);
  Scalar viol(0);
  viol = std::max(viol, (r.T_star - r.S).maxCoeff());
  viol = std::max(viol, (r.S - upper).maxCoeff());
  r.max_violation = std::max(viol, Scalar(0));
  r.status = r.max_violation <= Scalar(opt.tol_abs) ? CertStatus::Certified : CertStatus::BoundViolated;
  return r;
}

}  // namespace helm
