#pragma once

#include <vector>

#include "resp/grad/ops.hpp"

namespace resp {

/// Batch-hard triplet loss on embeddings [N, D] with squared Euclidean
/// distance. Every anchor with at least one positive (same label, other
/// row) and one negative pairs its farthest positive with its nearest
/// negative; the loss is the mean of max(0, d(a,p) - d(a,n) + margin) over
/// those anchors, and 0 when there are none. Ties pick the lowest index.
template <class T>
grad::Var<T> triplet_loss(const grad::Var<T>& emb, const std::vector<int>& labels, double margin) {
  if (emb.shape().size() != 2 || emb.dim(0) != labels.size())
    throw Error(Errc::ShapeMismatch, "triplet_loss: embeddings " + grad::shape_str(emb.shape()) + " for " +
                                         std::to_string(labels.size()) + " labels");
  if (!(margin >= 0.0)) throw Error(Errc::BadRange, "triplet margin must be nonnegative");
  const std::size_t N = emb.dim(0), D = emb.dim(1);
  const auto& e = emb.value();
  std::vector<T> dist(N * N, T(0));
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = i + 1; j < N; ++j) {
      T acc = 0;
      for (std::size_t d = 0; d < D; ++d) {
        const T diff = e[i * D + d] - e[j * D + d];
        acc += diff * diff;
      }
      dist[i * N + j] = dist[j * N + i] = acc;
    }

  struct Active {
    std::size_t a, p, n;
  };
  std::vector<Active> active;
  std::size_t valid = 0;
  T loss = 0;
  for (std::size_t a = 0; a < N; ++a) {
    std::size_t p = N, n = N;
    for (std::size_t j = 0; j < N; ++j) {
      if (j == a) continue;
      if (labels[j] == labels[a]) {
        if (p == N || dist[a * N + j] > dist[a * N + p]) p = j;
      } else if (n == N || dist[a * N + j] < dist[a * N + n]) {
        n = j;
      }
    }
    if (p == N || n == N) continue;
    ++valid;
    const T term = dist[a * N + p] - dist[a * N + n] + static_cast<T>(margin);
    if (term > T(0)) {
      loss += term;
      active.push_back({a, p, n});
    }
  }
  if (valid > 0) loss /= static_cast<T>(valid);
  return grad::make_result<T>(grad::Tensor<T>::scalar(loss), {emb}, [active, valid, D](grad::Node<T>& s) {
    if (valid == 0) return;
    auto& g = s.parents[0]->grad_buffer().data;
    const auto& e = s.parents[0]->value;
    const T go = s.grad[0] / static_cast<T>(valid);
    for (const auto& t : active)
      for (std::size_t d = 0; d < D; ++d) {
        const T ap = e[t.a * D + d] - e[t.p * D + d];
        const T an = e[t.a * D + d] - e[t.n * D + d];
        g[t.a * D + d] += go * T(2) * (ap - an);
        g[t.p * D + d] -= go * T(2) * ap;
        g[t.n * D + d] += go * T(2) * an;
      }
  }, "triplet_loss");
}

}  // namespace resp
