#include <algorithm>
#include <cmath>
#include <numeric>

#include "fsgs/densify.hpp"
#include "fsgs/parallel.hpp"

namespace fsgs {

namespace {

// Flat kd-tree over point indices; leaves hold small runs.
struct KdTree {
  struct Node {
    int axis = -1;       // -1 marks a leaf
    float split = 0.f;
    int left = -1, right = -1;
    int begin = 0, end = 0;
  };
  const std::vector<Vec3<float>>* pts = nullptr;
  std::vector<int> order;
  std::vector<Node> nodes;

  static constexpr int kLeafSize = 16;

  int build(int begin, int end) {
    Node node;
    node.begin = begin;
    node.end = end;
    int id = int(nodes.size());
    nodes.push_back(node);
    if (end - begin <= kLeafSize) return id;

    Vec3<float> lo = (*pts)[order[begin]], hi = lo;
    for (int i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin((*pts)[order[i]]);
      hi = hi.cwiseMax((*pts)[order[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    int mid = (begin + end) / 2;
    std::nth_element(order.begin() + begin, order.begin() + mid, order.begin() + end,
                     [&](int a, int b) {
                       float va = (*pts)[a][axis], vb = (*pts)[b][axis];
                       return va != vb ? va < vb : a < b;
                     });
    nodes[id].axis = axis;
    nodes[id].split = (*pts)[order[mid]][axis];
    nodes[id].left = build(begin, mid);
    nodes[id].right = build(mid, end);
    return id;
  }
};

// Bounded best-k set ordered by (squared distance, index).
struct BestK {
  int k;
  std::vector<std::pair<float, int>> heap;  // max-heap

  explicit BestK(int k_) : k(k_) { heap.reserve(k_); }

  float worst() const { return heap.size() < std::size_t(k) ? INFINITY : heap.front().first; }

  void offer(float d2, int idx) {
    std::pair<float, int> cand{d2, idx};
    if (heap.size() < std::size_t(k)) {
      heap.push_back(cand);
      std::push_heap(heap.begin(), heap.end());
    } else if (cand < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = cand;
      std::push_heap(heap.begin(), heap.end());
    }
  }
};

void query(const KdTree& tree, int node_id, const Vec3<float>& q, int self, BestK& best) {
  const auto& node = tree.nodes[node_id];
  if (node.axis < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      int idx = tree.order[i];
      if (idx == self) continue;
      float d2 = ((*tree.pts)[idx] - q).squaredNorm();
      std::pair<float, int> cand{d2, idx};
      if (best.heap.size() < std::size_t(best.k) || cand < best.heap.front())
        best.offer(d2, idx);
    }
    return;
  }
  float delta = q[node.axis] - node.split;
  int near = delta < 0 ? node.left : node.right;
  int far = delta < 0 ? node.right : node.left;
  query(tree, near, q, self, best);
  if (delta * delta <= best.worst()) query(tree, far, q, self, best);
}

}  // namespace

ProximityGraph build_proximity_graph(const std::vector<Vec3<float>>& points, int k) {
  std::size_t n = points.size();
  if (k <= 0 || n <= std::size_t(k))
    throw InvalidParameter("build_proximity_graph: need more points than k");

  KdTree tree;
  tree.pts = &points;
  tree.order.resize(n);
  std::iota(tree.order.begin(), tree.order.end(), 0);
  tree.nodes.reserve(2 * n / KdTree::kLeafSize + 2);
  tree.build(0, int(n));

  ProximityGraph graph;
  graph.k = k;
  graph.neighbors.resize(n * k);
  graph.distances.resize(n * k);
  graph.scores.resize(n);

  parallel_for_chunks(n, [&](std::size_t b, std::size_t e, int) {
    for (std::size_t i = b; i < e; ++i) {
      BestK best(k);
      query(tree, 0, points[i], int(i), best);
      std::sort(best.heap.begin(), best.heap.end());
      float sum = 0.f;
      for (int j = 0; j < k; ++j) {
        float d = std::sqrt(best.heap[j].first);
        graph.neighbors[i * k + j] = best.heap[j].second;
        graph.distances[i * k + j] = d;
        sum += d;
      }
      graph.scores[i] = sum / float(k);
    }
  });
  return graph;
}

ProximityGraph build_proximity_graph(const GaussianSet& set, int k) {
  return build_proximity_graph(set.mu, k);
}

std::vector<float> proximity_scores(const ProximityGraph& graph) { return graph.scores; }

}  // namespace fsgs
