#include "scjd/skeleton.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace scjd {

std::size_t SkeletonTopology::root() const {
  for (std::size_t j = 0; j < parent.size(); ++j)
    if (parent[j] == j) return j;
  return 0;
}

std::size_t SkeletonTopology::degree(std::size_t joint) const {
  std::size_t d = 0;
  for (const auto& [a, b] : edges) d += (a == joint) + (b == joint);
  return d;
}

std::size_t SkeletonTopology::edge_to(std::size_t joint) const {
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (edges[e].second == joint) return e;
  return SIZE_MAX;
}

std::vector<std::size_t> SkeletonTopology::topological_order() const {
  std::vector<std::size_t> order{root()};
  for (std::size_t head = 0; head < order.size(); ++head) {
    for (std::size_t j = 0; j < num_joints; ++j)
      if (parent[j] == order[head] && j != order[head]) order.push_back(j);
  }
  return order;
}

std::vector<std::size_t> SkeletonTopology::flip_permutation() const {
  std::vector<std::size_t> perm(num_joints);
  std::iota(perm.begin(), perm.end(), 0);
  for (const auto& [l, r] : left_right_pairs) {
    perm[l] = r;
    perm[r] = l;
  }
  return perm;
}

SkeletonTopology build_h36m17() {
  using namespace h36m;
  SkeletonTopology t;
  t.num_joints = 17;
  t.names = {"Hip",   "RHip",   "RKnee",     "RAnkle", "LHip",   "LKnee",     "LAnkle", "Spine", "Thorax",
             "Neck",  "Head",   "LShoulder", "LElbow", "LWrist", "RShoulder", "RElbow", "RWrist"};
  t.edges = {{kHip, kRHip},         {kRHip, kRKnee},       {kRKnee, kRAnkle},     {kHip, kLHip},
             {kLHip, kLKnee},       {kLKnee, kLAnkle},     {kHip, kSpine},        {kSpine, kThorax},
             {kThorax, kNeck},      {kNeck, kHead},        {kThorax, kLShoulder}, {kLShoulder, kLElbow},
             {kLElbow, kLWrist},    {kThorax, kRShoulder}, {kRShoulder, kRElbow}, {kRElbow, kRWrist}};
  t.bone_lengths_mm = {132.9, 442.9, 454.2, 132.9, 442.9, 454.2, 233.4, 257.1,
                       121.1, 115.0, 151.0, 278.9, 251.7, 151.0, 278.9, 251.7};
  t.parent.assign(17, 0);
  for (const auto& [p, c] : t.edges) t.parent[c] = p;
  t.left_right_pairs = {{kLHip, kRHip},           {kLKnee, kRKnee},   {kLAnkle, kRAnkle},
                        {kLShoulder, kRShoulder}, {kLElbow, kRElbow}, {kLWrist, kRWrist}};
  // T-pose: y up, subject's left along +x.
  t.rest_directions.assign(17, {0.0, 0.0, 0.0});
  const std::array<double, 3> up{0, 1, 0}, down{0, -1, 0}, left{1, 0, 0}, right{-1, 0, 0};
  for (auto j : {kRHip, kRShoulder, kRElbow, kRWrist}) t.rest_directions[j] = right;
  for (auto j : {kLHip, kLShoulder, kLElbow, kLWrist}) t.rest_directions[j] = left;
  for (auto j : {kRKnee, kRAnkle, kLKnee, kLAnkle}) t.rest_directions[j] = down;
  for (auto j : {kSpine, kThorax, kNeck, kHead}) t.rest_directions[j] = up;
  return t;
}

std::vector<std::string> validate(const SkeletonTopology& topo) {
  std::vector<std::string> v;
  const std::size_t J = topo.num_joints;
  if (J == 0) {
    v.push_back("no joints");
    return v;
  }
  bool in_range = true;
  for (const auto& [a, b] : topo.edges) {
    if (a >= J || b >= J) {
      v.push_back("index out of range: edge (" + std::to_string(a) + ", " + std::to_string(b) + ")");
      in_range = false;
    }
  }
  for (const auto& [l, r] : topo.left_right_pairs) {
    if (l >= J || r >= J) {
      v.push_back("index out of range: left/right pair (" + std::to_string(l) + ", " + std::to_string(r) + ")");
      in_range = false;
    }
  }
  if (topo.edges.size() != J - 1) {
    v.push_back("not a tree: " + std::to_string(topo.edges.size()) + " edges for " + std::to_string(J) + " joints");
  } else if (in_range) {
    // Union-find: a cycle or a second component both show up as a merge failure.
    std::vector<std::size_t> uf(J);
    std::iota(uf.begin(), uf.end(), 0);
    auto find = [&uf](std::size_t x) {
      while (uf[x] != x) x = uf[x] = uf[uf[x]];
      return x;
    };
    for (const auto& [a, b] : topo.edges) {
      const auto ra = find(a), rb = find(b);
      if (ra == rb) {
        v.push_back("not a tree: cycle through (" + std::to_string(a) + ", " + std::to_string(b) + ")");
        break;
      }
      uf[ra] = rb;
    }
  }
  if (in_range) {
    std::set<std::size_t> used;
    for (const auto& [l, r] : topo.left_right_pairs) {
      if (l == r || !used.insert(l).second || !used.insert(r).second) {
        v.push_back("left/right pairs are not an involution: joint reused in (" + std::to_string(l) + ", " +
                    std::to_string(r) + ")");
      }
    }
  }
  if (topo.parent.size() != J) {
    v.push_back("parent array has " + std::to_string(topo.parent.size()) + " entries, expected " + std::to_string(J));
  } else if (in_range) {
    std::size_t roots = 0;
    for (std::size_t j = 0; j < J; ++j) roots += topo.parent[j] == j;
    if (roots != 1) v.push_back("expected exactly one root, found " + std::to_string(roots));
    for (const auto& [p, c] : topo.edges) {
      if (topo.parent[c] != p) {
        v.push_back("parent of joint " + std::to_string(c) + " disagrees with edge (" + std::to_string(p) + ", " +
                    std::to_string(c) + ")");
      }
    }
  }
  if (!topo.names.empty() && topo.names.size() != J) v.push_back("names size does not match joint count");
  if (!topo.bone_lengths_mm.empty() && topo.bone_lengths_mm.size() != topo.edges.size()) {
    v.push_back("bone_lengths_mm size does not match edge count");
  }
  if (!topo.rest_directions.empty() && topo.rest_directions.size() != J) {
    v.push_back("rest_directions size does not match joint count");
  }
  return v;
}

AdjacencyMask::AdjacencyMask(std::size_t joints, std::vector<std::uint8_t> cells)
    : joints_(joints), cells_(std::move(cells)) {
  if (cells_.size() != joints_ * joints_) throw DimensionError("adjacency mask must be J x J");
}

std::size_t AdjacencyMask::nonzeros() const {
  return static_cast<std::size_t>(std::count_if(cells_.begin(), cells_.end(), [](auto c) { return c != 0; }));
}

bool AdjacencyMask::symmetric() const {
  for (std::size_t i = 0; i < joints_; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if ((*this)(i, j) != (*this)(j, i)) return false;
  return true;
}

Tensor AdjacencyMask::to_tensor() const {
  std::vector<double> v(cells_.begin(), cells_.end());
  return Tensor::from({joints_, joints_}, std::move(v));
}

AdjacencyMask adjacency_mask(const SkeletonTopology& topo, bool include_self) {
  const std::size_t J = topo.num_joints;
  std::vector<std::uint8_t> cells(J * J, 0);
  for (const auto& [a, b] : topo.edges) {
    cells[a * J + b] = 1;
    cells[b * J + a] = 1;
  }
  if (include_self)
    for (std::size_t i = 0; i < J; ++i) cells[i * J + i] = 1;
  return AdjacencyMask(J, std::move(cells));
}

nlohmann::json topology_to_json(const SkeletonTopology& topo) {
  nlohmann::json doc;
  doc["num_joints"] = topo.num_joints;
  doc["names"] = topo.names;
  doc["parent"] = topo.parent;
  doc["edges"] = topo.edges;
  doc["left_right_pairs"] = topo.left_right_pairs;
  doc["bone_lengths_mm"] = topo.bone_lengths_mm;
  doc["rest_directions"] = topo.rest_directions;
  return doc;
}

SkeletonTopology topology_from_json(const nlohmann::json& doc) {
  SkeletonTopology t;
  t.num_joints = doc.at("num_joints").get<std::size_t>();
  t.names = doc.value("names", std::vector<std::string>{});
  t.parent = doc.at("parent").get<std::vector<std::size_t>>();
  t.edges = doc.at("edges").get<std::vector<JointPair>>();
  t.left_right_pairs = doc.value("left_right_pairs", std::vector<JointPair>{});
  t.bone_lengths_mm = doc.value("bone_lengths_mm", std::vector<double>{});
  t.rest_directions = doc.value("rest_directions", std::vector<std::array<double, 3>>{});
  const auto problems = validate(t);
  if (!problems.empty()) {
    std::string msg = "invalid skeleton topology:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw std::invalid_argument(msg);
  }
  return t;
}

}  // namespace scjd
