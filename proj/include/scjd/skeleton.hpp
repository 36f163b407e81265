#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "scjd/tensor.hpp"

namespace scjd {

using JointPair = std::pair<std::size_t, std::size_t>;

// Kinematic joint tree. Edge e links parent → child and carries the nominal
// bone length used by the synthetic motion generator.
struct SkeletonTopology {
  std::size_t num_joints = 0;
  std::vector<JointPair> edges;
  std::vector<std::size_t> parent;  // root is its own parent
  std::vector<std::string> names;
  std::vector<JointPair> left_right_pairs;  // (left, right)
  std::vector<double> bone_lengths_mm;      // per edge
  std::vector<std::array<double, 3>> rest_directions;  // per joint, unit vector from parent (root unused)

  std::size_t root() const;
  std::size_t degree(std::size_t joint) const;
  // Index of the edge whose child is `joint`, or SIZE_MAX for the root.
  std::size_t edge_to(std::size_t joint) const;
  // Joints ordered so that each parent precedes its children.
  std::vector<std::size_t> topological_order() const;
  // Joint permutation applied by horizontal flipping (involution).
  std::vector<std::size_t> flip_permutation() const;
};

// Bundled 17-joint Human3.6M-style skeleton.
namespace h36m {
inline constexpr std::size_t kHip = 0, kRHip = 1, kRKnee = 2, kRAnkle = 3, kLHip = 4, kLKnee = 5, kLAnkle = 6,
                             kSpine = 7, kThorax = 8, kNeck = 9, kHead = 10, kLShoulder = 11, kLElbow = 12,
                             kLWrist = 13, kRShoulder = 14, kRElbow = 15, kRWrist = 16;
}

SkeletonTopology build_h36m17();

// Every invariant violation as a message; empty means valid.
std::vector<std::string> validate(const SkeletonTopology& topo);

class AdjacencyMask {
 public:
  AdjacencyMask(std::size_t joints, std::vector<std::uint8_t> cells);
  std::size_t joints() const { return joints_; }
  bool operator()(std::size_t i, std::size_t j) const { return cells_[i * joints_ + j] != 0; }
  std::size_t nonzeros() const;
  bool symmetric() const;
  // [J, J] tensor of 0/1 values, no gradient.
  Tensor to_tensor() const;

 private:
  std::size_t joints_;
  std::vector<std::uint8_t> cells_;
};

// M(i, j) = 1 when i and j share a bone; the diagonal is set when include_self.
AdjacencyMask adjacency_mask(const SkeletonTopology& topo, bool include_self = true);

nlohmann::json topology_to_json(const SkeletonTopology& topo);
// Throws std::invalid_argument listing every violation when the document
// does not describe a valid topology.
SkeletonTopology topology_from_json(const nlohmann::json& doc);

}  // namespace scjd
