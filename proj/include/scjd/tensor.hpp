#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "scjd/errors.hpp"

namespace scjd {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_numel(const Shape& s);

// Tensor storage. A fixed alignment keeps vectorized reductions from peeling
// a different prefix per allocation, so results do not depend on addresses.
using Buffer = std::vector<double, Eigen::aligned_allocator<double>>;

struct TensorData;

// One recorded op in the define-by-run graph. The backward closure reads the
// gradient of the produced tensor and accumulates into its inputs.
struct Node {
  std::vector<std::shared_ptr<TensorData>> inputs;
  std::function<void(TensorData& out)> backward;
  bool consumed = false;
};

struct TensorData {
  Shape shape;
  Buffer values;
  Buffer grad;  // empty until first accumulation
  bool requires_grad = false;
  std::shared_ptr<Node> node;

  // Returns the grad buffer, allocating zeros on first use.
  Buffer& grad_buffer();
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorData> data) : data_(std::move(data)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(data_); }
  const Shape& shape() const { return data_->shape; }
  std::size_t rank() const { return data_->shape.size(); }
  // Negative axes count from the end.
  std::size_t dim(int axis) const;
  std::size_t numel() const { return data_->values.size(); }

  std::span<const double> values() const { return data_->values; }
  std::span<double> mutable_values() { return data_->values; }
  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const { return data_->requires_grad; }
  bool has_grad() const { return !data_->grad.empty(); }
  std::span<const double> grad() const { return data_->grad; }
  std::span<double> mutable_grad() { return data_->grad_buffer(); }
  void zero_grad();

  // Values copied into a fresh leaf with no graph history.
  Tensor detach() const;

  // Reverse-mode sweep from this scalar. A graph can only be swept once.
  void backward();

  const std::shared_ptr<TensorData>& data() const { return data_; }

 private:
  std::shared_ptr<TensorData> data_;
};

// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Counts scalar multiplies executed inside matmul / conv1d / deconv1d kernels
// on this thread while alive. Nested counters are not supported.
class MultiplyCounter {
 public:
  MultiplyCounter();
  ~MultiplyCounter();
  MultiplyCounter(const MultiplyCounter&) = delete;
  MultiplyCounter& operator=(const MultiplyCounter&) = delete;
  std::uint64_t count() const { return count_; }

 private:
  std::uint64_t count_ = 0;
  friend void record_multiplies(std::uint64_t n);
};

void record_multiplies(std::uint64_t n);

namespace detail {
// Builds an output tensor and, when any input needs gradients and recording
// is on, attaches a graph node with the given backward closure.
Tensor make_result(Shape shape, Buffer values, std::vector<Tensor> inputs,
                   std::function<void(TensorData& out)> backward);
}  // namespace detail

}  // namespace scjd
