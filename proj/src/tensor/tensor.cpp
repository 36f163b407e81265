#include "scjd/tensor.hpp"

#include <malloc.h>

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace scjd {

namespace {
thread_local bool g_grad_enabled = true;

// Activation buffers are allocated and freed every step. Keeping them on the
// heap instead of fresh mmap pages avoids a page-fault storm per op.
[[maybe_unused]] const bool g_allocator_tuned = [] {
  mallopt(M_MMAP_THRESHOLD, 32 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);
  return true;
}();

thread_local MultiplyCounter* g_counter = nullptr;
}  // namespace

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ", ";
    os << s[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

Buffer& TensorData::grad_buffer() {
  if (grad.empty()) grad.assign(values.size(), 0.0);
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto d = std::make_shared<TensorData>();
  d->values.assign(shape_numel(shape), value);
  d->shape = std::move(shape);
  d->requires_grad = requires_grad;
  return Tensor(std::move(d));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("tensor shape " + shape_str(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
  }
  auto d = std::make_shared<TensorData>();
  d->shape = std::move(shape);
  d->values.assign(values.begin(), values.end());
  d->requires_grad = requires_grad;
  return Tensor(std::move(d));
}

Tensor Tensor::scalar(double v, bool requires_grad) { return from({1}, {v}, requires_grad); }

std::size_t Tensor::dim(int axis) const {
  const int r = static_cast<int>(rank());
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(shape()));
  }
  return shape()[static_cast<std::size_t>(a)];
}

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() on non-scalar tensor of shape " + shape_str(shape()));
  return data_->values[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  if (index.size() != rank()) throw DimensionError("index rank mismatch for shape " + shape_str(shape()));
  std::size_t flat = 0;
  std::size_t i = 0;
  for (auto v : index) {
    if (v >= shape()[i]) throw DimensionError("index out of range for shape " + shape_str(shape()));
    flat = flat * shape()[i] + v;
    ++i;
  }
  return data_->values[flat];
}

void Tensor::zero_grad() {
  if (!data_->grad.empty()) std::fill(data_->grad.begin(), data_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
  auto d = std::make_shared<TensorData>();
  d->shape = shape();
  d->values = data_->values;
  return Tensor(std::move(d));
}

void Tensor::backward() {
  if (numel() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " + shape_str(shape()));
  }
  if (!data_->node) {
    if (data_->requires_grad) data_->grad_buffer()[0] += 1.0;
    return;
  }
  if (data_->node->consumed) {
    throw ContractError("backward() called twice on the same graph; run forward again");
  }

  // Iterative post-order DFS gives a topological order (inputs before outputs).
  std::vector<std::shared_ptr<TensorData>> order;
  std::unordered_set<const TensorData*> visited;
  std::vector<std::pair<std::shared_ptr<TensorData>, std::size_t>> stack;
  stack.emplace_back(data_, 0);
  visited.insert(data_.get());
  while (!stack.empty()) {
    auto& [t, next] = stack.back();
    if (t->node && next < t->node->inputs.size()) {
      auto child = t->node->inputs[next++];
      if (child->node && !visited.count(child.get())) {
        visited.insert(child.get());
        stack.emplace_back(std::move(child), 0);
      }
      continue;
    }
    order.push_back(t);
    stack.pop_back();
  }

  data_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorData& t = **it;
    if (!t.grad.empty() && t.node->backward) t.node->backward(t);
    t.node->consumed = true;
    t.node->backward = nullptr;
    t.node->inputs.clear();
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

MultiplyCounter::MultiplyCounter() {
  if (g_counter) throw ContractError("nested MultiplyCounter");
  g_counter = this;
}
MultiplyCounter::~MultiplyCounter() { g_counter = nullptr; }

void record_multiplies(std::uint64_t n) {
  if (g_counter) g_counter->count_ += n;
}

namespace detail {

Tensor make_result(Shape shape, Buffer values, std::vector<Tensor> inputs,
                   std::function<void(TensorData& out)> backward) {
  auto out = std::make_shared<TensorData>();
  out->shape = std::move(shape);
  out->values = std::move(values);
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    out->requires_grad = true;
    auto node = std::make_shared<Node>();
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.data());
    node->backward = std::move(backward);
    out->node = std::move(node);
  }
  return Tensor(std::move(out));
}

}  // namespace detail

}  // namespace scjd
