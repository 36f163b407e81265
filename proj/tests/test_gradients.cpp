#include <gtest/gtest.h>

#include "scjd/distill.hpp"
#include "scjd/gradcheck.hpp"
#include "scjd/layers.hpp"
#include "scjd/posenet.hpp"
#include "scjd/upsample.hpp"
#include "test_util.hpp"

namespace scjd {
namespace {

using testing::random_tensor;

constexpr double kOpTol = 1e-5;

void expect_grad_ok(const std::function<Tensor()>& f, std::vector<Tensor> inputs, double tol = kOpTol,
                    std::size_t max_coords = 0) {
  GradCheckOptions opts;
  opts.max_coords_per_input = max_coords;
  const auto r = grad_check(f, std::move(inputs), opts);
  EXPECT_LT(r.max_rel_error, tol) << "input " << r.worst_input << " coord " << r.worst_index << " analytic "
                                  << r.analytic << " numeric " << r.numeric;
  EXPECT_GT(r.coords_checked, 0u);
}

// Weighted sum so every output coordinate gets a distinct upstream gradient.
Tensor probe(const Tensor& y, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  return ops::sum(ops::mul(y, random_tensor(y.shape(), rng, false)));
}

TEST(GradCheck, LinearFunctionIsExactToRoundoff) {
  const Tensor x = Tensor::from({3}, {1, -2, 0.5}, true);
  const auto r = grad_check([&] { return ops::sum(ops::scale(x, 3.0)); }, {x});
  EXPECT_LT(r.max_rel_error, 1e-9);
}

TEST(GradCheck, Matmul) {
  std::mt19937_64 rng(1);
  const Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng);
  expect_grad_ok([&] { return ops::sum(ops::matmul(a, b)); }, {a, b}, 1e-6);
  const Tensor c = random_tensor({2, 2, 3, 4}, rng), d = random_tensor({2, 4, 3}, rng);
  expect_grad_ok([&] { return probe(ops::matmul(c, d)); }, {c, d});
}

TEST(GradCheck, BroadcastElementwise) {
  std::mt19937_64 rng(2);
  const Tensor a = random_tensor({2, 3}, rng), b = random_tensor({3}, rng), c = random_tensor({2, 1}, rng);
  expect_grad_ok([&] { return probe(ops::add(a, b)); }, {a, b});
  expect_grad_ok([&] { return probe(ops::sub(c, a)); }, {a, c});
  expect_grad_ok([&] { return probe(ops::mul(a, b)); }, {a, b});
  expect_grad_ok([&] { return probe(ops::mul(ops::add(a, 0.5), ops::scale(c, -2.0))); }, {a, c});
}

TEST(GradCheck, BroadcastAddGradientIsColumnSum) {
  std::mt19937_64 rng(3);
  const Tensor a = random_tensor({2, 3}, rng), b = random_tensor({3}, rng);
  const Tensor up = random_tensor({2, 3}, rng, false);
  ops::sum(ops::mul(ops::add(a, b), up)).backward();
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(b.grad()[j], up.at({0, j}) + up.at({1, j}), 1e-15);
}

TEST(GradCheck, Linear) {
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor({5, 4}, rng), w = random_tensor({4, 3}, rng), b = random_tensor({3}, rng);
  expect_grad_ok([&] { return probe(ops::linear(x, w, b)); }, {x, w, b}, 1e-6);
  expect_grad_ok([&] { return probe(ops::linear(x, w, Tensor())); }, {x, w}, 1e-6);
}

TEST(GradCheck, LayerNormSoftmaxGelu) {
  std::mt19937_64 rng(5);
  const Tensor x = random_tensor({3, 5}, rng, true, -2, 2);
  const Tensor g = random_tensor({5}, rng), b = random_tensor({5}, rng);
  expect_grad_ok([&] { return probe(ops::layer_norm(x, g, b)); }, {x, g, b});
  expect_grad_ok([&] { return probe(ops::softmax(x)); }, {x});
  expect_grad_ok([&] { return probe(ops::gelu(x)); }, {x});
}

TEST(GradCheck, AbsNormReductionsAndShapes) {
  std::mt19937_64 rng(6);
  const Tensor x = random_tensor({2, 3, 4}, rng);
  expect_grad_ok([&] { return probe(ops::abs(x)); }, {x});
  expect_grad_ok([&] { return probe(ops::norm_last(x)); }, {x});
  expect_grad_ok([&] { return ops::mean(ops::mul(x, x)); }, {x});
  expect_grad_ok([&] { return probe(ops::permute(ops::reshape(x, {6, 4}), {1, 0})); }, {x});
  expect_grad_ok([&] { return probe(ops::transpose(x)); }, {x});
}

TEST(GradCheck, DisconnectedParameterKeepsZeroGrad) {
  const Tensor x = Tensor::from({2}, {1, 2}, true);
  const Tensor unused = Tensor::from({2}, {3, 4}, true);
  ops::sum(x).backward();
  EXPECT_FALSE(unused.has_grad());
  const auto r = grad_check([&] { return ops::sum(x); }, {x, unused});
  EXPECT_LT(r.max_rel_error, 1e-9);
}

TEST(GradCheck, ConvAndDeconv) {
  std::mt19937_64 rng(7);
  const Tensor x = random_tensor({2, 4, 9}, rng), w = random_tensor({6, 2, 3}, rng);
  expect_grad_ok([&] { return probe(ops::conv1d(x, w, 2, 2)); }, {x, w});
  const Tensor y = random_tensor({2, 3, 5}, rng), v = random_tensor({3, 4, 3}, rng);
  expect_grad_ok([&] { return probe(ops::deconv1d(y, v, 3)); }, {y, v});
  // conv1d followed by deconv1d sharing one weight tensor
  const Tensor z = random_tensor({3, 7}, rng), u = random_tensor({3, 3, 2}, rng);
  expect_grad_ok([&] { return probe(ops::deconv1d(ops::conv1d(z, u, 2), u, 2)); }, {z, u});
}

std::vector<Tensor> tensors_of(const ParameterList& params) {
  std::vector<Tensor> out;
  for (const auto& p : params) out.push_back(p.tensor);
  return out;
}

// Leaves every weight nonzero so no branch of the layer is trivially dead.
void randomize(ParameterList& params, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& p : params)
    for (auto& v : p.tensor.mutable_values()) v += u(rng);
}

TEST(GradCheck, MultiHeadSelfAttention) {
  std::mt19937_64 rng(8);
  const auto mhsa = MultiHeadSelfAttention::init(8, 2, rng);
  ParameterList params;
  mhsa.collect(params, "m");
  randomize(params, 1);
  const Tensor x = random_tensor({2, 5, 8}, rng);
  auto inputs = tensors_of(params);
  inputs.push_back(x);
  expect_grad_ok([&] { return probe(mhsa(x)); }, inputs);
}

TEST(GradCheck, EncoderLayer) {
  std::mt19937_64 rng(9);
  const auto layer = EncoderLayer::init(8, 4, 16, rng);
  ParameterList params;
  layer.collect(params, "e");
  randomize(params, 2);
  const Tensor x = random_tensor({2, 4, 8}, rng);
  auto inputs = tensors_of(params);
  inputs.push_back(x);
  expect_grad_ok([&] { return probe(layer(x)); }, inputs);
}

TEST(GradCheck, Upsampler) {
  std::mt19937_64 rng(10);
  const auto up = DeconvUpsampler::init(6, 10, 3, rng);
  ParameterList params;
  up.collect(params, "u");
  randomize(params, 3);
  const Tensor y = random_tensor({2, 3, 6}, rng);
  auto inputs = tensors_of(params);
  inputs.push_back(y);
  expect_grad_ok([&] { return probe(upsample_student(y, up)); }, inputs);
}

TEST(GradCheck, LossFunctions) {
  std::mt19937_64 rng(11);
  const Tensor pred = random_tensor({3, 12}, rng), gt = random_tensor({3, 12}, rng, false);
  expect_grad_ok([&] { return mpjpe_loss(pred, gt); }, {pred});
  const Tensor up = random_tensor({2, 6, 5}, rng), t = random_tensor({2, 6, 5}, rng, false);
  expect_grad_ok([&] { return temp_loss(up, t); }, {up});
  const Tensor f = random_tensor({2, 4, 3}, rng);
  const Tensor mask = Tensor::from({4, 4}, {1, 1, 0, 0, 1, 1, 1, 0, 0, 1, 1, 1, 0, 0, 1, 1});
  expect_grad_ok([&] { return probe(masked_gram(f, mask)); }, {f});
}

// Small toy pair: teacher f=9, student f=3 with stride 3, width 8, depth 1.
struct ToyPair {
  ModelConfig tcfg = default_teacher_config(9, 8, 1);
  ModelConfig scfg = default_student_config(3, 3, 8, 8, 1);
  PoseFormerModel teacher{tcfg, "teacher", 5};
  PoseFormerModel student{scfg, "student", 6};
  ProjectionHead proj;
  SkeletonTopology topo = build_h36m17();
  AdjacencyMask mask = adjacency_mask(topo);
  std::vector<std::size_t> idx{1, 4, 7};
  Tensor x_teacher, x_student, target;
  DistillTaps t_taps;

  ToyPair() {
    std::mt19937_64 rng(12);
    proj = ProjectionHead::init(8, 8, rng);
    randomize(student.parameters(), 4, 0.2);
    randomize(teacher.parameters(), 5, 0.2);
    x_teacher = random_tensor({2, 9, 17, 2}, rng, false);
    x_student = gather_frames(x_teacher, idx);
    target = random_tensor({2, 51}, rng, false, -500, 500);
    NoGradGuard ng;
    t_taps = teacher.forward(x_teacher);
  }

  Tensor loss(std::size_t epoch, const DistillConfig& cfg) const {
    const DistillTaps s = student.forward(x_student);
    LossTerms terms;
    terms.reg = mpjpe_loss(s.center_pred, target);
    terms.emb = emb_loss(s, t_taps, idx, proj, epoch, cfg);
    terms.attn = attn_loss(s, t_taps, idx, mask);
    terms.temp = temp_loss(s.upsampled, t_taps.temporal_out);
    return total_loss(terms, cfg);
  }
};

TEST(GradCheck, StudentEndToEndTotalLoss) {
  ToyPair toy;
  DistillConfig cfg;
  cfg.gamma = 0.5;
  ParameterList all = toy.student.parameters();
  toy.proj.collect(all, "proj");
  GradCheckOptions opts;
  opts.max_coords_per_input = 12;
  for (std::size_t epoch : {1u, 25u}) {
    const auto r = grad_check([&] { return toy.loss(epoch, cfg); }, tensors_of(all), opts);
    EXPECT_LT(r.max_rel_error, 1e-4) << "epoch " << epoch << " worst " << all[r.worst_input].name;
  }
}

TEST(GradCheck, TeacherEndToEndRegression) {
  const ModelConfig cfg = default_teacher_config(3, 8, 1);
  PoseFormerModel model(cfg, "teacher", 13);
  randomize(model.parameters(), 6, 0.2);
  std::mt19937_64 rng(14);
  const Tensor x = random_tensor({2, 3, 17, 2}, rng, false);
  const Tensor y = random_tensor({2, 51}, rng, false, -500, 500);
  GradCheckOptions opts;
  opts.max_coords_per_input = 12;
  const auto r =
      grad_check([&] { return mpjpe_loss(model.forward(x).center_pred, y); }, tensors_of(model.parameters()), opts);
  EXPECT_LT(r.max_rel_error, 1e-4) << model.parameters()[r.worst_input].name;
}

}  // namespace
}  // namespace scjd
