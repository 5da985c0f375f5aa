#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fairsense/error.hpp"
#include "fairsense/tape.hpp"
#include "test_support.hpp"

namespace fairsense {
namespace {

using testing::rel_err;

TEST(TapeMatVec, IdentityMatrix) {
  Tape tape;
  const NodeId y = tape.matvec(tape.constant(Tensor::matrix({{1, 0}, {0, 1}})),
                               tape.constant(Tensor::vector({3, 4})));
  EXPECT_EQ(tape.value(y), Tensor::vector({3, 4}));
}

TEST(TapeMatVec, RowVector) {
  Tape tape;
  const NodeId y =
      tape.matvec(tape.constant(Tensor::matrix({{2, -3}})), tape.constant(Tensor::vector({1, 1})));
  EXPECT_EQ(tape.value(y), Tensor::vector({-1}));
}

TEST(TapeMatVec, MatchesNaiveLoop) {
  Rng rng(11);
  const auto w = testing::random_vector(rng, 12);
  const auto x = testing::random_vector(rng, 3);
  Tape tape;
  const NodeId y = tape.matvec(tape.constant(Tensor::matrix(4, 3, w)), tape.constant(Tensor::vector(x)));
  for (std::size_t r = 0; r < 4; ++r) {
    double expected = 0.0;
    for (std::size_t c = 0; c < 3; ++c) expected += w[r * 3 + c] * x[c];
    EXPECT_NEAR(tape.value(y)[r], expected, 1e-12);
  }
}

TEST(TapeMatVec, ShapeMismatchNamesBothShapes) {
  Tape tape;
  const NodeId w = tape.constant(Tensor::matrix(2, 3, std::vector<double>(6, 1.0)));
  const NodeId x = tape.constant(Tensor::vector({1, 2}));
  try {
    tape.matvec(w, x);
    FAIL() << "expected a dimension error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
    EXPECT_NE(std::string(e.what()).find("[2x3]"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("[2]"), std::string::npos) << e.what();
  }
}

TEST(TapeActivations, SigmoidAndRelu) {
  Tape tape;
  EXPECT_EQ(tape.value(tape.sigmoid(tape.constant(Tensor::scalar(0.0))))[0], 0.5);
  EXPECT_EQ(tape.value(tape.relu(tape.constant(Tensor::scalar(-2.5))))[0], 0.0);
  EXPECT_EQ(tape.value(tape.relu(tape.constant(Tensor::scalar(2.5))))[0], 2.5);
}

TEST(TapeActivations, SigmoidDeepNegativeIsFiniteAndTiny) {
  // exp(-800) ~ 3.7e-348 underflows to a subnormal-or-zero; the value must
  // stay finite, non-negative and below 1e-300.
  const double s = sigmoid(-800.0);
  EXPECT_TRUE(std::isfinite(s));
  EXPECT_GE(s, 0.0);
  EXPECT_LE(s, 1e-300);
  EXPECT_EQ(sigmoid(800.0), 1.0);
  // exp(-30)/(1+exp(-30)) = 9.357622968839299e-14 (50-digit evaluation).
  EXPECT_LT(rel_err(sigmoid(-30.0), 9.357622968839299e-14), 1e-14);
}

TEST(TapeLoss, BceAtHalf) {
  Tape tape;
  const NodeId l = tape.bce(tape.constant(Tensor::scalar(0.5)), 1);
  EXPECT_NEAR(tape.value(l)[0], std::log(2.0), 1e-15);
  EXPECT_NEAR(tape.value(l)[0], 0.693147, 1e-6);
}

TEST(TapeLoss, BceApproachesZeroForPerfectPrediction) {
  Tape tape;
  const NodeId l = tape.bce(tape.constant(Tensor::scalar(1.0 - 1e-12)), 1);
  EXPECT_LT(tape.value(l)[0], 1e-11);
}

TEST(TapeLoss, BceRejectsSaturatedProbability) {
  Tape tape;
  EXPECT_THROW(tape.bce(tape.constant(Tensor::scalar(0.0)), 0), Error);
  EXPECT_THROW(tape.bce(tape.constant(Tensor::scalar(1.0)), 1), Error);
  try {
    tape.bce(tape.constant(Tensor::scalar(1.0)), 1);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDomain);
  }
}

TEST(TapeLoss, FusedFormIsSoftplus) {
  // softplus(3) = ln(1 + e^3) = 3.0485873515737420 (50-digit evaluation).
  Tape tape;
  const NodeId l = tape.bce_with_logits(tape.constant(Tensor::scalar(3.0)), 0);
  EXPECT_NEAR(tape.value(l)[0], 3.048587351573742, 1e-15);
  EXPECT_NEAR(softplus(3.0), 3.048587, 1e-6);
  // Large logits stay finite in logit space.
  Tape tape2;
  const NodeId big = tape2.bce_with_logits(tape2.constant(Tensor::scalar(800.0)), 0);
  EXPECT_NEAR(tape2.value(big)[0], 800.0, 1e-12);
}

TEST(TapeBackward, SigmoidSlopeAtZero) {
  Tape tape;
  const NodeId x = tape.input(Tensor::scalar(0.0));
  const Gradients g = tape.backward(tape.sigmoid(x));
  EXPECT_EQ(g.of(x)[0], 0.25);
}

TEST(TapeBackward, LinearMap) {
  Tape tape;
  const NodeId w = tape.constant(Tensor::matrix({{2, -3}}));
  const NodeId x = tape.input(Tensor::vector({0.7, -1.1}));
  const Gradients g = tape.backward(tape.matvec(w, x));
  EXPECT_EQ(g.of(x), Tensor::vector({2, -3}));
  EXPECT_FALSE(g.contains(w));
}

TEST(TapeBackward, NonScalarOutputIsContractError) {
  Tape tape;
  const NodeId x = tape.input(Tensor::vector({1, 2}));
  try {
    (void)tape.backward(tape.relu(x));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kContract);
  }
}

TEST(TapeBackward, ChainRuleThroughNestedSigmoid) {
  Tape tape;
  const double x0 = 0.3;
  const NodeId x = tape.input(Tensor::scalar(x0));
  const Gradients g = tape.backward(tape.sigmoid(tape.sigmoid(x)));
  const double s1 = sigmoid(x0);
  const double s2 = sigmoid(s1);
  EXPECT_NEAR(g.of(x)[0], s2 * (1 - s2) * s1 * (1 - s1), 1e-16);
}

TEST(TapeBackward, FanOutAccumulates) {
  Tape tape;
  const NodeId x = tape.input(Tensor::vector({1.5}));
  const NodeId y = tape.add(tape.scale(x, 3.0), tape.scale(x, -0.5));
  const Gradients g = tape.backward(tape.mean(std::vector<NodeId>{y}));
  EXPECT_EQ(g.of(x)[0], 2.5);
}

TEST(TapeBackward, UnreachedLeafGetsZeroAdjoint) {
  Tape tape;
  const NodeId x = tape.input(Tensor::vector({1.0, 2.0}));
  const NodeId unused = tape.weight(Tensor::vector({5.0}));
  const Gradients g = tape.backward(tape.sigmoid(tape.constant(Tensor::scalar(0.0))));
  EXPECT_EQ(g.of(x), Tensor::vector({0.0, 0.0}));
  EXPECT_EQ(g.of(unused), Tensor::vector({0.0}));
}

TEST(TapeBackward, ConstantsDoNotRequireGrad) {
  Tape tape;
  const NodeId c = tape.constant(Tensor::scalar(1.0));
  const NodeId y = tape.sigmoid(c);
  EXPECT_FALSE(tape.requires_grad(y));
  const NodeId w = tape.weight(Tensor::scalar(1.0));
  EXPECT_TRUE(tape.requires_grad(tape.add(y, w)));
}

TEST(TapeBackward, GradientIsLinearInOutputScale) {
  Rng rng(5);
  const MlpModel model = testing::random_mlp(rng, {4, 6, 1});
  const auto x = testing::random_vector(rng, 4);
  Tape t1;
  const ForwardTrace f1 = model.record(t1, x, LeafKind::kConstant, LeafKind::kInput);
  const Gradients g1 = t1.backward(f1.probability);
  Tape t2;
  const ForwardTrace f2 = model.record(t2, x, LeafKind::kConstant, LeafKind::kInput);
  const Gradients g2 = t2.backward(t2.add(t2.scale(f2.probability, 3.0), t2.scale(f2.probability, -1.25)));
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(g2.of(f2.input)[j], 1.75 * g1.of(f1.input)[j], 1e-15);
  }
}

TEST(TapeBackward, Deterministic) {
  Rng rng(8);
  const MlpModel model = testing::random_mlp(rng, {5, 7, 3, 1});
  const auto x = testing::random_vector(rng, 5);
  auto run = [&] {
    Tape tape;
    const ForwardTrace f = model.record(tape, x, LeafKind::kWeight, LeafKind::kInput);
    const Gradients g = tape.backward(tape.bce_with_logits(f.logit, 1));
    std::vector<Tensor> out{g.of(f.input)};
    for (NodeId w : f.weights) out.push_back(g.of(w));
    return out;
  };
  EXPECT_EQ(run(), run());
}

// Central-difference oracle over every weight and input partial of random
// two-layer networks.
TEST(TapeBackward, MatchesFiniteDifferences) {
  Rng rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    MlpModel model = testing::random_mlp(rng, {1 + rng.below(6), 1 + rng.below(8), 1});
    std::vector<double> x = testing::random_vector(rng, model.input_width(), 2.0);
    if (testing::min_hidden_margin(model, x) < 1e-3) continue;
    Tape tape;
    const ForwardTrace f = model.record(tape, x, LeafKind::kWeight, LeafKind::kInput);
    const Gradients g = tape.backward(f.probability);
    auto predict = [&] { return model.predict(x); };
    for (std::size_t j = 0; j < x.size(); ++j) {
      EXPECT_LT(rel_err(g.of(f.input)[j], testing::central_difference(predict, x[j])), 1e-6);
      ++checked;
    }
    auto& layers = model.mutable_layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (std::size_t k = 0; k < layers[l].weights.size(); ++k) {
        const double fd = testing::central_difference(predict, layers[l].weights[k]);
        EXPECT_LT(rel_err(g.of(f.weights[l])[k], fd), 1e-6) << "layer " << l << " weight " << k;
        ++checked;
      }
      for (std::size_t k = 0; k < layers[l].bias.size(); ++k) {
        const double fd = testing::central_difference(predict, layers[l].bias[k]);
        EXPECT_LT(rel_err(g.of(f.biases[l])[k], fd), 1e-6);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 100);
}

}  // namespace
}  // namespace fairsense
