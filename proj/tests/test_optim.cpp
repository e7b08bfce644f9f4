#include <gtest/gtest.h>

#include <cmath>

#include "dosnet/optim.hpp"

using namespace dosnet;
using namespace dosnet::ad;

TEST(Adam, ZeroGradientLeavesParameter) {
  std::vector<Param> ps{make_param("w", Tensor::scalar(1.5))};
  Adam opt(ps, {0.1});
  ps[0].node->grad_buffer();
  opt.step(ps);
  EXPECT_EQ(ps[0].node->value[0], 1.5);
  EXPECT_EQ(opt.steps(), 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  for (double g : {3.0, -0.02, 1e3}) {
    std::vector<Param> ps{make_param("w", Tensor::scalar(0.0))};
    Adam opt(ps, {0.01});
    ps[0].node->grad_buffer()[0] = g;
    opt.step(ps);
    EXPECT_NEAR(ps[0].node->value[0], -0.01 * (g > 0 ? 1.0 : -1.0), 1e-6);
  }
}

TEST(Adam, ConvergesOnQuadratic) {
  std::vector<Param> ps{make_param("x", Tensor::scalar(0.0))};
  Adam opt(ps, {0.1});
  for (int i = 0; i < 500; ++i) {
    ps[0].node->zero_grad();
    auto x = ps[0].node;
    auto d = add(x, constant(Tensor::scalar(-2.0)));
    backward(mul(d, d));
    opt.step(ps);
  }
  EXPECT_LT(std::abs(ps[0].node->value[0] - 2.0), 1e-3);
}

TEST(Adam, L2TermPullsTowardZero) {
  std::vector<Param> ps{make_param("w", Tensor::scalar(1.0))};
  Adam opt(ps, {0.01, 0.9, 0.999, 1e-8, 0.5});
  ps[0].node->grad_buffer();
  opt.step(ps);
  EXPECT_NEAR(ps[0].node->value[0], 0.99, 1e-6);
}

TEST(Adam, RejectsDuplicatesAndShapeChanges) {
  Param p = make_param("w", Tensor::scalar(1.0));
  std::vector<Param> twice{p, p};
  EXPECT_THROW(Adam(twice, {}), ArgumentError);
  std::vector<Param> ps{p};
  Adam opt(ps, {});
  std::vector<Param> other{make_param("w", Tensor({2}, DType::Real))};
  EXPECT_THROW(opt.step(other), DimensionError);
}

TEST(Adam, FrozenParametersAreSkipped) {
  std::vector<Param> ps{make_param("a", Tensor::scalar(1.0), false), make_param("b", Tensor::scalar(1.0))};
  Adam opt(ps, {0.1});
  ps[1].node->grad_buffer()[0] = 1.0;
  opt.step(ps);
  EXPECT_EQ(ps[0].node->value[0], 1.0);
  EXPECT_NEAR(ps[1].node->value[0], 0.9, 1e-6);
}

TEST(Schedule, StepDecay) {
  EXPECT_DOUBLE_EQ(lr_schedule(4e-4, 0), 4e-4);
  EXPECT_DOUBLE_EQ(lr_schedule(4e-4, 29), 4e-4);
  EXPECT_NEAR(lr_schedule(4e-4, 30), 4e-5, 1e-18);
  EXPECT_NEAR(lr_schedule(4e-4, 60), 4e-6, 1e-19);
}
