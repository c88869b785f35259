// Copyright 2026 The miadyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <cmath>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "miadyn/data/dataset.hpp"
#include "miadyn/data/membership.hpp"
#include "miadyn/train/mlp.hpp"
#include "miadyn/train/optimizer.hpp"
#include "miadyn/train/population.hpp"
#include "miadyn/train/score_log.hpp"
#include "miadyn/util/parallel.hpp"

namespace miadyn::train {
namespace {

ModelParams RandomParams(std::vector<int> widths, std::uint64_t seed) {
  ModelParams p = ModelParams::Create(std::move(widths)).value();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.7);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.values()[i] = g(rng);
  return p;
}

Eigen::VectorXd RandomVector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

// Layer-by-layer loops with no shared code.
std::vector<double> OracleForward(const ModelParams& p, const std::vector<double>& x) {
  std::vector<double> a = x;
  for (int l = 0; l < p.n_layers(); ++l) {
    const auto w = p.Weight(l);
    const auto b = p.Bias(l);
    std::vector<double> z(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      double s = b[r];
      for (Eigen::Index c = 0; c < w.cols(); ++c) s += w(r, c) * a[static_cast<std::size_t>(c)];
      z[static_cast<std::size_t>(r)] = l + 1 < p.n_layers() ? std::max(0.0, s) : s;
    }
    a = z;
  }
  double mx = a[0], total = 0.0;
  for (double v : a) mx = std::max(mx, v);
  for (double& v : a) total += (v = std::exp(v - mx));
  for (double& v : a) v /= total;
  return a;
}

double SampleLoss(const ModelParams& p, const Eigen::VectorXd& x, int y) {
  return -std::log(Forward(p, x).value()[y]);
}

TEST(ForwardTest, ZeroWeightsGiveUniform) {
  const ModelParams p = ModelParams::Create({3, 5, 4}).value();
  const Eigen::VectorXd probs = Forward(p, Eigen::Vector3d(1.0, -2.0, 0.5)).value();
  for (Eigen::Index c = 0; c < 4; ++c) EXPECT_DOUBLE_EQ(probs[c], 0.25);
}

TEST(ForwardTest, SumsToOneOverRandomDraws) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 1000; ++t) {
    const ModelParams p = RandomParams({4, 6, 3}, static_cast<std::uint64_t>(t));
    EXPECT_NEAR(Forward(p, RandomVector(4, rng)).value().sum(), 1.0, 1e-9);
  }
}

TEST(ForwardTest, MatchesLoopOracle) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const ModelParams p = RandomParams({5, 7, 6, 3}, 100 + static_cast<std::uint64_t>(t));
    const Eigen::VectorXd x = RandomVector(5, rng);
    const Eigen::VectorXd got = Forward(p, x).value();
    const std::vector<double> want = OracleForward(p, std::vector<double>(x.data(), x.data() + 5));
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(got[c], want[static_cast<std::size_t>(c)], 1e-6);
  }
}

TEST(ForwardTest, StableForHugeLogits) {
  ModelParams p = ModelParams::Create({1, 2}).value();
  p.Bias(0) << 1e4, -1e4;
  const Eigen::VectorXd probs = Forward(p, Eigen::VectorXd::Zero(1)).value();
  EXPECT_TRUE(probs.allFinite());
  EXPECT_DOUBLE_EQ(probs[0], 1.0);
}

TEST(ForwardTest, RejectsShapeMismatch) {
  const ModelParams p = ModelParams::Create({3, 2}).value();
  EXPECT_FALSE(Forward(p, Eigen::VectorXd::Zero(4)).ok());
  EXPECT_FALSE(ModelParams::Create({3, 0, 2}).ok());
  EXPECT_FALSE(ModelParams::FromValues({3, 2}, Eigen::VectorXd::Zero(3)).ok());
}

TEST(GradientTest, MatchesCentralDifferencesOnTwoTwoTwo) {
  std::mt19937_64 rng(3);
  const double h = 1e-5;
  for (int t = 0; t < 50; ++t) {
    ModelParams p = RandomParams({2, 2, 2}, 500 + static_cast<std::uint64_t>(t));
    const Eigen::VectorXd x = RandomVector(2, rng);
    const int y = t % 2;
    const Eigen::VectorXd g = PerSampleGradient(p, x, y).value();
    Eigen::VectorXd fd(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      ModelParams plus = p, minus = p;
      plus.values()[i] += h;
      minus.values()[i] -= h;
      fd[i] = (SampleLoss(plus, x, y) - SampleLoss(minus, x, y)) / (2 * h);
    }
    EXPECT_LE((g - fd).norm(), 1e-4 * std::max(1.0, fd.norm()));
  }
}

TEST(GradientTest, OneHotOutputGivesZeroLogitGradient) {
  ModelParams p = ModelParams::Create({1, 3}).value();
  p.Bias(0) << 800.0, 0.0, 0.0;
  const Eigen::VectorXd g = PerSampleGradient(p, Eigen::VectorXd::Ones(1), 0).value();
  EXPECT_EQ(g.norm(), 0.0);
}

TEST(GradientTest, BatchGradientIsMeanOfPerSample) {
  std::mt19937_64 rng(4);
  const ModelParams p = RandomParams({3, 4, 3}, 9);
  Eigen::MatrixXd x(6, 3);
  std::vector<int> labels;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p.size());
  for (int i = 0; i < 6; ++i) {
    x.row(i) = RandomVector(3, rng).transpose();
    labels.push_back(i % 3);
    mean += PerSampleGradient(p, x.row(i).transpose(), i % 3).value() / 6.0;
  }
  const LossGradient lg = ComputeLossGradient(p, x, labels).value();
  EXPECT_LE((lg.grad - mean).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(GradientTest, NormsMatchMaterializedGradients) {
  std::mt19937_64 rng(5);
  const ModelParams p = RandomParams({3, 5, 4, 2}, 10);
  Eigen::MatrixXd x(8, 3);
  std::vector<int> labels;
  for (int i = 0; i < 8; ++i) {
    x.row(i) = RandomVector(3, rng).transpose();
    labels.push_back(i % 2);
  }
  const Eigen::VectorXd norms = PerSampleGradientNorms(p, x, labels).value();
  for (int i = 0; i < 8; ++i) {
    EXPECT_NEAR(norms[i], PerSampleGradient(p, x.row(i).transpose(), i % 2).value().norm(), 1e-10);
  }
}

TEST(HessianTest, VectorProductMatchesGradientDifferences) {
  std::mt19937_64 rng(6);
  const ModelParams p = RandomParams({3, 4, 3}, 11);
  Eigen::MatrixXd x(5, 3);
  std::vector<int> labels;
  for (int i = 0; i < 5; ++i) {
    x.row(i) = RandomVector(3, rng).transpose();
    labels.push_back(i % 3);
  }
  const Eigen::VectorXd v = RandomVector(p.size(), rng);
  const double h = 1e-6;
  ModelParams plus = p, minus = p;
  plus.values() += h * v;
  minus.values() -= h * v;
  const Eigen::VectorXd fd = (ComputeLossGradient(plus, x, labels).value().grad -
                              ComputeLossGradient(minus, x, labels).value().grad) /
                             (2 * h);
  const Eigen::VectorXd hv = HessianVectorProduct(p, x, labels, v).value();
  EXPECT_LE((hv - fd).norm(), 1e-5 * std::max(1.0, fd.norm()));
}

TEST(HessianTest, OutputLayerBlockMatchesVectorProducts) {
  std::mt19937_64 rng(7);
  const ModelParams p = RandomParams({3, 4, 3}, 12);
  Eigen::MatrixXd x(5, 3);
  std::vector<int> labels;
  for (int i = 0; i < 5; ++i) {
    x.row(i) = RandomVector(3, rng).transpose();
    labels.push_back(i % 3);
  }
  const Eigen::MatrixXd block = OutputLayerHessian(p, x).value();
  const Eigen::Index off = static_cast<Eigen::Index>(p.LayerOffset(1));
  const Eigen::Index n = static_cast<Eigen::Index>(p.LayerSize(1));
  ASSERT_EQ(block.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(p.size());
    e[off + j] = 1.0;
    const Eigen::VectorXd col = HessianVectorProduct(p, x, labels, e).value().segment(off, n);
    EXPECT_LE((block.col(j) - col).cwiseAbs().maxCoeff(), 1e-10);
  }
}

OptimizerConfig Sgd(double lr, double momentum, double wd) {
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::kSgdMomentum;
  cfg.lr = lr;
  cfg.momentum = momentum;
  cfg.weight_decay = wd;
  return cfg;
}

TEST(OptimizerTest, PlainGradientDescent) {
  OptimizerState state = OptimizerState::Zeros(2);
  Eigen::VectorXd w(2);
  w << 1.0, -2.0;
  ASSERT_TRUE(SgdMomentumStep(state, w, Eigen::Vector2d(0.5, 1.0), Sgd(0.1, 0.0, 0.0)).ok());
  EXPECT_DOUBLE_EQ(w[0], 0.95);
  EXPECT_DOUBLE_EQ(w[1], -2.1);
}

TEST(OptimizerTest, MomentumAccumulatesVelocity) {
  OptimizerState state = OptimizerState::Zeros(1);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(1, 1.0);
  const Eigen::VectorXd g = Eigen::VectorXd::Constant(1, 1.0);
  ASSERT_TRUE(SgdMomentumStep(state, w, g, Sgd(0.1, 0.9, 0.0)).ok());
  ASSERT_TRUE(SgdMomentumStep(state, w, g, Sgd(0.1, 0.9, 0.0)).ok());
  EXPECT_NEAR(w[0], 1.0 - 0.1 - 0.19, 1e-15);
}

TEST(OptimizerTest, WeightDecayWithZeroGradientShrinks) {
  OptimizerState sgd_state = OptimizerState::Zeros(1);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(1, 2.0);
  ASSERT_TRUE(SgdMomentumStep(sgd_state, w, Eigen::VectorXd::Zero(1), Sgd(0.1, 0.9, 0.5)).ok());
  EXPECT_DOUBLE_EQ(w[0], 2.0 * (1.0 - 0.05));

  OptimizerConfig adam;
  adam.lr = 0.1;
  adam.weight_decay = 0.5;
  OptimizerState adam_state = OptimizerState::Zeros(1);
  Eigen::VectorXd v = Eigen::VectorXd::Constant(1, 2.0);
  ASSERT_TRUE(AdamWStep(adam_state, v, Eigen::VectorXd::Zero(1), adam).ok());
  EXPECT_DOUBLE_EQ(v[0], 2.0 * (1.0 - 0.05));
}

TEST(OptimizerTest, AdamFirstStepIsNearlySignTimesLr) {
  OptimizerConfig cfg;
  cfg.lr = 0.01;
  OptimizerState state = OptimizerState::Zeros(3);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(3);
  const Eigen::Vector3d g(3.0, -0.2, 1e-3);
  ASSERT_TRUE(AdamWStep(state, w, g, cfg).ok());
  for (int i = 0; i < 3; ++i) {
    const double expected = -cfg.lr * g[i] / (std::fabs(g[i]) + cfg.eps);
    EXPECT_NEAR(w[i], expected, 1e-15);
  }
}

TEST(OptimizerTest, SamOnQuadraticMatchesHandComputation) {
  OptimizerConfig cfg = Sgd(0.1, 0.0, 0.0);
  cfg.kind = OptimizerKind::kSamOverSgd;
  cfg.rho = 0.5;
  OptimizerState state = OptimizerState::Zeros(1);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(1, 1.0);
  std::vector<double> probes;
  GradientFn grad = [&](const Eigen::VectorXd& at) -> absl::StatusOr<Eigen::VectorXd> {
    probes.push_back(at[0]);
    return at;
  };
  ASSERT_TRUE(OptimizerStep(state, w, grad, cfg).ok());
  EXPECT_EQ(probes, (std::vector<double>{1.0, 1.5}));
  EXPECT_DOUBLE_EQ(w[0], 0.85);
}

TEST(OptimizerTest, SamPerturbationHasNormRho) {
  OptimizerConfig cfg = Sgd(0.1, 0.9, 0.0);
  cfg.kind = OptimizerKind::kSamOverSgd;
  cfg.rho = 0.3;
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd g = RandomVector(5, rng);
    Eigen::VectorXd w = RandomVector(5, rng);
    const Eigen::VectorXd start = w;
    std::vector<Eigen::VectorXd> probes;
    GradientFn grad = [&](const Eigen::VectorXd& at) -> absl::StatusOr<Eigen::VectorXd> {
      probes.push_back(at);
      return g;
    };
    OptimizerState state = OptimizerState::Zeros(5);
    ASSERT_TRUE(SamStep(state, w, grad, cfg).ok());
    ASSERT_EQ(probes.size(), 2u);
    EXPECT_NEAR((probes[1] - start).norm(), 0.3, 1e-12);
  }
}

TEST(OptimizerTest, SamWithZeroGradientIsBaseStep) {
  OptimizerConfig cfg = Sgd(0.1, 0.9, 0.2);
  cfg.kind = OptimizerKind::kSamOverSgd;
  Eigen::VectorXd a = Eigen::VectorXd::Constant(2, 1.0), b = a;
  OptimizerState sa = OptimizerState::Zeros(2), sb = OptimizerState::Zeros(2);
  GradientFn zero = [](const Eigen::VectorXd& at) -> absl::StatusOr<Eigen::VectorXd> {
    return Eigen::VectorXd::Zero(at.size());
  };
  ASSERT_TRUE(SamStep(sa, a, zero, cfg).ok());
  ASSERT_TRUE(SgdMomentumStep(sb, b, Eigen::VectorXd::Zero(2), cfg).ok());
  EXPECT_EQ(a, b);
}

TEST(OptimizerTest, RejectsInvalidConfigsAndNonFinite) {
  OptimizerConfig cfg;
  cfg.lr = 0.0;
  EXPECT_FALSE(Validate(cfg).ok());
  cfg = Sgd(0.1, 1.0, 0.0);
  EXPECT_FALSE(Validate(cfg).ok());
  cfg = Sgd(0.1, 0.0, 0.0);
  cfg.kind = OptimizerKind::kSamOverSgd;
  cfg.rho = 0.0;
  EXPECT_FALSE(Validate(cfg).ok());
  OptimizerState state = OptimizerState::Zeros(1);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(1);
  EXPECT_FALSE(SgdMomentumStep(state, w, Eigen::VectorXd::Constant(1, NAN), Sgd(0.1, 0, 0)).ok());
}

TEST(ScoreLogTest, ClampsConfidenceAndDerivesLoss) {
  const ScoreRecord lo = MakeScoreRecord(0, 0, 0, true, 0.0, false);
  const ScoreRecord hi = MakeScoreRecord(0, 0, 0, true, 1.0, true);
  EXPECT_GE(static_cast<double>(lo.conf), kConfidenceClamp);
  EXPECT_LE(static_cast<double>(hi.conf), 1.0 - kConfidenceClamp);
  for (const ScoreRecord& r : {lo, hi, MakeScoreRecord(0, 0, 0, false, 0.3, false)}) {
    EXPECT_NEAR(r.loss, -std::log(static_cast<double>(r.conf)), 1e-6);
  }
}

ScoreLog SampleLog() {
  ScoreLog log;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::uint32_t e : {0u, 5u}) {
    for (std::uint32_t i = 0; i < 3; ++i) {
      for (std::uint32_t z = 0; z < 4; ++z) {
        log.records.push_back(MakeScoreRecord(e, i, z, (i + z) % 2, u(rng), z % 3 == 0));
      }
    }
  }
  return log;
}

TEST(ScoreLogTest, JsonLinesRoundTrip) {
  const ScoreLog log = SampleLog();
  const std::string text = ToJsonLines(log);
  EXPECT_EQ(text.substr(0, text.find(',')), "{\"epoch\":0");
  EXPECT_EQ(ParseJsonLines(text).value(), log);
}

TEST(ScoreLogTest, ColumnarRoundTrip) {
  const ScoreLog log = SampleLog();
  EXPECT_EQ(ParseColumnar(ToColumnar(log)).value(), log);
  std::string bytes = ToColumnar(log);
  bytes.pop_back();
  EXPECT_FALSE(ParseColumnar(bytes).ok());
}

TEST(ScoreLogTest, RejectsMalformedLines) {
  EXPECT_FALSE(ParseJsonLines("{\"epoch\":0}\n").ok());
  EXPECT_FALSE(ParseJsonLines("not json\n").ok());
}

TEST(ParamsFileTest, EncodeDecodeRoundTrip) {
  const ModelParams p = Snapshot(RandomParams({3, 4, 2}, 13));
  const ModelParams back = DecodeParams(EncodeParams(p)).value();
  EXPECT_EQ(back.widths(), p.widths());
  EXPECT_EQ(back.values(), p.values());
  std::string bytes = EncodeParams(p);
  bytes[0] = 'X';
  EXPECT_FALSE(DecodeParams(bytes).ok());
}

struct SmallSetup {
  data::SamplePool pool;
  data::MembershipPlan plan;
  TrainingConfig cfg;
};

SmallSetup MakeSetup(double separation) {
  data::DatasetSpec spec;
  spec.n_classes = 3;
  spec.n_samples = 60;
  spec.dim = 4;
  spec.class_separation = separation;
  spec.seed = 21;
  SmallSetup s{data::Generate(spec).value(), data::PlanMembership(60, 4, 22).value(), {}};
  s.cfg.hidden = {8};
  s.cfg.optimizer.lr = 0.01;
  s.cfg.epochs = 6;
  s.cfg.checkpoint_interval = 2;
  s.cfg.batch_size = 8;
  s.cfg.master_seed = 23;
  return s;
}

TEST(PopulationTest, RecordsEveryCheckpointModelAndSample) {
  const SmallSetup s = MakeSetup(3.0);
  const Population pop = TrainPopulation(s.pool, s.plan, s.cfg).value();
  ASSERT_EQ(pop.scores.records.size(), 4u * 60u * 4u);
  ScoreLog sorted = pop.scores;
  sorted.CanonicalSort();
  EXPECT_EQ(sorted, pop.scores);
  for (const ScoreRecord& r : pop.scores.records) {
    EXPECT_EQ(r.member, s.plan.member(static_cast<int>(r.model), static_cast<int>(r.sample)));
  }
  for (const TrainRun& run : pop.runs) {
    EXPECT_EQ(run.checkpoint_epochs, (std::vector<int>{0, 2, 4, 6}));
    EXPECT_EQ(run.checkpoints.size(), 4u);
  }
}

TEST(PopulationTest, ThreadCountDoesNotChangeResults) {
  const SmallSetup s = MakeSetup(3.0);
  SetThreadCap(1);
  const Population one = TrainPopulation(s.pool, s.plan, s.cfg).value();
  SetThreadCap(4);
  const Population four = TrainPopulation(s.pool, s.plan, s.cfg).value();
  SetThreadCap(0);
  EXPECT_EQ(ToJsonLines(one.scores), ToJsonLines(four.scores));
}

TEST(PopulationTest, NonMembersNeverTouchTheModel) {
  SmallSetup s = MakeSetup(3.0);
  const Population base = TrainPopulation(s.pool, s.plan, s.cfg).value();
  const std::vector<int> holdout = s.plan.HoldoutSet(0);
  std::mt19937_64 rng(24);
  for (int z : holdout) s.pool.features.row(z) = RandomVector(4, rng).transpose();
  const Population perturbed = TrainPopulation(s.pool, s.plan, s.cfg).value();
  for (std::size_t k = 0; k < base.runs[0].checkpoints.size(); ++k) {
    EXPECT_EQ(base.runs[0].checkpoints[k].values(), perturbed.runs[0].checkpoints[k].values());
  }
}

TEST(PopulationTest, SamAndSgdShareTheInitialCheckpoint) {
  SmallSetup s = MakeSetup(3.0);
  s.cfg.optimizer = Sgd(0.05, 0.9, 0.0);
  const Population sgd = TrainPopulation(s.pool, s.plan, s.cfg).value();
  s.cfg.optimizer.kind = OptimizerKind::kSamOverSgd;
  const Population sam = TrainPopulation(s.pool, s.plan, s.cfg).value();
  EXPECT_EQ(sgd.runs[1].checkpoints[0].values(), sam.runs[1].checkpoints[0].values());
  EXPECT_NE(sgd.runs[1].checkpoints[1].values(), sam.runs[1].checkpoints[1].values());
}

TEST(PopulationTest, SeparablePoolIsLearned) {
  SmallSetup s = MakeSetup(100.0);
  s.cfg.epochs = 20;
  const Population pop = TrainPopulation(s.pool, s.plan, s.cfg).value();
  double correct = 0.0, members = 0.0;
  for (const ScoreRecord& r : pop.scores.records) {
    if (r.epoch != 20 || !r.member) continue;
    correct += r.correct;
    members += 1.0;
  }
  EXPECT_GT(correct / members, 0.99);
}

TEST(PopulationTest, RejectsBadSchedule) {
  SmallSetup s = MakeSetup(3.0);
  s.cfg.checkpoint_interval = 4;
  EXPECT_FALSE(TrainPopulation(s.pool, s.plan, s.cfg).ok());
}

}  // namespace
}  // namespace miadyn::train
