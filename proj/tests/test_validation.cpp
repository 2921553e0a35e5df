#include <gtest/gtest.h>

#include <carp/synthetic.hpp>
#include <carp/validation.hpp>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace carp;

namespace {

struct Small {
  RiskNetwork net;
  ModelParams params;
  HistoryMatrix history;
};

Small small_instance(std::uint64_t seed, std::size_t months = 120) {
  synthetic::NetworkSpec spec;
  spec.risks = 12;
  spec.density = 0.3;
  auto net = synthetic::random_network(spec, seed);
  const ModelParams p{0.1, 0.05, 1.5};
  auto h = synthetic::random_history(net, p, months, 50, seed).history;
  return {std::move(net), p, std::move(h)};
}

}  // namespace

TEST(KsDistance, Examples) {
  EXPECT_NEAR(ks_distance(std::vector<double>{1.1, 2.0}, std::vector<double>{1.0, 2.0}), 0.1, 1e-15);
  EXPECT_NEAR(ks_distance(std::vector<double>{0.5, 3.0}, std::vector<double>{1.0, 2.0}), 0.5, 1e-15);
  EXPECT_EQ(ks_distance(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 2.0}), 0.0);
}

TEST(KsDistance, ScaleInvariant) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int k = 0; k < 100; ++k) {
    const std::vector<double> a{u(gen), u(gen)}, b{u(gen), u(gen)};
    const double s = u(gen);
    const std::vector<double> as{a[0] * s, a[1] * s}, bs{b[0] * s, b[1] * s};
    EXPECT_NEAR(ks_distance(as, bs), ks_distance(a, b), 1e-12);
  }
}

TEST(KsDistance, Errors) {
  EXPECT_THROW(ks_distance(std::vector<double>{1.0, 2.0}, std::vector<double>{0.0, 2.0}), DataError);
  EXPECT_THROW(ks_distance(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), DataError);
}

TEST(Attribution, Fractions) {
  AttributionCounts c;
  c.internal_only = 6;
  c.external_only = 2;
  c.both = 2;
  const auto f = AttributionFractions::from(c);
  EXPECT_DOUBLE_EQ(f.a, 0.7);
  EXPECT_DOUBLE_EQ(f.b, 0.3);
  EXPECT_DOUBLE_EQ(f.both_fraction, 0.2);
  EXPECT_DOUBLE_EQ(f.a + f.b, 1.0);
  EXPECT_DOUBLE_EQ(f.activation_parameter({2.0, 4.0, 1.0}), 0.7 * 2.0 + 0.3 * 4.0);
  const auto none = AttributionFractions::from(AttributionCounts{});
  EXPECT_EQ(none.activations, 0u);
  EXPECT_EQ(none.a + none.b, 0.0);
}

TEST(Recovery, OutlierCount) {
  EXPECT_EQ(outlier_count(125), 42u);
  EXPECT_EQ(outlier_count(3), 1u);
  EXPECT_EQ(outlier_count(4), 2u);
  EXPECT_EQ(outlier_count(1), 1u);
}

TEST(Recovery, RetainedAreTheClosest) {
  const auto s = small_instance(5);
  RecoveryConfig cfg;
  cfg.replicates = 12;
  cfg.seed = 77;
  cfg.jobs = 4;
  const auto rep = recovery_experiment(s.net, s.history, s.params, cfg);
  EXPECT_EQ(rep.failed, 0u);
  EXPECT_EQ(rep.discarded, 4u);
  EXPECT_EQ(rep.retained, 8u);
  double worst_kept = 0.0, best_dropped = 1e300;
  double act = 0.0, rec = 0.0;
  for (const auto& r : rep.replicates) {
    ASSERT_TRUE(r.ok);
    EXPECT_NEAR(r.fractions.a + r.fractions.b, 1.0, 1e-15);
    if (r.retained) {
      worst_kept = std::max(worst_kept, r.ks);
      act = std::max(act, std::abs(r.activation_parameter / rep.ground_truth_activation - 1));
      rec = std::max(rec, std::abs(r.recovery_parameter / rep.ground_truth_recovery - 1));
    } else {
      best_dropped = std::min(best_dropped, r.ks);
    }
  }
  EXPECT_LE(worst_kept, best_dropped);
  EXPECT_DOUBLE_EQ(rep.activation_bound, act);
  EXPECT_DOUBLE_EQ(rep.recovery_bound, rec);
  EXPECT_EQ(rep.retained_params().size(), 8u);
}

TEST(Recovery, ReproducibleAcrossJobs) {
  const auto s = small_instance(6);
  RecoveryConfig cfg;
  cfg.replicates = 6;
  cfg.seed = 3;
  cfg.jobs = 1;
  const auto a = recovery_experiment(s.net, s.history, s.params, cfg);
  cfg.jobs = 3;
  const auto b = recovery_experiment(s.net, s.history, s.params, cfg);
  ASSERT_EQ(a.replicates.size(), b.replicates.size());
  for (std::size_t r = 0; r < a.replicates.size(); ++r) {
    EXPECT_EQ(a.replicates[r].params, b.replicates[r].params);
    EXPECT_EQ(a.replicates[r].retained, b.replicates[r].retained);
  }
  EXPECT_EQ(a.activation_bound, b.activation_bound);
}

TEST(Recovery, Rejects) {
  const auto s = small_instance(6);
  RecoveryConfig cfg;
  cfg.replicates = 0;
  EXPECT_THROW(recovery_experiment(s.net, s.history, s.params, cfg), UsageError);
  cfg.replicates = 2;
  EXPECT_THROW(recovery_experiment(s.net, s.history, {0.0, 0.0, 1.0}, cfg), NumericalError);
}

TEST(Forward, IdenticalSetsCoincide) {
  const auto s = small_instance(8);
  const std::vector<ModelParams> sets{s.params, s.params};
  const auto rep = forward_error_bounds(s.net, s.history, s.params, sets, 12, 30, 4);
  EXPECT_EQ(rep.active.worst_high, rep.ground_truth.mean_active_fraction);
  EXPECT_EQ(rep.active.worst_low, rep.ground_truth.mean_active_fraction);
  EXPECT_EQ(rep.active.worst_relative_deviation, 0.0);
  EXPECT_EQ(rep.activations.worst_relative_deviation, 0.0);
}

TEST(Forward, GroundTruthMatchesDirectStatistics) {
  const auto s = small_instance(9);
  const std::size_t months = 12, runs = 20;
  const std::uint64_t seed = 11;
  const auto rep = forward_error_bounds(s.net, s.history, s.params, {}, months, runs, seed, 2);
  const CarpDynamics dyn(s.net, s.params);
  const auto last = s.history.month_state(s.history.months() - 1);
  std::vector<HistoryMatrix> sims;
  for (std::size_t r = 0; r < runs; ++r) {
    Rng rng = make_stream(seed, r);
    sims.push_back(simulate_history(dyn, last, months + 1, rng).history);
  }
  const auto direct = activity_statistics(sims, true);
  EXPECT_DOUBLE_EQ(rep.ground_truth.mean_active_fraction, direct.mean_active_fraction);
  EXPECT_DOUBLE_EQ(rep.ground_truth.mean_activations_per_risk, direct.mean_activations_per_risk);
}

TEST(Forward, ZeroActivationParametersNeverActivate) {
  auto s = small_instance(10);
  const std::vector<ModelParams> sets{{0.0, 0.0, 1.0}};
  const auto rep = forward_error_bounds(s.net, s.history, s.params, sets, 12, 10, 1);
  EXPECT_EQ(rep.sets[0].mean_activations_per_risk, 0.0);
}

TEST(NetworkEffect, EdgelessGroundTruthGivesRatioOne) {
  const auto base = small_instance(12);
  const auto net = base.net.without_edges();
  const ModelParams p{0.2, 0.0, 1.5};
  const auto h = synthetic::random_history(net, p, 60, 20, 12).history;
  const auto fitted = fit(h, net);
  const auto rep = network_effect_comparison(net, h, fitted.params, 40, 5);
  // Both sides are the same edgeless model refitted to the same data.
  EXPECT_NEAR(rep.independent_params.alpha, fitted.params.alpha, 1e-6);
  EXPECT_NEAR(rep.independent_params.gamma, fitted.params.gamma, 1e-6);
  EXPECT_NEAR(rep.ratio, 1.0, 1e-3);
}

TEST(NetworkEffect, SampleStdAndInfiniteSteps) {
  const auto s = small_instance(13, 30);
  // All-zero activation: every simulated count is 0, std 0.
  const auto rep = network_effect_comparison(s.net, s.history, {0.0, 0.0, 1.0}, 5, 1, {}, 1,
                                             ModelParams{0.0, 0.0, 1.0});
  const auto hist = activation_counts_per_step(s.history);
  std::size_t nonzero = 0;
  for (double v : hist) nonzero += v > 0;
  ASSERT_GT(nonzero, 0u);
  EXPECT_EQ(rep.network.infinite_steps.size(), nonzero);
  EXPECT_TRUE(std::isinf(rep.network.multiple));
  EXPECT_THROW(network_effect_comparison(s.net, s.history, s.params, 1), UsageError);
}

TEST(NetworkEffect, ActivationCountsPerStep) {
  const auto net = test::make_network({0.5, 0.5}, {});
  const auto h = test::make_history(net, {"0101", "0011"});
  EXPECT_EQ(activation_counts_per_step(h), (std::vector<double>{1.0, 1.0, 1.0}));
}

TEST(Sensitivity, ZeroPerturbationIsBaseline) {
  const auto s = small_instance(14);
  const auto fitted = fit(s.history, s.net);
  SensitivityConfig cfg;
  cfg.perturbation = 0.0;
  const auto rep = sensitivity_suite(s.net, s.history, fitted.params, cfg);
  for (std::size_t i = 0; i < s.net.size(); ++i) {
    EXPECT_EQ(rep.single_likelihood[i], rep.baseline[i]);
    EXPECT_NEAR(rep.single_history[i], rep.baseline[i], 1e-9);
    EXPECT_NEAR(rep.all_history[i], rep.baseline[i], 1e-9);
  }
}

TEST(Sensitivity, LikelihoodCutsLowerEveryRisk) {
  const auto s = small_instance(15);
  SensitivityConfig cfg;
  cfg.seed = 2;
  cfg.jobs = 2;
  const auto rep = sensitivity_suite(s.net, s.history, s.params, cfg);
  for (std::size_t i = 0; i < s.net.size(); ++i) {
    EXPECT_LE(rep.all_likelihood[i], rep.baseline[i] + 1e-12);
    EXPECT_LE(rep.single_likelihood[i], rep.baseline[i] + 1e-12);
  }
  for (std::size_t k = 1; k < rep.order.size(); ++k)
    EXPECT_GE(rep.baseline[rep.order[k - 1]], rep.baseline[rep.order[k]]);
}

TEST(Sensitivity, ThinningRemovesTheRequestedShare) {
  const auto net = test::make_network({0.5}, {});
  auto h = test::make_history(net, {"1111111111"});
  thin_history(h, 0, 0.3, 9);
  EXPECT_EQ(h.active_months(0), 7u);
  auto g = test::make_history(net, {"1111111111"});
  thin_history(g, 0, 0.3, 9);
  EXPECT_TRUE(g == h);
}
