#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "bdnas/data.hpp"
#include "bdnas/experiments.hpp"
#include "bdnas/neural.hpp"

using namespace bdnas;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "bdnas_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::vector<unsigned char> cifar_fixture(std::size_t records, std::uint64_t seed) {
  RandomStream rng(seed, "fixture");
  std::vector<unsigned char> bytes;
  for (std::size_t r = 0; r < records; ++r) {
    bytes.push_back(static_cast<unsigned char>(rng.below(10)));
    for (std::size_t i = 0; i < 3072; ++i) bytes.push_back(static_cast<unsigned char>(rng.below(256)));
  }
  return bytes;
}

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// Kendall tau-a by brute force over all pairs (no ties in the inputs used).
double brute_tau(const std::vector<double>& a, const std::vector<double>& b) {
  int conc = 0, disc = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double s = (a[i] - a[j]) * (b[i] - b[j]);
      if (s > 0) ++conc;
      if (s < 0) ++disc;
    }
  return static_cast<double>(conc - disc) / static_cast<double>(conc + disc);
}

}  // namespace

TEST(Cifar, RoundTripMatchesBytesOver255) {
  const auto bytes = cifar_fixture(3, 1);
  const auto path = temp_path("cifar_ok.bin");
  write_bytes(path, bytes);
  auto d = load_cifar10_binary({path}, {false, 0});
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.channels, 3);
  EXPECT_EQ(d.height, 32);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(d.labels[r], bytes[r * kCifarRecordBytes]);
    const auto img = d.image(r);
    for (std::size_t i = 0; i < 3072; ++i) EXPECT_EQ(img[i], bytes[r * kCifarRecordBytes + 1 + i] / 255.0);
  }
}

TEST(Cifar, NormalizationGivesZeroMeanUnitStd) {
  const auto path = temp_path("cifar_norm.bin");
  write_bytes(path, cifar_fixture(4, 2));
  auto d = load_cifar10_binary({path});
  ASSERT_EQ(d.channel_mean.size(), 3u);
  for (std::size_t ch = 0; ch < 3; ++ch) {
    double s = 0, s2 = 0;
    for (std::size_t r = 0; r < d.size(); ++r)
      for (std::size_t j = 0; j < 1024; ++j) {
        const double v = d.image(r)[ch * 1024 + j];
        s += v;
        s2 += v * v;
      }
    const double n = 4.0 * 1024;
    EXPECT_NEAR(s / n, 0.0, 1e-9);
    EXPECT_NEAR(s2 / n, 1.0, 1e-6);
  }
}

TEST(Cifar, TruncatedFileReportsOffset) {
  auto bytes = cifar_fixture(2, 3);
  bytes.resize(bytes.size() - 10);
  const auto path = temp_path("cifar_trunc.bin");
  write_bytes(path, bytes);
  try {
    load_cifar10_binary({path});
    FAIL() << "expected DataFormatError";
  } catch (const DataFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("offset 3073"), std::string::npos) << e.what();
  }
}

TEST(Cifar, LabelTenRejected) {
  auto bytes = cifar_fixture(2, 4);
  bytes[kCifarRecordBytes] = 10;
  const auto path = temp_path("cifar_label.bin");
  write_bytes(path, bytes);
  EXPECT_THROW(load_cifar10_binary({path}), DataFormatError);
}

TEST(Synthetic, SameSeedSameBytes) {
  SyntheticOptions o;
  o.n = 50;
  o.jitter = 1;
  auto a = gen_synthetic(5, o), b = gen_synthetic(5, o), c = gen_synthetic(6, o);
  EXPECT_EQ(a.images, b.images);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.images, c.images);
}

TEST(Synthetic, ZeroNoiseNearestCentroidIsPerfect) {
  SyntheticOptions o;
  o.n = 200;
  o.noise = 0.0;
  const auto d = gen_synthetic(7, o);
  const auto protos = synthetic_prototypes(7, o);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto img = d.image(i);
    std::size_t best = 0;
    double best_dist = 1e300;
    for (std::size_t c = 0; c < protos.size(); ++c) {
      double dist = 0;
      for (std::size_t k = 0; k < img.size(); ++k) dist += (img[k] - protos[c][k]) * (img[k] - protos[c][k]);
      if (dist < best_dist) best_dist = dist, best = c;
    }
    EXPECT_EQ(static_cast<int>(best), d.labels[i]);
  }
}

TEST(Synthetic, DefaultNoiseTrainsAboveNinetyPercentQuickly) {
  SyntheticOptions o;
  o.n = 800;
  o.height = 8;
  o.width = 8;
  auto d = gen_synthetic(8, o);
  d.assign_splits({0.5, 0.25, 0.25}, 8);
  SuperNetSpec spec;
  spec.height = 8;
  spec.width = 8;
  spec.stem_channels = 8;
  spec.blocks = {{8, 8, 1}};
  spec.head_channels = 16;
  spec.num_classes = 4;
  const auto t0 = std::chrono::steady_clock::now();
  StandaloneOptions so;
  so.epochs = 3;
  so.batch_size = 16;
  const double acc = train_standalone(spec, {OperatorSpec::mbconv(3, 3, 1, 8, 8)}, d, so);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_GT(acc, 0.9);
  EXPECT_LT(secs, 120.0);
}

TEST(Splits, DisjointExhaustiveAndSeeded) {
  SyntheticOptions o;
  o.n = 101;
  auto d = gen_synthetic(9, o);
  d.assign_splits({0.6, 0.2, 0.2}, 1);
  std::set<std::size_t> all;
  for (auto* s : {&d.weight_train, &d.alpha_train, &d.eval}) all.insert(s->begin(), s->end());
  EXPECT_EQ(all.size(), 101u);
  EXPECT_EQ(d.weight_train.size() + d.alpha_train.size() + d.eval.size(), 101u);
  auto e = gen_synthetic(9, o);
  e.assign_splits({0.6, 0.2, 0.2}, 1);
  EXPECT_EQ(d.eval, e.eval);
  EXPECT_THROW(d.assign_splits({0.6, 0.6, 0.2}, 1), std::invalid_argument);
  EXPECT_THROW(d.assign_splits({-0.1, 0.9, 0.2}, 1), std::invalid_argument);
}

TEST(BatchCursorTest, CoversSplitEachEpoch) {
  std::vector<std::size_t> idx{3, 5, 7, 9, 11, 13, 15};
  BatchCursor cur(idx, 3, RandomStream(1, "b"));
  std::multiset<std::size_t> seen;
  for (int i = 0; i < 2; ++i)
    for (auto v : cur.next()) seen.insert(v);
  EXPECT_EQ(cur.batches_per_epoch(), 2u);
  for (auto v : seen) EXPECT_EQ(seen.count(v), 1u);
}

TEST(Kendall, Examples) {
  std::vector<double> a{1, 2, 3, 4}, b{1, 3, 2, 4}, r{4, 3, 2, 1};
  EXPECT_NEAR(kendall_tau(a, a), 1.0, 1e-15);
  EXPECT_NEAR(kendall_tau(a, r), -1.0, 1e-15);
  EXPECT_NEAR(kendall_tau(a, b), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(brute_tau(a, b), 2.0 / 3.0, 1e-15);
  std::vector<double> short_v{1, 2};
  EXPECT_THROW(kendall_tau(a, short_v), std::invalid_argument);
}

TEST(Kendall, AntisymmetryPermutationInvarianceAndOracle) {
  RandomStream rng(10, "k");
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(9);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
    }
    const double tau = kendall_tau(a, b);
    EXPECT_NEAR(tau, brute_tau(a, b), 1e-12);
    std::vector<double> neg_b(b);
    for (auto& v : neg_b) v = -v;
    EXPECT_NEAR(kendall_tau(a, neg_b), -tau, 1e-12);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    shuffle_in_place(perm, rng);
    std::vector<double> pa(n), pb(n);
    for (std::size_t i = 0; i < n; ++i) {
      pa[i] = a[perm[i]];
      pb[i] = b[perm[i]];
    }
    EXPECT_NEAR(kendall_tau(pa, pb), tau, 1e-12);
    const double rho = spearman_rho(a, b);
    EXPECT_GE(rho, -1.0 - 1e-12);
    EXPECT_LE(rho, 1.0 + 1e-12);
  }
}

TEST(Kendall, TiesAndConstants) {
  std::vector<double> a{1, 1, 2, 3}, b{1, 2, 3, 4}, c{5, 5, 5, 5};
  // tau-b: 5 concordant, 0 discordant, one tie in a: 5 / sqrt(5 · 6).
  EXPECT_NEAR(kendall_tau(a, b), 5.0 / std::sqrt(30.0), 1e-12);
  EXPECT_EQ(kendall_tau(a, c), 0.0);
  EXPECT_EQ(average_ranks(a), (std::vector<double>{1.5, 1.5, 3, 4}));
}

TEST(Summarize, MeanStddevRange) {
  std::vector<double> v{1, 2, 3, 4};
  auto s = summarize(v);
  EXPECT_EQ(s.n, 4u);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.stddev, std::sqrt(5.0 / 3.0), 1e-12);
  EXPECT_EQ(s.min, 1);
  EXPECT_EQ(s.max, 4);
}

TEST(Planted, CurveValidationAndShape) {
  LearningCurve c{0.8, 10};
  EXPECT_DOUBLE_EQ(c.at(0), 0.0);
  EXPECT_NEAR(c.at(10), 0.8 * (1 - std::exp(-1.0)), 1e-15);
  EXPECT_THROW((LearningCurve{0.0, 1}.validate()), ConfigError);
  EXPECT_THROW((LearningCurve{1.1, 1}.validate()), ConfigError);
  EXPECT_THROW((LearningCurve{0.5, 0}.validate()), ConfigError);
}

TEST(Planted, ErrorFollowsTrainCount) {
  PlantedCurveOptions o;
  o.curves = {{0.9, 5}, {0.5, 1}};
  o.noise = 0.0;
  PlantedCurveModel m(o, 1);
  EXPECT_DOUBLE_EQ(m.error(0, 0), 1.0);
  m.blocks()[0].train_count[0] = 5;
  EXPECT_NEAR(m.error(0, 0), 1 - 0.9 * (1 - std::exp(-1.0)), 1e-15);
}

TEST(Matthew, MeanFieldOracleAgreesWithScenarioDesign) {
  const auto s = late_bloomer_scenario();
  const auto best = planted_best(s.curves);
  EXPECT_NE(best, early_leader(s));
  EXPECT_EQ(mean_field_matthew(s, Strategy::BalancedDrop).selected, best);
  EXPECT_NE(mean_field_matthew(s, Strategy::ProxylessLike).selected, best);
}

TEST(Matthew, IdenticalCurvesGiveBalancedShares) {
  MatthewScenario s = late_bloomer_scenario();
  for (auto& c : s.curves) c = {0.7, 50};
  s.search.s_max = 3;
  s.search.phase1_steps = 700;
  auto r = run_matthew_study(s, {0, 1}, {Strategy::BalancedDrop});
  for (const auto& sr : r.strategies)
    for (const auto& rep : sr.replicas)
      for (const auto& round : rep.rounds) {
        const double m = static_cast<double>(std::count(round.active.begin(), round.active.end(), true));
        for (std::size_t j = 0; j < round.share.size(); ++j)
          if (round.active[j]) {
            EXPECT_NEAR(round.share[j] * m, 1.0, 0.3);
          }
      }
}

TEST(BetaSweep, ZeroBetaPicksMostAccurateOperator) {
  auto s = cost_accuracy_scenario();
  auto pts = run_beta_sweep(s, {0.0}, {0, 1});
  ASSERT_EQ(pts.size(), 1u);
  for (double f : pts[0].flops) EXPECT_EQ(f, 6.0);
}

TEST(Multiseed, SingleSeedDegeneratesToOnePair) {
  SyntheticOptions o;
  o.n = 200;
  o.height = 6;
  o.width = 6;
  o.classes = 3;
  auto d = gen_synthetic(11, o);
  d.assign_splits({0.4, 0.3, 0.3}, 11);
  SuperNetSpec spec;
  spec.height = 6;
  spec.width = 6;
  spec.stem_channels = 4;
  spec.blocks = {{4, 4, 1}, {4, 8, 2}};
  spec.head_channels = 8;
  spec.num_classes = 3;
  MultiseedOptions mo;
  mo.n_seeds = 1;
  mo.search.s_max = 2;
  mo.search.phase1_steps = 5;
  mo.search.phase2_steps = 3;
  mo.search.batch_size = 8;
  mo.train.epochs = 1;
  mo.train.batch_size = 16;
  mo.flops_window = 0.5;
  auto r = run_multiseed(spec, d, mo);
  ASSERT_EQ(r.entries.size(), 2u);
  EXPECT_EQ(r.entries[0].kind, "searched");
  EXPECT_EQ(r.entries[1].kind, "random");
  EXPECT_EQ(r.searched.n, 1u);
  EXPECT_EQ(r.random.n, 1u);
  EXPECT_LE(std::abs(r.entries[1].flops - r.target_flops), 0.5 * r.target_flops + 1e-9);
}

TEST(Interference, ReportShape) {
  SyntheticOptions o;
  o.n = 120;
  o.height = 6;
  o.width = 6;
  o.classes = 3;
  auto d = gen_synthetic(12, o);
  d.assign_splits({0.6, 0.0, 0.4}, 12);
  InterferenceOptions io;
  io.space.height = 6;
  io.space.width = 6;
  io.space.stem_channels = 4;
  io.space.blocks = {{4, 4, 1}, {4, 8, 2}};
  io.space.head_channels = 8;
  io.space.num_classes = 3;
  io.ns_epochs = 1;
  io.seeds = {0};
  auto r = run_interference_study(io, d);
  EXPECT_EQ(r.trials.size(), 12u);
  ASSERT_EQ(r.ranks.size(), 4u);
  for (const auto& t : r.trials) {
    const int want = t.group == "NS" ? 1 : t.group == "B2" ? 2 : 4;
    EXPECT_EQ(t.epochs, want);
    EXPECT_GE(t.accuracy, 0.0);
    EXPECT_LE(t.accuracy, 1.0);
  }
  for (const auto& rp : r.ranks) {
    EXPECT_GE(rp.tau, -1.0);
    EXPECT_LE(rp.tau, 1.0);
  }
  // With one seed the averaged reference is that seed's NS run.
  EXPECT_EQ(r.tau("NS-B2").mean, r.tau("NSmean-B2").mean);
  EXPECT_EQ(r.tau("NS-B4").mean, r.tau("NSmean-B4").mean);
}
