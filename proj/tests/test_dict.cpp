#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "sct/denoise.hpp"
#include "sct/dictionary.hpp"
#include "sct/ksvd.hpp"

using namespace sct;

namespace {

Eigen::MatrixXd random_unit_dict(int s, int t, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd d(s, t);
  for (int i = 0; i < d.size(); ++i) d.data()[i] = g(rng);
  for (int j = 0; j < t; ++j) d.col(j).normalize();
  return d;
}

Eigen::MatrixXd random_orthonormal(int s, unsigned seed) {
  const Eigen::MatrixXd a = random_unit_dict(s, s, seed);
  return Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
}

}  // namespace

TEST_CASE("signal equal to one atom codes as that atom") {
  const Eigen::MatrixXd dict = random_unit_dict(16, 40, 1);
  const Eigen::VectorXd x = dict.col(7);
  const SparseCode code = omp_encode(dict, x, 1, 0.0);
  REQUIRE(code.nnz() == 1);
  CHECK(code.atoms[0] == 7);
  CHECK(code.coeffs[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((x - sparse_reconstruct(dict, code)).norm() <= 1e-12);
}

TEST_CASE("zero signal codes as the empty code") {
  const Eigen::MatrixXd dict = random_unit_dict(16, 40, 2);
  const SparseCode code = omp_encode(dict, Eigen::VectorXd::Zero(16), 5, 0.0);
  CHECK(code.nnz() == 0);
}

TEST_CASE("orthonormal dictionaries: OMP equals the exhaustive optimum") {
  for (unsigned seed = 0; seed < 5; ++seed) {
    const Eigen::MatrixXd dict = random_orthonormal(16, 100 + seed);
    std::mt19937 rng(200 + seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd x(16);
    for (int i = 0; i < 16; ++i) x[i] = g(rng);

    const int budget = 3;
    const SparseCode code = omp_encode(dict, x, budget, 0.0);
    std::vector<int> best_support;
    const double best =
        oracles::exhaustive_best_residual(dict, x, budget, &best_support);
    const double got = (x - sparse_reconstruct(dict, code)).norm();
    CHECK(got == doctest::Approx(best).epsilon(1e-12));
    CHECK(std::set<int>(code.atoms.begin(), code.atoms.end()) ==
          std::set<int>(best_support.begin(), best_support.end()));
  }
}

TEST_CASE("residual norm shrinks strictly with the budget") {
  const Eigen::MatrixXd dict = random_unit_dict(64, 128, 3);
  std::mt19937 rng(33);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd x(64);
  for (int i = 0; i < 64; ++i) x[i] = g(rng);
  double prev = x.norm();
  for (int budget = 1; budget <= 8; ++budget) {
    const SparseCode code = omp_encode(dict, x, budget, 0.0);
    const double r = (x - sparse_reconstruct(dict, code)).norm();
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("production OMP matches the naive reference implementation") {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const Eigen::MatrixXd dict = random_unit_dict(24, 60, 300 + seed);
    std::mt19937 rng(400 + seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd x(24);
    for (int i = 0; i < 24; ++i) x[i] = g(rng);

    const SparseCode code = omp_encode(dict, x, 6, 0.0);
    const auto ref = oracles::naive_omp(dict, x, 6, 0.0);
    const double got = (x - sparse_reconstruct(dict, code)).norm();
    CHECK(std::abs(got - ref.residual.norm()) <= 1e-10);
    CHECK(code.atoms == ref.atoms);
  }
}

TEST_CASE("eps stopping rule returns early") {
  const Eigen::MatrixXd dict = random_unit_dict(16, 48, 5);
  std::mt19937 rng(55);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd x(16);
  for (int i = 0; i < 16; ++i) x[i] = g(rng);
  const double eps = 0.5 * x.norm();
  const SparseCode code = omp_encode(dict, x, 16, eps);
  CHECK((x - sparse_reconstruct(dict, code)).norm() <= eps);
  const SparseCode full = omp_encode(dict, x, 16, 0.0);
  CHECK(code.nnz() < full.nnz());
}

TEST_CASE("duplicate atoms are skipped, not selected twice") {
  Eigen::MatrixXd dict = random_unit_dict(8, 12, 6);
  dict.col(5) = dict.col(2);  // exact duplicate
  const Eigen::VectorXd x = 2.0 * dict.col(2) + 0.5 * dict.col(7);
  const SparseCode code = omp_encode(dict, x, 4, 0.0);
  int hits2 = 0, hits5 = 0;
  for (int a : code.atoms) {
    hits2 += a == 2;
    hits5 += a == 5;
  }
  CHECK(hits2 == 1);  // lowest index wins the tie
  CHECK(hits5 == 0);
  CHECK((x - sparse_reconstruct(dict, code)).norm() <= 1e-10);
}

// ---------------------------------------------------------------------------
// training set construction

TEST_CASE("constant single-material tensor trains to all-zero patches") {
  Tensor3 f(16, 16, 1, 3.5);
  TrainConfig cfg;
  cfg.n_patches = 20;
  cfg.patch_size = 4;
  cfg.n_atoms = 17;
  cfg.train_sparsity = 2;
  const TrainingSet ts = build_training_set(f, cfg);
  CHECK(ts.patches.patches.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("training anchors never straddle the material boundary") {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Tensor3 f(16, 16, 2);
  for (auto& v : f.data()) v = dist(rng);
  TrainConfig cfg;
  cfg.n_patches = 150;  // close to the full anchor set (2 * 9 * 9 = 162)
  cfg.patch_size = 8;
  cfg.n_atoms = 65;
  const TrainingSet ts = build_training_set(f, cfg);
  REQUIRE(ts.patches.anchors.size() == 150);
  CHECK_FALSE(ts.with_replacement);
  std::set<std::pair<int, int>> seen;
  for (const auto& [ar, ac] : ts.patches.anchors) {
    CHECK(ar >= 0);
    CHECK(ar <= 8);
    // column anchor stays inside one 16-wide block: 0..8 or 16..24
    CHECK((ac % 16) <= 8);
    seen.insert({ar, ac});
  }
  CHECK(seen.size() == 150);  // sampled without replacement
}

TEST_CASE("too few anchors falls back to replacement sampling") {
  Tensor3 f(9, 9, 1, 0.0);
  f(4, 4, 0) = 1.0;
  TrainConfig cfg;
  cfg.n_patches = 10;  // only (9-8+1)^2 = 4 anchors exist
  cfg.patch_size = 8;
  cfg.n_atoms = 65;
  cfg.n_patches = 10;
  const TrainingSet ts = build_training_set(f, cfg);
  CHECK(ts.with_replacement);
  CHECK(ts.patches.anchors.size() == 10);
}

TEST_CASE("training set sampling is seed-deterministic") {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Tensor3 f(20, 20, 2);
  for (auto& v : f.data()) v = dist(rng);
  TrainConfig cfg;
  cfg.n_patches = 60;
  cfg.patch_size = 6;
  cfg.n_atoms = 37;
  cfg.seed = 777;
  const TrainingSet a = build_training_set(f, cfg);
  const TrainingSet b = build_training_set(f, cfg);
  CHECK(a.patches.anchors == b.patches.anchors);
  CHECK((a.patches.patches - b.patches.patches).cwiseAbs().maxCoeff() == 0.0);
}

// ---------------------------------------------------------------------------
// K-SVD

TEST_CASE("planted dictionary is recovered to fine residual") {
  std::mt19937 rng(99);
  std::normal_distribution<double> g(0.0, 1.0);
  const int s = 64, t = 128, n_signals = 2000, sparsity = 3;
  const Eigen::MatrixXd planted = random_unit_dict(s, t, 1234);

  PatchSet training;
  training.patch_size = 8;
  training.patches.resize(s, n_signals);
  std::uniform_int_distribution<int> atom_pick(0, t - 1);
  for (int i = 0; i < n_signals; ++i) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(s);
    std::set<int> support;
    while (static_cast<int>(support.size()) < sparsity)
      support.insert(atom_pick(rng));
    for (int a : support) x += g(rng) * planted.col(a);
    training.patches.col(i) = x;
    training.anchors.emplace_back(0, 0);
  }

  TrainConfig cfg;
  cfg.n_patches = n_signals;
  cfg.patch_size = 8;
  cfg.n_atoms = t;
  cfg.train_sparsity = sparsity;
  cfg.train_iters = 50;
  cfg.seed = 5;
  const KsvdResult res = ksvd_train(training, cfg);
  res.dictionary.validate();
  const double mean_residual_sq =
      res.objective(res.objective.size() - 1) / n_signals;
  CHECK(std::sqrt(mean_residual_sq) < 1e-3);
}

TEST_CASE("memorization limit: one atom per patch reaches zero objective") {
  std::mt19937 rng(21);
  std::normal_distribution<double> g(0.0, 1.0);
  const int s = 16, t = 24;
  PatchSet training;
  training.patch_size = 4;
  training.patches.resize(s, t);
  for (int i = 0; i < t; ++i) {
    for (int r = 0; r < s; ++r) training.patches(r, i) = g(rng);
    training.anchors.emplace_back(0, 0);
  }
  TrainConfig cfg;
  cfg.n_patches = t;
  cfg.patch_size = 4;
  cfg.n_atoms = t;
  cfg.train_sparsity = 1;
  cfg.train_iters = 3;
  const KsvdResult res = ksvd_train(training, cfg);
  CHECK(res.objective(res.objective.size() - 1) <= 1e-20);
}

TEST_CASE("objective is non-increasing and atoms stay unit norm") {
  std::mt19937 rng(77);
  std::normal_distribution<double> g(0.0, 1.0);
  const int s = 16;
  PatchSet training;
  training.patch_size = 4;
  training.patches.resize(s, 600);
  for (int i = 0; i < training.patches.size(); ++i)
    training.patches.data()[i] = g(rng);
  training.anchors.assign(600, {0, 0});

  TrainConfig cfg;
  cfg.n_patches = 600;
  cfg.patch_size = 4;
  cfg.n_atoms = 48;
  cfg.train_sparsity = 3;
  cfg.train_iters = 30;
  const KsvdResult res = ksvd_train(training, cfg);
  res.dictionary.validate();
  for (int i = 1; i < res.objective.size(); ++i)
    CHECK(res.objective(i) <= res.objective(i - 1) + 1e-10);
}

TEST_CASE("all-zero training set is rejected") {
  PatchSet training;
  training.patch_size = 4;
  training.patches = Eigen::MatrixXd::Zero(16, 40);
  training.anchors.assign(40, {0, 0});
  TrainConfig cfg;
  cfg.n_patches = 40;
  cfg.patch_size = 4;
  cfg.n_atoms = 20;
  cfg.train_sparsity = 2;
  cfg.train_iters = 2;
  CHECK_THROWS_AS(ksvd_train(training, cfg), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// dictionary denoising

TEST_CASE("orthonormal square dictionary with full budget is the identity") {
  Dictionary dict;
  dict.patch_size = 4;
  dict.atoms = random_orthonormal(16, 42);
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd img(12, 12);
  for (int i = 0; i < img.size(); ++i) img.data()[i] = dist(rng);
  DenoiseOptions opts;
  opts.eps = 0.0;
  opts.max_sparsity = 16;
  opts.prior_weight = 0.7;
  opts.stride = 1;
  const Eigen::MatrixXd out = dictionary_denoise(img, dict, opts);
  CHECK((out - img).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("zero prior weight returns the input unchanged") {
  Dictionary dict;
  dict.patch_size = 4;
  dict.atoms = random_unit_dict(16, 32, 44);
  Eigen::MatrixXd img = Eigen::MatrixXd::Random(10, 10);
  DenoiseOptions opts;
  opts.eps = 0.1;
  opts.max_sparsity = 3;
  opts.prior_weight = 0.0;
  const Eigen::MatrixXd out = dictionary_denoise(img, dict, opts);
  CHECK((out - img).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("output approaches the input as the prior weight vanishes") {
  Dictionary dict;
  dict.patch_size = 4;
  dict.atoms = random_unit_dict(16, 32, 45);
  Eigen::MatrixXd img = Eigen::MatrixXd::Random(10, 10);
  DenoiseOptions opts;
  opts.eps = 0.05;
  opts.max_sparsity = 4;
  opts.prior_weight = 1e-8;
  const Eigen::MatrixXd out = dictionary_denoise(img, dict, opts);
  CHECK((out - img).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("denoising reduces the error of a noisy piecewise-constant image") {
  // Train a small dictionary on clean patches of the same structure, then
  // denoise a noisy copy.
  const int n = 32;
  Eigen::MatrixXd clean = Eigen::MatrixXd::Zero(n, n);
  clean.block(0, 0, n, 16).setConstant(0.8);
  clean.block(20, 4, 8, 24).setConstant(0.3);

  Tensor3 clean_t(n, n, 1);
  clean_t.set_channel(0, clean);
  TrainConfig cfg;
  cfg.n_patches = 400;
  cfg.patch_size = 6;
  cfg.n_atoms = 48;
  cfg.train_sparsity = 4;
  cfg.train_iters = 25;
  cfg.seed = 3;
  const TrainingSet ts = build_training_set(clean_t, cfg);
  const KsvdResult trained = ksvd_train(ts.patches, cfg);

  std::mt19937 rng(6);
  std::normal_distribution<double> g(0.0, 0.02);
  Eigen::MatrixXd noisy = clean;
  for (int i = 0; i < noisy.size(); ++i) noisy.data()[i] += g(rng);

  DenoiseOptions opts;
  opts.eps = 0.02 * 6.0 * 1.1;  // about sigma * patch_size * gain
  opts.max_sparsity = 8;
  opts.prior_weight = 1.0;
  const Eigen::MatrixXd out = dictionary_denoise(noisy, trained.dictionary, opts);

  const double err_in = (noisy - clean).norm();
  const double err_out = (out - clean).norm();
  CHECK(err_out < err_in);
}

TEST_CASE("huge eps leads to zero codes and patch-mean smoothing") {
  Dictionary dict;
  dict.patch_size = 4;
  dict.atoms = random_unit_dict(16, 32, 46);
  DenoiseOptions opts;
  opts.eps = 1e9;
  opts.max_sparsity = 4;
  opts.prior_weight = 2.0;

  // constant image: every patch mean equals the constant, output unchanged
  Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(8, 8, 0.5);
  DenoiseStats stats;
  const Eigen::MatrixXd out_flat = dictionary_denoise(flat, dict, opts, &stats);
  CHECK(stats.code_l0 == 0.0);
  CHECK((out_flat - flat).cwiseAbs().maxCoeff() <= 1e-12);

  // noisy image: blending toward local patch means shrinks the variance
  std::mt19937 rng(5);
  std::normal_distribution<double> g(0.0, 0.1);
  Eigen::MatrixXd noisy = flat;
  for (int i = 0; i < noisy.size(); ++i) noisy.data()[i] += g(rng);
  const Eigen::MatrixXd out_noisy = dictionary_denoise(noisy, dict, opts);
  CHECK((out_noisy - flat).norm() < (noisy - flat).norm());
}
