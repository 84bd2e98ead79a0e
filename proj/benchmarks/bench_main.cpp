// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "repoqa/calibration.hpp"
#include "repoqa/corpus.hpp"
#include "repoqa/judge.hpp"
#include "repoqa/reward.hpp"

namespace {

std::vector<repoqa::gateway::EmbeddingVector> random_vectors(std::size_t n,
                                                             std::size_t dim) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<repoqa::gateway::EmbeddingVector> out(n);
  for (auto& v : out) {
    v.values.resize(dim);
    for (double& x : v.values) x = normal(rng);
  }
  return out;
}

void BM_ComputeReward(benchmark::State& state) {
  repoqa::judge::ScoreVector v{{8, 6, 10, 4, 7}};
  for (auto _ : state)
    benchmark::DoNotOptimize(repoqa::reward::compute_reward(v));
}
BENCHMARK(BM_ComputeReward);

void BM_KMeans(benchmark::State& state) {
  const auto vectors =
      random_vectors(static_cast<std::size_t>(state.range(0)), 16);
  for (auto _ : state)
    benchmark::DoNotOptimize(repoqa::corpus::kmeans(vectors, 10, 25, 1));
}
BENCHMARK(BM_KMeans)->Arg(200)->Arg(1000);

void BM_Calibrate(benchmark::State& state) {
  repoqa::calibration::ScoreMatrix matrix;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> score(5.0, 50.0);
  for (int q = 0; q < 260; ++q)
    matrix.questions.push_back("q" + std::to_string(q));
  matrix.models = {"m0", "m1", "m2"};
  for (const auto& q : matrix.questions)
    for (const auto& m : matrix.models)
      matrix.totals[{q, m}] = {score(rng), score(rng), score(rng)};
  for (auto _ : state)
    benchmark::DoNotOptimize(repoqa::calibration::calibrate(matrix));
}
BENCHMARK(BM_Calibrate);

void BM_Anonymize(benchmark::State& state) {
  const std::string text =
      "As Claude, I found the handler. The retry loop wraps the client "
      "with exponential backoff and a jitter term.";
  for (auto _ : state)
    benchmark::DoNotOptimize(repoqa::judge::anonymize(text));
}
BENCHMARK(BM_Anonymize);

void BM_ParseScores(benchmark::State& state) {
  const std::string reply =
      "Scores follow.\n{\"correctness\": 8, \"completeness\": 7, "
      "\"relevance\": 9, \"clarity\": 6, \"reasoning\": 7}";
  for (auto _ : state)
    benchmark::DoNotOptimize(repoqa::judge::parse_scores(reply));
}
BENCHMARK(BM_ParseScores);

}  // namespace

BENCHMARK_MAIN();
