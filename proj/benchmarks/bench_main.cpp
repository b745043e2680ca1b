#include <benchmark/benchmark.h>

#include "lightdxml/classifier.hpp"
#include "lightdxml/dataset.hpp"
#include "lightdxml/features.hpp"
#include "lightdxml/hnsw.hpp"
#include "lightdxml/rng.hpp"
#include "lightdxml/shortlist.hpp"

using namespace lightdxml;

namespace {

RowMatrix unit_rows(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.normal();
        m.row(i).normalize();
    }
    return m;
}

void BM_HnswQuery(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto labels = unit_rows(n, 32, 1);
    const auto queries = unit_rows(256, 32, 2);
    const auto index = AnnIndex::build(labels, HnswParams{}, 3);
    Eigen::Index q = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(index.search({queries.row(q).data(), 32}, 10, 100));
        q = (q + 1) % queries.rows();
    }
    state.SetComplexityN(static_cast<std::int64_t>(n));
}
BENCHMARK(BM_HnswQuery)->RangeMultiplier(4)->Range(1024, 16384)->Complexity();

void BM_BruteForceQuery(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto labels = unit_rows(n, 32, 1);
    const auto queries = unit_rows(256, 32, 2);
    Eigen::Index q = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(brute_force_topk(labels, {queries.row(q).data(), 32}, 10));
        q = (q + 1) % queries.rows();
    }
    state.SetComplexityN(static_cast<std::int64_t>(n));
}
BENCHMARK(BM_BruteForceQuery)->RangeMultiplier(4)->Range(1024, 16384)->Complexity();

void BM_HnswBuild(benchmark::State& state) {
    const auto labels = unit_rows(static_cast<std::size_t>(state.range(0)), 32, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(AnnIndex::build(labels, HnswParams{}, 3));
    }
}
BENCHMARK(BM_HnswBuild)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_EmbedPoints(benchmark::State& state) {
    SyntheticConfig cfg;
    cfg.n_points = 2000;
    cfg.n_features = 512;
    cfg.dim = 512;
    const auto corpus = generate_synthetic(cfg).corpus;
    const auto table = random_embedding_table(512, static_cast<std::size_t>(state.range(0)), 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(embed_points(corpus, table, true));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 2000);
}
BENCHMARK(BM_EmbedPoints)->Arg(64)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_ClassifierEpoch(benchmark::State& state) {
    const auto s = generate_synthetic(SyntheticConfig{});
    const auto x = embed_points(s.corpus, identity_embedding_table(64, 64), true).matrix;
    const auto index = AnnIndex::build(s.planted, HnswParams{}, 1);
    const auto shortlist = build_shortlists(index, x, static_cast<std::size_t>(state.range(0)));
    const auto model = ClassifierModel::initial(64, s.corpus.n_labels, true);
    for (auto _ : state) {
        ClassifierOptimizer opt(model);
        benchmark::DoNotOptimize(train_classifier(model, opt, x, s.corpus, shortlist, {}));
    }
}
BENCHMARK(BM_ClassifierEpoch)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
