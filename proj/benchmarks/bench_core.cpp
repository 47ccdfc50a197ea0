#include "pssm/cohomology.hpp"
#include "pssm/datadriven.hpp"
#include "pssm/normal_form.hpp"
#include "pssm/systems.hpp"

#include <benchmark/benchmark.h>

using namespace pssm;

namespace {

void BM_TaylorCoefficients(benchmark::State& state) {
    const HopfParams p{-1, 1, -5.3};
    for (auto _ : state) benchmark::DoNotOptimize(taylor_coefficients(p, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_TaylorCoefficients)->Arg(10)->Arg(200)->Arg(2000);

void BM_ExactSolution(benchmark::State& state) {
    const HopfParams p{-1, 1, -2.6};
    for (auto _ : state) benchmark::DoNotOptimize(exact_solution(p, 0.05, 0.1, 0.3));
}
BENCHMARK(BM_ExactSolution);

void BM_SolveSsmToy(benchmark::State& state) {
    const auto f = toy_model_field({-1, 1, -5.3});
    const Eigen::MatrixXd A = f.linear_part();
    const auto frame = build_eigenframe(A, compute_spectrum(A));
    for (auto _ : state) benchmark::DoNotOptimize(solve_ssm(f, frame, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_SolveSsmToy)->Arg(4)->Arg(8)->Arg(12);

void BM_SurrogateRhs(benchmark::State& state) {
    const SurrogateSystem sys({.dimension = static_cast<int>(state.range(0))});
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(sys.dimension(), 1e-2);
    Eigen::VectorXd dx;
    for (auto _ : state) {
        sys.rhs(8100, x, dx);
        benchmark::DoNotOptimize(dx.data());
    }
}
BENCHMARK(BM_SurrogateRhs)->Arg(16)->Arg(64)->Arg(256);

void BM_GenerateTrainingData(benchmark::State& state) {
    const SurrogateSystem sys;
    for (auto _ : state) benchmark::DoNotOptimize(generate_training_data(sys, 7950, Protocol::PreBifurcation, 1));
}
BENCHMARK(BM_GenerateTrainingData)->Unit(benchmark::kMillisecond);

void BM_FitSsmModel(benchmark::State& state) {
    const SurrogateSystem sys;
    const auto d = generate_training_data(sys, 7950, Protocol::PreBifurcation, 1);
    const int mw = static_cast<int>(state.range(0)), mr = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(fit_ssm_model(d, mw, mr));
}
BENCHMARK(BM_FitSsmModel)->Args({2, 3})->Args({4, 5})->Unit(benchmark::kMillisecond);

void BM_PredictParametric(benchmark::State& state) {
    const SurrogateSystem sys;
    std::vector<SsmModel> models;
    for (double mu : {7900.0, 7950.0, 8000.0, 8050.0, 8150.0})
        models.push_back(fit_ssm_model(
            generate_training_data(sys, mu, mu < 8015 ? Protocol::PreBifurcation : Protocol::PostBifurcation, 1), 4, 5));
    const auto pm = interpolate_models(align_charts(models));
    const Eigen::VectorXd x0 = pm.at(8100).lift(Eigen::Vector2d(0.1, 0));
    for (auto _ : state) benchmark::DoNotOptimize(predict_trajectory(pm, 8100, x0, 50.0, 0.04));
}
BENCHMARK(BM_PredictParametric)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
