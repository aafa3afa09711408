// Compares the serial reference path against the OpenMP path for the three
// data-parallel kernels: batched gradient accumulation, sampling chains, and
// dataset generation.

#include "fgt2m/eval_pipeline.hpp"
#include "fgt2m/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <vector>

using namespace fgt2m;

namespace {

double seconds_of(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TextMotionModel bench_model(const RelationVocab& vocab, const ToyGrammar& grammar) {
    ModelConfig cfg;
    cfg.frames = 64;
    return TextMotionModel::create(cfg, grammar.lexicon(), vocab, 3);
}

} // namespace

int main(int argc, char** argv) {
    const int threads = argc > 1 ? std::atoi(argv[1]) : 4;
    const auto vocab = RelationVocab::universal();
    const auto grammar = ToyGrammar::standard();
    const auto sched = make_linear_schedule(100, 1e-4, 0.2);

    const ExecOptions serial{ExecPolicy::Serial, 0};
    const ExecOptions openmp{ExecPolicy::OpenMP, threads};

    std::printf("%-28s %10s %10s %8s\n", "kernel", "serial[s]", "openmp[s]", "speedup");

    { // dataset generation
        const int n = 2000;
        double ts = 0, tp = 0;
        std::vector<DatasetRecord> a, b;
        ts = seconds_of([&] { a = generate_dataset(grammar, vocab, n, 64, 7, 0.05, serial); });
        tp = seconds_of([&] { b = generate_dataset(grammar, vocab, n, 64, 7, 0.05, openmp); });
        std::printf("%-28s %10.3f %10.3f %8.2fx\n", "generate_dataset(2000)", ts, tp, ts / tp);

        TextMotionModel model = bench_model(vocab, grammar);

        { // batched gradients
            TrainOptions opt;
            opt.iters = 8;
            opt.batch = 32;
            opt.lr = 1e-4;
            opt.log_every = 0;
            TrainOptions popt = opt;
            opt.exec = serial;
            popt.exec = openmp;
            TextMotionModel m1 = bench_model(vocab, grammar);
            TextMotionModel m2 = bench_model(vocab, grammar);
            ts = seconds_of([&] { train_diffusion(m1, a, sched, opt); });
            tp = seconds_of([&] { train_diffusion(m2, b, sched, popt); });
            std::printf("%-28s %10.3f %10.3f %8.2fx\n", "batch_gradients(8x32)", ts, tp, ts / tp);
        }

        { // sampling chains
            const auto feats = model.encode_parse(a.front().parse);
            const int chains = 16;
            auto run_chains = [&](const ExecOptions& exec) {
                std::vector<Mat> out(chains);
                parallel_for(chains, exec, [&](int i) {
                    Rng rng(derive_seed(11, static_cast<std::uint64_t>(i)));
                    out[static_cast<std::size_t>(i)] =
                        sample_loop(model.denoiser_for(feats), 64, kMotionChannels, sched, rng);
                });
            };
            ts = seconds_of([&] { run_chains(serial); });
            tp = seconds_of([&] { run_chains(openmp); });
            std::printf("%-28s %10.3f %10.3f %8.2fx\n", "sample_chains(16x100)", ts, tp, ts / tp);
        }
    }
    return 0;
}
