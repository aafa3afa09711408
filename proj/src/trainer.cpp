#include "fgt2m/trainer.hpp"

#include <cstdio>
#include <fstream>
#include <limits>

namespace fgt2m {

namespace {

void append_log_row(const std::filesystem::path& path, int iter, double loss,
                    const std::optional<EvalPoint>& ev) {
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw FormatError("cannot open training log '" + path.string() + "'");
    if (fresh) out << "iteration,loss,r_top1,r_top3,fid\n";
    char buf[160];
    if (ev) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g", iter, loss, ev->r_top1, ev->r_top3,
                      ev->fid);
    } else {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,,,", iter, loss);
    }
    out << buf << "\n";
}

} // namespace

TrainResult train_diffusion(TextMotionModel& model, const std::vector<DatasetRecord>& records,
                            const NoiseSchedule& sched, const TrainOptions& opt,
                            const PeriodicEval& periodic_eval) {
    if (records.empty()) throw InputError("training requires a nonempty dataset");
    if (opt.batch < 1 || opt.iters < 0) throw ParameterError("invalid batch size or iteration count");

    std::vector<TextMotionModel::Encoded> encoded;
    encoded.reserve(records.size());
    for (const auto& r : records) encoded.push_back(model.encode_record(r.parse));

    Adam adam(model.params, {.lr = opt.lr});
    GradBuffer total(model.params);

    struct Worker {
        GradBuffer grads;
        double loss_sum = 0.0;
    };

    TrainResult result;
    Rng pick_rng(derive_seed(opt.seed, 0xba7c4));
    double ema_loss = std::numeric_limits<double>::quiet_NaN();
    double best_ema = std::numeric_limits<double>::infinity();
    int stall = 0;

    for (int iter = 1; iter <= opt.iters; ++iter) {
        std::vector<int> batch_ids(static_cast<std::size_t>(opt.batch));
        for (auto& id : batch_ids) id = pick_rng.uniform_int(0, static_cast<int>(records.size()) - 1);

        total.zero();
        double loss_sum = 0.0;
        parallel_partition<Worker>(
            opt.batch, opt.exec, [&] { return Worker{GradBuffer(model.params), 0.0}; },
            [&](Worker& w, int begin, int end) {
                for (int k = begin; k < end; ++k) {
                    const auto& rec = records[static_cast<std::size_t>(batch_ids[static_cast<std::size_t>(k)])];
                    const auto& enc = encoded[static_cast<std::size_t>(batch_ids[static_cast<std::size_t>(k)])];
                    Rng item_rng(derive_seed(opt.seed, static_cast<std::uint64_t>(iter),
                                             static_cast<std::uint64_t>(k)));
                    const int t = item_rng.uniform_int(1, sched.num_steps);
                    const Mat eps = item_rng.normal_mat(rec.motion.rows(), rec.motion.cols());
                    Tape tape(&w.grads);
                    Var loss = model.build_loss(tape, enc, rec.motion, t, eps, sched);
                    tape.backward(loss);
                    w.loss_sum += tape.val(loss)(0, 0);
                }
            },
            [&](Worker& w) {
                total.accumulate(w.grads);
                loss_sum += w.loss_sum;
            });

        total.scale(1.0 / opt.batch);
        adam.step(model.params, total);

        const double mean_loss = loss_sum / opt.batch;
        ema_loss = std::isnan(ema_loss) ? mean_loss : 0.9 * ema_loss + 0.1 * mean_loss;
        result.final_loss = mean_loss;
        result.iterations_run = iter;

        if (opt.log_every > 0 && (iter % opt.log_every == 0 || iter == opt.iters)) {
            result.loss_log.emplace_back(iter, ema_loss);
            std::optional<EvalPoint> ev;
            if (periodic_eval && opt.eval_every > 0 && iter % opt.eval_every == 0)
                ev = periodic_eval(model, iter);
            if (!opt.log_path.empty()) append_log_row(opt.log_path, iter, ema_loss, ev);

            if (opt.early_stop_patience > 0) {
                if (ema_loss < best_ema - opt.early_stop_min_delta) {
                    best_ema = ema_loss;
                    stall = 0;
                } else if (++stall >= opt.early_stop_patience) {
                    break;
                }
            }
        }
    }
    return result;
}

} // namespace fgt2m
