#include "fgt2m/cli.hpp"

#include "fgt2m/binio.hpp"
#include "fgt2m/config.hpp"
#include "fgt2m/eval_pipeline.hpp"
#include "fgt2m/svg.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fgt2m::cli {

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file with flat dotted keys");
    cmd->add_option("--set", args.overrides, "config override key=value (repeatable)")
        ->type_name("KEY=VALUE");
}

RunConfig build_config(const CommonArgs& args) {
    RunConfig cfg;
    if (!args.config_path.empty()) cfg.load_file(args.config_path);
    for (const auto& o : args.overrides) cfg.apply_override(o);
    cfg.apply_env(std::getenv("FGT2M_SEED"));
    return cfg;
}

ExecOptions exec_from(const RunConfig& cfg) {
    ExecOptions exec;
    const std::string policy = cfg.get_string("runtime.policy");
    if (policy == "serial") {
        exec.policy = ExecPolicy::Serial;
    } else if (policy == "openmp") {
        exec.policy = ExecPolicy::OpenMP;
    } else {
        throw ConfigError("runtime.policy must be 'openmp' or 'serial'");
    }
    exec.threads = static_cast<int>(cfg.get_int("runtime.threads"));
    return exec;
}

NoiseSchedule schedule_from(const RunConfig& cfg) {
    return make_linear_schedule(static_cast<int>(cfg.get_int("diffusion.steps")),
                                cfg.get_double("diffusion.beta_start"),
                                cfg.get_double("diffusion.beta_end"));
}

SampleOptions sample_options_from(const RunConfig& cfg) {
    SampleOptions opt;
    opt.clamp = cfg.get_double("diffusion.clamp");
    return opt;
}

ModelConfig model_config_from(const RunConfig& cfg) {
    ModelConfig m;
    m.embed_dim = static_cast<int>(cfg.get_int("text.embed_dim"));
    m.n_max = static_cast<int>(cfg.get_int("text.n_max"));
    m.frames = static_cast<int>(cfg.get_int("data.frames"));
    m.channels = kMotionChannels;
    m.gat.layers = static_cast<int>(cfg.get_int("lsam.gat_layers"));
    m.gat.heads = static_cast<int>(cfg.get_int("lsam.heads"));
    m.gat.edge_dim = static_cast<int>(cfg.get_int("lsam.edge_dim"));
    m.gat.leaky_slope = cfg.get_double("lsam.leaky_slope");
    m.gat.upos_gains = cfg.get_bool("lsam.upos_gains");
    m.lsam_enabled = !cfg.get_bool("ablation.lsam_off");
    m.den.width = static_cast<int>(cfg.get_int("model.width"));
    m.den.heads = static_cast<int>(cfg.get_int("model.heads"));
    m.den.blocks = static_cast<int>(cfg.get_int("model.capr_blocks"));
    m.den.lambda = cfg.get_double("model.lambda");
    m.den.mlp_mult = static_cast<int>(cfg.get_int("model.mlp_mult"));
    std::string order = cfg.get_string("ablation.block_layer_order");
    if (order.empty()) order = cfg.get_string("model.block_layer_order");
    if (order == "deep_first") {
        m.den.deep_first = true;
    } else if (order == "shallow_first") {
        m.den.deep_first = false;
    } else {
        throw ConfigError("block layer order must be 'deep_first' or 'shallow_first'");
    }
    m.den.sentence_fusion_on = !cfg.get_bool("ablation.capr1_off");
    m.den.cross_attention_on = !cfg.get_bool("ablation.capr2_off");
    return m;
}

std::vector<std::string> dataset_lexicon(const std::vector<DatasetRecord>& records) {
    std::vector<std::string> lexicon;
    for (const auto& r : records)
        for (const auto& tok : r.parse.tokens)
            if (std::find(lexicon.begin(), lexicon.end(), tok.form) == lexicon.end())
                lexicon.push_back(tok.form);
    std::sort(lexicon.begin(), lexicon.end());
    return lexicon;
}

// Held-out split: the trailing fraction of the file, matching eval.
std::pair<std::vector<DatasetRecord>, std::vector<DatasetRecord>>
split_dataset(std::vector<DatasetRecord> records, double holdout_frac) {
    if (holdout_frac < 0.0 || holdout_frac >= 1.0) throw ConfigError("train.holdout_frac must be in [0, 1)");
    const auto n = records.size();
    const auto held = static_cast<std::size_t>(static_cast<double>(n) * holdout_frac);
    std::vector<DatasetRecord> heldout(records.end() - static_cast<std::ptrdiff_t>(held), records.end());
    records.resize(n - held);
    return {std::move(records), std::move(heldout)};
}

EmbedderConfig embedder_config_from(const RunConfig& cfg) {
    EmbedderConfig e;
    e.iters = static_cast<int>(cfg.get_int("eval.embedder_iters"));
    e.batch = static_cast<int>(cfg.get_int("eval.embedder_batch"));
    e.lr = cfg.get_double("eval.embedder_lr");
    e.tau = cfg.get_double("eval.embedder_tau");
    return e;
}

int cmd_gen_data(const CommonArgs& common, const std::string& out_path) {
    const RunConfig cfg = build_config(common);
    const auto grammar = ToyGrammar::standard();
    const auto vocab = RelationVocab::universal();
    const auto records = generate_dataset(grammar, vocab, static_cast<int>(cfg.get_int("data.records")),
                                          static_cast<int>(cfg.get_int("data.frames")),
                                          static_cast<std::uint64_t>(cfg.get_int("data.seed")),
                                          /*jitter_sigma=*/0.05, exec_from(cfg));
    save_dataset(out_path, records, vocab);
    std::cout << "wrote " << records.size() << " records to " << out_path << "\n";
    return 0;
}

int cmd_train(const CommonArgs& common, const std::string& data_path, const std::string& out_path,
              const std::string& log_path) {
    const RunConfig cfg = build_config(common);
    const auto vocab = RelationVocab::universal();
    auto [train_records, heldout] = split_dataset(load_dataset(data_path, vocab),
                                                  cfg.get_double("train.holdout_frac"));
    if (train_records.empty()) throw InputError("no training records after the held-out split");

    TextMotionModel model = TextMotionModel::create(model_config_from(cfg), dataset_lexicon(train_records),
                                                    vocab, static_cast<std::uint64_t>(cfg.get_int("train.seed")));
    const NoiseSchedule sched = schedule_from(cfg);

    TrainOptions opt;
    opt.iters = static_cast<int>(cfg.get_int("train.iters"));
    opt.batch = static_cast<int>(cfg.get_int("train.batch"));
    opt.lr = cfg.get_double("train.lr");
    opt.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed"));
    opt.log_every = static_cast<int>(cfg.get_int("train.log_every"));
    opt.early_stop_patience = static_cast<int>(cfg.get_int("train.early_stop_patience"));
    opt.eval_every = static_cast<int>(cfg.get_int("train.eval_every"));
    opt.exec = exec_from(cfg);
    if (!log_path.empty()) opt.log_path = log_path;

    PeriodicEval periodic;
    std::optional<JointEmbedder> embedder;
    if (opt.eval_every > 0) {
        if (heldout.empty()) throw ConfigError("train.eval_every needs a nonzero held-out split");
        embedder = train_joint_embedder(train_records, embedder_config_from(cfg), vocab,
                                        static_cast<std::uint64_t>(cfg.get_int("eval.seed")));
        periodic = [&](const TextMotionModel& m, int iter) {
            return quick_eval(m, *embedder, sched, heldout, /*max_captions=*/48,
                              derive_seed(static_cast<std::uint64_t>(cfg.get_int("eval.seed")),
                                          static_cast<std::uint64_t>(iter)),
                              opt.exec);
        };
    }

    const TrainResult result = train_diffusion(model, train_records, sched, opt, periodic);
    save_checkpoint(out_path, model);
    std::cout << "trained " << result.iterations_run << " iterations, final loss " << result.final_loss
              << ", checkpoint " << out_path << "\n";
    return 0;
}

int cmd_sample(const CommonArgs& common, const std::string& ckpt_path,
               std::vector<std::string> captions, const std::string& captions_file,
               const std::string& out_path, int repeats, std::int64_t seed_flag) {
    const RunConfig cfg = build_config(common);
    if (!captions_file.empty()) {
        std::ifstream in(captions_file);
        if (!in) throw InputError("cannot open captions file '" + captions_file + "'");
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) captions.push_back(line);
    }
    if (captions.empty()) throw InputError("no captions given (use --caption or --captions-file)");
    if (repeats < 1) throw ParameterError("--repeats must be positive");

    const TextMotionModel model = load_checkpoint(ckpt_path);
    const NoiseSchedule sched = schedule_from(cfg);
    const SampleOptions opt = sample_options_from(cfg);
    const auto grammar = ToyGrammar::standard();
    const std::uint64_t seed =
        seed_flag >= 0 ? static_cast<std::uint64_t>(seed_flag) : static_cast<std::uint64_t>(cfg.get_int("eval.seed"));

    std::vector<GeneratedMotion> motions(captions.size() * static_cast<std::size_t>(repeats));
    std::vector<HierarchicalTextFeatures> conds(captions.size());
    for (std::size_t c = 0; c < captions.size(); ++c)
        conds[c] = model.encode_parse(toy_parse(captions[c], grammar, model.vocab));

    const int total = static_cast<int>(motions.size());
    parallel_for(total, exec_from(cfg), [&](int k) {
        const auto c = static_cast<std::size_t>(k) / static_cast<std::size_t>(repeats);
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
        motions[static_cast<std::size_t>(k)] = {
            captions[c], sample_loop(model.denoiser_for(conds[c]), model.cfg.frames, model.cfg.channels,
                                     sched, rng, opt)};
    });
    save_motions(out_path, motions);
    std::cout << "wrote " << motions.size() << " motions to " << out_path << "\n";
    return 0;
}

int cmd_eval(const CommonArgs& common, const std::string& ckpt_path, const std::string& data_path,
             const std::string& report_path, const std::string& csv_path,
             const std::string& embedder_path, const std::string& save_embedder_path,
             const std::string& features_prefix) {
    const RunConfig cfg = build_config(common);
    const auto vocab = RelationVocab::universal();
    auto [train_records, heldout] = split_dataset(load_dataset(data_path, vocab),
                                                  cfg.get_double("train.holdout_frac"));
    if (heldout.empty()) throw InputError("the held-out split is empty; check train.holdout_frac");

    const TextMotionModel model = load_checkpoint(ckpt_path);
    const NoiseSchedule sched = schedule_from(cfg);

    JointEmbedder embedder = [&] {
        if (!embedder_path.empty()) return load_embedder(embedder_path);
        return train_joint_embedder(train_records, embedder_config_from(cfg), vocab,
                                    static_cast<std::uint64_t>(cfg.get_int("eval.seed")));
    }();
    if (!save_embedder_path.empty()) save_embedder(save_embedder_path, embedder);

    EvalConfig ec;
    ec.seed = static_cast<std::uint64_t>(cfg.get_int("eval.seed"));
    ec.repeats = static_cast<int>(cfg.get_int("eval.repeats"));
    ec.max_captions = static_cast<int>(cfg.get_int("eval.max_captions"));
    ec.diversity_subset = static_cast<int>(cfg.get_int("eval.diversity_subset"));
    ec.mm_texts = static_cast<int>(cfg.get_int("eval.mm_texts"));
    ec.mm_repeats = static_cast<int>(cfg.get_int("eval.mm_repeats"));
    ec.mm_pairs = static_cast<int>(cfg.get_int("eval.mm_pairs"));
    ec.sample_opt = sample_options_from(cfg);
    ec.exec = exec_from(cfg);

    const EvalOutputs out = evaluate_model(model, embedder, sched, heldout, ec);
    atomic_write_file(report_path, out.report.text());
    if (!csv_path.empty()) atomic_write_file(csv_path, out.report.csv());
    if (!features_prefix.empty()) {
        atomic_write_file(features_prefix + ".text.bin", serialize_features(out.text_features));
        atomic_write_file(features_prefix + ".real.bin", serialize_features(out.real_features));
        atomic_write_file(features_prefix + ".gen.bin", serialize_features(out.gen_features));
    }
    std::cout << out.report.text();
    return 0;
}

void print_tree(std::ostream& os, const DependencyParse& parse, const RelationVocab& vocab, int node,
                const std::string& indent) {
    const auto& tok = parse.tokens[static_cast<std::size_t>(node)];
    os << indent << tok.form << " [" << vocab.upos_tags[static_cast<std::size_t>(tok.upos_id)] << ", "
       << vocab.relations[static_cast<std::size_t>(tok.deprel_id)] << "]\n";
    for (int i = 0; i < parse.size(); ++i)
        if (parse.tokens[static_cast<std::size_t>(i)].head == node)
            print_tree(os, parse, vocab, i, indent + "  ");
}

int cmd_parse(const CommonArgs& common, const std::string& caption, const std::string& conllu_path) {
    build_config(common); // validates config/overrides even though none are used
    const auto vocab = RelationVocab::universal();
    DependencyParse parse;
    if (!caption.empty()) {
        parse = toy_parse(caption, ToyGrammar::standard(), vocab);
    } else if (!conllu_path.empty()) {
        std::ifstream in(conllu_path);
        if (!in) throw InputError("cannot open CoNLL-U file '" + conllu_path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        parse = load_conllu(ss.str(), vocab);
    } else {
        throw InputError("parse needs --caption or --conllu");
    }

    std::cout << render_conllu(parse, vocab);
    std::cout << "\ntree:\n";
    print_tree(std::cout, parse, vocab, parse.root_index(), "  ");

    const ParseGraph graph = build_graph(parse, Mat::Zero(parse.size(), 1), vocab);
    int depth = 0;
    for (int i = 0; i < parse.size(); ++i) {
        int at = i, hops = 0;
        while (parse.tokens[static_cast<std::size_t>(at)].head >= 0) {
            at = parse.tokens[static_cast<std::size_t>(at)].head;
            ++hops;
        }
        depth = std::max(depth, hops);
    }
    std::cout << "\nnodes " << graph.n_nodes << ", directed edges " << graph.edges.size()
              << " (self-loops " << graph.n_nodes << "), tree depth " << depth << "\n";
    return 0;
}

int cmd_plot(const std::string& log_path, const std::string& out_svg, const std::string& out_csv) {
    std::ifstream in(log_path);
    if (!in) throw InputError("cannot open metric log '" + log_path + "'");
    std::string line;
    if (!std::getline(in, line)) throw FormatError("metric log is empty");

    std::vector<std::string> header;
    {
        std::stringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) header.push_back(cell);
    }
    if (header.empty() || header[0] != "iteration")
        throw FormatError("metric log must start with an 'iteration' column");

    std::vector<ChartSeries> series(header.size() - 1);
    for (std::size_t c = 1; c < header.size(); ++c) series[c - 1].name = header[c];
    std::string normalized = line + "\n";
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        normalized += line + "\n";
        std::stringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        cells.resize(header.size());
        const double x = std::strtod(cells[0].c_str(), nullptr);
        for (std::size_t c = 1; c < header.size(); ++c)
            if (!cells[c].empty()) series[c - 1].points.emplace_back(x, std::strtod(cells[c].c_str(), nullptr));
    }
    write_line_chart(out_svg, "training metrics", "iteration", series);
    if (!out_csv.empty()) atomic_write_file(out_csv, normalized);
    std::cout << "wrote " << out_svg << "\n";
    return 0;
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Fg-T2M text-driven motion generation"};
    app.require_subcommand(1);

    CommonArgs gen_common, train_common, sample_common, eval_common, parse_common;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen-data", "generate a toy caption/motion dataset");
    add_common(gen, gen_common);
    gen->add_option("--out", gen_out, "output dataset file")->required();

    std::string train_data, train_out, train_log;
    auto* train = app.add_subcommand("train", "train the diffusion model");
    add_common(train, train_common);
    train->add_option("--data", train_data, "dataset file")->required();
    train->add_option("--out", train_out, "output checkpoint file")->required();
    train->add_option("--log", train_log, "append-only metric CSV");

    std::string sample_ckpt, sample_out, sample_captions_file;
    std::vector<std::string> sample_captions;
    int sample_repeats = 1;
    std::int64_t sample_seed = -1;
    auto* sample = app.add_subcommand("sample", "generate motions for captions");
    add_common(sample, sample_common);
    sample->add_option("--ckpt", sample_ckpt, "model checkpoint")->required();
    sample->add_option("--caption", sample_captions, "toy-grammar caption (repeatable)");
    sample->add_option("--captions-file", sample_captions_file, "file with one caption per line");
    sample->add_option("--out", sample_out, "output motions file")->required();
    sample->add_option("--repeats", sample_repeats, "generations per caption");
    sample->add_option("--seed", sample_seed, "sampling seed (default: eval.seed)");

    std::string eval_ckpt, eval_data, eval_report, eval_csv, eval_embedder, eval_save_embedder,
        eval_features;
    auto* eval = app.add_subcommand("eval", "compute the metric suite for a checkpoint");
    add_common(eval, eval_common);
    eval->add_option("--ckpt", eval_ckpt, "model checkpoint")->required();
    eval->add_option("--data", eval_data, "dataset file")->required();
    eval->add_option("--report", eval_report, "output key-value report")->required();
    eval->add_option("--csv", eval_csv, "output CSV row");
    eval->add_option("--embedder", eval_embedder, "load a joint embedder checkpoint");
    eval->add_option("--save-embedder", eval_save_embedder, "save the joint embedder");
    eval->add_option("--features-out", eval_features,
                     "prefix for text/real/gen feature dumps (.text/.real/.gen .bin)");

    std::string parse_caption, parse_conllu;
    auto* parse = app.add_subcommand("parse", "inspect a dependency parse and its graph");
    add_common(parse, parse_common);
    parse->add_option("--caption", parse_caption, "toy-grammar caption");
    parse->add_option("--conllu", parse_conllu, "CoNLL-U file (ID FORM UPOS HEAD DEPREL)");

    std::string plot_log, plot_svg, plot_csv;
    auto* plot = app.add_subcommand("plot", "convert a metric log to SVG/CSV");
    plot->add_option("--log", plot_log, "metric CSV from training")->required();
    plot->add_option("--out-svg", plot_svg, "output SVG chart")->required();
    plot->add_option("--out-csv", plot_csv, "normalized CSV copy");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help() << "\n";
        return 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(gen_common, gen_out);
        if (train->parsed()) return cmd_train(train_common, train_data, train_out, train_log);
        if (sample->parsed())
            return cmd_sample(sample_common, sample_ckpt, sample_captions, sample_captions_file,
                              sample_out, sample_repeats, sample_seed);
        if (eval->parsed())
            return cmd_eval(eval_common, eval_ckpt, eval_data, eval_report, eval_csv, eval_embedder,
                            eval_save_embedder, eval_features);
        if (parse->parsed()) return cmd_parse(parse_common, parse_caption, parse_conllu);
        if (plot->parsed()) return cmd_plot(plot_log, plot_svg, plot_csv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace fgt2m::cli
