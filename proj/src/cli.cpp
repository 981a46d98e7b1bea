#include "wino/cli.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wino/harness.hpp"
#include "wino/oracle.hpp"
#include "wino/transformer.hpp"

namespace wino {

namespace {

namespace fs = std::filesystem;

struct CommonFlags {
    std::string model_path;
    std::string oracle_path;
    std::string decoder = "wino";
    int gen_len = 256;
    int block_len = 128;
    float tau1 = 0.6f;
    float tau2 = 0.9f;
    int parallel_k = 4;
    int max_steps_per_block = 0;
    bool no_forced_progress = false;
    std::uint64_t seed = 0;
};

void add_backend_flags(CLI::App* cmd, CommonFlags& flags) {
    auto* model = cmd->add_option("--model", flags.model_path, "transformer model JSON file");
    auto* oracle = cmd->add_option("--oracle", flags.oracle_path, "Markov oracle JSON file");
    model->excludes(oracle);
    oracle->excludes(model);
}

void add_hyperparam_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--gen-len", flags.gen_len, "generation length L");
    cmd->add_option("--block-len", flags.block_len, "block length, must divide L");
    cmd->add_option("--tau1", flags.tau1, "draft threshold");
    cmd->add_option("--tau2", flags.tau2, "verify threshold (0 disables verification)");
    cmd->add_option("--k", flags.parallel_k, "tokens per step for the parallel decoder");
    cmd->add_option("--max-steps-per-block", flags.max_steps_per_block,
                    "step cap before the greedy fallback (default 4x block length)");
    cmd->add_flag("--no-forced-progress", flags.no_forced_progress,
                  "disable drafting the single best candidate when nothing clears tau1");
    cmd->add_option("--seed", flags.seed, "seed for all randomized behavior");
}

DecoderConfig build_config(const CommonFlags& flags, const std::string& decoder_name) {
    DecoderConfig config;
    config.kind = decoder_kind_from_name(decoder_name);
    config.gen_length = flags.gen_len;
    config.block_length = flags.block_len;
    config.tau1 = flags.tau1;
    config.tau2 = flags.tau2;
    config.parallel_k = flags.parallel_k;
    config.forced_progress = !flags.no_forced_progress;
    config.max_steps_per_block = flags.max_steps_per_block;
    config.seed = flags.seed;
    config.validate();
    return config;
}

std::unique_ptr<ModelBackend> load_backend(const CommonFlags& flags) {
    if (flags.model_path.empty() == flags.oracle_path.empty()) {
        throw config_error("exactly one of --model and --oracle is required");
    }
    if (!flags.model_path.empty()) {
        return std::make_unique<TinyTransformer>(load_model(flags.model_path));
    }
    return std::make_unique<OracleBackend>(MarkovJointModel::load(flags.oracle_path));
}

std::vector<TokenId> parse_token_csv(const std::string& csv) {
    std::vector<TokenId> ids;
    std::stringstream stream(csv);
    std::string item;
    while (std::getline(stream, item, ',')) {
        try {
            std::size_t used = 0;
            const int value = std::stoi(item, &used);
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
            ids.push_back(value);
        } catch (const std::exception&) {
            throw parse_error("bad token id \"" + item + "\" in --prompt-tokens");
        }
    }
    return ids;
}

std::string join_tokens(const Vocabulary& vocab, const std::vector<TokenId>& ids) {
    std::string text;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i > 0) {
            text += ' ';
        }
        text += vocab.token(ids[i]);
    }
    return text;
}

int run_command(const CommonFlags& flags, const std::string& prompt_csv,
                const std::string& prompt_text, const std::string& trace_path, bool trace_required,
                std::ostream& out) {
    const DecoderConfig config = build_config(flags, flags.decoder);
    if (trace_required && trace_path.empty()) {
        throw config_error("--trace PATH is required");
    }
    const auto backend = load_backend(flags);

    std::vector<TokenId> prompt;
    if (!prompt_csv.empty()) {
        prompt = parse_token_csv(prompt_csv);
    } else if (!prompt_text.empty()) {
        prompt = tokenize_text(prompt_text, backend->vocab());
    }

    const DecodeResult result = run_decode(prompt, *backend, config);
    if (!trace_path.empty()) {
        emit_trace(result, trace_path);
    }

    out << join_tokens(backend->vocab(), result.final_response) << "\n";
    char stats[96];
    std::snprintf(stats, sizeof(stats), "steps=%lld tps=%.2f",
                  static_cast<long long>(result.stats.steps),
                  static_cast<double>(result.stats.tokens_generated) /
                      result.stats.wall_time_seconds);
    out << stats << "\n";
    if (!trace_path.empty()) {
        out << "trace written to " << trace_path << "\n";
    }
    return 0;
}

int bench_command(const CommonFlags& flags, const std::vector<std::string>& decoders,
                  const std::string& dataset_path, const std::string& out_dir, int baseline,
                  int workers, const std::string& format, std::ostream& out) {
    if (decoders.empty()) {
        throw config_error("bench needs at least one --decoder");
    }
    std::vector<DecoderConfig> configs;
    configs.reserve(decoders.size());
    for (const auto& name : decoders) {
        configs.push_back(build_config(flags, name));
    }
    if (out_dir.empty()) {
        throw config_error("--out DIR is required");
    }
    if (format != "text" && format != "csv" && format != "json") {
        throw config_error("--format must be one of text, csv, json");
    }
    const auto backend = load_backend(flags);
    const Dataset dataset = load_dataset(dataset_path, backend->vocab());

    const BenchmarkReport report = run_benchmark(dataset, *backend, configs, baseline, workers);

    fs::create_directories(out_dir);
    write_report_csv(report, fs::path(out_dir) / "report.csv");
    write_summary_json(report, fs::path(out_dir) / "summary.json");
    write_samples_jsonl(report, fs::path(out_dir) / "samples.jsonl");

    if (format == "text") {
        out << render_text_table(report);
    } else if (format == "csv") {
        out << render_report_csv(report);
    } else {
        std::ifstream in(fs::path(out_dir) / "summary.json");
        out << in.rdbuf();
    }
    out << "reports written to " << out_dir << "\n";
    return 0;
}

int make_oracle_command(int vocab_size, int length, int samples, int prompt_len, double peak,
                        std::uint64_t seed, const std::string& out_dir, std::ostream& out) {
    if (out_dir.empty()) {
        throw config_error("--out DIR is required");
    }
    if (samples < 1) {
        throw config_error("--samples must be positive");
    }
    if (prompt_len < 0 || prompt_len >= length) {
        throw config_error("--prompt-len must lie in [0, length)");
    }
    const MarkovJointModel model = MarkovJointModel::random(vocab_size, length, seed, peak);

    fs::create_directories(out_dir);
    const fs::path oracle_path = fs::path(out_dir) / "oracle.json";
    const fs::path dataset_path = fs::path(out_dir) / "dataset.jsonl";
    model.save(oracle_path);

    std::ofstream ds(dataset_path);
    if (!ds) {
        throw io_error("cannot write dataset file " + dataset_path.string());
    }
    for (int i = 0; i < samples; ++i) {
        const auto seq = model.sample_sequence(seed + static_cast<std::uint64_t>(i) + 1);
        nlohmann::ordered_json line;
        char id[32];
        std::snprintf(id, sizeof(id), "s%04d", i);
        line["id"] = id;
        line["prompt_tokens"] = std::vector<TokenId>(seq.begin(), seq.begin() + prompt_len);
        ds << line.dump() << "\n";
    }

    out << "oracle written to " << oracle_path.string() << "\n";
    out << "dataset written to " << dataset_path.string() << " (" << samples << " samples, prompt length "
        << prompt_len << ", gen length " << (length - prompt_len) << ")\n";
    return 0;
}

int validate_model_command(const std::string& model_path, std::ostream& out) {
    const TinyTransformer model = load_model(model_path);
    const auto& arch = model.arch();
    out << "model ok: n_layers=" << arch.n_layers << " n_heads=" << arch.n_heads
        << " d_model=" << arch.d_model << " d_ff=" << arch.d_ff << " rope_base=" << arch.rope_base
        << " vocab=" << model.vocab().size() << " mask=\""
        << model.vocab().token(model.vocab().mask_id()) << "\"\n";
    return 0;
}

} // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"decoding engine for masked diffusion language models"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string prompt_csv;
    std::string prompt_text;
    std::string trace_path;
    std::string dataset_path;
    std::string out_dir;
    std::string format = "text";
    std::vector<std::string> bench_decoders;
    int baseline = 0;
    int workers = 1;

    auto* run = app.add_subcommand("run", "decode one prompt and print the result");
    add_backend_flags(run, flags);
    add_hyperparam_flags(run, flags);
    run->add_option("--decoder", flags.decoder, "decoder: greedy, parallel, wino, wino-greedy-equiv");
    auto* tokens_opt = run->add_option("--prompt-tokens", prompt_csv, "prompt as comma-separated ids");
    auto* text_opt = run->add_option("--prompt-text", prompt_text, "prompt as whitespace-separated tokens");
    tokens_opt->excludes(text_opt);
    text_opt->excludes(tokens_opt);
    run->add_option("--trace", trace_path, "also write the decode trace JSON here");

    auto* trace = app.add_subcommand("trace", "decode one prompt and record the step trace");
    add_backend_flags(trace, flags);
    add_hyperparam_flags(trace, flags);
    trace->add_option("--decoder", flags.decoder, "decoder: greedy, parallel, wino, wino-greedy-equiv");
    auto* t_tokens_opt = trace->add_option("--prompt-tokens", prompt_csv, "prompt as comma-separated ids");
    auto* t_text_opt = trace->add_option("--prompt-text", prompt_text, "prompt as whitespace-separated tokens");
    t_tokens_opt->excludes(t_text_opt);
    t_text_opt->excludes(t_tokens_opt);
    trace->add_option("--trace", trace_path, "output trace JSON path")->required();

    auto* bench = app.add_subcommand("bench", "decode a dataset under several configs and compare");
    add_backend_flags(bench, flags);
    add_hyperparam_flags(bench, flags);
    bench->add_option("--decoder", bench_decoders,
                      "decoder per config, repeatable; first one is the baseline unless --baseline says otherwise");
    bench->add_option("--dataset", dataset_path, "JSONL dataset")->required();
    bench->add_option("--out", out_dir, "output directory for report files")->required();
    bench->add_option("--baseline", baseline, "index of the baseline config (default 0)");
    bench->add_option("--workers", workers, "sample-level parallelism");
    bench->add_option("--format", format, "stdout format: text, csv, json");

    int vocab_size = 2;
    int length = 8;
    int samples = 100;
    int prompt_len = -1;
    double peak = 0.0;
    auto* make_oracle = app.add_subcommand("make-oracle", "generate a random oracle and dataset");
    make_oracle->add_option("--vocab-size", vocab_size, "number of non-mask tokens");
    make_oracle->add_option("--length", length, "joint sequence length");
    make_oracle->add_option("--samples", samples, "dataset size");
    make_oracle->add_option("--prompt-len", prompt_len, "prompt prefix length (default length/2)");
    make_oracle->add_option("--peak", peak, "dominant transition mass in [0,1)");
    make_oracle->add_option("--seed", flags.seed, "seed for all randomized behavior");
    make_oracle->add_option("--out", out_dir, "output directory")->required();

    std::string validate_path;
    auto* validate = app.add_subcommand("validate-model", "load a model file and report its shape");
    validate->add_option("--model", validate_path, "transformer model JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (run->parsed()) {
            return run_command(flags, prompt_csv, prompt_text, trace_path, false, out);
        }
        if (trace->parsed()) {
            return run_command(flags, prompt_csv, prompt_text, trace_path, true, out);
        }
        if (bench->parsed()) {
            return bench_command(flags, bench_decoders, dataset_path, out_dir, baseline, workers,
                                 format, out);
        }
        if (make_oracle->parsed()) {
            if (prompt_len < 0) {
                prompt_len = length / 2;
            }
            return make_oracle_command(vocab_size, length, samples, prompt_len, peak, flags.seed,
                                       out_dir, out);
        }
        if (validate->parsed()) {
            return validate_model_command(validate_path, out);
        }
        err << "error: no command given\n";
        return 2;
    } catch (const config_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const capacity_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace wino
