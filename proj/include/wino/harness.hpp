#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wino/decoders.hpp"

namespace wino {

struct RunStats {
    double steps = 0.0; // mean over samples
    double tps = 0.0;   // tokens / summed per-sample wall time
    std::int64_t tokens_generated = 0;
    double wall_time = 0.0;
};

struct ComparisonReport {
    std::string baseline_config;
    std::string method_config;
    RunStats baseline;
    RunStats method;
    double step_reduction = 0.0; // baseline.steps / method.steps
    double tps_speedup = 0.0;    // method.tps / baseline.tps
};

/// baseline_steps / method_steps. Throws domain_error on nonpositive input.
double step_reduction(double baseline_steps, double method_steps);

/// method_tps / baseline_tps, the direction the reference result tables use.
double tps_speedup(double baseline_tps, double method_tps);

/// Round to two decimals, the precision reports use.
double round2(double value);

struct DatasetSample {
    std::string id;
    std::vector<TokenId> prompt_tokens;
};

struct Dataset {
    std::vector<DatasetSample> samples;
};

/// Whitespace tokenization against the vocabulary; unknown words raise
/// parse_error naming the word.
std::vector<TokenId> tokenize_text(const std::string& text, const Vocabulary& vocab);

/// JSONL dataset: each line carries {"id", "prompt_tokens"} or
/// {"id", "prompt_text"}. Errors name the line number.
Dataset load_dataset(const std::filesystem::path& path, const Vocabulary& vocab);

struct SampleRecord {
    std::string config;
    std::string id;
    DecodeResult result;
};

struct ConfigRun {
    DecoderConfig config;
    std::string label;
    RunStats stats;
};

struct BenchmarkReport {
    int baseline_index = 0;
    std::vector<ConfigRun> configs;
    std::vector<ComparisonReport> comparisons; // one per non-baseline config
    std::vector<SampleRecord> samples;         // config-major, dataset order
};

/// Short stable label for report rows, e.g. "wino-t1=0.5-t2=0.9".
std::string config_label(const DecoderConfig& config);

/// Decodes every sample under every config and compares each non-baseline
/// config against the baseline. Sample decodes may run on several workers;
/// results are independent of the worker count except for wall-time fields.
/// A failing sample aborts the run with its id in the message.
BenchmarkReport run_benchmark(const Dataset& dataset, const ModelBackend& backend,
                              const std::vector<DecoderConfig>& configs, int baseline_index = 0,
                              int workers = 1);

/// Trace file: {"steps": [{step, block, drafted, revoked, snapshot, cap_hit}]}.
/// emit/parse round-trip losslessly.
void emit_trace(const DecodeResult& result, const std::filesystem::path& path);
std::vector<StepRecord> parse_trace(const std::filesystem::path& path);

/// Applies the records to a fresh all-mask response and returns the result,
/// checking each record's snapshot on the way. A faithful trace reproduces
/// the decode's final response exactly.
std::vector<TokenId> replay_trace(const std::vector<StepRecord>& records, int gen_length,
                                  TokenId mask_id);

/// Report emission: CSV (config,steps,tps,step_reduction,tps_speedup),
/// JSON summary, JSONL per-sample records, and a human-readable table.
void write_report_csv(const BenchmarkReport& report, const std::filesystem::path& path);
void write_summary_json(const BenchmarkReport& report, const std::filesystem::path& path);
void write_samples_jsonl(const BenchmarkReport& report, const std::filesystem::path& path);
std::string render_text_table(const BenchmarkReport& report);
std::string render_report_csv(const BenchmarkReport& report);

} // namespace wino
