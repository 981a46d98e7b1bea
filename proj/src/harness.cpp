#include "wino/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace wino {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string format_float(double v, const char* fmt) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

std::string trim_number(float v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

} // namespace

double step_reduction(double baseline_steps, double method_steps) {
    if (!(baseline_steps > 0.0) || !(method_steps > 0.0)) {
        throw domain_error("step_reduction needs positive step counts");
    }
    return baseline_steps / method_steps;
}

double tps_speedup(double baseline_tps, double method_tps) {
    if (!(baseline_tps > 0.0) || !(method_tps > 0.0)) {
        throw domain_error("tps_speedup needs positive rates");
    }
    return method_tps / baseline_tps;
}

double round2(double value) {
    return std::round(value * 100.0) / 100.0;
}

std::vector<TokenId> tokenize_text(const std::string& text, const Vocabulary& vocab) {
    std::vector<TokenId> ids;
    std::istringstream stream(text);
    std::string word;
    while (stream >> word) {
        const auto id = vocab.find(word);
        if (!id) {
            throw parse_error("unknown word \"" + word + "\"");
        }
        ids.push_back(*id);
    }
    return ids;
}

Dataset load_dataset(const std::filesystem::path& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open dataset file " + path.string());
    }
    Dataset dataset;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        ordered_json doc;
        try {
            doc = ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw parse_error("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            DatasetSample sample;
            if (!doc.contains("id") || !doc.at("id").is_string()) {
                throw parse_error("missing string field \"id\"");
            }
            sample.id = doc.at("id").get<std::string>();
            const bool has_tokens = doc.contains("prompt_tokens");
            const bool has_text = doc.contains("prompt_text");
            if (has_tokens == has_text) {
                throw parse_error("need exactly one of prompt_tokens or prompt_text");
            }
            if (has_tokens) {
                sample.prompt_tokens = doc.at("prompt_tokens").get<std::vector<TokenId>>();
                for (TokenId id : sample.prompt_tokens) {
                    if (!vocab.contains_id(id)) {
                        throw parse_error("prompt token id " + std::to_string(id) +
                                          " outside vocabulary");
                    }
                }
            } else {
                sample.prompt_tokens = tokenize_text(doc.at("prompt_text").get<std::string>(), vocab);
            }
            dataset.samples.push_back(std::move(sample));
        } catch (const std::exception& e) {
            throw parse_error("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return dataset;
}

std::string config_label(const DecoderConfig& config) {
    switch (config.kind) {
        case DecoderKind::greedy:
            return "greedy";
        case DecoderKind::naive_parallel:
            return "parallel-k" + std::to_string(config.parallel_k);
        case DecoderKind::wino:
            return "wino-t1=" + trim_number(config.tau1) + "-t2=" + trim_number(config.tau2);
        case DecoderKind::wino_greedy_equiv:
            return "wino-greedy-equiv";
    }
    return "unknown";
}

BenchmarkReport run_benchmark(const Dataset& dataset, const ModelBackend& backend,
                              const std::vector<DecoderConfig>& configs, int baseline_index,
                              int workers) {
    if (configs.empty()) {
        throw config_error("run_benchmark needs at least one config");
    }
    if (baseline_index < 0 || baseline_index >= static_cast<int>(configs.size())) {
        throw config_error("baseline index " + std::to_string(baseline_index) + " out of range");
    }
    if (dataset.samples.empty()) {
        throw config_error("dataset is empty");
    }
    if (workers < 1) {
        throw config_error("workers must be positive");
    }
    for (const auto& config : configs) {
        config.validate();
    }

    BenchmarkReport report;
    report.baseline_index = baseline_index;

    // Disambiguate identical configs so report rows stay addressable.
    std::vector<std::string> labels;
    for (const auto& config : configs) {
        std::string label = config_label(config);
        int suffix = 2;
        while (std::find(labels.begin(), labels.end(), label) != labels.end()) {
            label = config_label(config) + "#" + std::to_string(suffix++);
        }
        labels.push_back(label);
    }

    const auto n_samples = static_cast<int>(dataset.samples.size());
    for (std::size_t c = 0; c < configs.size(); ++c) {
        const auto& config = configs[c];
        std::vector<DecodeResult> results(static_cast<std::size_t>(n_samples));
        std::string failure;
        std::atomic<bool> failed{false};

#pragma omp parallel for schedule(dynamic) num_threads(workers) if (workers > 1)
        for (int i = 0; i < n_samples; ++i) {
            if (failed.load(std::memory_order_relaxed)) {
                continue;
            }
            try {
                results[static_cast<std::size_t>(i)] =
                    run_decode(dataset.samples[static_cast<std::size_t>(i)].prompt_tokens, backend,
                               config);
            } catch (const std::exception& e) {
#pragma omp critical
                {
                    if (!failed.load(std::memory_order_relaxed)) {
                        failure = "sample " + dataset.samples[static_cast<std::size_t>(i)].id +
                                  ": " + e.what();
                        failed.store(true, std::memory_order_relaxed);
                    }
                }
            }
        }
        if (failed) {
            throw state_error(failure);
        }

        RunStats stats;
        for (const auto& result : results) {
            stats.steps += static_cast<double>(result.stats.steps);
            stats.tokens_generated += result.stats.tokens_generated;
            stats.wall_time += result.stats.wall_time_seconds;
        }
        stats.steps /= static_cast<double>(n_samples);
        stats.tps = static_cast<double>(stats.tokens_generated) / stats.wall_time;

        report.configs.push_back({config, labels[c], stats});
        for (int i = 0; i < n_samples; ++i) {
            report.samples.push_back({labels[c], dataset.samples[static_cast<std::size_t>(i)].id,
                                      std::move(results[static_cast<std::size_t>(i)])});
        }
    }

    const auto& base = report.configs[static_cast<std::size_t>(baseline_index)];
    for (std::size_t c = 0; c < report.configs.size(); ++c) {
        if (static_cast<int>(c) == baseline_index) {
            continue;
        }
        const auto& method = report.configs[c];
        ComparisonReport cmp;
        cmp.baseline_config = base.label;
        cmp.method_config = method.label;
        cmp.baseline = base.stats;
        cmp.method = method.stats;
        cmp.step_reduction = step_reduction(base.stats.steps, method.stats.steps);
        cmp.tps_speedup = tps_speedup(base.stats.tps, method.stats.tps);
        report.comparisons.push_back(std::move(cmp));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Trace serialization
// ---------------------------------------------------------------------------

namespace {

ordered_json step_record_json(const StepRecord& record) {
    ordered_json node;
    node["step"] = record.step;
    node["block"] = record.block;
    ordered_json drafted = ordered_json::array();
    for (const auto& d : record.drafted) {
        drafted.push_back({{"position", d.position},
                           {"token", d.token},
                           {"confidence", d.confidence}});
    }
    node["drafted"] = std::move(drafted);
    ordered_json revoked = ordered_json::array();
    for (const auto& r : record.revoked) {
        revoked.push_back({{"position", r.position},
                           {"token", r.prior_token},
                           {"score", r.score}});
    }
    node["revoked"] = std::move(revoked);
    node["snapshot"] = record.snapshot;
    node["cap_hit"] = record.cap_hit;
    return node;
}

StepRecord step_record_from_json(const ordered_json& node) {
    StepRecord record;
    record.step = node.at("step").get<std::int64_t>();
    record.block = node.at("block").get<int>();
    for (const auto& d : node.at("drafted")) {
        record.drafted.push_back({d.at("position").get<int>(), d.at("token").get<TokenId>(),
                                  d.at("confidence").get<float>()});
    }
    for (const auto& r : node.at("revoked")) {
        record.revoked.push_back({r.at("position").get<int>(), r.at("token").get<TokenId>(),
                                  r.at("score").get<float>()});
    }
    record.snapshot = node.at("snapshot").get<std::vector<TokenId>>();
    record.cap_hit = node.at("cap_hit").get<bool>();
    return record;
}

} // namespace

void emit_trace(const DecodeResult& result, const std::filesystem::path& path) {
    ordered_json doc;
    ordered_json steps = ordered_json::array();
    for (const auto& record : result.trace) {
        steps.push_back(step_record_json(record));
    }
    doc["steps"] = std::move(steps);
    std::ofstream out(path);
    if (!out) {
        throw io_error("cannot write trace file " + path.string());
    }
    out << doc.dump(1) << "\n";
}

std::vector<StepRecord> parse_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open trace file " + path.string());
    }
    ordered_json doc;
    try {
        in >> doc;
        std::vector<StepRecord> records;
        for (const auto& node : doc.at("steps")) {
            records.push_back(step_record_from_json(node));
        }
        return records;
    } catch (const std::exception& e) {
        throw parse_error("trace file " + path.string() + ": " + e.what());
    }
}

std::vector<TokenId> replay_trace(const std::vector<StepRecord>& records, int gen_length,
                                  TokenId mask_id) {
    std::vector<TokenId> response(static_cast<std::size_t>(gen_length), mask_id);
    for (const auto& record : records) {
        for (const auto& r : record.revoked) {
            if (r.position < 0 || r.position >= gen_length) {
                throw parse_error("revoked position " + std::to_string(r.position) +
                                  " out of range");
            }
            response[static_cast<std::size_t>(r.position)] = mask_id;
        }
        for (const auto& d : record.drafted) {
            if (d.position < 0 || d.position >= gen_length) {
                throw parse_error("drafted position " + std::to_string(d.position) +
                                  " out of range");
            }
            response[static_cast<std::size_t>(d.position)] = d.token;
        }
        if (record.snapshot != response) {
            throw parse_error("snapshot mismatch at step " + std::to_string(record.step));
        }
    }
    return response;
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

std::string render_report_csv(const BenchmarkReport& report) {
    std::ostringstream out;
    out << "config,steps,tps,step_reduction,tps_speedup\n";
    const auto& base = report.configs[static_cast<std::size_t>(report.baseline_index)];
    for (const auto& run : report.configs) {
        const double reduction = step_reduction(base.stats.steps, run.stats.steps);
        const double speedup = tps_speedup(base.stats.tps, run.stats.tps);
        out << run.label << ',' << format_float(run.stats.steps, "%.4f") << ','
            << format_float(run.stats.tps, "%.4f") << ',' << format_float(round2(reduction), "%.2f")
            << ',' << format_float(round2(speedup), "%.2f") << '\n';
    }
    return out.str();
}

void write_report_csv(const BenchmarkReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw io_error("cannot write report file " + path.string());
    }
    out << render_report_csv(report);
}

void write_summary_json(const BenchmarkReport& report, const std::filesystem::path& path) {
    ordered_json doc;
    doc["baseline"] = report.configs[static_cast<std::size_t>(report.baseline_index)].label;
    ordered_json configs = ordered_json::array();
    for (const auto& run : report.configs) {
        configs.push_back({{"config", run.label},
                           {"steps", run.stats.steps},
                           {"tokens_generated", run.stats.tokens_generated},
                           {"wall_time", run.stats.wall_time},
                           {"tps", run.stats.tps}});
    }
    doc["configs"] = std::move(configs);
    ordered_json comparisons = ordered_json::array();
    for (const auto& cmp : report.comparisons) {
        comparisons.push_back({{"baseline", cmp.baseline_config},
                               {"method", cmp.method_config},
                               {"step_reduction", round2(cmp.step_reduction)},
                               {"tps_speedup", round2(cmp.tps_speedup)}});
    }
    doc["comparisons"] = std::move(comparisons);
    std::ofstream out(path);
    if (!out) {
        throw io_error("cannot write summary file " + path.string());
    }
    out << doc.dump(1) << "\n";
}

void write_samples_jsonl(const BenchmarkReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw io_error("cannot write samples file " + path.string());
    }
    for (const auto& sample : report.samples) {
        ordered_json node;
        node["config"] = sample.config;
        node["id"] = sample.id;
        node["steps"] = sample.result.stats.steps;
        node["tokens_generated"] = sample.result.stats.tokens_generated;
        node["wall_time"] = sample.result.stats.wall_time_seconds;
        node["tps"] = static_cast<double>(sample.result.stats.tokens_generated) /
                      sample.result.stats.wall_time_seconds;
        node["final_tokens"] = sample.result.final_response;
        out << node.dump() << "\n";
    }
}

std::string render_text_table(const BenchmarkReport& report) {
    std::ostringstream out;
    const auto& base = report.configs[static_cast<std::size_t>(report.baseline_index)];
    out << "config                      steps        tps   step-red   tps-speedup\n";
    for (const auto& run : report.configs) {
        const double reduction = step_reduction(base.stats.steps, run.stats.steps);
        const double speedup = tps_speedup(base.stats.tps, run.stats.tps);
        char line[160];
        std::snprintf(line, sizeof(line), "%-24s %9.2f %10.2f %9.2fx %12.2fx\n", run.label.c_str(),
                      run.stats.steps, run.stats.tps, round2(reduction), round2(speedup));
        out << line;
    }
    return out.str();
}

} // namespace wino
