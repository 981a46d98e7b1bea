#include "wino/oracle.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include <json.hpp>

#include "wino/json_io.hpp"
#include "wino/rng.hpp"

namespace wino {

namespace {

constexpr std::uint64_t kEnumerationBound = 1u << 20;
constexpr int kMaxLength = 12;
constexpr double kStochasticTol = 1e-9;

void check_distribution(const std::vector<double>& dist, const std::string& what) {
    double total = 0.0;
    for (double p : dist) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw parse_error(what + " has a negative or non-finite entry");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > kStochasticTol) {
        throw parse_error(what + " sums to " + std::to_string(total) + ", expected 1");
    }
}

} // namespace

MarkovJointModel::MarkovJointModel(Vocabulary vocab, std::vector<double> pi,
                                   std::vector<std::vector<double>> transition, int total_length)
    : vocab_(std::move(vocab)), pi_(std::move(pi)), transition_(std::move(transition)),
      total_length_(total_length), n_states_(vocab_.size() - 1) {
    if (static_cast<int>(pi_.size()) != n_states_) {
        throw shape_error("pi has " + std::to_string(pi_.size()) + " entries, expected " +
                          std::to_string(n_states_));
    }
    check_distribution(pi_, "pi");
    if (static_cast<int>(transition_.size()) != n_states_) {
        throw shape_error("transition matrix must have " + std::to_string(n_states_) + " rows");
    }
    for (int r = 0; r < n_states_; ++r) {
        const auto& row = transition_[static_cast<std::size_t>(r)];
        if (static_cast<int>(row.size()) != n_states_) {
            throw shape_error("transition row " + std::to_string(r) + " has " +
                              std::to_string(row.size()) + " entries, expected " +
                              std::to_string(n_states_));
        }
        check_distribution(row, "transition row " + std::to_string(r));
    }

    if (total_length_ < 1 || total_length_ > kMaxLength) {
        throw capacity_error("total_length " + std::to_string(total_length_) +
                             " outside [1, " + std::to_string(kMaxLength) + "]");
    }
    std::uint64_t combos = 1;
    for (int i = 0; i < total_length_; ++i) {
        combos *= static_cast<std::uint64_t>(n_states_);
        if (combos > kEnumerationBound) {
            throw capacity_error("states^length exceeds the enumeration bound 2^20");
        }
    }

    state_tokens_.reserve(static_cast<std::size_t>(n_states_));
    token_states_.assign(static_cast<std::size_t>(vocab_.size()), -1);
    for (TokenId id = 0; id < vocab_.size(); ++id) {
        if (id == vocab_.mask_id()) {
            continue;
        }
        token_states_[static_cast<std::size_t>(id)] = static_cast<int>(state_tokens_.size());
        state_tokens_.push_back(id);
    }
}

int MarkovJointModel::token_state(TokenId id) const {
    if (id < 0 || id >= vocab_.size()) {
        return -1;
    }
    return token_states_[static_cast<std::size_t>(id)];
}

MarkovJointModel MarkovJointModel::random(int n_states, int total_length, std::uint64_t seed,
                                          double peak) {
    if (n_states < 1) {
        throw config_error("need at least one chain state");
    }
    if (peak < 0.0 || peak >= 1.0) {
        throw config_error("peak must lie in [0, 1)");
    }
    Rng rng(seed);
    auto random_simplex = [&](int size) {
        std::vector<double> row(static_cast<std::size_t>(size));
        double total = 0.0;
        for (auto& x : row) {
            x = rng.next_double() + 1e-3; // keep every entry strictly positive
            total += x;
        }
        for (auto& x : row) {
            x /= total;
        }
        return row;
    };
    auto peaked_row = [&](int size) {
        auto row = random_simplex(size);
        if (peak > 0.0 && size > 1) {
            const int dominant = rng.next_int(0, size - 1);
            for (int j = 0; j < size; ++j) {
                row[static_cast<std::size_t>(j)] *= (1.0 - peak);
            }
            row[static_cast<std::size_t>(dominant)] += peak;
        }
        return row;
    };

    std::vector<std::string> tokens;
    tokens.reserve(static_cast<std::size_t>(n_states) + 1);
    for (int s = 0; s < n_states; ++s) {
        tokens.push_back("t" + std::to_string(s));
    }
    tokens.push_back("<mask>");
    Vocabulary vocab(std::move(tokens), static_cast<TokenId>(n_states));

    std::vector<double> pi = random_simplex(n_states);
    std::vector<std::vector<double>> transition;
    transition.reserve(static_cast<std::size_t>(n_states));
    for (int r = 0; r < n_states; ++r) {
        transition.push_back(peaked_row(n_states));
    }
    return MarkovJointModel(std::move(vocab), std::move(pi), std::move(transition), total_length);
}

std::vector<double> MarkovJointModel::exact_conditional(const std::map<int, TokenId>& visible,
                                                        int query) const {
    if (query < 0 || query >= total_length_) {
        throw state_error("query position " + std::to_string(query) + " outside sequence of length " +
                          std::to_string(total_length_));
    }
    if (visible.count(query) != 0) {
        throw state_error("query position " + std::to_string(query) + " is already visible");
    }

    std::vector<int> assign(static_cast<std::size_t>(total_length_), -1);
    for (const auto& [pos, tok] : visible) {
        if (pos < 0 || pos >= total_length_) {
            throw state_error("visible position " + std::to_string(pos) + " out of range");
        }
        const int s = token_state(tok);
        if (s < 0) {
            throw state_error("cannot condition on the mask token at position " +
                              std::to_string(pos));
        }
        assign[static_cast<std::size_t>(pos)] = s;
    }

    std::vector<int> unknown;
    for (int p = 0; p < total_length_; ++p) {
        if (assign[static_cast<std::size_t>(p)] < 0) {
            unknown.push_back(p);
        }
    }

    std::vector<double> bucket(static_cast<std::size_t>(n_states_), 0.0);
    std::vector<int> digits(unknown.size(), 0);
    while (true) {
        for (std::size_t i = 0; i < unknown.size(); ++i) {
            assign[static_cast<std::size_t>(unknown[i])] = digits[i];
        }
        double weight = pi_[static_cast<std::size_t>(assign[0])];
        for (int p = 1; p < total_length_; ++p) {
            weight *= transition_[static_cast<std::size_t>(assign[static_cast<std::size_t>(p - 1)])]
                                 [static_cast<std::size_t>(assign[static_cast<std::size_t>(p)])];
        }
        bucket[static_cast<std::size_t>(assign[static_cast<std::size_t>(query)])] += weight;

        std::size_t i = 0;
        while (i < digits.size()) {
            if (++digits[i] < n_states_) {
                break;
            }
            digits[i] = 0;
            ++i;
        }
        if (i == digits.size()) {
            break;
        }
    }

    const double total = std::accumulate(bucket.begin(), bucket.end(), 0.0);
    if (!(total > 0.0)) {
        throw domain_error("conditioning on a zero-probability assignment");
    }

    std::vector<double> dist(static_cast<std::size_t>(vocab_.size()), 0.0);
    for (int s = 0; s < n_states_; ++s) {
        dist[static_cast<std::size_t>(state_token(s))] = bucket[static_cast<std::size_t>(s)] / total;
    }
    return dist;
}

std::vector<TokenId> MarkovJointModel::sample_sequence(std::uint64_t seed) const {
    Rng rng(seed);
    auto draw = [&](const std::vector<double>& dist) {
        const double u = rng.next_double();
        double acc = 0.0;
        for (std::size_t s = 0; s + 1 < dist.size(); ++s) {
            acc += dist[s];
            if (u < acc) {
                return static_cast<int>(s);
            }
        }
        return static_cast<int>(dist.size() - 1);
    };

    std::vector<TokenId> seq;
    seq.reserve(static_cast<std::size_t>(total_length_));
    int state = draw(pi_);
    seq.push_back(state_token(state));
    for (int p = 1; p < total_length_; ++p) {
        state = draw(transition_[static_cast<std::size_t>(state)]);
        seq.push_back(state_token(state));
    }
    return seq;
}

double MarkovJointModel::prefix_log_prob(const std::vector<TokenId>& prefix) const {
    if (prefix.empty()) {
        return 0.0;
    }
    if (static_cast<int>(prefix.size()) > total_length_) {
        throw state_error("prefix longer than the joint sequence");
    }
    auto state_of = [&](TokenId id, std::size_t at) {
        const int s = token_state(id);
        if (s < 0) {
            throw state_error("mask token at position " + std::to_string(at) +
                              " has no probability");
        }
        return s;
    };
    double ll = std::log(pi_[static_cast<std::size_t>(state_of(prefix[0], 0))]);
    for (std::size_t i = 1; i < prefix.size(); ++i) {
        ll += std::log(transition_[static_cast<std::size_t>(state_of(prefix[i - 1], i - 1))]
                                  [static_cast<std::size_t>(state_of(prefix[i], i))]);
    }
    return ll;
}

double MarkovJointModel::conditional_log_prob(const std::vector<TokenId>& prompt,
                                              const std::vector<TokenId>& response) const {
    std::vector<TokenId> full = prompt;
    full.insert(full.end(), response.begin(), response.end());
    return prefix_log_prob(full) - prefix_log_prob(prompt);
}

MarkovJointModel MarkovJointModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open oracle file " + path.string());
    }
    nlohmann::ordered_json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw parse_error("oracle file " + path.string() + ": " + e.what());
    }
    if (!doc.contains("vocab") || !doc.contains("pi") || !doc.contains("T") ||
        !doc.contains("total_length")) {
        throw parse_error("oracle file needs vocab, pi, T and total_length");
    }
    Vocabulary vocab = parse_vocab_json(doc.at("vocab"));
    auto pi = doc.at("pi").get<std::vector<double>>();
    auto transition = doc.at("T").get<std::vector<std::vector<double>>>();
    const int total_length = doc.at("total_length").get<int>();
    return MarkovJointModel(std::move(vocab), std::move(pi), std::move(transition), total_length);
}

void MarkovJointModel::save(const std::filesystem::path& path) const {
    nlohmann::ordered_json doc;
    doc["vocab"] = vocab_json(vocab_);
    doc["pi"] = pi_;
    doc["T"] = transition_;
    doc["total_length"] = total_length_;
    std::ofstream out(path);
    if (!out) {
        throw io_error("cannot write oracle file " + path.string());
    }
    out << doc.dump(1) << "\n";
}

std::vector<std::vector<float>> OracleBackend::forward(const std::vector<TokenId>& tokens,
                                                       const std::vector<int>& position_ids,
                                                       const AttnMask& attn_mask) const {
    validate_forward_inputs(model_.vocab(), tokens, position_ids, attn_mask);
    const int n = static_cast<int>(tokens.size());
    for (int i = 0; i < n; ++i) {
        if (position_ids[static_cast<std::size_t>(i)] >= model_.total_length()) {
            throw state_error("position id " + std::to_string(position_ids[static_cast<std::size_t>(i)]) +
                              " outside the joint sequence of length " +
                              std::to_string(model_.total_length()));
        }
    }
    const TokenId mask_id = model_.vocab().mask_id();
    const int vsize = model_.vocab().size();

    std::vector<std::vector<float>> dists(static_cast<std::size_t>(n));
    std::string failure;
    std::atomic<bool> failed{false};

#pragma omp parallel for schedule(dynamic) if (parallel_)
    for (int i = 0; i < n; ++i) {
        if (failed.load(std::memory_order_relaxed)) {
            continue;
        }
        try {
            std::map<int, TokenId> visible;
            for (int k = 0; k < n; ++k) {
                if (!attn_mask.at(i, k) || tokens[static_cast<std::size_t>(k)] == mask_id) {
                    continue;
                }
                const int pos = position_ids[static_cast<std::size_t>(k)];
                auto [it, inserted] = visible.emplace(pos, tokens[static_cast<std::size_t>(k)]);
                if (!inserted && it->second != tokens[static_cast<std::size_t>(k)]) {
                    throw state_error("conflicting visible tokens at sequence position " +
                                      std::to_string(pos));
                }
            }

            const int qpos = position_ids[static_cast<std::size_t>(i)];
            std::vector<float> dist(static_cast<std::size_t>(vsize), 0.0f);
            auto self = visible.find(qpos);
            if (self != visible.end()) {
                // The query can see a token carrying its own sequence
                // position, so the conditional is a point mass on it.
                dist[static_cast<std::size_t>(self->second)] = 1.0f;
            } else {
                const auto cond = model_.exact_conditional(visible, qpos);
                for (int t = 0; t < vsize; ++t) {
                    dist[static_cast<std::size_t>(t)] =
                        static_cast<float>(cond[static_cast<std::size_t>(t)]);
                }
            }
            dists[static_cast<std::size_t>(i)] = std::move(dist);
        } catch (const std::exception& e) {
#pragma omp critical
            {
                if (!failed.load(std::memory_order_relaxed)) {
                    failure = e.what();
                    failed.store(true, std::memory_order_relaxed);
                }
            }
        }
    }

    if (failed) {
        throw state_error(failure);
    }
    return dists;
}

} // namespace wino
