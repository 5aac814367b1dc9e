#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "atd/solver.hpp"
#include "atd/synth.hpp"

namespace atd {

// Key-value text file: one "key = value" per line, '#' starts a comment.
// Lookups go through typed getters that name the offending key on error;
// unknown keys are rejected up front.
class KeyValueFile {
public:
    static KeyValueFile parse(const std::string& path);
    static KeyValueFile parse_text(const std::string& text, const std::string& origin);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    double get_real(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;

    // Typed getter that throws naming the key when it is absent.
    double require_real(const std::string& key) const;
    std::uint64_t require_uint(const std::string& key) const;

    void restrict_keys(const std::vector<std::string>& allowed) const;

private:
    std::map<std::string, std::string> values_;
    std::string origin_;
};

// Solver configuration from a key-value file; absent keys keep defaults.
SaoConfig load_sao_config(const std::string& path);
SaoConfig sao_config_from(const KeyValueFile& kv);

// Generator specification; the structural keys (n, i, j, k, r_true, classes)
// are mandatory.
SyntheticSpec load_synthetic_spec(const std::string& path);

void write_sweep_csv(const std::vector<SweepReport>& sweeps, const std::string& path);

// Written before a command runs: what is about to execute, on which inputs,
// with which seed, plus a stable content hash of the inputs.
struct RunManifest {
    std::string command;
    std::string config_path;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::uint64_t seed = 0;

    void write(const std::string& path) const;
};

// FNV-1a over "blob <size>\0" + contents, per input file, combined in order.
std::uint64_t content_hash(const std::vector<std::string>& paths);

} // namespace atd
