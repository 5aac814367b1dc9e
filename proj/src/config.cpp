#include "atd/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace atd {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

} // namespace

KeyValueFile KeyValueFile::parse(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str(), path);
}

KeyValueFile KeyValueFile::parse_text(const std::string& text, const std::string& origin) {
    KeyValueFile kv;
    kv.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw validation_error(origin + ":" + std::to_string(lineno) +
                                   ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw validation_error(origin + ":" + std::to_string(lineno) + ": empty key or value");
        if (!kv.values_.emplace(key, value).second)
            throw validation_error(origin + ": duplicate key '" + key + "'");
    }
    return kv;
}

double KeyValueFile::get_real(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || *end != '\0')
        throw validation_error(origin_ + ": key '" + key + "' is not a real number");
    return v;
}

std::int64_t KeyValueFile::get_int(const std::string& key, std::int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    char* end = nullptr;
    const long long v = std::strtoll(it->second.c_str(), &end, 10);
    if (end == it->second.c_str() || *end != '\0')
        throw validation_error(origin_ + ": key '" + key + "' is not an integer");
    return v;
}

std::uint64_t KeyValueFile::get_uint(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
    if (end == it->second.c_str() || *end != '\0' || it->second[0] == '-')
        throw validation_error(origin_ + ": key '" + key + "' is not a non-negative integer");
    return v;
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw validation_error(origin_ + ": key '" + key + "' is not a boolean");
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double KeyValueFile::require_real(const std::string& key) const {
    if (!has(key)) throw validation_error(origin_ + ": missing key '" + key + "'");
    return get_real(key, 0.0);
}

std::uint64_t KeyValueFile::require_uint(const std::string& key) const {
    if (!has(key)) throw validation_error(origin_ + ": missing key '" + key + "'");
    return get_uint(key, 0);
}

void KeyValueFile::restrict_keys(const std::vector<std::string>& allowed) const {
    for (const auto& [key, value] : values_)
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw validation_error(origin_ + ": unknown key '" + key + "'");
}

SaoConfig sao_config_from(const KeyValueFile& kv) {
    kv.restrict_keys({"rank", "alpha", "beta", "gamma", "eta", "batch_size", "t_rounds",
                      "max_sweeps", "stop_tol", "stop_window", "seed", "mode", "moving_average",
                      "eta_cmin", "aug", "aug_sigma"});
    SaoConfig cfg;
    cfg.rank = kv.get_uint("rank", cfg.rank);
    cfg.alpha = kv.get_real("alpha", cfg.alpha);
    cfg.beta = kv.get_real("beta", cfg.beta);
    const std::string gamma = kv.get_string("gamma", "auto");
    if (gamma == "auto")
        cfg.gamma = -1.0;
    else
        cfg.gamma = kv.require_real("gamma");
    cfg.eta = kv.get_real("eta", cfg.eta);
    cfg.batch_size = kv.get_uint("batch_size", cfg.batch_size);
    cfg.t_rounds = kv.get_uint("t_rounds", cfg.t_rounds);
    cfg.max_sweeps = kv.get_uint("max_sweeps", cfg.max_sweeps);
    cfg.stop_tol = kv.get_real("stop_tol", cfg.stop_tol);
    cfg.stop_window = kv.get_uint("stop_window", cfg.stop_window);
    cfg.seed = kv.get_uint("seed", cfg.seed);
    cfg.mode = parse_solver_mode(kv.get_string("mode", "atd"));
    cfg.moving_average = kv.get_bool("moving_average", cfg.moving_average);
    cfg.eta_cmin = kv.get_real("eta_cmin", cfg.eta_cmin);
    const std::string aug = kv.get_string("aug", "tensor_gaussian");
    if (aug == "none")
        cfg.aug = AugKind::none;
    else if (aug == "tensor_gaussian")
        cfg.aug = AugKind::tensor_gaussian;
    else
        throw validation_error("config: unknown aug kind '" + aug + "'");
    cfg.aug_sigma = kv.get_real("aug_sigma", cfg.aug_sigma);
    return cfg;
}

SaoConfig load_sao_config(const std::string& path) {
    return sao_config_from(KeyValueFile::parse(path));
}

SyntheticSpec load_synthetic_spec(const std::string& path) {
    const KeyValueFile kv = KeyValueFile::parse(path);
    kv.restrict_keys({"n", "i", "j", "k", "r_true", "classes", "centroid_scale", "tau", "sigma",
                      "seed"});
    SyntheticSpec spec;
    spec.n = kv.require_uint("n");
    spec.i = kv.require_uint("i");
    spec.j = kv.require_uint("j");
    spec.k = kv.require_uint("k");
    spec.r_true = kv.require_uint("r_true");
    spec.classes = kv.require_uint("classes");
    spec.centroid_scale = kv.get_real("centroid_scale", spec.centroid_scale);
    spec.tau = kv.get_real("tau", spec.tau);
    spec.sigma = kv.get_real("sigma", spec.sigma);
    spec.seed = kv.get_uint("seed", spec.seed);
    if (spec.sigma < 0.0) throw validation_error(path + ": key 'sigma' must be >= 0");
    if (spec.tau < 0.0) throw validation_error(path + ": key 'tau' must be >= 0");
    spec.validate();
    return spec;
}

void write_sweep_csv(const std::vector<SweepReport>& sweeps, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw io_error("sweep csv: cannot open " + path);
    std::fprintf(f, "sweep,loss_total,loss_cpd,loss_reg,loss_ss,seconds,peak_aux_bytes\n");
    for (const auto& s : sweeps)
        std::fprintf(f, "%zu,%.17g,%.17g,%.17g,%.17g,%.6f,%zu\n", s.sweep, s.loss_total,
                     s.loss_cpd, s.loss_reg, s.loss_ss, s.seconds, s.peak_aux_bytes);
    std::fclose(f);
}

std::uint64_t content_hash(const std::vector<std::string>& paths) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](const char* data, std::size_t len) {
        for (std::size_t i = 0; i < len; ++i) {
            h ^= static_cast<unsigned char>(data[i]);
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& path : paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw io_error("content_hash: cannot open " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        const std::string body = buf.str();
        const std::string header = "blob " + std::to_string(body.size());
        mix(header.c_str(), header.size() + 1); // includes the NUL
        mix(body.data(), body.size());
    }
    return h;
}

void RunManifest::write(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw io_error("manifest: cannot open " + path);
    std::fprintf(f, "command=%s\n", command.c_str());
    if (!config_path.empty()) std::fprintf(f, "config=%s\n", config_path.c_str());
    for (const auto& p : inputs) std::fprintf(f, "input=%s\n", p.c_str());
    for (const auto& p : outputs) std::fprintf(f, "output=%s\n", p.c_str());
    std::fprintf(f, "seed=%llu\n", static_cast<unsigned long long>(seed));
    std::fprintf(f, "input_hash=%016llx\n",
                 static_cast<unsigned long long>(content_hash(inputs)));
    std::fclose(f);
}

} // namespace atd
