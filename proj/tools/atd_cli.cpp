// Command-line front end: synthetic data generation, decomposition, feature
// extraction, linear evaluation, and the batch-size memory benchmark.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "atd/config.hpp"
#include "atd/kernels.hpp"
#include "atd/solver.hpp"
#include "atd/synth.hpp"
#include "atd/tensor.hpp"

namespace {

using namespace atd;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

Matrix tensor_as_matrix(const DenseTensor& t) {
    if (t.order() != 2) throw io_error("expected an order-2 tensor");
    Matrix m(t.extent(0), t.extent(1));
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = t[r * m.cols() + c];
    return m;
}

DenseTensor matrix_as_tensor(const Matrix& m) {
    DenseTensor t({m.rows(), m.cols()});
    for (std::size_t i = 0; i < m.size(); ++i) t[i] = m.data()[i];
    return t;
}

void write_bases(const KruskalBases& bases, const std::string& prefix) {
    write_tensor(matrix_as_tensor(bases.A), prefix + ".A.dtz");
    write_tensor(matrix_as_tensor(bases.B), prefix + ".B.dtz");
    write_tensor(matrix_as_tensor(bases.C), prefix + ".C.dtz");
}

KruskalBases read_bases(const std::string& prefix) {
    return {tensor_as_matrix(read_tensor(prefix + ".A.dtz")),
            tensor_as_matrix(read_tensor(prefix + ".B.dtz")),
            tensor_as_matrix(read_tensor(prefix + ".C.dtz"))};
}

std::vector<int> read_labels_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("labels csv: cannot open " + path);
    std::vector<int> labels;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        labels.push_back(std::stoi(line));
    }
    if (labels.empty()) throw io_error("labels csv: no rows in " + path);
    return labels;
}

void write_labels_csv(const std::vector<int>& labels, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw io_error("labels csv: cannot open " + path);
    std::fprintf(f, "label\n");
    for (int l : labels) std::fprintf(f, "%d\n", l);
    std::fclose(f);
}

// ---- subcommand payloads ----------------------------------------------------

struct GenArgs {
    std::string spec_path, out_tensor, out_labels, out_truth;
};

int run_gen(const GenArgs& a) {
    SyntheticSpec spec = load_synthetic_spec(a.spec_path);

    RunManifest manifest;
    manifest.command = "gen";
    manifest.config_path = a.spec_path;
    manifest.inputs = {a.spec_path};
    manifest.outputs = {a.out_tensor, a.out_labels};
    manifest.seed = spec.seed;
    manifest.write(a.out_tensor + ".manifest");

    SyntheticData data = generate(spec);
    write_tensor(data.tensor, a.out_tensor);
    write_labels_csv(data.labels, a.out_labels);
    if (!a.out_truth.empty()) {
        write_bases(data.bases, a.out_truth);
        write_tensor(matrix_as_tensor(data.coefficients), a.out_truth + ".X.dtz");
    }
    std::printf("gen: wrote %zu samples of shape %zux%zux%zu\n", spec.n, spec.i, spec.j, spec.k);
    return kExitOk;
}

struct DecomposeArgs {
    std::string tensor_path, config_path, out_bases, sweep_csv;
    std::string mode_flag;
    bool moving_average = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> batch_size, rank, max_sweeps;
};

int run_decompose(const DecomposeArgs& a) {
    SaoConfig cfg = a.config_path.empty() ? SaoConfig{} : load_sao_config(a.config_path);
    if (!a.mode_flag.empty()) cfg.mode = parse_solver_mode(a.mode_flag);
    if (a.moving_average) cfg.moving_average = true;
    if (a.seed) cfg.seed = *a.seed;
    if (a.batch_size) cfg.batch_size = *a.batch_size;
    if (a.rank) cfg.rank = *a.rank;
    if (a.max_sweeps) cfg.max_sweeps = *a.max_sweeps;
    cfg.validate();

    RunManifest manifest;
    manifest.command = "decompose";
    manifest.config_path = a.config_path;
    manifest.inputs = {a.tensor_path};
    if (!a.config_path.empty()) manifest.inputs.push_back(a.config_path);
    manifest.outputs = {a.out_bases + ".A.dtz", a.out_bases + ".B.dtz", a.out_bases + ".C.dtz"};
    if (!a.sweep_csv.empty()) manifest.outputs.push_back(a.sweep_csv);
    manifest.seed = cfg.seed;
    manifest.write(a.out_bases + ".manifest");

    const DenseTensor t = read_tensor(a.tensor_path);
    const SolveResult res = decompose(t, cfg);
    write_bases(res.bases, a.out_bases);
    if (!a.sweep_csv.empty()) write_sweep_csv(res.sweeps, a.sweep_csv);

    std::printf("decompose: mode=%s sweeps=%zu final_loss=%.6g %s\n",
                solver_mode_name(cfg.mode), res.sweeps.size(),
                res.sweeps.empty() ? 0.0 : res.sweeps.back().loss_total,
                res.converged ? "(stopping rule)" : "(max sweeps)");
    if (res.recursion_divergences > 0)
        std::fprintf(stderr, "decompose: warning: %zu diverging coefficient recursions\n",
                     res.recursion_divergences);
    return kExitOk;
}

struct FeaturesArgs {
    std::string tensor_path, bases_prefix, labels_path, out_csv;
    double alpha = 1e-3;
};

int run_features(const FeaturesArgs& a) {
    RunManifest manifest;
    manifest.command = "features";
    manifest.inputs = {a.tensor_path, a.bases_prefix + ".A.dtz", a.bases_prefix + ".B.dtz",
                       a.bases_prefix + ".C.dtz"};
    if (!a.labels_path.empty()) manifest.inputs.push_back(a.labels_path);
    manifest.outputs = {a.out_csv};
    manifest.write(a.out_csv + ".manifest");

    const DenseTensor t = read_tensor(a.tensor_path);
    const KruskalBases bases = read_bases(a.bases_prefix);
    if (!(a.alpha > 0.0)) throw validation_error("features: alpha must be > 0");

    LabeledFeatures lf;
    lf.features = extract_features(t, bases, a.alpha);
    lf.labels = a.labels_path.empty() ? std::vector<int>(lf.features.rows(), 0)
                                      : read_labels_csv(a.labels_path);
    if (lf.labels.size() != lf.features.rows())
        throw validation_error("features: label count does not match sample count");
    write_features_csv(lf, a.out_csv);
    std::printf("features: wrote %zu rows of rank %zu\n", lf.features.rows(),
                lf.features.cols());
    return kExitOk;
}

struct EvalArgs {
    std::string train_csv, test_csv, out_path;
    std::uint64_t seed = 0;
};

int run_eval(const EvalArgs& a) {
    RunManifest manifest;
    manifest.command = "eval";
    manifest.inputs = {a.train_csv, a.test_csv};
    if (!a.out_path.empty()) manifest.outputs = {a.out_path};
    manifest.seed = a.seed;
    if (!a.out_path.empty()) manifest.write(a.out_path + ".manifest");

    const LabeledFeatures train = read_features_csv(a.train_csv);
    const LabeledFeatures test = read_features_csv(a.test_csv);
    LinearModelConfig cfg;
    cfg.seed = a.seed;
    const LinearModel model = train_linear(train, cfg);
    const double train_acc = accuracy(model, train);
    const double test_acc = accuracy(model, test);

    std::printf("accuracy,%.6f\n", test_acc);
    if (!a.out_path.empty()) {
        std::FILE* f = std::fopen(a.out_path.c_str(), "wb");
        if (!f) throw io_error("eval: cannot open " + a.out_path);
        std::fprintf(f, "split,accuracy\ntrain,%.6f\ntest,%.6f\n", train_acc, test_acc);
        std::fclose(f);
    }
    return kExitOk;
}

struct BenchArgs {
    std::string tensor_path, config_path, out_csv, sizes = "32,64,128,256,512,full";
    std::optional<std::uint64_t> seed;
};

int run_bench_mem(const BenchArgs& a) {
    SaoConfig base = a.config_path.empty() ? SaoConfig{} : load_sao_config(a.config_path);
    if (a.seed) base.seed = *a.seed;

    RunManifest manifest;
    manifest.command = "bench-mem";
    manifest.config_path = a.config_path;
    manifest.inputs = {a.tensor_path};
    if (!a.config_path.empty()) manifest.inputs.push_back(a.config_path);
    manifest.outputs = {a.out_csv};
    manifest.seed = base.seed;
    manifest.write(a.out_csv + ".manifest");

    const DenseTensor t = read_tensor(a.tensor_path);
    const std::size_t n = t.extent(0);

    std::vector<std::size_t> sizes;
    std::stringstream ss(a.sizes);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok == "full")
            sizes.push_back(n);
        else
            sizes.push_back(static_cast<std::size_t>(std::stoull(tok)));
    }
    if (sizes.empty()) throw validation_error("bench-mem: no batch sizes given");

    std::FILE* f = std::fopen(a.out_csv.c_str(), "wb");
    if (!f) throw io_error("bench-mem: cannot open " + a.out_csv);
    std::fprintf(f, "batch_size,peak_aux_bytes,seconds_per_sweep\n");
    for (std::size_t b : sizes) {
        SaoConfig cfg = base;
        cfg.batch_size = std::min(b, n);
        cfg.max_sweeps = std::min<std::size_t>(base.max_sweeps, 2);
        const SolveResult res = sao_run(t, cfg);
        std::size_t peak = 0;
        double secs = 0.0;
        for (const auto& s : res.sweeps) {
            peak = std::max(peak, s.peak_aux_bytes);
            secs += s.seconds;
        }
        secs /= static_cast<double>(res.sweeps.size());
        std::fprintf(f, "%zu,%zu,%.6f\n", cfg.batch_size, peak, secs);
        std::printf("bench-mem: b=%zu peak=%zu bytes, %.4f s/sweep\n", cfg.batch_size, peak,
                    secs);
    }
    std::fclose(f);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Augmented tensor decomposition toolkit"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* cmd_gen = app.add_subcommand("gen", "Generate synthetic class-structured tensors");
    cmd_gen->add_option("--spec", gen.spec_path, "generator spec file")->required();
    cmd_gen->add_option("--out-tensor", gen.out_tensor, "output tensor path")->required();
    cmd_gen->add_option("--out-labels", gen.out_labels, "output labels csv")->required();
    cmd_gen->add_option("--out-truth", gen.out_truth,
                        "prefix for ground-truth bases/coefficients");

    DecomposeArgs dec;
    auto* cmd_dec = app.add_subcommand("decompose", "Fit bases to a tensor");
    cmd_dec->add_option("--tensor", dec.tensor_path, "input tensor")->required();
    cmd_dec->add_option("--config", dec.config_path, "solver config file");
    cmd_dec->add_option("--out", dec.out_bases, "output bases prefix")->required();
    cmd_dec->add_option("--sweep-csv", dec.sweep_csv, "per-sweep report csv");
    cmd_dec->add_option("--mode", dec.mode_flag, "atd|ssminus|als|sals");
    cmd_dec->add_flag("--moving-average", dec.moving_average, "average consecutive batches");
    std::uint64_t seed_val = 0;
    auto* seed_opt = cmd_dec->add_option("--seed", seed_val, "master seed");
    std::size_t bs_val = 0, rank_val = 0, sweeps_val = 0;
    auto* bs_opt = cmd_dec->add_option("--batch-size", bs_val, "batch size");
    auto* rank_opt = cmd_dec->add_option("--rank", rank_val, "decomposition rank");
    auto* sweeps_opt = cmd_dec->add_option("--max-sweeps", sweeps_val, "sweep cap");

    FeaturesArgs feat;
    auto* cmd_feat = app.add_subcommand("features", "Extract ridge features under fixed bases");
    cmd_feat->add_option("--tensor", feat.tensor_path, "input tensor")->required();
    cmd_feat->add_option("--bases", feat.bases_prefix, "bases prefix")->required();
    cmd_feat->add_option("--labels", feat.labels_path, "labels csv to join");
    cmd_feat->add_option("--alpha", feat.alpha, "ridge weight");
    cmd_feat->add_option("--out", feat.out_csv, "output features csv")->required();

    EvalArgs eval;
    auto* cmd_eval = app.add_subcommand("eval", "Linear evaluation of feature files");
    cmd_eval->add_option("--train", eval.train_csv, "training features csv")->required();
    cmd_eval->add_option("--test", eval.test_csv, "test features csv")->required();
    cmd_eval->add_option("--out", eval.out_path, "accuracy report path");
    cmd_eval->add_option("--seed", eval.seed, "classifier seed");

    BenchArgs bench;
    auto* cmd_bench = app.add_subcommand("bench-mem", "Sweep batch sizes, report peak memory");
    cmd_bench->add_option("--tensor", bench.tensor_path, "input tensor")->required();
    cmd_bench->add_option("--config", bench.config_path, "solver config file");
    cmd_bench->add_option("--sizes", bench.sizes, "comma list, 'full' = all samples");
    cmd_bench->add_option("--out", bench.out_csv, "output csv")->required();
    std::uint64_t bench_seed = 0;
    auto* bench_seed_opt = cmd_bench->add_option("--seed", bench_seed, "master seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*cmd_gen) return run_gen(gen);
        if (*cmd_dec) {
            if (*seed_opt) dec.seed = seed_val;
            if (*bs_opt) dec.batch_size = bs_val;
            if (*rank_opt) dec.rank = rank_val;
            if (*sweeps_opt) dec.max_sweeps = sweeps_val;
            return run_decompose(dec);
        }
        if (*cmd_feat) return run_features(feat);
        if (*cmd_eval) return run_eval(eval);
        if (*cmd_bench) {
            if (*bench_seed_opt) bench.seed = bench_seed;
            return run_bench_mem(bench);
        }
    } catch (const validation_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const numeric_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    } catch (const io_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    }
    return kExitValidation;
}
