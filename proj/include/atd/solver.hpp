#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "atd/bases.hpp"
#include "atd/objective.hpp"
#include "atd/tensor.hpp"

namespace atd {

enum class SolverMode {
    atd,          // contrastive term active, augmented reconstruction active
    atd_ss_minus, // beta forced to 0, augmented reconstruction kept
    sals,         // batched plain decomposition: no augmentation, beta = 0
    cp_als_full,  // alternating exact ridge solves on the whole tensor
};

enum class AugKind {
    none,            // no augmented branch at all
    tensor_gaussian, // batch + sigma * N(0,1), seeded per (sweep, batch)
    paired,          // caller supplies a row-aligned pre-augmented tensor
};

struct SaoConfig {
    std::size_t rank = 32;
    double alpha = 1e-3;
    double beta = 2.0;
    double gamma = -1.0; // < 0 means "use the batch size"
    double eta = 2e-3;   // constant factor blend rate, in (0, 1]
    std::size_t batch_size = 128;
    std::size_t t_rounds = 1; // refinement passes of the coefficient recursion
    std::size_t max_sweeps = 50;
    double stop_tol = 1e-3;      // relative sweep-loss change threshold
    std::size_t stop_window = 3; // consecutive small changes required
    std::uint64_t seed = 0;
    SolverMode mode = SolverMode::atd;
    bool moving_average = false;
    double eta_cmin = 0.5; // harmonic rate eta_l = min(1, eta_cmin / l)
    AugKind aug = AugKind::tensor_gaussian;
    double aug_sigma = 0.01;

    void validate() const;
    double gamma_for(std::size_t batch_rows) const {
        return gamma < 0.0 ? static_cast<double>(batch_rows) : gamma;
    }
};

SolverMode parse_solver_mode(const std::string& name);
const char* solver_mode_name(SolverMode mode);

struct SweepReport {
    std::size_t sweep = 0;
    double loss_total = 0.0;
    double loss_cpd = 0.0;
    double loss_reg = 0.0;
    double loss_ss = 0.0;
    double seconds = 0.0;
    std::size_t peak_aux_bytes = 0;
    bool stopped = false;
};

struct SolveResult {
    KruskalBases bases;
    std::vector<SweepReport> sweeps;
    bool converged = false;       // stopping rule fired before max_sweeps
    std::size_t clamp_events = 0; // degenerate rows rescued in the solver path
    std::size_t recursion_divergences = 0;
    std::size_t bound_violations = 0; // factor-norm cap misses (diagnostic)
};

// ---- batch-level steps, exposed for direct testing -------------------------

// Exact ridge initial guesses for the batch coefficients given frozen bases.
// The augmented output is only produced when batch_aug is non-null.
std::pair<Matrix, Matrix> cold_start(const DenseTensor& batch, const DenseTensor* batch_aug,
                                     const KruskalBases& bases, double alpha);

struct AuxiliaryResult {
    Matrix x;
    Matrix x_aug;
    std::size_t clamp_events = 0;
    bool diverged = false; // iterate norms grew across rounds
};

// Row-independent refinement toward the stationary coefficients: each round
// maps X to V1 - beta * D(X) * V2 with V1 the cold-start solution and V2 the
// ridge-solved contrast direction built from the other branch's cold start.
AuxiliaryResult auxiliary_step(const Matrix& x_init, const Matrix& x_aug_init,
                               const DenseTensor& batch, const DenseTensor* batch_aug,
                               const KruskalBases& bases, const SaoConfig& cfg);

enum class FactorId { A, B, C };

// Exact minimizer of the per-factor ridge system over the concatenated
// original + augmented batches (augmented part skipped when absent).
Matrix solve_factor(FactorId which, const Matrix& x, const Matrix* x_aug,
                    const DenseTensor& batch, const DenseTensor* batch_aug,
                    const KruskalBases& bases, double alpha);

// solve_factor followed by the convex blend (1-eta)*old + eta*target.
Matrix main_step(FactorId which, const Matrix& x, const Matrix* x_aug, const DenseTensor& batch,
                 const DenseTensor* batch_aug, const KruskalBases& bases, double alpha,
                 double eta);

// ---- stopping rule ----------------------------------------------------------

// First index s such that the `window` most recent relative changes
// |L_i - L_{i-1}| / |L_{i-1}|, i in (s-window, s], are all below tol.
std::optional<std::size_t> stop_index(const std::vector<double>& sweep_losses, double tol,
                                      std::size_t window);

// ---- drivers ----------------------------------------------------------------

// Stochastic alternating optimization over shuffled batches. Augmentation
// comes from cfg.aug; AugKind::paired requires the second overload.
// The bases are single-owner state mutated sequentially batch to batch;
// reports are append-only. The batch-level steps above are pure.
SolveResult sao_run(const DenseTensor& t, const SaoConfig& cfg);
SolveResult sao_run(const DenseTensor& t, const DenseTensor& t_aug_paired, const SaoConfig& cfg);

// Plain regularized alternating least squares on the full tensor; the
// X, A, B, C blocks are each solved exactly in turn every sweep.
SolveResult cp_als_full(const DenseTensor& t, const SaoConfig& cfg);

// Dispatch on cfg.mode.
SolveResult decompose(const DenseTensor& t, const SaoConfig& cfg);

// Factor-norm cap that every refined basis must respect:
// (||T||^2 + ||T~||^2 + 2*beta*(gamma+2)) / alpha.
double factor_norm_cap(double t_norm_sq, double t_aug_norm_sq, double beta, double gamma,
                       double alpha);

} // namespace atd
