#include "atd/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>

#include "atd/kernels.hpp"
#include "atd/rng.hpp"
#include "atd/simd.hpp"

namespace atd {

void SaoConfig::validate() const {
    if (rank == 0) throw validation_error("config: rank must be >= 1");
    if (!(alpha > 0.0)) throw validation_error("config: alpha must be > 0");
    if (beta < 0.0) throw validation_error("config: beta must be >= 0");
    if (!(eta > 0.0) || eta > 1.0) throw validation_error("config: eta must lie in (0, 1]");
    if (batch_size < 2) throw validation_error("config: batch_size must be >= 2");
    if (t_rounds == 0) throw validation_error("config: t_rounds must be >= 1");
    if (max_sweeps == 0) throw validation_error("config: max_sweeps must be >= 1");
    if (!(stop_tol > 0.0)) throw validation_error("config: stop_tol must be > 0");
    if (stop_window == 0) throw validation_error("config: stop_window must be >= 1");
    if (!(eta_cmin > 0.0)) throw validation_error("config: eta_cmin must be > 0");
    if (aug_sigma < 0.0) throw validation_error("config: aug_sigma must be >= 0");
}

SolverMode parse_solver_mode(const std::string& name) {
    if (name == "atd") return SolverMode::atd;
    if (name == "ssminus" || name == "atd_ss_minus") return SolverMode::atd_ss_minus;
    if (name == "sals") return SolverMode::sals;
    if (name == "als" || name == "cp_als_full") return SolverMode::cp_als_full;
    throw validation_error("config: unknown mode '" + name + "'");
}

const char* solver_mode_name(SolverMode mode) {
    switch (mode) {
        case SolverMode::atd: return "atd";
        case SolverMode::atd_ss_minus: return "ssminus";
        case SolverMode::sals: return "sals";
        case SolverMode::cp_als_full: return "als";
    }
    return "?";
}

double factor_norm_cap(double t_norm_sq, double t_aug_norm_sq, double beta, double gamma,
                       double alpha) {
    return (t_norm_sq + t_aug_norm_sq + 2.0 * beta * (gamma + 2.0)) / alpha;
}

std::pair<Matrix, Matrix> cold_start(const DenseTensor& batch, const DenseTensor* batch_aug,
                                     const KruskalBases& bases, double alpha) {
    const auto fl = bases.as_list();
    const GramStack gs = GramStack::from_factors(fl, alpha);
    Matrix x = ridge_solve(mttkrp(batch, fl, 0), gs);
    Matrix x_aug;
    if (batch_aug) {
        if (batch_aug->shape() != batch.shape())
            throw validation_error("cold_start: augmented batch shape mismatch");
        x_aug = ridge_solve(mttkrp(*batch_aug, fl, 0), gs);
    }
    return {std::move(x), std::move(x_aug)};
}

AuxiliaryResult auxiliary_step(const Matrix& x_init, const Matrix& x_aug_init,
                               const DenseTensor& batch, const DenseTensor* batch_aug,
                               const KruskalBases& bases, const SaoConfig& cfg) {
    if (batch.extent(0) != x_init.rows())
        throw validation_error("auxiliary_step: coefficient rows do not match the batch");
    AuxiliaryResult res;
    if (cfg.beta == 0.0) {
        res.x = x_init;
        res.x_aug = x_aug_init;
        return res;
    }
    if (batch_aug == nullptr || x_aug_init.empty())
        throw validation_error("auxiliary_step: contrastive term needs the augmented branch");

    const double gamma = cfg.gamma_for(x_init.rows());
    const auto fl = bases.as_list();
    const GramStack gs = GramStack::from_factors(fl, cfg.alpha);

    // Contrast directions; each branch is driven by the other's cold start.
    const Matrix v2_x =
        ridge_solve(apply_g_gamma(normalize_rows(x_aug_init, RowNormPolicy::clamp,
                                                 &res.clamp_events),
                                  gamma),
                    gs);
    const Matrix v2_a =
        ridge_solve(apply_g_gamma(normalize_rows(x_init, RowNormPolicy::clamp,
                                                 &res.clamp_events),
                                  gamma),
                    gs);

    auto iterate = [&](const Matrix& v1, const Matrix& v2, const Matrix& start) {
        Matrix cur = start;
        Matrix next(cur.rows(), cur.cols());
        double first_move = -1.0, last_move = -1.0;
        bool growing = cfg.t_rounds >= 2;
        for (std::size_t round = 0; round < cfg.t_rounds; ++round) {
            double move_sq = 0.0;
            for (std::size_t n = 0; n < cur.rows(); ++n) {
                double norm = cur.row_norm(n);
                if (norm < kRowNormFloor) {
                    ++res.clamp_events;
                    norm = kRowNormFloor;
                }
                const double s = cfg.beta / norm;
                const double* r1 = v1.row(n);
                const double* r2 = v2.row(n);
                double* dst = next.row(n);
                for (std::size_t c = 0; c < cur.cols(); ++c) {
                    dst[c] = r1[c] - s * r2[c];
                    const double d = dst[c] - cur.row(n)[c];
                    move_sq += d * d;
                }
            }
            if (round == 0) first_move = move_sq;
            if (last_move >= 0.0 && move_sq <= last_move) growing = false;
            last_move = move_sq;
            std::swap(cur, next);
        }
        if (growing && last_move > 4.0 * first_move) res.diverged = true;
        return cur;
    };

    res.x = iterate(x_init, v2_x, x_init);
    res.x_aug = iterate(x_aug_init, v2_a, x_aug_init);
    return res;
}

namespace {

std::size_t factor_mode(FactorId which) {
    switch (which) {
        case FactorId::A: return 1;
        case FactorId::B: return 2;
        case FactorId::C: return 3;
    }
    return 1;
}

std::vector<const Matrix*> factor_list(FactorId which, const Matrix& x,
                                       const KruskalBases& bases) {
    switch (which) {
        case FactorId::A: return {&x, &bases.B, &bases.C};
        case FactorId::B: return {&x, &bases.A, &bases.C};
        case FactorId::C: return {&x, &bases.A, &bases.B};
    }
    return {};
}

} // namespace

Matrix solve_factor(FactorId which, const Matrix& x, const Matrix* x_aug,
                    const DenseTensor& batch, const DenseTensor* batch_aug,
                    const KruskalBases& bases, double alpha) {
    const std::size_t mode = factor_mode(which);
    const auto fl = factor_list(which, x, bases);
    Matrix rhs = mttkrp(batch, fl, mode);
    Matrix h = GramStack::from_factors(fl, 0.0).hadamard;
    if (batch_aug) {
        if (x_aug == nullptr)
            throw validation_error("solve_factor: augmented batch without coefficients");
        const auto fl_aug = factor_list(which, *x_aug, bases);
        rhs.add_scaled(mttkrp(*batch_aug, fl_aug, mode), 1.0);
        const Matrix h_aug = GramStack::from_factors(fl_aug, 0.0).hadamard;
        simd::axpy(1.0, h_aug.data(), h.data(), h.size());
    }
    for (std::size_t i = 0; i < h.rows(); ++i) h(i, i) += alpha;
    return ridge_solve(rhs, h);
}

Matrix main_step(FactorId which, const Matrix& x, const Matrix* x_aug, const DenseTensor& batch,
                 const DenseTensor* batch_aug, const KruskalBases& bases, double alpha,
                 double eta) {
    const Matrix target = solve_factor(which, x, x_aug, batch, batch_aug, bases, alpha);
    const Matrix& old = which == FactorId::A ? bases.A : which == FactorId::B ? bases.B : bases.C;
    return blend(old, target, eta);
}

std::optional<std::size_t> stop_index(const std::vector<double>& sweep_losses, double tol,
                                      std::size_t window) {
    if (sweep_losses.size() <= window) return std::nullopt;
    for (std::size_t s = window; s < sweep_losses.size(); ++s) {
        bool all_small = true;
        for (std::size_t i = s + 1 - window; i <= s; ++i) {
            const double denom = std::max(std::abs(sweep_losses[i - 1]), 1e-300);
            if (std::abs(sweep_losses[i] - sweep_losses[i - 1]) / denom >= tol) {
                all_small = false;
                break;
            }
        }
        if (all_small) return s;
    }
    return std::nullopt;
}

namespace {

DenseTensor gaussian_perturbation(const DenseTensor& t, double sigma, std::uint64_t seed) {
    DenseTensor out = t;
    Rng rng(seed);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += sigma * rng.gaussian();
    return out;
}

void average_into(DenseTensor& cur, const DenseTensor& prev, double eta_l) {
    for (std::size_t i = 0; i < cur.size(); ++i)
        cur[i] = eta_l * cur[i] + (1.0 - eta_l) * prev[i];
}

struct BatchLoss {
    double cpd = 0.0, reg = 0.0, ss = 0.0, rows = 0.0;
};

SolveResult sao_run_impl(const DenseTensor& t, const DenseTensor* t_paired,
                         const SaoConfig& cfg) {
    cfg.validate();
    if (t.order() != 4)
        throw validation_error("sao_run: expected a sample-first order-4 tensor");
    const std::size_t n = t.extent(0);
    if (n < cfg.batch_size)
        throw validation_error("sao_run: first-mode extent must be >= batch_size");

    const double beta_eff = cfg.mode == SolverMode::atd ? cfg.beta : 0.0;
    AugKind aug = cfg.mode == SolverMode::sals ? AugKind::none : cfg.aug;
    if (aug == AugKind::paired && t_paired == nullptr)
        throw validation_error("sao_run: paired augmentation needs the augmented tensor");
    if (aug != AugKind::paired && t_paired != nullptr) aug = AugKind::paired;
    if (aug == AugKind::none && cfg.mode != SolverMode::sals && beta_eff > 0.0)
        throw validation_error("sao_run: contrastive mode requires augmentation");
    if (t_paired && t_paired->shape() != t.shape())
        throw validation_error("sao_run: paired tensor shape mismatch");

    SolveResult res;
    res.bases = init_bases(t.extent(1), t.extent(2), t.extent(3), cfg.rank, cfg.seed);

    std::vector<double> sweep_losses;
    std::size_t l = 1; // global batch counter, drives the harmonic schedule
    DenseTensor prev_batch, prev_batch_aug;
    bool have_prev = false;

    for (std::size_t sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        const auto start = std::chrono::steady_clock::now();
        alloc_stats::Scope scope;

        auto plan = make_batch_plan(n, cfg.batch_size, Rng::derive(cfg.seed, 2 * sweep + 1));
        if (plan.size() > 1 && plan.back().size() < 2) {
            // A single leftover row cannot form contrast pairs; fold it into
            // the previous batch.
            auto tail = plan.back();
            plan.pop_back();
            plan.back().insert(plan.back().end(), tail.begin(), tail.end());
        }

        BatchLoss sums;
        std::size_t batches = 0;
        for (const auto& indices : plan) {
            TensorBatch tb = gather_batch(t, indices);
            DenseTensor batch_aug;
            bool has_aug = false;
            switch (aug) {
                case AugKind::none: break;
                case AugKind::tensor_gaussian:
                    batch_aug = gaussian_perturbation(
                        tb.tensor, cfg.aug_sigma,
                        Rng::derive(cfg.seed, (sweep << 24) ^ (batches << 2) ^ 0x3));
                    has_aug = true;
                    break;
                case AugKind::paired:
                    batch_aug = gather_batch(*t_paired, indices).tensor;
                    has_aug = true;
                    break;
            }

            if (cfg.moving_average) {
                const double eta_l = std::min(1.0, cfg.eta_cmin / static_cast<double>(l));
                if (have_prev && prev_batch.shape() == tb.tensor.shape()) {
                    average_into(tb.tensor, prev_batch, eta_l);
                    if (has_aug) average_into(batch_aug, prev_batch_aug, eta_l);
                }
                prev_batch = tb.tensor;
                if (has_aug) prev_batch_aug = batch_aug;
                have_prev = true;
            }

            const DenseTensor* aug_ptr = has_aug ? &batch_aug : nullptr;
            auto [x_init, x_aug_init] = cold_start(tb.tensor, aug_ptr, res.bases, cfg.alpha);

            SaoConfig aux_cfg = cfg;
            aux_cfg.beta = beta_eff;
            AuxiliaryResult ar =
                auxiliary_step(x_init, x_aug_init, tb.tensor, aug_ptr, res.bases, aux_cfg);
            res.clamp_events += ar.clamp_events;
            if (ar.diverged) ++res.recursion_divergences;

            // Objective at the solved coefficients and the bases they saw.
            const double b_rows = static_cast<double>(indices.size());
            const auto fl = res.bases.as_list();
            double cpd = reconstruction_error_sq(tb.tensor, &ar.x, fl);
            double reg = cfg.alpha * (ar.x.frobenius_sq() + res.bases.A.frobenius_sq() +
                                      res.bases.B.frobenius_sq() + res.bases.C.frobenius_sq());
            double ss = 0.0;
            if (has_aug) {
                cpd += reconstruction_error_sq(batch_aug, &ar.x_aug, fl);
                reg += cfg.alpha * ar.x_aug.frobenius_sq();
                if (beta_eff > 0.0)
                    ss = ss_loss(ar.x, ar.x_aug,
                                 {cfg.gamma_for(indices.size()), beta_eff},
                                 RowNormPolicy::clamp, &res.clamp_events);
            }
            sums.cpd += cpd / b_rows;
            sums.reg += reg / b_rows;
            sums.ss += ss / b_rows;

            const double eta_l = cfg.moving_average
                                     ? std::min(1.0, cfg.eta_cmin / static_cast<double>(l))
                                     : cfg.eta;
            const Matrix* xa = has_aug ? &ar.x_aug : nullptr;
            res.bases.A = main_step(FactorId::A, ar.x, xa, tb.tensor, aug_ptr, res.bases,
                                    cfg.alpha, eta_l);
            res.bases.B = main_step(FactorId::B, ar.x, xa, tb.tensor, aug_ptr, res.bases,
                                    cfg.alpha, eta_l);
            res.bases.C = main_step(FactorId::C, ar.x, xa, tb.tensor, aug_ptr, res.bases,
                                    cfg.alpha, eta_l);

            const double cap = factor_norm_cap(frobenius_norm_sq(tb.tensor),
                                               has_aug ? frobenius_norm_sq(batch_aug) : 0.0,
                                               beta_eff, cfg.gamma_for(indices.size()),
                                               cfg.alpha);
            const double slack = cap * (1.0 + 1e-12);
            if (res.bases.A.frobenius_sq() > slack || res.bases.B.frobenius_sq() > slack ||
                res.bases.C.frobenius_sq() > slack)
                ++res.bound_violations;

            ++l;
            ++batches;
        }

        const double nb = static_cast<double>(batches);
        SweepReport rep;
        rep.sweep = sweep;
        rep.loss_cpd = sums.cpd / nb;
        rep.loss_reg = sums.reg / nb;
        rep.loss_ss = sums.ss / nb;
        rep.loss_total = rep.loss_cpd + rep.loss_reg + rep.loss_ss;
        rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                          .count();
        rep.peak_aux_bytes = scope.peak_bytes();
        if (!std::isfinite(rep.loss_total))
            throw numeric_error("sao_run: non-finite sweep loss, optimization diverged");

        sweep_losses.push_back(rep.loss_total);
        const auto stop = stop_index(sweep_losses, cfg.stop_tol, cfg.stop_window);
        rep.stopped = stop.has_value() && *stop == sweep_losses.size() - 1;
        res.sweeps.push_back(rep);
        if (rep.stopped) {
            res.converged = true;
            break;
        }
    }
    return res;
}

} // namespace

SolveResult sao_run(const DenseTensor& t, const SaoConfig& cfg) {
    if (cfg.aug == AugKind::paired)
        throw validation_error("sao_run: paired augmentation needs the augmented tensor");
    return sao_run_impl(t, nullptr, cfg);
}

SolveResult sao_run(const DenseTensor& t, const DenseTensor& t_aug_paired, const SaoConfig& cfg) {
    return sao_run_impl(t, &t_aug_paired, cfg);
}

SolveResult cp_als_full(const DenseTensor& t, const SaoConfig& cfg) {
    cfg.validate();
    if (t.order() != 4)
        throw validation_error("cp_als_full: expected a sample-first order-4 tensor");

    SolveResult res;
    res.bases = init_bases(t.extent(1), t.extent(2), t.extent(3), cfg.rank, cfg.seed);
    const double n_rows = static_cast<double>(t.extent(0));

    Matrix x;
    std::vector<double> sweep_losses;
    double prev_half_loss = std::numeric_limits<double>::infinity();

    auto half_loss = [&](const Matrix& coeff) {
        const auto fl = res.bases.as_list();
        return reconstruction_error_sq(t, &coeff, fl) +
               cfg.alpha * (coeff.frobenius_sq() + res.bases.A.frobenius_sq() +
                            res.bases.B.frobenius_sq() + res.bases.C.frobenius_sq());
    };
    auto check_monotone = [&](double loss) {
        if (loss > prev_half_loss + 1e-9 * (1.0 + std::abs(prev_half_loss)))
            throw numeric_error("cp_als_full: objective increased across a half-step");
        prev_half_loss = loss;
    };

    for (std::size_t sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        const auto start = std::chrono::steady_clock::now();
        alloc_stats::Scope scope;

        {
            const auto fl = res.bases.as_list();
            x = ridge_solve(mttkrp(t, fl, 0), GramStack::from_factors(fl, cfg.alpha));
            check_monotone(half_loss(x));
        }
        for (FactorId which : {FactorId::A, FactorId::B, FactorId::C}) {
            Matrix target = solve_factor(which, x, nullptr, t, nullptr, res.bases, cfg.alpha);
            (which == FactorId::A   ? res.bases.A
             : which == FactorId::B ? res.bases.B
                                    : res.bases.C) = std::move(target);
            check_monotone(half_loss(x));
        }

        SweepReport rep;
        rep.sweep = sweep;
        rep.loss_cpd = reconstruction_error_sq(t, &x, res.bases.as_list()) / n_rows;
        rep.loss_reg = cfg.alpha *
                       (x.frobenius_sq() + res.bases.A.frobenius_sq() +
                        res.bases.B.frobenius_sq() + res.bases.C.frobenius_sq()) /
                       n_rows;
        rep.loss_ss = 0.0;
        rep.loss_total = rep.loss_cpd + rep.loss_reg;
        rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                          .count();
        rep.peak_aux_bytes = scope.peak_bytes();
        if (!std::isfinite(rep.loss_total))
            throw numeric_error("cp_als_full: non-finite sweep loss");

        sweep_losses.push_back(rep.loss_total);
        const auto stop = stop_index(sweep_losses, cfg.stop_tol, cfg.stop_window);
        rep.stopped = stop.has_value() && *stop == sweep_losses.size() - 1;
        res.sweeps.push_back(rep);
        if (rep.stopped) {
            res.converged = true;
            break;
        }
    }
    return res;
}

SolveResult decompose(const DenseTensor& t, const SaoConfig& cfg) {
    if (cfg.mode == SolverMode::cp_als_full) return cp_als_full(t, cfg);
    return sao_run(t, cfg);
}

} // namespace atd
