// Restarted GMRES for the assembled sparse systems.
#pragma once

#include <cstddef>
#include <vector>

#include "evsurf/assembly.hpp"

namespace evsurf {

/// y = A x for the row-compressed matrix; parallel across rows with
/// per-row sequential accumulation (deterministic for any thread count).
std::vector<double> matvec(const SparseSystem& sys, const std::vector<double>& x);

struct SolverConfig {
    double rel_tol = 0.02;
    std::size_t max_iters = 2000;
    std::size_t restart = 30;
    /// Empty = start from zero; otherwise must match the system size.
    std::vector<double> initial_guess;
    /// Optional second orthogonalization pass for ill-conditioned systems.
    bool reorthogonalize = false;
    /// Optional 2x2 pointwise block-Jacobi left preconditioner.  This is an
    /// engineering extra, off by default; convergence is still judged on the
    /// unpreconditioned residual.
    bool block_jacobi = false;

    void validate() const; // throws BadConfig
};

struct SolveResult {
    std::vector<double> x;
    double rel_residual = 0.0; // true ||b - Ax|| / ||b|| of the returned x
    std::size_t iterations = 0;
    bool converged = false;
    /// Arnoldi exhausted an invariant subspace with the residual still above
    /// tolerance; x is the best iterate found.
    bool breakdown = false;
    /// True relative residual at every restart boundary (first entry is the
    /// initial residual).
    std::vector<double> cycle_residuals;
    /// Per-iteration least-squares residual estimates (relative); within one
    /// restart cycle these are non-increasing.
    std::vector<double> residual_history;
    double wall_time_s = 0.0;
};

/// Solve A x = b.  Deterministic: identical inputs give identical iterates.
/// A zero right-hand side returns x = 0, converged, residual 0.
SolveResult gmres(const SparseSystem& sys, const SolverConfig& config);

} // namespace evsurf
