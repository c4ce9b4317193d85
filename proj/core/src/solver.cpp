#include "evsurf/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "evsurf/errors.hpp"
#include "evsurf/parallel.hpp"

namespace evsurf {

std::vector<double> matvec(const SparseSystem& sys, const std::vector<double>& x) {
    if (x.size() != sys.nrows) throw DimMismatch("matvec: vector length mismatch");
    std::vector<double> y(sys.nrows, 0.0);
    parallel_for(0, sys.nrows, [&](std::size_t r) {
        double s = 0.0;
        for (std::size_t k = sys.row_ptr[r]; k < sys.row_ptr[r + 1]; ++k)
            s += sys.val[k] * x[sys.col[k]];
        y[r] = s;
    });
    return y;
}

void SolverConfig::validate() const {
    if (!(rel_tol > 0.0)) throw BadConfig("SolverConfig: rel_tol must be > 0");
    if (restart < 1) throw BadConfig("SolverConfig: restart must be >= 1");
    if (max_iters < restart)
        throw BadConfig("SolverConfig: max_iters must be >= restart");
}

namespace {

// All reductions are sequential: determinism across thread counts.
double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

void axpy(std::vector<double>& y, double a, const std::vector<double>& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

/// Inverses of the 2x2 diagonal blocks (rows 2k, 2k+1), identity fallback
/// for numerically singular blocks.
struct BlockJacobi {
    std::vector<double> inv; // 4 doubles per block, row-major

    explicit BlockJacobi(const SparseSystem& sys) {
        const std::size_t nb = sys.nrows / 2;
        inv.assign(4 * nb, 0.0);
        for (std::size_t k = 0; k < nb; ++k) {
            double blk[4] = {0.0, 0.0, 0.0, 0.0}; // a11 a12 a21 a22
            for (int r = 0; r < 2; ++r) {
                const std::size_t row = 2 * k + std::size_t(r);
                for (std::size_t e = sys.row_ptr[row]; e < sys.row_ptr[row + 1]; ++e) {
                    if (sys.col[e] == 2 * k) blk[2 * r] = sys.val[e];
                    else if (sys.col[e] == 2 * k + 1) blk[2 * r + 1] = sys.val[e];
                }
            }
            const double det = blk[0] * blk[3] - blk[1] * blk[2];
            double* out = &inv[4 * k];
            if (std::abs(det) < 1e-300) {
                out[0] = out[3] = 1.0;
            } else {
                out[0] = blk[3] / det;
                out[1] = -blk[1] / det;
                out[2] = -blk[2] / det;
                out[3] = blk[0] / det;
            }
        }
    }

    void apply(std::vector<double>& v) const {
        const std::size_t nb = v.size() / 2;
        for (std::size_t k = 0; k < nb; ++k) {
            const double* m = &inv[4 * k];
            const double a = v[2 * k], b = v[2 * k + 1];
            v[2 * k] = m[0] * a + m[1] * b;
            v[2 * k + 1] = m[2] * a + m[3] * b;
        }
    }
};

} // namespace

SolveResult gmres(const SparseSystem& sys, const SolverConfig& config) {
    config.validate();
    const auto t_start = std::chrono::steady_clock::now();
    const std::size_t n = sys.nrows;
    if (!config.initial_guess.empty() && config.initial_guess.size() != n)
        throw DimMismatch("gmres: initial guess length mismatch");

    SolveResult out;
    auto finish = [&](std::vector<double> x, double rel) {
        out.x = std::move(x);
        out.rel_residual = rel;
        out.wall_time_s = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t_start)
                              .count();
        return out;
    };

    const double bnorm = norm2(sys.rhs);
    if (bnorm == 0.0) {
        out.converged = true;
        out.cycle_residuals.push_back(0.0);
        return finish(std::vector<double>(n, 0.0), 0.0);
    }

    const bool precond = config.block_jacobi && n % 2 == 0;
    const BlockJacobi* M = nullptr;
    BlockJacobi Mstore = precond ? BlockJacobi(sys) : BlockJacobi(SparseSystem{});
    if (precond) M = &Mstore;

    std::vector<double> x = config.initial_guess.empty()
                                ? std::vector<double>(n, 0.0)
                                : config.initial_guess;
    std::vector<double> best_x = x;
    double best_rel = std::numeric_limits<double>::infinity();

    const std::size_t m = config.restart;
    std::vector<std::vector<double>> V(m + 1, std::vector<double>(n));
    // H stored column-wise: H[j] holds column j, length j+2 used.
    std::vector<std::vector<double>> H(m, std::vector<double>(m + 1, 0.0));
    std::vector<double> cs(m, 0.0), sn(m, 0.0), gvec(m + 1, 0.0);

    while (true) {
        // Restart boundary: true residual, convergence decision.
        std::vector<double> r = matvec(sys, x);
        for (std::size_t i = 0; i < n; ++i) r[i] = sys.rhs[i] - r[i];
        const double rel_true = norm2(r) / bnorm;
        out.cycle_residuals.push_back(rel_true);
        if (rel_true < best_rel) {
            best_rel = rel_true;
            best_x = x;
        }
        if (rel_true <= config.rel_tol) {
            out.converged = true;
            return finish(std::move(best_x), best_rel);
        }
        if (out.iterations >= config.max_iters || out.breakdown)
            return finish(std::move(best_x), best_rel);

        if (M) M->apply(r);
        const double beta = norm2(r);
        if (beta == 0.0) {
            // Preconditioned residual vanished while the true one did not;
            // nothing further to extract from this operator.
            out.breakdown = true;
            return finish(std::move(best_x), best_rel);
        }
        for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / beta;
        std::fill(gvec.begin(), gvec.end(), 0.0);
        gvec[0] = beta;

        std::size_t k = 0; // usable columns of H
        for (std::size_t j = 0; j < m && out.iterations < config.max_iters; ++j) {
            std::vector<double> w = matvec(sys, V[j]);
            if (M) M->apply(w);
            const double wscale = norm2(w);
            // Modified Gram-Schmidt, optional second pass.
            for (std::size_t i = 0; i <= j; ++i) {
                const double hij = dot(w, V[i]);
                H[j][i] = hij;
                axpy(w, -hij, V[i]);
            }
            if (config.reorthogonalize)
                for (std::size_t i = 0; i <= j; ++i) {
                    const double corr = dot(w, V[i]);
                    H[j][i] += corr;
                    axpy(w, -corr, V[i]);
                }
            const double hlast = norm2(w);
            H[j][j + 1] = hlast;

            // Apply the accumulated Givens rotations to the new column.
            for (std::size_t i = 0; i < j; ++i) {
                const double t1 = cs[i] * H[j][i] + sn[i] * H[j][i + 1];
                const double t2 = -sn[i] * H[j][i] + cs[i] * H[j][i + 1];
                H[j][i] = t1;
                H[j][i + 1] = t2;
            }

            const bool subdiag_zero = hlast <= 1e-14 * (wscale > 0.0 ? wscale : 1.0);
            if (subdiag_zero && std::abs(H[j][j]) <= 1e-14 * (wscale > 0.0 ? wscale : 1.0)) {
                // The new direction is numerically dependent on the previous
                // ones: invariant subspace exhausted with residual above
                // tolerance.  Use the columns accumulated so far.
                out.breakdown = true;
                ++out.iterations;
                break;
            }

            // New rotation annihilating the subdiagonal entry.
            const double denom = std::hypot(H[j][j], H[j][j + 1]);
            cs[j] = H[j][j] / denom;
            sn[j] = H[j][j + 1] / denom;
            H[j][j] = denom;
            H[j][j + 1] = 0.0;
            const double g1 = cs[j] * gvec[j];
            gvec[j + 1] = -sn[j] * gvec[j];
            gvec[j] = g1;

            ++out.iterations;
            k = j + 1;
            out.residual_history.push_back(std::abs(gvec[j + 1]) / bnorm);

            if (subdiag_zero) {
                // Happy breakdown: least-squares residual is now exact; stop
                // the cycle and let the restart boundary confirm convergence.
                break;
            }
            for (std::size_t i = 0; i < n; ++i) V[j + 1][i] = w[i] / hlast;
            if (std::abs(gvec[j + 1]) / bnorm <= config.rel_tol) break;
        }

        // Back-substitute y from the k x k triangular system, update x.
        if (k > 0) {
            std::vector<double> y(k, 0.0);
            for (std::size_t ii = k; ii-- > 0;) {
                double s = gvec[ii];
                for (std::size_t jj = ii + 1; jj < k; ++jj) s -= H[jj][ii] * y[jj];
                y[ii] = s / H[ii][ii];
            }
            for (std::size_t ii = 0; ii < k; ++ii) axpy(x, y[ii], V[ii]);
        }
    }
}

} // namespace evsurf
