// Discrete energy of the space-time flow functional and the exact
// per-gridpoint coefficients of its Euler-Lagrange system.
//
// Unknowns are the frame coordinates w = (w^1, w^2) of the tangential flow
// u = w^i e_i.  Greek indices run over {0,1,2} with 0 = time, Latin over
// {1,2}; the frame coefficients are extended by alpha^0_0 = 1 and
// alpha^0_j = alpha^s_0 = 0 so that one summation convention covers the
// temporal terms.
#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "evsurf/fields.hpp"
#include "evsurf/geometry.hpp"
#include "evsurf/grid.hpp"

namespace evsurf {

/// Regularization weights: lambda0 penalizes the temporal covariant
/// derivative, lambda1 both spatial ones (lambda2 == lambda1 throughout).
struct RegParams {
    double lambda0 = 0.0;
    double lambda1 = 1.0;

    /// Throws BadConfig unless lambda0 >= 0 and lambda1 > 0.
    void validate() const;

    /// Weight of direction mu in {0,1,2}.
    double lambda(int mu) const { return mu == 0 ? lambda0 : lambda1; }
};

/// First derivatives of the data f, tabulated with the shared FD rules.
struct DataDerivatives {
    Grid3 grid;
    std::vector<double> ft, f1, f2;
};

DataDerivatives data_derivatives(const ScalarField3& f);

/// Euler-Lagrange coefficient fields.  The optimality system reads
///   d^{nu sigma} d_{nu sigma} w^m + c^{sigma m}_i d_sigma w^i + b^m_i w^i = a^m   (interior)
///   q^{nu sigma} d_sigma w^m + p^{nu m}_i w^i = 0    (boundary face xi^nu in {0,1})
///
/// Per-point packing:
///   a : a^m,           slot m-1
///   b : b^m_i,         slot (m-1)*2 + (i-1)
///   c : c^{sigma m}_i, slot (sigma*2 + (m-1))*2 + (i-1)
///   d : d^{nu sigma},  slot nu*3 + sigma
///   p : p^{nu m}_i,    slot (nu*2 + (m-1))*2 + (i-1)
///   q : q^{nu sigma},  slot nu*3 + sigma  (q == -d pointwise)
struct ElCoefficients {
    Grid3 grid;
    RegParams reg;
    std::vector<std::array<double, 2>> a;
    std::vector<std::array<double, 4>> b;
    std::vector<std::array<double, 12>> c;
    std::vector<std::array<double, 9>> d;
    std::vector<std::array<double, 12>> p;
    std::vector<std::array<double, 9>> q;

    double a_at(std::size_t pt, int m) const { return a[pt][std::size_t(m - 1)]; }
    double b_at(std::size_t pt, int m, int i) const {
        return b[pt][std::size_t(m - 1) * 2 + std::size_t(i - 1)];
    }
    double c_at(std::size_t pt, int sigma, int m, int i) const {
        return c[pt][(std::size_t(sigma) * 2 + std::size_t(m - 1)) * 2 +
                     std::size_t(i - 1)];
    }
    double d_at(std::size_t pt, int nu, int sigma) const {
        return d[pt][std::size_t(nu) * 3 + std::size_t(sigma)];
    }
    double p_at(std::size_t pt, int nu, int m, int i) const {
        return p[pt][(std::size_t(nu) * 2 + std::size_t(m - 1)) * 2 +
                     std::size_t(i - 1)];
    }
    double q_at(std::size_t pt, int nu, int sigma) const {
        return q[pt][std::size_t(nu) * 3 + std::size_t(sigma)];
    }
};

/// Evaluate every coefficient at every gridpoint.  Divergence-style terms
/// d_nu(alpha^nu_mu GammaF^m_{mu i}) and d_nu(alpha^nu_mu alpha^sigma_mu)
/// difference the gridded products (product first, then FD).
ElCoefficients el_coefficients(const GeometryAtlas& atlas,
                               const DataDerivatives& df, const RegParams& reg);

/// Riemann-sum value of the space-time functional:
///   sum over gridpoints of
///     [ (ft + w^j alpha^i_j di f)^2 + sum_{mu,j} lambda_mu (D_mu w^j)^2 ]
///       * sqrt(det g) * h0 h1 h2,
/// with D_mu w^j = alpha^nu_mu d_nu w^j + w^i GammaF^j_{mu i}.
/// The reduction is sequential, so the value is thread-count independent.
double energy(const FrameField& w, const GeometryAtlas& atlas,
              const DataDerivatives& df, const RegParams& reg);

/// Data and regularizer parts reported separately (same quadrature).
struct EnergyBreakdown {
    double data = 0.0;
    double regularizer = 0.0;
    double total() const { return data + regularizer; }
};
EnergyBreakdown energy_breakdown(const FrameField& w, const GeometryAtlas& atlas,
                                 const DataDerivatives& df, const RegParams& reg);

} // namespace evsurf
