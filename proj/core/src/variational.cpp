#include "evsurf/variational.hpp"

#include <cmath>

#include "evsurf/errors.hpp"
#include "evsurf/fd.hpp"
#include "evsurf/parallel.hpp"

namespace evsurf {

void RegParams::validate() const {
    if (!(lambda0 >= 0.0) || !std::isfinite(lambda0))
        throw BadConfig("RegParams: lambda0 must be >= 0");
    if (!(lambda1 > 0.0) || !std::isfinite(lambda1))
        throw BadConfig("RegParams: lambda1 must be > 0");
}

DataDerivatives data_derivatives(const ScalarField3& f) {
    const Grid3& g = f.grid;
    if (g.n0 < 2 || g.n1 < 3 || g.n2 < 3)
        throw GridTooSmall("data_derivatives: need n0>=2, n1,n2>=3");
    DataDerivatives df;
    df.grid = g;
    const std::size_t n = g.size();
    df.ft.resize(n);
    df.f1.resize(n);
    df.f2.resize(n);
    parallel_for(0, g.n0, [&](std::size_t t) {
        for (std::size_t i = 0; i < g.n1; ++i)
            for (std::size_t j = 0; j < g.n2; ++j) {
                const std::size_t p = g.index(t, i, j);
                df.ft[p] = diff1(f.values, g, 0, t, i, j);
                df.f1[p] = diff1(f.values, g, 1, t, i, j);
                df.f2[p] = diff1(f.values, g, 2, t, i, j);
            }
    });
    return df;
}

namespace {

/// Extended frame coefficient alpha^nu_mu with alpha^0_0 = 1,
/// alpha^0_j = alpha^s_0 = 0 (nu, mu in {0,1,2}).
inline double alpha_ext(const GeometryAtlas& at, std::size_t p, int nu, int mu) {
    if (nu == 0 || mu == 0) return (nu == 0 && mu == 0) ? 1.0 : 0.0;
    return at.alpha_at(p, nu, mu);
}

/// GammaF^m_{mu i} (mu in {0,1,2}).
inline double gf(const GeometryAtlas& at, std::size_t p, int m, int mu, int i) {
    return at.gammaf_at(p, m, mu, i);
}

/// d_nu of the gridded product alpha^nu_mu * GammaF^m_{mu i}, summed over nu.
/// Products are evaluated at the stencil samples (product first, then FD).
double div_alpha_gammaf(const GeometryAtlas& at, int mu, int m, int i,
                        std::size_t t, std::size_t ti, std::size_t tj) {
    const Grid3& gr = at.grid;
    double s = 0.0;
    for (int nu = 0; nu <= 2; ++nu) {
        auto prod = [&](std::size_t q) { return alpha_ext(at, q, nu, mu) * gf(at, q, m, mu, i); };
        switch (nu) {
        case 0:
            s += detail::diff_line(
                [&](std::size_t k) { return prod(gr.index(k, ti, tj)); }, t,
                gr.n0, gr.h0);
            break;
        case 1:
            s += detail::diff_line(
                [&](std::size_t k) { return prod(gr.index(t, k, tj)); }, ti,
                gr.n1, gr.h1);
            break;
        default:
            s += detail::diff_line(
                [&](std::size_t k) { return prod(gr.index(t, ti, k)); }, tj,
                gr.n2, gr.h2);
        }
    }
    return s;
}

/// d_nu of the gridded product alpha^nu_mu * alpha^sigma_mu, summed over nu.
double div_alpha_alpha(const GeometryAtlas& at, int mu, int sigma, std::size_t t,
                       std::size_t ti, std::size_t tj) {
    const Grid3& gr = at.grid;
    double s = 0.0;
    for (int nu = 0; nu <= 2; ++nu) {
        auto prod = [&](std::size_t q) {
            return alpha_ext(at, q, nu, mu) * alpha_ext(at, q, sigma, mu);
        };
        switch (nu) {
        case 0:
            s += detail::diff_line(
                [&](std::size_t k) { return prod(gr.index(k, ti, tj)); }, t,
                gr.n0, gr.h0);
            break;
        case 1:
            s += detail::diff_line(
                [&](std::size_t k) { return prod(gr.index(t, k, tj)); }, ti,
                gr.n1, gr.h1);
            break;
        default:
            s += detail::diff_line(
                [&](std::size_t k) { return prod(gr.index(t, ti, k)); }, tj,
                gr.n2, gr.h2);
        }
    }
    return s;
}

} // namespace

ElCoefficients el_coefficients(const GeometryAtlas& atlas,
                               const DataDerivatives& df, const RegParams& reg) {
    reg.validate();
    const Grid3& gr = atlas.grid;
    if (df.grid != gr)
        throw DimMismatch("el_coefficients: data/atlas grid mismatch");

    ElCoefficients C;
    C.grid = gr;
    C.reg = reg;
    const std::size_t n = gr.size();
    C.a.assign(n, {});
    C.b.assign(n, {});
    C.c.assign(n, {});
    C.d.assign(n, {});
    C.p.assign(n, {});
    C.q.assign(n, {});

    parallel_for(0, gr.n0, [&](std::size_t t) {
        for (std::size_t ti = 0; ti < gr.n1; ++ti)
            for (std::size_t tj = 0; tj < gr.n2; ++tj) {
                const std::size_t pt = gr.index(t, ti, tj);

                // frame derivatives of the data: fd_m = alpha^j_m d_j f
                double fd[2];
                for (int m = 1; m <= 2; ++m)
                    fd[m - 1] = atlas.alpha_at(pt, 1, m) * df.f1[pt] +
                                atlas.alpha_at(pt, 2, m) * df.f2[pt];

                for (int m = 1; m <= 2; ++m)
                    C.a[pt][std::size_t(m - 1)] = -fd[m - 1] * df.ft[pt];

                // G_nu alpha^nu_mu contracted over nu, per mu
                double galpha[3];
                for (int mu = 0; mu <= 2; ++mu) {
                    double s = 0.0;
                    for (int nu = 0; nu <= 2; ++nu)
                        s += atlas.bigg[pt][std::size_t(nu)] * alpha_ext(atlas, pt, nu, mu);
                    galpha[mu] = s;
                }

                for (int m = 1; m <= 2; ++m)
                    for (int i = 1; i <= 2; ++i) {
                        double s = fd[m - 1] * fd[i - 1];
                        for (int mu = 0; mu <= 2; ++mu) {
                            const double lam = reg.lambda(mu);
                            if (lam == 0.0) continue;
                            double inner = 0.0;
                            for (int j = 1; j <= 2; ++j)
                                inner += gf(atlas, pt, j, mu, m) * gf(atlas, pt, j, mu, i);
                            inner -= galpha[mu] * gf(atlas, pt, m, mu, i);
                            inner += div_alpha_gammaf(atlas, mu, m, i, t, ti, tj);
                            s += lam * inner;
                        }
                        C.b[pt][std::size_t(m - 1) * 2 + std::size_t(i - 1)] = s;
                    }

                for (int sigma = 0; sigma <= 2; ++sigma)
                    for (int m = 1; m <= 2; ++m)
                        for (int i = 1; i <= 2; ++i) {
                            double s = 0.0;
                            for (int mu = 0; mu <= 2; ++mu) {
                                const double lam = reg.lambda(mu);
                                if (lam == 0.0) continue;
                                const double as = alpha_ext(atlas, pt, sigma, mu);
                                double inner = as * gf(atlas, pt, i, mu, m) -
                                               as * gf(atlas, pt, m, mu, i);
                                if (i == m) {
                                    double gaa = 0.0;
                                    for (int nu = 0; nu <= 2; ++nu)
                                        gaa += atlas.bigg[pt][std::size_t(nu)] *
                                               alpha_ext(atlas, pt, nu, mu) * as;
                                    inner -= gaa + div_alpha_alpha(atlas, mu, sigma, t, ti, tj);
                                }
                                s += lam * inner;
                            }
                            C.c[pt][(std::size_t(sigma) * 2 + std::size_t(m - 1)) * 2 +
                                    std::size_t(i - 1)] = s;
                        }

                // Fill the upper triangle and mirror so the symmetry
                // d^{nu sigma} == d^{sigma nu} holds bitwise even when the
                // compiler contracts the products differently per ordering.
                for (int nu = 0; nu <= 2; ++nu)
                    for (int sigma = nu; sigma <= 2; ++sigma) {
                        double s = 0.0;
                        for (int mu = 0; mu <= 2; ++mu)
                            s += reg.lambda(mu) * alpha_ext(atlas, pt, nu, mu) *
                                 alpha_ext(atlas, pt, sigma, mu);
                        C.q[pt][std::size_t(nu) * 3 + std::size_t(sigma)] = s;
                        C.d[pt][std::size_t(nu) * 3 + std::size_t(sigma)] = -s;
                        C.q[pt][std::size_t(sigma) * 3 + std::size_t(nu)] = s;
                        C.d[pt][std::size_t(sigma) * 3 + std::size_t(nu)] = -s;
                    }

                for (int nu = 0; nu <= 2; ++nu)
                    for (int m = 1; m <= 2; ++m)
                        for (int i = 1; i <= 2; ++i) {
                            double s = 0.0;
                            for (int mu = 0; mu <= 2; ++mu) {
                                const double lam = reg.lambda(mu);
                                if (lam == 0.0) continue;
                                s += lam * alpha_ext(atlas, pt, nu, mu) *
                                     gf(atlas, pt, m, mu, i);
                            }
                            C.p[pt][(std::size_t(nu) * 2 + std::size_t(m - 1)) * 2 +
                                    std::size_t(i - 1)] = s;
                        }
            }
    });
    return C;
}

EnergyBreakdown energy_breakdown(const FrameField& w, const GeometryAtlas& atlas,
                                 const DataDerivatives& df, const RegParams& reg) {
    reg.validate();
    const Grid3& gr = atlas.grid;
    if (w.grid != gr || df.grid != gr)
        throw DimMismatch("energy: field/atlas grid mismatch");

    const double cell = gr.h0 * gr.h1 * gr.h2;
    EnergyBreakdown e;
    // Sequential reduction: deterministic across thread counts.
    for (std::size_t t = 0; t < gr.n0; ++t)
        for (std::size_t ti = 0; ti < gr.n1; ++ti)
            for (std::size_t tj = 0; tj < gr.n2; ++tj) {
                const std::size_t pt = gr.index(t, ti, tj);

                double fd[2];
                for (int jj = 1; jj <= 2; ++jj)
                    fd[jj - 1] = atlas.alpha_at(pt, 1, jj) * df.f1[pt] +
                                 atlas.alpha_at(pt, 2, jj) * df.f2[pt];
                const double adv = df.ft[pt] + w.values[pt][0] * fd[0] +
                                   w.values[pt][1] * fd[1];

                // dw[nu][j-1] = d_nu w^j
                double dw[3][2];
                for (int nu = 0; nu <= 2; ++nu)
                    for (std::size_t c = 0; c < 2; ++c)
                        dw[nu][c] = diff1_component(w.values, gr, c, nu, t, ti, tj);

                double regv = 0.0;
                for (int mu = 0; mu <= 2; ++mu) {
                    const double lam = reg.lambda(mu);
                    if (lam == 0.0) continue;
                    for (int jj = 1; jj <= 2; ++jj) {
                        // D_mu w^j = alpha^nu_mu d_nu w^j + w^i GammaF^j_{mu i}
                        double D = 0.0;
                        for (int nu = 0; nu <= 2; ++nu)
                            D += alpha_ext(atlas, pt, nu, mu) * dw[nu][jj - 1];
                        for (int i = 1; i <= 2; ++i)
                            D += w.values[pt][std::size_t(i - 1)] *
                                 gf(atlas, pt, jj, mu, i);
                        regv += lam * D * D;
                    }
                }

                const double wgt = atlas.sqrtdetg[pt] * cell;
                e.data += adv * adv * wgt;
                e.regularizer += regv * wgt;
            }
    return e;
}

double energy(const FrameField& w, const GeometryAtlas& atlas,
              const DataDerivatives& df, const RegParams& reg) {
    return energy_breakdown(w, atlas, df, reg).total();
}

} // namespace evsurf
