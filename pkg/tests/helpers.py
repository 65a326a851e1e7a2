"""High-precision (mpmath) twins of the map evaluations, used as
independent oracles for the soundness checks: a certificate claims a true
zero within delta_accuracy of the anchor, and a 50+ digit Newton
refinement must land inside that ball.
"""

from __future__ import annotations

import mpmath as mp
import numpy as np

from certibif.model import CoralMap, derive_generic


def mp_coeffs(coral: CoralMap):
    return derive_generic(coral.params,
                          lift=lambda x: mp.mpf(x),
                          pow_=lambda k, r: mp.power(mp.mpf(k), mp.mpf(r)))


def mp_newton(value_fn, jac_fn, z0, steps: int = 30, dps: int = 60):
    """Newton iteration in mpmath; returns the refined zero as mp matrix."""
    with mp.workdps(dps):
        z = mp.matrix([mp.mpf(float(v)) for v in z0])
        for _ in range(steps):
            r = value_fn(z)
            J = jac_fn(z)
            dz = mp.lu_solve(J, -r)
            z = z + dz
            if max(abs(v) for v in dz) < mp.mpf(10) ** (-dps + 10):
                break
        return z


def mp_fd_jacobian(value_fn, z, h=None):
    """Central finite differences at working precision (adequate because
    the oracle only needs ~20 correct digits out of 60)."""
    n = len(z)
    m = len(value_fn(z))
    h = h or mp.mpf(10) ** -20
    J = mp.zeros(m, n)
    for j in range(n):
        zp = mp.matrix(z)
        zm = mp.matrix(z)
        zp[j] = zp[j] + h
        zm[j] = zm[j] - h
        fp = value_fn(zp)
        fm = value_fn(zm)
        for i in range(m):
            J[i, j] = (fp[i] - fm[i]) / (2 * h)
    return J


def mp_system_refine(system, coeffs, z0, dps: int = 60):
    """Refine a zero of an extended system (NsSystem/SnSystem) with the
    generic-scalar evaluation path at high precision."""
    def val(z):
        return mp.matrix(system.value_scalars(list(z), coeffs))

    def jac(z):
        return mp_fd_jacobian(val, z)

    return mp_newton(val, jac, z0, dps=dps)


def mp_branch_G(system, coeffs, t0, u0, mu, v):
    """G(alpha, (sigma, x)) for the scaled branch system, in mpmath."""
    s = [mp.mpf(float(si)) for si in system.s]
    rscale = mp.mpf(system.rscale)
    mu_m = mp.mpf(float(mu))
    v_m = [mp.mpf(float(vi)) for vi in v]
    t0_m = mp.mpf(float(t0))
    u0_m = [mp.mpf(float(ui)) for ui in u0]
    coral = system.coral
    d = coral.d

    def F(t, u):
        lam = rscale * t / coeffs.ba
        x = [si * ui for si, ui in zip(s, u)]
        f = coral.step_scalars(lam, x, coeffs)
        return [fi / si - ui for fi, si, ui in zip(f, s, u)]

    def G(alpha, z):
        sigma, xs = z[0], list(z[1:])
        first = mu_m * sigma + sum(vi * xi for vi, xi in zip(v_m, xs))
        rest = F(t0_m + alpha * mu_m + sigma,
                 [ui + alpha * vi + xi for ui, vi, xi in zip(u0_m, v_m, xs)])
        return mp.matrix([first] + rest)

    return G


def mp_refine_branch_point(system, coeffs, box, alpha, dps: int = 50):
    """Solve G(alpha, .) = 0 at high precision from the box anchor."""
    G = mp_branch_G(system, coeffs, box.t, box.u, box.mu, box.v)
    a = mp.mpf(float(alpha))

    def val(z):
        return G(a, z)

    def jac(z):
        return mp_fd_jacobian(val, z)

    z0 = np.zeros(system.d + 1)
    with mp.workdps(dps):
        return mp_newton(val, jac, z0, dps=dps)
