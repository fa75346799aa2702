"""Compiled inner loop: two-sided RK4 shoot at fixed trial energy.

The radial equation is integrated as the first-order system
(psi, phi)' = (phi, U(r) psi) with U(r) = Q/r^2 + m^2 - (E - V(r))^2.
Outward from the origin-side start, inward from the decaying tail start.

The join happens at the outermost zero of the continuous U(r) (bisected to
machine precision, reached by fractional RK4 steps), not at a grid node:
this keeps the log-derivative mismatch and the Wronskian independent of the
mesh up to integrator error, so grid-refinement studies converge cleanly.

The potential is evaluated in-kernel from a small closed-form dispatch
(plus linear interpolation for tabulated data); a unit test pins it against
potentials.eval_potential.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_RESCALE_LIMIT = 1e250
_RESCALE_FACTOR = 1e-250

# family codes for the in-kernel dispatch
KIND_CODES = {
    "coulomb": 0,
    "cutoff-coulomb": 1,
    "shell-cutoff-coulomb": 2,
    "exponential": 3,
    "square-well": 4,
    "rational4": 5,
    "tabulated": 6,
}


@njit(cache=True, nogil=True)
def potential_value(kind, pa, pb, tab_r, tab_v, r):
    if kind == 0:
        return -pa / r
    if kind == 1:
        return -pa / (r + pb)
    if kind == 2:
        if r < pb:
            return -pa / pb
        return -pa / r
    if kind == 3:
        return -pa * np.exp(-r / pb)
    if kind == 4:
        if r < pb:
            return -pa
        return 0.0
    if kind == 5:
        return -pa / (1.0 + r + r * r / 2.0 + r * r * r / 6.0 + r * r * r * r / 24.0)
    # tabulated: piecewise linear, clamped to 0 beyond the last sample
    n = tab_r.shape[0]
    if r >= tab_r[n - 1]:
        return 0.0
    if r <= tab_r[0]:
        return tab_v[0]
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tab_r[mid] <= r:
            lo = mid
        else:
            hi = mid
    t = (r - tab_r[lo]) / (tab_r[hi] - tab_r[lo])
    return tab_v[lo] + t * (tab_v[hi] - tab_v[lo])


@njit(cache=True, nogil=True)
def _u_at(kind, pa, pb, tab_r, tab_v, q, msq, e, r):
    uq = 0.0
    if q != 0.0:
        uq = q / (r * r)
    d = e - potential_value(kind, pa, pb, tab_r, tab_v, r)
    return uq + msq - d * d


@njit(cache=True, nogil=True, inline="always")
def _rk4_core(u1, u2, u4, y, z, h):
    k1y = z
    k1z = u1 * y
    k2y = z + 0.5 * h * k1z
    k2z = u2 * (y + 0.5 * h * k1y)
    k3y = z + 0.5 * h * k2z
    k3z = u2 * (y + 0.5 * h * k2y)
    k4y = z + h * k3z
    k4z = u4 * (y + h * k3y)
    y2 = y + h * (k1y + 2.0 * k2y + 2.0 * k3y + k4y) / 6.0
    z2 = z + h * (k1z + 2.0 * k2z + 2.0 * k3z + k4z) / 6.0
    return y2, z2


@njit(cache=True, nogil=True)
def _rk4_step(kind, pa, pb, tab_r, tab_v, q, msq, e, r0, y, z, h):
    u1 = _u_at(kind, pa, pb, tab_r, tab_v, q, msq, e, r0)
    u2 = _u_at(kind, pa, pb, tab_r, tab_v, q, msq, e, r0 + 0.5 * h)
    u4 = _u_at(kind, pa, pb, tab_r, tab_v, q, msq, e, r0 + h)
    return _rk4_core(u1, u2, u4, y, z, h)


@njit(cache=True, nogil=True, inline="always")
def _u_from_v(v, rr, q, msq, e):
    uq = 0.0
    if q != 0.0:
        uq = q / (rr * rr)
    d = e - v
    return uq + msq - d * d


@njit(cache=True, nogil=True)
def shoot(r, v_nodes, v_mids, kind, pa, pb, tab_r, tab_v, q, msq, e, psi0, dpsi0):
    """Integrate at trial energy e; join at the outermost turning radius.

    The node/midpoint sweeps use the precomputed potential samples; only
    the turning-radius bisection and the fractional join steps evaluate the
    potential analytically.

    Returns (psi_joined, nodes, mismatch, wronskian, match_idx, diverged):
    mismatch is the kappa-scaled log-derivative discontinuity at the join,
    wronskian the scale-free characteristic value vanishing at eigenvalues,
    match_idx the last grid node below the join radius.
    """
    n = r.shape[0]
    kappa = np.sqrt(msq - e * e)

    # outermost sign change of U over the mesh brackets the turning radius;
    # bisect the continuous U inside that cell
    k_cell = -1
    u_prev = _u_from_v(v_nodes[0], r[0], q, msq, e) if (r[0] > 0.0 or q == 0.0) else 1.0
    for i in range(1, n):
        u_here = _u_from_v(v_nodes[i], r[i], q, msq, e)
        if u_prev == 0.0 or (u_prev > 0.0) != (u_here > 0.0):
            k_cell = i - 1
        u_prev = u_here

    if k_cell >= 0:
        lo = r[k_cell]
        hi = r[k_cell + 1]
        ulo = _u_at(kind, pa, pb, tab_r, tab_v, q, msq, e, lo)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            um = _u_at(kind, pa, pb, tab_r, tab_v, q, msq, e, mid)
            if um == 0.0:
                lo = mid
                hi = mid
                break
            if (um > 0.0) == (ulo > 0.0):
                lo = mid
                ulo = um
            else:
                hi = mid
        r_hat = 0.5 * (lo + hi)
    else:
        r_hat = 0.5 * r[n - 1]

    if r_hat <= r[5]:
        r_hat = r[5]
    if r_hat >= r[n - 6]:
        r_hat = r[n - 6]
    j = int(np.searchsorted(r, r_hat)) - 1  # last node strictly below r_hat
    if j < 5:
        j = 5
    if j > n - 7:
        j = n - 7

    psi_out = np.zeros(n)
    dpsi_out = np.zeros(n)
    psi_in = np.zeros(n)
    dpsi_in = np.zeros(n)
    diverged = False

    # outward pass over nodes 0..j+1
    i_hi = j + 1
    psi_out[0] = psi0
    dpsi_out[0] = dpsi0
    y = psi0
    z = dpsi0
    out_scale = abs(psi0)
    for i in range(i_hi):
        h = r[i + 1] - r[i]
        u1 = _u_from_v(v_nodes[i], r[i], q, msq, e)
        u2 = _u_from_v(v_mids[i], r[i] + 0.5 * h, q, msq, e)
        u4 = _u_from_v(v_nodes[i + 1], r[i + 1], q, msq, e)
        y, z = _rk4_core(u1, u2, u4, y, z, h)
        if not (np.isfinite(y) and np.isfinite(z)):
            diverged = True
            break
        if abs(y) > _RESCALE_LIMIT or abs(z) > _RESCALE_LIMIT:
            y *= _RESCALE_FACTOR
            z *= _RESCALE_FACTOR
            for kdx in range(i + 1):
                psi_out[kdx] *= _RESCALE_FACTOR
                dpsi_out[kdx] *= _RESCALE_FACTOR
            out_scale *= _RESCALE_FACTOR
        psi_out[i + 1] = y
        dpsi_out[i + 1] = z
        if abs(y) > out_scale:
            out_scale = abs(y)

    # inward pass from the tail down to node j-1
    i_lo = j - 1
    if not diverged:
        psi_in[n - 1] = 1.0
        dpsi_in[n - 1] = -kappa
        y = 1.0
        z = -kappa
        in_scale = 1.0
        for i in range(n - 1, i_lo, -1):
            h = r[i - 1] - r[i]
            u1 = _u_from_v(v_nodes[i], r[i], q, msq, e)
            u2 = _u_from_v(v_mids[i - 1], r[i] + 0.5 * h, q, msq, e)
            u4 = _u_from_v(v_nodes[i - 1], r[i - 1], q, msq, e)
            y, z = _rk4_core(u1, u2, u4, y, z, h)
            if not (np.isfinite(y) and np.isfinite(z)):
                diverged = True
                break
            if abs(y) > _RESCALE_LIMIT or abs(z) > _RESCALE_LIMIT:
                y *= _RESCALE_FACTOR
                z *= _RESCALE_FACTOR
                for kdx in range(i, n):
                    psi_in[kdx] *= _RESCALE_FACTOR
                    dpsi_in[kdx] *= _RESCALE_FACTOR
                in_scale *= _RESCALE_FACTOR
            psi_in[i - 1] = y
            dpsi_in[i - 1] = z
            if abs(y) > in_scale:
                in_scale = abs(y)

    psi = np.zeros(n)
    if diverged:
        return psi, 0, np.nan, np.nan, j, True

    def_join = _join_values(kind, pa, pb, tab_r, tab_v, q, msq, e, r,
                            psi_out, dpsi_out, psi_in, dpsi_in, j, r_hat)
    po, dpo, pi, dpi = def_join

    # a near-node of either solution at the join: shift one grid node
    if abs(po) <= 1e-12 * out_scale or abs(pi) <= 1e-12 * in_scale:
        h_cell = r[j + 1] - r[j]
        r_try = r_hat - h_cell
        j_try = int(np.searchsorted(r, r_try)) - 1
        if not (5 <= j_try <= n - 7) or j_try < j - 1:
            r_try = r_hat + h_cell
            j_try = int(np.searchsorted(r, r_try)) - 1
        if 5 <= j_try <= n - 7 and j - 1 <= j_try <= j + 1:
            po2, dpo2, pi2, dpi2 = _join_values(
                kind, pa, pb, tab_r, tab_v, q, msq, e, r,
                psi_out, dpsi_out, psi_in, dpsi_in, j_try, r_try)
            if np.isfinite(po2) and np.isfinite(pi2):
                po, dpo, pi, dpi = po2, dpo2, pi2, dpi2
                r_hat = r_try
                j = j_try

    wron = po * dpi - dpo * pi
    scale_o = abs(po) + abs(dpo) / kappa
    scale_i = abs(pi) + abs(dpi) / kappa
    if not (scale_o > 0.0 and scale_i > 0.0):
        return psi, 0, np.nan, np.nan, j, True
    wtilde = wron / (kappa * scale_o * scale_i)

    if po != 0.0 and pi != 0.0:
        mismatch = (dpo / po - dpi / pi) / kappa
    else:
        mismatch = np.inf

    # joined, sign-consistent solution on the mesh
    s = 0.0
    if pi != 0.0:
        s = po / pi
    for kdx in range(j + 1):
        psi[kdx] = psi_out[kdx]
    for kdx in range(j + 1, n):
        psi[kdx] = s * psi_in[kdx]

    nodes = 0
    last_sign = 0
    for kdx in range(n):
        val = psi[kdx]
        if val > 0.0:
            sign = 1
        elif val < 0.0:
            sign = -1
        else:
            sign = 0
        if sign != 0:
            if last_sign != 0 and sign != last_sign:
                nodes += 1
            last_sign = sign

    return psi, nodes, mismatch, wtilde, j, False


@njit(cache=True, nogil=True)
def _join_values(kind, pa, pb, tab_r, tab_v, q, msq, e, r,
                 psi_out, dpsi_out, psi_in, dpsi_in, j, r_hat):
    """Fractional RK4 steps from the stored node states to the join radius."""
    po = psi_out[j]
    dpo = dpsi_out[j]
    if r_hat > r[j]:
        po, dpo = _rk4_step(kind, pa, pb, tab_r, tab_v, q, msq, e,
                            r[j], psi_out[j], dpsi_out[j], r_hat - r[j])
    pi = psi_in[j + 1]
    dpi = dpsi_in[j + 1]
    if r_hat < r[j + 1]:
        pi, dpi = _rk4_step(kind, pa, pb, tab_r, tab_v, q, msq, e,
                            r[j + 1], psi_in[j + 1], dpsi_in[j + 1], r_hat - r[j + 1])
    return po, dpo, pi, dpi
