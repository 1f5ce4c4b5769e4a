"""Oscillatory evaluation of the convolution kernel and reference bounds.

K(t, u) = integral of amplitude * chi_E * prod|f_i|^gamma_i * e^(i(t x + u y)).
The phase is linear in the original variables, so in each chart the inner
ordinate integral has exactly linear phase (Filon with exact Legendre moments
via spherical Bessel functions), and the outer x-integral is subdivided until
the nonlinear remainder of its phase is small enough to fold into the
amplitude.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import spherical_jn

from .funcspec import MultiplierSpec, Ray, Strip
from .measure import (_column_task, _gauss, _pullback, _shell_cells,
                      _u_interval, fit_exponents, g_eval)
from .newton import resolve_spec

__all__ = [
    "KernelSample", "kernel_eval", "vdc_reference", "AmplitudeInfo",
    "decay_fit", "DecayInconclusive",
]


class DecayInconclusive(RuntimeError):
    """All kernel samples sit below the quadrature noise floor."""


@dataclass(frozen=True)
class KernelSample:
    t: float
    u: float
    value: complex
    est_error: float

    def __post_init__(self):
        if not (np.isfinite(self.value.real) and np.isfinite(self.value.imag)):
            raise ValueError("kernel value must be finite")
        if self.est_error < 0:
            raise ValueError("est_error must be nonnegative")


# ---------------------------------------------------------------------------
# Filon building block: integral over [-1, 1] of p(tau) e^{i z tau}


def _legendre_moments(z: float, n: int) -> np.ndarray:
    """m_k(z) = integral P_k(tau) e^{i z tau} dtau = 2 i^k j_k(z), k < n.

    j_k(-z) = (-1)^k j_k(z), so negative z flips i^k to (-i)^k."""
    k = np.arange(n)
    jk = spherical_jn(k, abs(z))
    ik = (1j ** k) if z >= 0 else ((-1j) ** k)
    return 2.0 * ik * jk


_LEG_VAND: dict[int, np.ndarray] = {}


def _legendre_projection(n: int) -> np.ndarray:
    """Matrix A with a = A @ f(nodes) giving Legendre coefficients a_k."""
    if n not in _LEG_VAND:
        nodes, wts = _gauss(n)
        P = np.stack([np.polynomial.legendre.Legendre.basis(k)(nodes)
                      for k in range(n)])
        _LEG_VAND[n] = (np.arange(n)[:, None] + 0.5) * P * wts[None, :]
    return _LEG_VAND[n]


def _osc_cells_vec(fvals: np.ndarray, c: np.ndarray, h: np.ndarray,
                   omega: float) -> np.ndarray:
    """Vectorized _osc_cell over leading axes: fvals (..., n)."""
    n = fvals.shape[-1]
    z = omega * h
    out = np.zeros(fvals.shape[:-1], dtype=complex)
    small = np.abs(z) < 2 * math.pi
    nodes, wts = _gauss(n)
    if np.any(small):
        um = c[small][..., None] + h[small][..., None] * nodes
        out[small] = h[small] * np.sum(
            wts * fvals[small] * np.exp(1j * omega * um), axis=-1)
    if np.any(~small):
        A = _legendre_projection(n)
        coefs = fvals[~small] @ A.T
        zz = z[~small]
        k = np.arange(n)
        jk = spherical_jn(k[None, :], np.abs(zz)[:, None])
        ik = np.where(zz[:, None] >= 0, 1j ** k[None, :], (-1j) ** k[None, :])
        mk = 2.0 * ik * jk
        out[~small] = h[~small] * np.exp(1j * omega * c[~small]) * np.sum(
            coefs * mk, axis=-1)
    return out


# ---------------------------------------------------------------------------
# Inner (ordinate) oscillatory integral


def _inner_osc(task, x: np.ndarray, lo: np.ndarray, hi: np.ndarray,
               omega: float, n: int, j_cells: int) -> np.ndarray:
    """integral of W(x,u) e^{i omega u} du over (lo, hi) per x (complex)."""
    out = np.zeros(x.shape, dtype=complex)
    mask = hi > np.maximum(lo, 0.0)
    if not np.any(mask):
        return out
    xs = x[mask]
    los = np.maximum(lo[mask], 0.0)
    his = hi[mask]
    vals = np.zeros(xs.shape, dtype=complex)
    B = task.edge_power
    n_eff = max(n, 12)

    edge = los <= 0.0
    if np.any(edge):
        xe = xs[edge]
        he = his[edge]
        esc = np.minimum(np.asarray(task.col.edge_scale(xe), dtype=float), he)
        if B == 0.0:
            # smooth at the edge: log cells down to the inner scale plus one
            # plain cell covering (0, delta)
            delta = np.minimum(he / 16.0, esc / 4.0)
            ncells = int(min(80, max(6, 2 + math.ceil(np.max(np.log2(he / delta))))))
            fr = np.linspace(1.0, 0.0, ncells + 1)
            edges = np.concatenate(
                [np.zeros((len(he), 1)),
                 he[:, None] * (delta / he)[:, None] ** fr[None, :]], axis=1)
        else:
            delta = np.minimum(he / 16.0, esc / 1024.0)
            delta = np.minimum(delta, 0.05 / (1.0 + abs(omega)))
            ncells = int(min(240, max(j_cells,
                                      4 + math.ceil(np.max(np.log2(he / delta))))))
            fr = np.linspace(1.0, 0.0, ncells + 1)
            edges = he[:, None] * (delta / he)[:, None] ** fr[None, :]
        cm = 0.5 * (edges[:, :-1] + edges[:, 1:])
        ch = 0.5 * (edges[:, 1:] - edges[:, :-1])
        nodes, _ = _gauss(n_eff)
        um = cm[:, :, None] + ch[:, :, None] * nodes
        xg = np.broadcast_to(xe[:, None, None], um.shape)
        wv = task.weight_fn(xg.ravel(), um.ravel()).reshape(um.shape)
        cell_ints = _osc_cells_vec(wv, cm, ch, omega)
        acc = np.sum(cell_ints, axis=1)
        # analytic edge tail with two phase terms (|omega|*delta <= 0.05)
        if B != 0.0 and B > -1.0:
            wref = task.weight_fn(xe, delta)
            C = wref / delta ** B
            tail = C * (delta ** (B + 1.0) / (B + 1.0)
                        + 1j * omega * delta ** (B + 2.0) / (B + 2.0))
            acc = acc + tail
        vals[edge] = acc

    if np.any(~edge):
        xm = xs[~edge]
        lm = los[~edge]
        hm = his[~edge]
        ratio = hm / np.maximum(lm, 1e-300)
        cells = int(np.clip(math.ceil(np.max(np.log2(np.maximum(ratio, 2.0)))) + 3,
                            4, 72))
        fr = np.linspace(0, 1, cells + 1)[None, :]
        bnds = lm[:, None] * ratio[:, None] ** fr
        cm = 0.5 * (bnds[:, :-1] + bnds[:, 1:])
        ch = 0.5 * (bnds[:, 1:] - bnds[:, :-1])
        nodes, _ = _gauss(n_eff)
        um = cm[:, :, None] + ch[:, :, None] * nodes
        xg = np.broadcast_to(xm[:, None, None], um.shape)
        wv = task.weight_fn(xg.ravel(), um.ravel()).reshape(um.shape)
        cell_ints = _osc_cells_vec(wv, cm, ch, omega)
        vals[~edge] = np.sum(cell_ints, axis=1)

    out[mask] = vals
    return out


# ---------------------------------------------------------------------------
# Outer (x) oscillatory integral per column


def _lin_rem(xm: np.ndarray, phi: np.ndarray) -> float:
    """Max deviation of phi from its endpoint-slope linearization."""
    om = (phi[-1] - phi[0]) / (xm[-1] - xm[0])
    xbar = 0.5 * (xm[0] + xm[-1])
    return float(np.max(np.abs(phi - (0.5 * (phi[0] + phi[-1]) + om * (xm - xbar)))))


_Z_DIRECT = 8.0     # phase height (rad) treatable by plain polynomial amps
_K_BAND = 8         # Legendre modes across a moving band


def _half_coeffs(z: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """P_k, Q_k with m_k(z) = 2 i^k j_k(z) = P_k(z) e^{iz} + Q_k(z) e^{-iz}.

    From the outgoing spherical Hankel function h_k(z) = A_k(z) e^{iz},
    A_k = (-i)^{k+1} z^{-1} sum_m i^m (k+m)!/(m!(k-m)!) (2z)^{-m}; stable for
    |z| >= k."""
    z = np.asarray(z, dtype=float)
    P = np.zeros(z.shape + (n,), dtype=complex)
    Q = np.zeros_like(P)
    for k in range(n):
        acc = np.zeros(z.shape, dtype=complex)
        for m in range(k + 1):
            coef = math.factorial(k + m) / (math.factorial(m) * math.factorial(k - m))
            acc = acc + (1j ** m) * coef / (2.0 * z) ** m
        A = ((-1j) ** (k + 1)) / z * acc
        P[..., k] = (1j ** k) * A
        Q[..., k] = (1j ** k) * np.conj(A) * 1.0
    return P, Q


def _filon_x(amp: np.ndarray, xm: np.ndarray, xbar: float, h: float,
             phi_a: float, phi_b: float, phi_m: np.ndarray) -> complex:
    """integral of amp(x) e^{i phi(x)} dx over the cell, linearizing phi by
    its endpoint slope and folding the remainder into the amplitude."""
    om = (phi_b - phi_a) / (2 * h)
    phibar = 0.5 * (phi_a + phi_b)
    rem = phi_m - (phibar + om * (xm - xbar))
    a2 = amp * np.exp(1j * rem)
    return complex(np.exp(1j * (phibar - om * xbar)) *
                   _osc_cell_complex(a2, xbar, h, om))


def _band_integral(task, xm, xbar, h, psi, psi_a, psi_b, base: np.ndarray,
                   top: np.ndarray, base_a: float, base_b: float,
                   top_a: float, top_b: float, omega_u: float,
                   n: int) -> complex:
    """integral over the moving band base(x) < u < top(x) of W e^{i(psi+Om u)}.

    The band is mapped to a trapezoid with linearized boundaries; the
    tau-direction uses exact Legendre moments split into half-waves when the
    phase height is large, and the sliver between the true and linearized
    boundaries is integrated directly (its phase height is cell-controlled)."""
    Om = omega_u
    top_lin = 0.5 * (top_a + top_b) + (top_b - top_a) / (2 * h) * (xm - xbar)
    base_lin = 0.5 * (base_a + base_b) + (base_b - base_a) / (2 * h) * (xm - xbar)
    cvals = 0.5 * (base_lin + top_lin)
    svals = 0.5 * (top_lin - base_lin)
    if np.any(svals <= 0):
        # degenerate linearization; integrate directly per x
        inner = _inner_osc_window(task, xm, base, top, Om, n)
        return _filon_x(inner, xm, xbar, h, psi_a, psi_b, psi)
    nb = _K_BAND
    tn, _ = _gauss(nb)
    um = cvals[:, None] + svals[:, None] * tn[None, :]
    xg = np.broadcast_to(xm[:, None], um.shape)
    wv = task.weight_fn(xg.ravel(), um.ravel()).reshape(um.shape)
    gk = wv @ _legendre_projection(nb).T          # (nx, nb) Legendre coeffs
    z = Om * svals
    if np.min(np.abs(z)) >= max(_Z_DIRECT, nb):
        P, Q = _half_coeffs(z, nb)
        amp_plus = svals * np.sum(gk * P, axis=1)
        amp_minus = svals * np.sum(gk * Q, axis=1)
        # phases psi + Om*(c+s) = psi + Om*top_lin and psi + Om*base_lin
        val = _filon_x(amp_plus, xm, xbar, h,
                       psi_a + Om * top_a, psi_b + Om * top_b,
                       psi + Om * top_lin)
        val += _filon_x(amp_minus, xm, xbar, h,
                        psi_a + Om * base_a, psi_b + Om * base_b,
                        psi + Om * base_lin)
    else:
        # moderate phase height: exact moments, amplitude stays polynomial
        mk = np.zeros((len(xm), nb), dtype=complex)
        k = np.arange(nb)
        jk = spherical_jn(k[None, :], np.abs(z)[:, None])
        ik = np.where(z[:, None] >= 0, 1j ** k[None, :], (-1j) ** k[None, :])
        mk = 2.0 * ik * jk
        amp = svals * np.sum(gk * mk, axis=1) * np.exp(1j * Om * (cvals - base_lin))
        val = _filon_x(amp, xm, xbar, h,
                       psi_a + Om * base_a, psi_b + Om * base_b,
                       psi + Om * base_lin)
    # correction slivers between true and linearized boundaries
    val += _boundary_correction(task, xm, xbar, h, psi, psi_a, psi_b,
                                top_lin, top, top_a, top_b, Om, n)
    val -= _boundary_correction(task, xm, xbar, h, psi, psi_a, psi_b,
                                base_lin, base, base_a, base_b, Om, n)
    return val


def _boundary_correction(task, xm, xbar, h, psi, psi_a, psi_b,
                         b_lin: np.ndarray, b_true: np.ndarray,
                         b_a: float, b_b: float, omega_u: float,
                         n: int) -> complex:
    """integral over the signed sliver between a linearized boundary and the
    true one; its u-extent has phase height < 0.8 rad by the subdivision."""
    dv = b_true - b_lin
    if np.max(np.abs(omega_u * dv)) < 1e-14 and np.max(np.abs(dv)) < 1e-15:
        return 0.0 + 0.0j
    tn, tw = _gauss(4)
    um = b_lin[:, None] + dv[:, None] * 0.5 * (tn[None, :] + 1.0)
    xg = np.broadcast_to(xm[:, None], um.shape)
    wv = task.weight_fn(xg.ravel(), um.ravel()).reshape(um.shape)
    phase_rel = np.exp(1j * omega_u * (um - b_lin[:, None]))
    amp = 0.5 * dv * np.sum(wv * phase_rel * tw[None, :], axis=1)
    return _filon_x(amp, xm, xbar, h,
                    psi_a + omega_u * b_a, psi_b + omega_u * b_b,
                    psi + omega_u * b_lin)


def _inner_osc_window(task, xm, lo, hi, Om: float, n: int) -> np.ndarray:
    """Per-x integral of W e^{i Om u} over (lo(x), hi(x)), for windows whose
    phase height is moderate; log cells handle W variation."""
    out = np.zeros(xm.shape, dtype=complex)
    live = hi > lo
    if not np.any(live):
        return out
    xs = xm[live]
    ls = lo[live]
    hs = hi[live]
    ratio = hs / np.maximum(ls, 1e-300)
    cells = int(np.clip(math.ceil(np.max(np.log2(np.maximum(ratio, 2.0)))) + 3,
                        4, 72))
    fr = np.linspace(0, 1, cells + 1)[None, :]
    bnds = ls[:, None] * ratio[:, None] ** fr
    cm = 0.5 * (bnds[:, :-1] + bnds[:, 1:])
    ch = 0.5 * (bnds[:, 1:] - bnds[:, :-1])
    nodes, _ = _gauss(max(n, 16))
    um = cm[:, :, None] + ch[:, :, None] * nodes
    xg = np.broadcast_to(xs[:, None, None], um.shape)
    wv = task.weight_fn(xg.ravel(), um.ravel()).reshape(um.shape)
    out[live] = np.sum(_osc_cells_vec(wv, cm, ch, Om), axis=1)
    return out


def _core_fixed(task, xm, lo_star: float, u_star: float, Om: float,
                n: int, j_cells: int) -> np.ndarray:
    """Per-x integral of W e^{i Om u} over the fixed window (lo_star, u_star):
    the u-cells are shared across the x-batch, so the result is a smooth
    (non-oscillatory) amplitude in x."""
    if u_star <= max(lo_star, 0.0):
        return np.zeros(xm.shape, dtype=complex)
    B = task.edge_power
    if lo_star <= 0.0 and B == 0.0:
        esc = float(np.min(np.asarray(task.col.edge_scale(xm), dtype=float)))
        esc = min(esc, u_star)
        delta = min(u_star / 16.0, esc / 4.0)
        ncells = int(min(80, max(6, 2 + math.ceil(math.log2(u_star / delta)))))
        edges = np.concatenate(
            [[0.0], u_star * (delta / u_star) ** np.linspace(1.0, 0.0, ncells + 1)])
    elif lo_star <= 0.0:
        esc = float(np.min(np.asarray(task.col.edge_scale(xm), dtype=float)))
        esc = min(esc, u_star)
        delta = min(u_star / 16.0, esc / 1024.0, 0.05 / (1.0 + abs(Om)))
        ncells = int(min(240, max(j_cells, 4 + math.ceil(math.log2(u_star / delta)))))
        edges = u_star * (delta / u_star) ** np.linspace(1.0, 0.0, ncells + 1)
    else:
        ratio = max(u_star / lo_star, 2.0)
        ncells = int(np.clip(math.ceil(math.log2(ratio)) + 3, 4, 72))
        edges = lo_star * (u_star / lo_star) ** np.linspace(0, 1, ncells + 1)
    cm = 0.5 * (edges[:-1] + edges[1:])
    ch = 0.5 * (edges[1:] - edges[:-1])
    nodes, _ = _gauss(max(n, 12))
    nu = len(nodes)
    ncl = len(cm)
    um = cm[None, :, None] + ch[None, :, None] * nodes  # (1, ncl, nu)
    um = np.broadcast_to(um, (len(xm), ncl, nu))
    xg = np.broadcast_to(xm[:, None, None], um.shape)
    wv = task.weight_fn(xg.ravel(), um.ravel()).reshape(um.shape)
    cmb = np.broadcast_to(cm[None, :], (len(xm), ncl))
    chb = np.broadcast_to(ch[None, :], (len(xm), ncl))
    vals = np.sum(_osc_cells_vec(wv, cmb, chb, Om), axis=1)
    if lo_star <= 0.0 and B != 0.0 and B > -1.0:
        d0 = edges[0]
        wref = task.weight_fn(xm, np.full_like(xm, d0))
        C = wref / d0 ** B
        vals = vals + C * (d0 ** (B + 1.0) / (B + 1.0)
                           + 1j * Om * d0 ** (B + 2.0) / (B + 2.0))
    return vals


def _column_kernel(task, x_hi: float, w1: float, w2: float,
                   r_disk: Optional[float], linear: Sequence,
                   n: int, j_cells: int, levels: int,
                   cell_cache: Optional[dict] = None) -> tuple[complex, float]:
    """(integral, tail_bound) of W e^{i(w1 x + w2 yloc)} over the column.

    Cells are refined on the fly: a cell is split when the phases psi,
    psi + Om*hi, psi + Om*lo deviate from linear by more than 0.4 rad (the
    band phases interpolate these), or when the band height transitions
    through the direct/half-wave threshold."""
    col = task.col
    omega_u = w2 * col.ysign
    nodes, wts = _gauss(n)
    total = 0.0 + 0.0j
    abs_shells = []
    cum_abs = 0.0
    top = x_hi
    for lvl in range(levels):
        bot = top / 4.0
        key = (id(task.col), lvl, x_hi)
        cached = cell_cache.get(key) if cell_cache is not None else None
        if cached is None:
            plan: list[tuple[float, float, int]] = []
            stack = list(reversed(_shell_cells(task, bot, top, x_hi,
                                               r_disk, linear)))
            guard = 0
            while stack:
                ca, cb = stack.pop()
                guard += 1
                xm = np.linspace(ca, cb, max(n, 9))
                lo, hi = _u_interval(col, xm, r_disk, linear)
                lo = np.maximum(lo, 0.0)
                live = hi > lo
                if not np.any(live):
                    continue
                xbar = 0.5 * (ca + cb)
                small_cell = (cb - ca) < 2e-13 * x_hi or guard > 20000
                psi = w1 * xm + w2 * col.shift(xm)
                if np.all(live) and not small_cell:
                    rem = max(_lin_rem(xm, psi),
                              _lin_rem(xm, psi + omega_u * hi),
                              _lin_rem(xm, psi + omega_u * lo))
                    if rem > 1.3:
                        stack.append((xbar, cb))
                        stack.append((ca, xbar))
                        continue
                if (not np.all(live)) or small_cell:
                    plan.append((ca, cb, 0))
                    continue
                target = 2 * max(_Z_DIRECT, _K_BAND)
                if task.edge_power == 0.0 and float(np.max(lo)) <= 0.0:
                    # smooth edge, no lower constraint: the whole window can
                    # be one band (no core ladder per cell)
                    zeta0 = np.abs(omega_u) * hi
                    if (float(np.min(zeta0)) >= target
                            or float(np.ptp(zeta0)) <= _Z_DIRECT):
                        plan.append((ca, cb, 2))
                        continue
                u_star = float(np.min(hi)) * (1.0 - 1e-12)
                lo_star = float(np.max(lo)) * (1.0 + 1e-12)
                if lo_star >= u_star:
                    plan.append((ca, cb, 0))
                    continue
                zeta_hi = np.abs(omega_u) * (hi - u_star)
                zeta_lo = np.abs(omega_u) * (lo_star - lo)
                ok_hi = (float(np.min(zeta_hi)) >= target
                         or float(np.ptp(zeta_hi)) <= _Z_DIRECT)
                ok_lo = (lo_star <= 0.0 or float(np.min(zeta_lo)) >= target
                         or float(np.ptp(zeta_lo)) <= _Z_DIRECT)
                if not (ok_hi and ok_lo):
                    zeta = zeta_hi if not ok_hi else zeta_lo
                    idx = np.argwhere(np.diff(zeta > target)).ravel()
                    cut = float(xm[idx[0]]) if len(idx) else xbar
                    if not (ca < cut < cb):
                        cut = xbar
                    stack.append((cut, cb))
                    stack.append((ca, cut))
                    continue
                plan.append((ca, cb, 1))
            if cell_cache is not None:
                cell_cache[key] = plan
            cached = plan
        shell_abs = 0.0
        for ca, cb, mode in cached:
            xbar = 0.5 * (ca + cb)
            h = 0.5 * (cb - ca)
            xm = xbar + h * nodes
            lo, hi = _u_interval(col, xm, r_disk, linear)
            lo = np.maximum(lo, 0.0)
            psi = w1 * xm + w2 * col.shift(xm)
            psi_a = w1 * ca + w2 * col.shift(ca)
            psi_b = w1 * cb + w2 * col.shift(cb)
            if mode == 0:
                inner = _inner_osc(task, xm, lo, hi, omega_u, n, j_cells)
                total += _filon_x(inner, xm, xbar, h, psi_a, psi_b, psi)
                shell_abs += float(np.sum(np.abs(inner) * np.abs(wts)) * h)
                continue
            if mode == 2:
                lo_ends, hi_ends = _u_interval(col, np.array([ca, cb]),
                                               r_disk, linear)
                total += _band_integral(task, xm, xbar, h, psi, psi_a, psi_b,
                                        np.zeros_like(xm), hi, 0.0, 0.0,
                                        float(hi_ends[0]), float(hi_ends[1]),
                                        omega_u, n)
                shell_abs += float(np.sum(hi * np.abs(wts)) * h) * float(
                    np.max(np.abs(task.weight_fn(xm, 0.5 * hi))))
                continue
            u_star = float(np.min(hi)) * (1.0 - 1e-12)
            lo_star = float(np.max(lo)) * (1.0 + 1e-12)
            amp_core = _core_fixed(task, xm, lo_star, u_star, omega_u, n, j_cells)
            total += _filon_x(amp_core, xm, xbar, h, psi_a, psi_b, psi)
            lo_ends, hi_ends = _u_interval(col, np.array([ca, cb]), r_disk, linear)
            lo_ends = np.maximum(lo_ends, 0.0)
            ustar_vec = np.full_like(xm, u_star)
            total += _band_integral(task, xm, xbar, h, psi, psi_a, psi_b,
                                    ustar_vec, hi, u_star, u_star,
                                    float(hi_ends[0]), float(hi_ends[1]),
                                    omega_u, n)
            if lo_star > 0.0:
                lostar_vec = np.full_like(xm, lo_star)
                total += _band_integral(task, xm, xbar, h, psi, psi_a, psi_b,
                                        lo, lostar_vec,
                                        float(lo_ends[0]), float(lo_ends[1]),
                                        lo_star, lo_star, omega_u, n)
            shell_abs += float(np.sum(np.abs(amp_core) * np.abs(wts)) * h)
        abs_shells.append(shell_abs)
        cum_abs += shell_abs
        top = bot
        if (len(abs_shells) >= 6 and cum_abs > 0
                and shell_abs < 1e-9 * cum_abs
                and abs_shells[-1] < abs_shells[-2] < abs_shells[-3]):
            break
    # unresolved x -> 0 tail: bound by extrapolated mass (no oscillation gain)
    tail_bound = 0.0
    s_last, s_prev = abs_shells[-1], abs_shells[-2]
    if s_last > 0 and s_prev > 0 and s_last < 0.9 * s_prev:
        ratio = s_last / s_prev
        tail_bound = s_last * ratio / (1.0 - ratio)
    elif s_last > 0:
        tail_bound = 10.0 * s_last
    return total, tail_bound


def _osc_cell_complex(fvals: np.ndarray, c: float, h: float, omega: float) -> complex:
    """_osc_cell for complex-valued amplitude samples."""
    n = len(fvals)
    z = omega * h
    nodes, wts = _gauss(n)
    if abs(z) < 2 * math.pi:
        um = c + h * nodes
        return h * complex(np.sum(wts * fvals * np.exp(1j * omega * um)))
    A = _legendre_projection(n)
    a_re = A @ fvals.real
    a_im = A @ fvals.imag
    mk = _legendre_moments(z, n)
    return h * np.exp(1j * omega * c) * (complex(np.sum(a_re * mk))
                                         + 1j * complex(np.sum(a_im * mk)))


# ---------------------------------------------------------------------------
# Public kernel evaluation


def kernel_eval(spec: MultiplierSpec, t: float, u: float,
                tol: float = 1e-4) -> KernelSample:
    """K(t,u) with error estimated from refinement disagreement.

    At (t,u) = (0,0) this is the amplitude-weighted total mass.
    """
    res = resolve_spec(spec)
    r_eff = spec.radius
    amp_r = spec.amplitude.outer_radius()
    linear: tuple = ()
    from .funcspec import ProductBumpAmplitude
    if isinstance(spec.amplitude, ProductBumpAmplitude):
        linear = ((1.0, 0.0, spec.amplitude.radius),
                  (0.0, 1.0, spec.amplitude.radius))
    elif math.isfinite(amp_r):
        r_eff = min(r_eff, amp_r)
    tasks = [_column_task(spec, c, True) for c in res.columns
             if c.region_weight == 1]
    results = []
    cell_cache: dict = {}
    schedule = ((8, 10, 14), (12, 16, 24), (16, 24, 34), (20, 32, 44))
    for n, j, levels in schedule:
        total = 0.0 + 0.0j
        tail = 0.0
        for task in tasks:
            w1, w2 = _pullback(task.col.triangle, t, u)
            x_hi = min(res.a_geom, r_eff)
            v, tb = _column_kernel(task, x_hi, w1, w2, r_eff, linear,
                                   n, j, levels, cell_cache)
            total += v
            tail += tb
        if r_eff > res.a_geom:
            outer, oerr = _outer_kernel(spec, res, r_eff, t, u, linear)
            total += outer
            tail += oerr
        results.append((total, tail))
        if len(results) >= 2:
            v0, v1 = results[-2][0], results[-1][0]
            est = abs(v1 - v0) + results[-1][1]
            if est <= tol * (1.0 + abs(v1)):
                return _finish_kernel(spec, t, u, v1, est)
    v1 = results[-1][0]
    est = abs(results[-1][0] - results[-2][0]) + results[-1][1]
    warnings.warn(f"kernel quadrature achieved est_error {est:.2e} at "
                  f"(t,u)=({t:g},{u:g}) (requested {tol:.2e}*(1+|K|))")
    return _finish_kernel(spec, t, u, v1, est)


def _finish_kernel(spec: MultiplierSpec, t: float, u: float, value: complex,
                   est: float) -> KernelSample:
    x0, y0 = spec.base_point
    prefactor = np.exp(1j * (t * x0 + u * y0))
    return KernelSample(t, u, complex(prefactor * value), float(est))


def _outer_kernel(spec: MultiplierSpec, res, r_eff: float, t: float, u: float,
                  linear: Sequence) -> tuple[complex, float]:
    """Polar fallback for the support beyond the chart-covered region."""
    from .measure import _covered_mask

    a = res.a_geom
    vals = []
    for nr, nth in ((240, 360), (480, 720)):
        redges = np.geomspace(a * 0.98, r_eff, nr + 1)
        tedges = np.linspace(-math.pi, math.pi, nth + 1)
        rm = 0.5 * (redges[:-1] + redges[1:])
        tm = 0.5 * (tedges[:-1] + tedges[1:])
        R, T = np.meshgrid(rm, tm, indexing="ij")
        X = R * np.cos(T)
        Y = R * np.sin(T)
        G = g_eval(spec, X, Y) * spec.amplitude.eval(X, Y)
        G = np.where(_covered_mask(res, X, Y, a) | ~np.isfinite(G), 0.0, G)
        phase = np.exp(1j * (t * X + u * Y))
        area = np.outer(np.diff(redges) * rm, np.diff(tedges))
        vals.append(complex(np.sum(G * phase * area)))
    return vals[-1], abs(vals[-1] - vals[-2])


# ---------------------------------------------------------------------------
# Van der Corput reference bounds


@dataclass(frozen=True)
class AmplitudeInfo:
    """|phi(b)| and the total variation of phi on the interval."""

    end_value: float
    deriv_l1: float

    def __post_init__(self):
        if self.end_value < 0 or self.deriv_l1 < 0:
            raise ValueError("amplitude data must be nonnegative")


def vdc_reference(k: int, A: float, interval: tuple[float, float],
                  amplitude: AmplitudeInfo, monotone: bool = False) -> float:
    """c_k A^(-1/k) (|phi(b)| + integral |phi'|) with c_k = 5*2^(k-1) - 2
    (3 for k=1, 8 for k=2).  k = 1 needs the monotone-derivative flag."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if A <= 0:
        raise ValueError("A must be positive")
    if k == 1 and not monotone:
        raise ValueError("k = 1 requires a monotone phase derivative")
    a, b = interval
    if not b > a:
        raise ValueError("empty interval")
    ck = 5.0 * 2.0 ** (k - 1) - 2.0
    return ck * A ** (-1.0 / k) * (amplitude.end_value + amplitude.deriv_l1)


# ---------------------------------------------------------------------------
# Decay sampling along rays and strips


@dataclass(frozen=True)
class DecayRow:
    rho: float
    offset: float
    abs_value: float
    est_error: float


def decay_fit(spec: MultiplierSpec, path: Union[Ray, Strip],
              rho_range: tuple[float, float] = (1e2, 1e4),
              samples: int = 24, tol: float = 1e-4,
              return_rows: bool = False):
    """Sample |K| along a ray or strip at geometric rho, fit the upper
    envelope (running tail maxima) as a decay law in 1/rho."""
    rho_lo, rho_hi = rho_range
    if not 0 < rho_lo < rho_hi:
        raise ValueError("invalid rho range")
    rhos = np.geomspace(rho_lo, rho_hi, samples)
    if isinstance(path, Ray):
        offsets = [0.0]
        vx, vy = path.direction.v
        px, py = path.direction.v_perp
    else:
        H = path.width
        offsets = [-H, -H / 2, 0.0, H / 2, H]
        vx, vy = path.direction.v
        px, py = path.direction.v_perp
    rows: list[DecayRow] = []
    env_vals = []
    err_vals = []
    for rho in rhos:
        best = 0.0
        best_err = 0.0
        for off in offsets:
            tt = rho * vx + off * px
            uu = rho * vy + off * py
            ks = kernel_eval(spec, tt, uu, tol)
            rows.append(DecayRow(float(rho), float(off), abs(ks.value),
                                 ks.est_error))
            if abs(ks.value) >= best:
                best = abs(ks.value)
                best_err = ks.est_error
        env_vals.append(best)
        err_vals.append(best_err)
    env_vals = np.array(env_vals)
    err_vals = np.array(err_vals)
    noisy = err_vals > 0.5 * np.maximum(env_vals, 1e-300)
    if np.sum(noisy) > samples / 2:
        raise DecayInconclusive(
            "kernel quadrature error dominates most samples on this path")
    # running maxima over the tail: the oscillation envelope
    tail_max = np.maximum.accumulate(env_vals[::-1])[::-1]
    fit = fit_exponents(list(zip(1.0 / rhos, tail_max)))
    if return_rows:
        return fit, tuple(rows)
    return fit
