"""Log-shell Gauss quadrature on (0, inf) with divergence detection.

Radial integrals against Levy measures concentrate their difficulty at the
ends: an integrable singularity at 0 and a slow power-law tail.  Shells
double geometrically away from an anchor radius; each shell is integrated
with 16-node Gauss-Legendre panels, subdivided so that an oscillatory
factor never sees more than ~2 periods per panel.

Divergence at a singular or infinite end is declared when the five extreme
shells contribute a nondecreasing sequence (log-divergent integrands
plateau shell to shell, so the rule catches the critical case too).

Infinite upper ends are completed geometrically: once the last shell
contributions settle into a stable ratio rho < 1, the remaining tail is
summed as a geometric series.  For pure power-law integrands each shell is
exactly rho times the previous one, so the completion is exact and the
engine never has to march to astronomical radii.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import QuadratureError

_GLX, _GLW = np.polynomial.legendre.leggauss(16)
_TWO_PI = 2.0 * math.pi

R_FLOOR = 1e-12
R_CEIL = 1e18


def _shell_nodes(lo: float, hi: float, osc_freq: float, panel_cap):
    n = 1
    if osc_freq > 0.0:
        periods = (hi - lo) * osc_freq / _TWO_PI
        if periods > 2.0:
            n = int(math.ceil(periods / 2.0))
            if panel_cap is not None:
                n = min(n, panel_cap)
    edges = np.linspace(lo, hi, n + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _GLX).ravel()
    wts = (half[:, None] * _GLW).ravel()
    return nodes, wts


@dataclass
class ShellResult:
    value: float
    error: float
    n_nodes: int
    diverged_inner: bool = False
    diverged_outer: bool = False
    converged: bool = True
    edges: np.ndarray | None = None          # ascending radii actually integrated
    contributions: np.ndarray | None = None  # per-shell contributions, ascending
    tail_correction: float = 0.0

    @property
    def diverged(self) -> bool:
        return self.diverged_inner or self.diverged_outer


def _nondecreasing(block: np.ndarray) -> bool:
    return bool(np.all(block[1:] >= block[:-1] * (1.0 - 1e-9)))


def shell_integral(
    fn,
    lo: float,
    hi: float,
    *,
    tol: float = 1e-10,
    osc_freq: float = 0.0,
    nonnegative: bool = False,
    r_floor: float = R_FLOOR,
    r_ceil: float = R_CEIL,
    panel_cap: int | None = None,
    max_shells_out: int = 240,
    raise_on_nonconvergence: bool = True,
) -> ShellResult:
    """Integrate fn (vectorized, radius -> density) over (lo, hi).

    lo == 0 marks a singular end, which is descended to r_floor; hi == inf
    marks an infinite end, ascended with adaptive stopping.  Divergence is
    only ever declared at those two ends.
    """
    if hi <= lo:
        return ShellResult(0.0, 0.0, 0, edges=np.array([]), contributions=np.array([]))

    lo_eff = max(lo, r_floor)
    inner_singular = lo < r_floor
    finite_hi = math.isfinite(hi)
    anchor = hi if finite_hi else max(lo_eff, 1.0)

    shell_edges: list[float] = []
    contribs: list[float] = []
    n_nodes = 0

    # descending phase: anchor -> lo_eff, boundaries halving
    if anchor > lo_eff:
        bounds = [anchor]
        while bounds[-1] > lo_eff * 2.0:
            bounds.append(bounds[-1] * 0.5)
        bounds.append(lo_eff)
        all_nodes, all_wts, counts = [], [], []
        for k in range(len(bounds) - 1):
            nd, wt = _shell_nodes(bounds[k + 1], bounds[k], osc_freq, panel_cap)
            all_nodes.append(nd)
            all_wts.append(wt)
            counts.append(nd.size)
        nodes = np.concatenate(all_nodes)
        wts = np.concatenate(all_wts)
        with np.errstate(over="ignore", invalid="ignore"):
            vals = np.asarray(fn(nodes), dtype=float)
        prods = vals * wts
        offsets = np.concatenate(([0], np.cumsum(counts)[:-1]))
        per_shell = np.add.reduceat(prods, offsets)
        n_nodes += nodes.size
        # bounds descend, so reverse into ascending-radius order
        desc = per_shell[::-1]
        contribs.extend(desc.tolist())
        shell_edges.extend(bounds[::-1])

    # the innermost shell is usually a partial octave (clamped at r_floor), so
    # divergence detection and the truncation residual both work off full shells
    diverged_inner = False
    error = 0.0
    if inner_singular and len(contribs) >= 6:
        inner5 = np.abs(np.asarray(contribs[1:6]))
        if inner5[-1] > 0 and inner5[0] > tol and _nondecreasing(inner5[::-1]):
            diverged_inner = True
    inner_correction = 0.0
    if inner_singular and not diverged_inner and len(contribs) >= 3:
        a0, a1, a2 = abs(contribs[0]), abs(contribs[1]), abs(contribs[2])
        if a2 > 0 and a1 > 0:
            rho_in = a1 / a2
            rho_in_prev = None
            if len(contribs) >= 4 and abs(contribs[3]) > 0:
                rho_in_prev = a2 / abs(contribs[3])
            same_sign = (contribs[1] > 0) == (contribs[2] > 0)
            if (
                rho_in <= 0.98
                and rho_in_prev is not None
                and abs(rho_in - rho_in_prev) <= 0.02
                and same_sign
            ):
                # stable geometric decay toward 0: restore the mass below the
                # innermost full shell, minus the clamped partial piece already
                # counted (exact for pure-power integrands)
                gap = max(a1 * rho_in / (1.0 - rho_in) - a0, 0.0)
                inner_correction = math.copysign(gap, contribs[1])
                error += (abs(rho_in - rho_in_prev) + 1e-12) * a1 / (1.0 - rho_in) ** 2
            elif rho_in < 0.95:
                error += max(a1 * rho_in / (1.0 - rho_in) - a0, 0.0)
            else:
                error += 20.0 * a1

    diverged_outer = False
    converged = True
    tail_correction = 0.0

    if not finite_hi:
        r0 = anchor
        out: list[float] = []
        rho_prev = None
        stopped = False
        for _ in range(max_shells_out):
            if r0 >= r_ceil:
                break
            r1 = r0 * 2.0
            nd, wt = _shell_nodes(r0, r1, osc_freq, panel_cap)
            with np.errstate(over="ignore", invalid="ignore"):
                v = np.asarray(fn(nd), dtype=float)
            c_k = float(np.dot(np.nan_to_num(v, nan=np.inf, posinf=np.inf), wt)) \
                if not np.all(np.isfinite(v)) else float(np.dot(v, wt))
            n_nodes += nd.size
            out.append(c_k)
            shell_edges.append(r1)
            if not math.isfinite(c_k):
                diverged_outer = True
                stopped = True
                break
            if len(out) >= 5:
                tail5 = np.abs(np.asarray(out[-5:]))
                if tail5[-1] > tol and _nondecreasing(tail5):
                    diverged_outer = True
                    stopped = True
                    break
            if len(out) >= 2 and out[-2] != 0.0:
                rho = out[-1] / out[-2]
            else:
                rho = None
            if rho is not None and rho_prev is not None and 0.0 < rho <= 0.98:
                drho = abs(rho - rho_prev)
                if drho <= 0.02:
                    tail_correction = out[-1] * rho / (1.0 - rho)
                    err_t = (drho + 1e-12) * abs(out[-1]) / (1.0 - rho) ** 2
                    if err_t <= tol or abs(tail_correction) <= 0.5 * tol:
                        error += err_t
                        stopped = True
                        break
                    tail_correction = 0.0
            if abs(c_k) <= 0.05 * tol and (rho is None or abs(rho) <= 1.0):
                error += abs(c_k)
                stopped = True
                break
            rho_prev = rho
            r0 = r1
        contribs.extend(out)
        if not stopped and not diverged_outer:
            converged = False
            partial = float(np.sum(np.asarray(contribs)))
            residual = abs(out[-1]) if out else 0.0
            if raise_on_nonconvergence:
                raise QuadratureError(
                    f"shell quadrature did not converge by r={r0:.3g}",
                    partial=partial,
                    residual=residual,
                )
            error += residual * 10.0

    carr = np.asarray(contribs, dtype=float)
    if carr.size and not np.all(np.isfinite(carr)):
        # overflowed integrand: treat as divergence at whichever end is open
        if inner_singular and not finite_hi:
            diverged_outer = True
        elif inner_singular:
            diverged_inner = True
        else:
            diverged_outer = True
    if (diverged_inner or diverged_outer) and carr.size and np.all(np.isfinite(carr)):
        value = math.inf if (nonnegative or np.all(carr >= 0)) else math.nan
    elif carr.size and not np.all(np.isfinite(carr)):
        value = math.inf if nonnegative else math.nan
    else:
        tail_correction += inner_correction
        value = float(np.sum(carr)) + tail_correction
        error += abs(value) * 1e-13

    return ShellResult(
        value=value,
        error=error,
        n_nodes=n_nodes,
        diverged_inner=diverged_inner,
        diverged_outer=diverged_outer,
        converged=converged,
        edges=np.asarray(shell_edges, dtype=float),
        contributions=carr,
        tail_correction=tail_correction,
    )


def one_minus_cos(s):
    """1 - cos(s) without cancellation for small s."""
    return 2.0 * np.square(np.sin(0.5 * np.asarray(s)))


def s_minus_sin(s):
    """s - sin(s), series-switched below |s| = 1e-3."""
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < 1e-3
    s3 = s * s * s
    series = s3 / 6.0 * (1.0 - s * s / 20.0 * (1.0 - s * s / 42.0))
    with np.errstate(invalid="ignore"):
        direct = s - np.sin(s)
    return np.where(small, series, direct)


def octave_tail_estimate(contributions: np.ndarray, tol: float = 1e-12):
    """Geometric tail beyond the last shell from the last three contributions.

    Returns (tail, err, rho, diverging): for contributions settling into a
    ratio rho < 1 the tail is c_last * rho / (1 - rho); a nondecreasing last
    block means the integral is still growing, flagged as diverging.
    """
    c = np.asarray(contributions, dtype=float)
    c = c[np.abs(c) > 0]
    if c.size < 3:
        return 0.0, 0.0, 0.0, False
    c3 = c[-3:]
    if np.abs(c3[-1]) > tol and _nondecreasing(np.abs(c[-5:] if c.size >= 5 else c3)):
        return 0.0, 0.0, 1.0, True
    rho2 = c3[2] / c3[1] if c3[1] != 0 else 0.0
    rho1 = c3[1] / c3[0] if c3[0] != 0 else 0.0
    if not (0.0 < rho2 < 0.98 and 0.0 < rho1 < 1.05):
        return 0.0, abs(c3[-1]), rho2, False
    tail = float(c3[2] * rho2 / (1.0 - rho2))
    err = float((abs(rho2 - rho1) + 1e-12) * abs(c3[2]) / (1.0 - rho2) ** 2)
    return tail, err, float(rho2), False
