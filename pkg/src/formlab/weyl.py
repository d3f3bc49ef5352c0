"""Weyl limit-point / limit-circle classification on the half line.

Two solutions of ``-u'' + V u = lambda u`` with initial data ``(1, 0)`` and
``(0, 1)`` at ``r = 0`` are integrated to a horizon ``T``.  Their squared
moduli are accumulated as L2 masses.  The endpoint at infinity is
limit-circle when every solution is square integrable; for the two
fundamental branches this means both masses converge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

LIMIT_POINT = "limit-point"
LIMIT_CIRCLE = "limit-circle"
INCONCLUSIVE = "inconclusive"

TAIL_WINDOWS = 12
SLOPE_MARGIN = 0.05
CAUCHY_TOL = 1e-3


@dataclass(frozen=True)
class BranchMass:
    """Accumulated L2 mass of one branch (in log form, masses can overflow)."""

    log_mass: float
    tail_slope: float
    last_decade_fraction: float
    status: str

    @property
    def mass(self):
        return float(np.exp(self.log_mass)) if self.log_mass < 700 else float("inf")


@dataclass(frozen=True)
class WeylVerdict:
    classification: str
    branches: tuple
    horizon: float
    spectral_parameter: complex
    diagnostics: str

    @property
    def masses(self):
        return tuple(b.mass for b in self.branches)

    def to_dict(self):
        return {
            "classification": self.classification,
            "horizon": self.horizon,
            "spectral_parameter": [self.spectral_parameter.real, self.spectral_parameter.imag],
            "log_masses": [b.log_mass for b in self.branches],
            "tail_slopes": [b.tail_slope for b in self.branches],
            "branch_status": [b.status for b in self.branches],
            "diagnostics": self.diagnostics,
        }


def _as_callable(V):
    if callable(V):
        return V
    r, v = (np.asarray(a, dtype=float) for a in V)
    if r.ndim != 1 or r.shape != v.shape or np.any(np.diff(r) <= 0):
        raise ValueError("sampled potential needs increasing radii and matching values")
    if not np.all(np.isfinite(v)):
        raise ValueError("sampled potential must be finite")
    return lambda x: np.interp(x, r, v)


def _integrate_branch(V, y0, lam, T, breaks, rtol, atol):
    """Log-masses accumulated up to each break point, renormalizing per segment."""

    def rhs(x, y):
        u, du, _ = y
        return [du, (V(x) - lam) * u, abs(u) ** 2]

    state = np.array([y0[0], y0[1], 0.0], dtype=complex)
    log_scale = 0.0
    log_mass = -np.inf
    out = np.empty(len(breaks))
    a = 0.0
    for j, b in enumerate(breaks):
        # non-finite potentials surface as a failed step below
        with np.errstate(invalid="ignore", over="ignore"):
            sol = solve_ivp(rhs, (a, b), state, method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise RuntimeError(f"integration failed on [{a:g}, {b:g}]: {sol.message}")
        u, du, m = sol.y[:, -1]
        seg = m.real
        if seg > 0:
            log_mass = np.logaddexp(log_mass, np.log(seg) + 2 * log_scale)
        out[j] = log_mass
        s = max(abs(u), abs(du))
        if not np.isfinite(s) or s == 0:
            raise RuntimeError(f"solution degenerated near r={b:g}")
        log_scale += np.log(s)
        state = np.array([u / s, du / s, 0.0], dtype=complex)
        a = b
    return out


def _branch_status(breaks, log_mass, tail):
    """Tail exponent of the mass increments on the log-spaced ``tail`` windows."""
    sel = np.searchsorted(breaks, tail)
    x = np.log(breaks[sel])
    lm = log_mass[sel]
    # log of the increment between consecutive break points
    with np.errstate(invalid="ignore", divide="ignore"):
        inc = lm[1:] + np.log(-np.expm1(lm[:-1] - lm[1:]))
    mid = 0.5 * (x[1:] + x[:-1])
    width = np.diff(x)
    ok = np.isfinite(inc)
    if ok.sum() < 3:
        return np.nan, np.nan, INCONCLUSIVE
    # density of mass per unit log r, to absorb uneven window widths
    slope = float(np.polyfit(mid[ok], inc[ok] - np.log(width[ok]), 1)[0])
    frac = float(-np.expm1(lm[0] - lm[-1]))
    if frac < CAUCHY_TOL or slope <= -SLOPE_MARGIN:
        status = "convergent"
    elif slope >= SLOPE_MARGIN:
        status = "divergent"
    else:
        status = INCONCLUSIVE
    return slope, frac, status


def weyl_classify_1d(V, T=30.0, lam=1j, rtol=1e-10, atol=1e-12, segment=0.5):
    """Classify ``-d^2/dr^2 + V`` at infinity from two fundamental solutions.

    Parameters
    ----------
    V : callable or (r, V) samples
        Potential on ``[0, T]``; samples are linearly interpolated.
    T : float
        Integration horizon, at least 10.
    lam : complex
        Non-real spectral parameter.
    segment : float
        Longest integration segment between renormalizations.

    Returns
    -------
    WeylVerdict
        ``limit-circle`` when both branch masses converge, ``limit-point``
        when at least one diverges, ``inconclusive`` otherwise or when the
        integration breaks down.

    Notes
    -----
    Convergence is read from the power law of the mass per unit ``log r``
    over ``TAIL_WINDOWS`` log-spaced windows in ``[T/10, T]``: a mass density
    ``r**-a`` gives slope ``1 - a``, and the mass converges when ``a > 1``.
    A last-decade increment below ``CAUCHY_TOL`` of the total also counts as
    convergence.
    """
    if T < 10:
        raise ValueError("horizon must be at least 10")
    if np.imag(lam) == 0:
        raise ValueError("spectral parameter must be non-real")
    Vf = _as_callable(V)
    tail = np.geomspace(T / 10, T, TAIL_WINDOWS + 1)
    tail[-1] = T
    breaks = np.unique(np.concatenate([np.arange(segment, T, segment), tail]))
    branches = []
    try:
        for y0 in ((1.0, 0.0), (0.0, 1.0)):
            lm = _integrate_branch(Vf, y0, complex(lam), T, breaks, rtol, atol)
            slope, frac, status = _branch_status(breaks, lm, tail)
            branches.append(BranchMass(float(lm[-1]), slope, frac, status))
    except RuntimeError as exc:
        return WeylVerdict(INCONCLUSIVE, tuple(branches), float(T), complex(lam), str(exc))
    states = [b.status for b in branches]
    if all(s == "convergent" for s in states):
        cls = LIMIT_CIRCLE
    elif any(s == "divergent" for s in states):
        cls = LIMIT_POINT
    else:
        cls = INCONCLUSIVE
    diag = "; ".join(f"branch {i}: {b.status}, tail slope {b.tail_slope:.3f}"
                     for i, b in enumerate(branches))
    return WeylVerdict(cls, tuple(branches), float(T), complex(lam), diag)
