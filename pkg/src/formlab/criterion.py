"""Generalized distance and the divergence test for self-adjointness.

The generalized distance is the infimum of ``int Q**-0.5`` over curves; on a
mesh it is a shortest-path problem with edge weight
``0.5 * (w(x) + w(y)) * length`` (trapezoid rule on the weight).  The
criterion holds when this distance grows without bound along every escaping
path, which for sampled data is decided from the tail of the weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .mesh import DistanceField, distance_from_base, sample_vertex_pairs, weighted_geodesic_field

FIT_FRACTION = 0.5
GUARD_BAND = 0.05
LOG_GROWTH_FRACTION = 0.9
MIN_WINDOW_SAMPLES = 50


class Verdict(str, Enum):
    SATISFIED = "criterion-satisfied"
    NOT_SATISFIED = "criterion-not-satisfied"
    INCONCLUSIVE = "inconclusive"


def trapezoid_edge_weights(mesh, envelope):
    e = mesh.edges
    return 0.5 * (envelope.w[e[:, 0]] + envelope.w[e[:, 1]]) * mesh.edge_lengths


def generalized_distance(mesh, envelope, source=None):
    """P(x): generalized distance from the base point (or ``source``)."""
    return weighted_geodesic_field(mesh, trapezoid_edge_weights(mesh, envelope), source)


def path_weight(mesh, envelope, path):
    """Weighted length of an explicit vertex path."""
    path = np.asarray(path)
    idx, _ = mesh.lookup_edges(path[:-1], path[1:])
    return float(trapezoid_edge_weights(mesh, envelope)[idx].sum())


@dataclass(frozen=True)
class BoundViolation:
    x: int
    y: int
    lhs: float
    rhs: float


def verify_P_bound(mesh, envelope, P, sample_pairs=1000, K=None, seed=0, slack=1e-8):
    """Check ``|P(x) - P(y)| <= w(x) d + K d**2 / 2`` on edges and random pairs.

    Every pair is checked in both orders.  Returns the list of violations.
    """
    P = np.asarray(P, dtype=float)
    if K is None:
        K = envelope.lipschitz
    if K is None:
        raise ValueError("Lipschitz constant unknown; pass K or use Envelope.with_lipschitz")
    w = envelope.w
    e = mesh.edges
    xs = [e[:, 0]]
    ys = [e[:, 1]]
    ds = [mesh.edge_lengths]
    if sample_pairs:
        x, y, d = sample_vertex_pairs(mesh, sample_pairs, seed=seed)
        xs.append(x)
        ys.append(y)
        ds.append(d)
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    d = np.concatenate(ds)
    out = []
    for a, b in ((x, y), (y, x)):
        lhs = np.abs(P[a] - P[b])
        rhs = w[a] * d + 0.5 * K * d ** 2
        for i in np.nonzero(lhs > rhs + slack)[0]:
            out.append(BoundViolation(int(a[i]), int(b[i]), float(lhs[i]), float(rhs[i])))
    return out


def truncate_P(P, R):
    """Clamp the generalized distance at level ``R``."""
    if R < 0:
        raise ValueError("truncation level must be nonnegative")
    values = np.minimum(np.asarray(P, dtype=float), R)
    if isinstance(P, DistanceField):
        return DistanceField(values, P.source)
    return values


def truncation_gradient_excess(mesh, envelope, P_R):
    """Largest edgewise excess of ``|dP_R|`` over the trapezoid weight (<= 0 expected)."""
    P_R = np.asarray(P_R, dtype=float)
    e = mesh.edges
    jump = np.abs(P_R[e[:, 1]] - P_R[e[:, 0]])
    return float(np.max(jump - trapezoid_edge_weights(mesh, envelope)))


@dataclass(frozen=True)
class DivergenceVerdict:
    verdict: Verdict
    exponent: float
    prefactor: float
    partial_integral: float
    window: tuple
    window_growth: float
    diagnostics: str

    def to_dict(self):
        return {
            "verdict": self.verdict.value,
            "tail_exponent": self.exponent,
            "prefactor": self.prefactor,
            "partial_integral": self.partial_integral,
            "window": list(self.window),
            "window_growth": self.window_growth,
            "diagnostics": self.diagnostics,
        }


def divergence_verdict(t, w, fit=FIT_FRACTION, guard=GUARD_BAND):
    """Decide whether ``int_0^inf w(t) dt`` diverges from samples on ``[0, T]``.

    A power law ``w ~ c t**-p`` is fitted by least squares in log-log
    coordinates on ``[fit * T, T]``.  ``p <= 1 - guard`` means divergence,
    ``p >= 1 + guard`` convergence.  Inside the guard band the integral over
    the window is compared with the ``c log(T / t0)`` growth of an exact
    ``c / t`` tail: reaching 90 % of it counts as (logarithmic) divergence.
    """
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=float)
    if t.shape != w.shape or t.ndim != 1:
        raise ValueError("need matching 1-D samples")
    order = np.argsort(t)
    t, w = t[order], w[order]
    T = t[-1]
    t0 = fit * T
    win = (t >= t0) & (t > 0)
    if win.sum() < MIN_WINDOW_SAMPLES:
        raise ValueError(f"fit window [{t0:g}, {T:g}] holds fewer than "
                         f"{MIN_WINDOW_SAMPLES} samples")
    partial = float(np.trapezoid(w, t)) if hasattr(np, "trapezoid") else float(np.trapz(w, t))
    tw, ww = t[win], w[win]
    growth = float(np.trapezoid(ww, tw)) if hasattr(np, "trapezoid") else float(np.trapz(ww, tw))
    pos = ww > 0
    if pos.sum() < 2:
        return DivergenceVerdict(Verdict.INCONCLUSIVE, float("nan"), float("nan"), partial,
                                 (float(tw[0]), float(T)), growth,
                                 "no positive weights in the fit window")
    slope, intercept = np.polyfit(np.log(tw[pos]), np.log(ww[pos]), 1)
    p, c = float(-slope), float(np.exp(intercept))
    if p <= 1.0 - guard:
        verdict, why = Verdict.SATISFIED, f"tail exponent {p:.4f} <= {1 - guard:g}"
    elif p >= 1.0 + guard:
        verdict, why = Verdict.NOT_SATISFIED, f"tail exponent {p:.4f} >= {1 + guard:g}"
    else:
        ref = c * np.log(T / tw[0])
        if growth >= LOG_GROWTH_FRACTION * ref:
            verdict = Verdict.SATISFIED
            why = (f"tail exponent {p:.4f} in guard band; window growth {growth:.4g} "
                   f">= {LOG_GROWTH_FRACTION} x log-growth {ref:.4g}")
        else:
            verdict = Verdict.INCONCLUSIVE
            why = (f"tail exponent {p:.4f} in guard band; window growth {growth:.4g} "
                   f"< {LOG_GROWTH_FRACTION} x log-growth {ref:.4g}")
    return DivergenceVerdict(verdict, p, c, partial, (float(tw[0]), float(T)), growth, why)


def nested_truncation_profile(mesh, P, radii, r=None):
    """``P_min(R)``: minimum of P over the boundary of each ball ``r <= R``.

    The boundary of a ball is the set of its vertices that have a neighbour
    outside it.  Returns an array with columns ``(R, P_min)``.
    """
    P = np.asarray(P, dtype=float)
    rr = distance_from_base(mesh).values if r is None else np.asarray(r, dtype=float)
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be strictly increasing")
    e = mesh.edges
    tol = 1e-9 * max(1.0, float(rr.max()))
    rows = []
    for R in radii:
        inside = rr <= R + tol
        cross = inside[e[:, 0]] != inside[e[:, 1]]
        ring = np.zeros(mesh.n_vertices, dtype=bool)
        ring[e[cross].ravel()] = True
        ring &= inside
        if not ring.any():
            raise ValueError(f"truncation at R={R:g} has an empty boundary")
        rows.append((R, float(P[ring].min())))
    return np.asarray(rows)


def shell_minimum_weight(r, w, radii):
    """Minimum weight over each shell ``radii[i-1] < r <= radii[i]``.

    Empty shells are dropped.  Returns shell midpoints and minima.
    """
    edges = np.concatenate([[-np.inf], np.asarray(radii, dtype=float)])
    shell = np.searchsorted(edges, r, side="left") - 1
    keep = (shell >= 0) & (shell < len(radii))
    lo = np.full(len(radii), np.inf)
    np.minimum.at(lo, shell[keep], np.asarray(w)[keep])
    mid = 0.5 * (np.concatenate([[0.0], radii[:-1]]) + radii)
    ok = np.isfinite(lo)
    return mid[ok], lo[ok]


@dataclass
class CriterionReport:
    envelope: dict
    P: np.ndarray
    profile: np.ndarray
    divergence: DivergenceVerdict
    bound_violations: list = field(default_factory=list)

    @property
    def verdict(self):
        return self.divergence.verdict

    @property
    def tail_exponent(self):
        return self.divergence.exponent

    def to_dict(self):
        return {
            "schema": "formlab.criterion-report/1",
            "envelope": self.envelope,
            "verdict": self.verdict.value,
            "tail_exponent": self.divergence.exponent,
            "divergence": self.divergence.to_dict(),
            "P_max": float(self.P.max()),
            "profile": [{"R": float(R), "P_min": float(p)} for R, p in self.profile],
            "bound_violations": len(self.bound_violations),
        }


def evaluate_criterion(mesh, envelope, radii=None, fit=FIT_FRACTION, guard=GUARD_BAND,
                       sample_pairs=1000, seed=0):
    """Full criterion pass: K, P, the P_min(R) profile, bound check, verdict.

    On one-dimensional meshes the weight itself is the radial profile.
    Elsewhere the divergence test runs on the smallest weight found in each
    radial shell between consecutive ``radii``; a divergent integral of that
    lower profile forces ``P_min(R)`` to grow without bound.
    """
    if envelope.lipschitz is None:
        envelope = envelope.with_lipschitz(mesh, seed=seed)
    r = distance_from_base(mesh).values
    P = generalized_distance(mesh, envelope).values
    if radii is None:
        top = float(r[mesh.boundary].min()) if mesh.boundary.any() and mesh.dim > 1 \
            else float(r.max())
        radii = np.linspace(top / 200, top * (1 - 1e-6), 200)
    profile = nested_truncation_profile(mesh, P, radii, r=r)
    if mesh.dim == 1:
        div = divergence_verdict(r, envelope.w, fit=fit, guard=guard)
    else:
        s, w_low = shell_minimum_weight(r, envelope.w, radii)
        div = divergence_verdict(s, w_low, fit=fit, guard=guard)
    if not np.isfinite(envelope.lipschitz):
        div = DivergenceVerdict(Verdict.INCONCLUSIVE, div.exponent, div.prefactor,
                                div.partial_integral, div.window, div.window_growth,
                                "weight is not Lipschitz on the sampled pairs")
    violations = verify_P_bound(mesh, envelope, P, sample_pairs=sample_pairs, seed=seed)
    return CriterionReport(envelope.summary(), P, profile, div, violations)
