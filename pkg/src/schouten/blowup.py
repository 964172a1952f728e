"""Blow-up diagnostics for sequences u_k -> -infinity.

The rescaled field w = u - max u of a blowing-up family is expected to
behave like 2 log d(x, x_bar) near the blow-up point x_bar. This module
locates candidate points with the descent procedure (hop to a point where u
drops by more than 1 inside a ball of radius sqrt(e^u)), builds the radial
supremum profile of w around the point and fits its slope against log r.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_DROP = 1.0


def rescale(u) -> np.ndarray:
    """w = u - max u, so that max w = 0 exactly."""
    u = np.asarray(u, dtype=float)
    return u - u.max()


@dataclass
class Descent:
    """Chain of visited nodes with their u values and the final ball radius."""

    point: tuple
    chain: list
    values: list
    radius: float
    truncated: bool

    def certificate_holds(self, u, chart, drop: float = DEFAULT_DROP) -> bool:
        """u >= u(x*) - drop on the certified ball (checked on the nodes)."""
        ball = chart.distances(self.point) <= self.radius
        return bool(np.all(np.asarray(u)[ball] >= np.asarray(u)[self.point] - drop))


def locate_blowup(u, chart, start=None, drop: float = DEFAULT_DROP, max_hops: int = 1000) -> Descent:
    """Descent from ``start`` (default: the global minimiser of u).

    At x_j the search ball has radius sqrt(e^{u(x_j)}); if some node in it
    has u < u(x_j) - drop the walk hops to the lowest such node, otherwise
    x_j is returned. ``truncated`` flags a ball larger than the chart's
    injectivity radius.
    """
    u = np.asarray(u, dtype=float)
    if start is None:
        start = np.unravel_index(int(np.argmin(u)), u.shape)
    point = tuple(int(i) for i in np.atleast_1d(start))
    chain, values = [point], [float(u[point])]
    inj = chart.injectivity_radius()
    truncated = False
    for _ in range(max_hops):
        radius = float(np.sqrt(np.exp(u[point])))
        truncated = truncated or radius > inj
        ball = chart.distances(point) <= radius
        lower = ball & (u < u[point] - drop)
        if not np.any(lower):
            return Descent(point, chain, values, radius, truncated)
        masked = np.where(lower, u, np.inf)
        point = tuple(int(i) for i in np.unravel_index(int(np.argmin(masked)), u.shape))
        chain.append(point)
        values.append(float(u[point]))
    raise RuntimeError("descent did not terminate")


def minimal_radial(w, chart, center, radius: float, bin_width: float | None = None):
    """Radial supremum profile of ``w`` around ``center``.

    Nodes are binned by distance with bin width ``bin_width`` (default: the
    grid step); each bin reports the supremum of w and the distance of the
    node attaining it. Returns arrays (r, w_hat), excluding the centre.
    """
    w = np.asarray(w, dtype=float)
    if radius > chart.injectivity_radius() + 1e-12:
        raise ValueError(f"radius {radius:g} exceeds the injectivity radius {chart.injectivity_radius():g}")
    h = chart.h if bin_width is None else float(bin_width)
    dist = chart.distances(center).reshape(-1)
    vals = w.reshape(-1)
    keep = (dist > 0) & (dist <= radius + 1e-12)
    dist, vals = dist[keep], vals[keep]
    bins = np.floor(dist / h + 0.5).astype(int)
    r_out, w_out = [], []
    for b in np.unique(bins):
        sel = np.flatnonzero(bins == b)
        best = sel[np.argmax(vals[sel])]
        r_out.append(dist[best])
        w_out.append(vals[best])
    return np.array(r_out), np.array(w_out)


@dataclass
class ProfileFit:
    slope: float
    intercept: float
    residual: float
    window: tuple
    samples: int


def profile_fit(r, w_hat, window: tuple | None = None, h: float | None = None, min_samples: int = 5
                ) -> ProfileFit:
    """Least-squares fit w_hat = slope * log r + intercept over ``window``.

    Default window is [4h, R/2] with R the largest sample radius (``h``
    defaults to the smallest sample radius).
    """
    r = np.asarray(r, dtype=float)
    w_hat = np.asarray(w_hat, dtype=float)
    if window is None:
        h = float(r.min()) if h is None else h
        window = (4.0 * h, 0.5 * float(r.max()))
    lo, hi = window
    sel = (r >= lo - 1e-12) & (r <= hi + 1e-12) & (r > 0)
    if sel.sum() < min_samples:
        raise ValueError(f"fit window [{lo:g}, {hi:g}] holds {int(sel.sum())} samples, need {min_samples}")
    x = np.log(r[sel])
    if np.ptp(x) == 0.0:
        raise ValueError("degenerate fit window")
    design = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, w_hat[sel], rcond=None)
    fitted = design @ coef
    rms = float(np.sqrt(np.mean((w_hat[sel] - fitted) ** 2)))
    return ProfileFit(float(coef[0]), float(coef[1]), rms, (float(lo), float(hi)), int(sel.sum()))


@dataclass
class BlowupReport:
    """Located point, descent chain and log-profile fit of one state."""

    point: tuple
    coordinates: list
    v_max: float
    descent_chain: list
    descent_values: list
    profile: list = field(default_factory=list)
    fitted_slope: float | None = None
    intercept: float | None = None
    fit_window: tuple | None = None
    residual_of_fit: float | None = None
    min_u: float = 0.0
    blowup: bool = True
    truncated_ball: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "point": list(self.point),
            "coordinates": self.coordinates,
            "v_max": self.v_max,
            "descent_chain": [list(p) for p in self.descent_chain],
            "descent_values": self.descent_values,
            "profile": [[float(a), float(b)] for a, b in self.profile],
            "fitted_slope": self.fitted_slope,
            "intercept": self.intercept,
            "fit_window": list(self.fit_window) if self.fit_window else None,
            "residual_of_fit": self.residual_of_fit,
            "min_u": self.min_u,
            "blowup": self.blowup,
            "truncated_ball": self.truncated_ball,
            "note": self.note,
        }


def analyze(u, chart, n: int, radius: float | None = None, window: tuple | None = None,
            blowup_level: float | None = None) -> BlowupReport:
    """Descent, rescaling and profile fit for one field.

    ``radius`` defaults to half the injectivity radius. If ``blowup_level``
    is given and min u stays above it, the report is flagged as no blow-up
    (the fit is still attempted).
    """
    u = np.asarray(u, dtype=float)
    descent = locate_blowup(u, chart)
    point = descent.point
    coords = [float(c[point]) for c in chart.coordinates()]
    radius = 0.5 * chart.injectivity_radius() if radius is None else radius
    w = rescale(u)
    r, w_hat = minimal_radial(w, chart, point, radius)
    report = BlowupReport(
        point=point,
        coordinates=coords,
        v_max=float(np.exp(-(n - 2) * u[point] / 2.0)),
        descent_chain=descent.chain,
        descent_values=descent.values,
        profile=list(zip(r.tolist(), w_hat.tolist())),
        min_u=float(u.min()),
        truncated_ball=descent.truncated,
    )
    if blowup_level is not None and u.min() >= blowup_level:
        report.blowup = False
        report.note = f"no blow-up: min u = {u.min():.3f} >= {blowup_level:g}"
    try:
        fit = profile_fit(r, w_hat, window=window, h=chart.h)
    except ValueError as exc:
        report.note = (report.note + "; " if report.note else "") + f"fit skipped: {exc}"
        return report
    report.fitted_slope = fit.slope
    report.intercept = fit.intercept
    report.fit_window = fit.window
    report.residual_of_fit = fit.residual
    return report
