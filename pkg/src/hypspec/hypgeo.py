"""Metric models and boundary geometry for asymptotically hyperbolic half-space.

Half-space coordinates are (x, y) with x > 0 and y in R^n; the metric is
(dx^2 + g0(x, y, dy))/x^2 with g0 the identity outside a compactly supported
perturbation.  Warped products dr^2 + f(r)^2 dw^2 cover the rotationally
symmetric checks.  The boundary-defining triple (rho_L, rho_R, rho_F) is the
concrete blow-up realization

    rho_F = sqrt(x^2 + x'^2 + |y-y'|^2),  rho_L = x/rho_F,  rho_R = x'/rho_F,

so rho_L * rho_R * rho_F^2 = x*x' identically.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class PointPair:
    """Ordered pair of half-space points; x-coordinates strictly positive."""

    p: tuple
    q: tuple

    def __post_init__(self):
        for pt in (self.p, self.q):
            if pt[0] <= 0:
                raise DomainError(f"x-coordinate must be positive, got {pt[0]}")

    @classmethod
    def of(cls, xp, yp, xq, yq):
        yp = np.atleast_1d(np.asarray(yp, dtype=float))
        yq = np.atleast_1d(np.asarray(yq, dtype=float))
        return cls((float(xp), tuple(yp)), (float(xq), tuple(yq)))


def _split(pair):
    (x, y), (xq, yq) = pair.p, pair.q
    return x, np.asarray(y, dtype=float), xq, np.asarray(yq, dtype=float)


def hyperbolic_distance(pair, n=None):
    """Exact H^{n+1} distance: cosh d = 1 + (|x-x'|^2 + |y-y'|^2)/(2 x x')."""
    x, y, xq, yq = _split(pair)
    s = ((x - xq) ** 2 + float(np.sum((y - yq) ** 2))) / (2.0 * x * xq)
    # acosh(1+s) written stably for tiny s
    return float(np.arccosh(1.0 + s)) if s > 1e-8 else math.sqrt(2.0 * s) * (
        1.0 - s / 12.0 + 3.0 * s**2 / 160.0
    )


def bdf_eval(pair):
    """(rho_L, rho_R, rho_F) for the pair, each positive."""
    x, y, xq, yq = _split(pair)
    rho_f = math.sqrt(x**2 + xq**2 + float(np.sum((y - yq) ** 2)))
    return x / rho_f, xq / rho_f, rho_f


def distance_defect(pair, n=None):
    """b(z,z') = d(z,z') + log(rho_L rho_R); uniformly bounded on the model."""
    rho_l, rho_r, _ = bdf_eval(pair)
    return hyperbolic_distance(pair, n) + math.log(rho_l * rho_r)


def distance_defect_grid(x, xq, dy):
    """Vectorized b over arrays of (x, x', |y-y'|) triples (model space)."""
    x = np.asarray(x, dtype=float)
    xq = np.asarray(xq, dtype=float)
    dy = np.asarray(dy, dtype=float)
    s = (np.abs(x - xq) ** 2 + dy**2) / (2.0 * x * xq)
    d = np.arccosh(1.0 + s)
    tiny = s <= 1e-8
    if np.any(tiny):
        st = s[tiny]
        d[tiny] = np.sqrt(2.0 * st) * (1.0 - st / 12.0)
    return d + np.log(x * xq / (x**2 + xq**2 + dy**2))


# ---------------------------------------------------------------------------
# half-space metrics
# ---------------------------------------------------------------------------


def _bump(s):
    """C^infty bump: exp(1 - 1/(1-s^2)) on |s|<1, 0 outside; bump(0)=1."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si**2))
    return out


def _bump_deriv(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si**2)) * (-2.0 * si / (1.0 - si**2) ** 2)
    return out


@dataclass
class HalfSpaceMetric:
    """Asymptotically hyperbolic metric (dx^2 + g0(x,y,dy))/x^2 on the chart.

    ``g0(x, y)`` returns (G, dG/dx, [dG/dy_i]) with G an SPD n x n matrix;
    outside ``support_radius`` (Euclidean norm of (x, y)) G is the identity.
    The built-in perturbation is conformal: G = (1 + amp*chi)^2 * I with chi
    a smooth bump of the given center/radius in (x, y)-space.
    """

    n: int
    amplitude: float = 0.0
    center: tuple = (0.5, 0.0)
    radius: float = 0.25
    name: str = "hyperbolic"
    support_radius: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("boundary dimension n must be >= 1")
        if self.amplitude <= -1.0:
            raise DomainError("amplitude must exceed -1 to keep g0 positive")
        c = np.zeros(self.n + 1)
        cin = np.atleast_1d(np.asarray(self.center, dtype=float))
        c[: len(cin)] = cin
        self.center = tuple(c)
        if self.amplitude:
            self.support_radius = float(np.linalg.norm(c)) + self.radius

    @property
    def is_exact(self):
        return self.amplitude == 0.0

    def _conformal(self, x, y):
        """(w, dw/dx, dw/dy_i) for w = 1 + amp * bump(|p - center|/radius)."""
        p = np.concatenate(([x], np.asarray(y, dtype=float)))
        dvec = p - np.asarray(self.center)
        dist = float(np.linalg.norm(dvec))
        if self.amplitude == 0.0 or dist >= self.radius:
            return 1.0, 0.0, np.zeros(self.n)
        s = dist / self.radius
        w = 1.0 + self.amplitude * float(_bump(s))
        if dist == 0.0:
            return w, 0.0, np.zeros(self.n)
        grad = self.amplitude * float(_bump_deriv(s)) / self.radius * (dvec / dist)
        return w, grad[0], grad[1:]

    def g0(self, x, y):
        """(G, dG/dx, list of dG/dy_i) at (x, y).

        Defined for any real x (the bump extends smoothly past the boundary),
        so integrator trial steps may probe x <= 0 without error.
        """
        eye = np.eye(self.n)
        w, dwx, dwy = self._conformal(x, y)
        G = w**2 * eye
        dGx = 2.0 * w * dwx * eye
        dGy = [2.0 * w * dwy[i] * eye for i in range(self.n)]
        return G, dGx, dGy

    def h_and_scaled_derivs(self, x, y):
        """h = g0^{-1} plus x*dh/dx and x*dh/dy_i (what the flow needs).

        dh = -h dG h for each coordinate derivative.
        """
        G, dGx, dGy = self.g0(x, y)
        h = np.linalg.inv(G)
        xdhx = -x * (h @ dGx @ h)
        xdhy = [-x * (h @ dGyi @ h) for dGyi in dGy]
        return h, xdhx, xdhy


@dataclass
class WarpedMetric:
    """Rotationally symmetric model dr^2 + f(r)^2 * (round sphere metric).

    ``f`` maps r > 0 to (f, f', f''); asymptotic_constant is the limit of
    f(r) / ((1/2) e^r).
    """

    n: int
    f: callable
    asymptotic_constant: float = 1.0
    name: str = "sinh"


def warp_sinh(r):
    return math.sinh(r), math.cosh(r), math.sinh(r)


def warp_sinh_plus_gaussian(r):
    """f = sinh r + r exp(-r^2): same pole and the same growth as sinh."""
    e = math.exp(-(r**2))
    f = math.sinh(r) + r * e
    fp = math.cosh(r) + e * (1.0 - 2.0 * r**2)
    fpp = math.sinh(r) + e * (4.0 * r**3 - 6.0 * r)
    return f, fp, fpp


_WARPS = {"sinh": warp_sinh, "sinh_plus_gaussian": warp_sinh_plus_gaussian}


def warped_volume_density(metric, r):
    """m(r) = (f(r)/sinh r)^n, the density against the model volume form."""
    r = float(r)
    if r <= 0:
        raise DomainError("r must be positive")
    f = metric.f(r)[0]
    if r > 20.0:
        # sinh overflows long before f/sinh stops being well conditioned
        ratio = 2.0 * f * math.exp(-r) / (1.0 - math.exp(-2.0 * r))
    else:
        ratio = f / math.sinh(r)
    return ratio**metric.n


# ---------------------------------------------------------------------------
# plain-text metric configuration
# ---------------------------------------------------------------------------


def load_keyvalues(path):
    """Parse key=value lines; '#' starts a comment, blanks ignored."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"bad config line (need key=value): {line!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            out[key] = val
    return out


def metric_from_config(cfg):
    """Build a metric object from a key=value mapping (see load_keyvalues)."""
    kind = cfg.get("metric.kind", "hyperbolic")
    n = int(cfg.get("metric.n", 2))
    if kind == "hyperbolic":
        return HalfSpaceMetric(n=n)
    if kind == "perturbed":
        center = tuple(
            float(tok) for tok in cfg.get("metric.bump.center", "0.5,0").split(",")
        )
        return HalfSpaceMetric(
            n=n,
            amplitude=float(cfg.get("metric.bump.amplitude", 0.05)),
            center=center,
            radius=float(cfg.get("metric.bump.radius", 0.25)),
            name="perturbed",
        )
    if kind == "warped":
        warp = cfg.get("metric.warp", "sinh")
        if warp not in _WARPS:
            raise DomainError(f"unknown warp {warp!r}; choose from {sorted(_WARPS)}")
        return WarpedMetric(n=n, f=_WARPS[warp], name=warp)
    raise DomainError(f"unknown metric.kind {kind!r}")
