"""0-geodesic Hamiltonian flow on asymptotically hyperbolic half-space.

States are (x, y, lam, mu) with (lam, mu) the 0-cotangent fiber coordinates
(covector = lam dx/x + mu dy/x).  The flow of

    x'   = x lam
    y_i' = x h^{ij} mu_j
    lam' = -(h^{ij} + (1/2) x dh^{ij}/dx) mu_i mu_j
    mu_i'= lam mu_i - (1/2) (x dh^{jk}/dy_i) mu_j mu_k

with h = g0^{-1} preserves lam^2 + h^{ij} mu_i mu_j; unit level set = unit
speed.  Provides adaptive integration with drift tracking, escape
certification, closed-form exact-hyperbolic connecting data, and a two-point
shooting solver for distances.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import least_squares, minimize_scalar

from .errors import ConvergenceError, DomainError, IntegrationError
from .hypgeo import HalfSpaceMetric, PointPair, hyperbolic_distance


@dataclass
class ZeroPhasePoint:
    """Phase-space state; x = 0 is allowed only for boundary bicharacteristics."""

    x: float
    y: np.ndarray
    lam: float
    mu: np.ndarray

    def __post_init__(self):
        self.y = np.atleast_1d(np.asarray(self.y, dtype=float))
        self.mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        if self.x < 0:
            raise DomainError("x must be nonnegative")

    def flat(self):
        return np.concatenate(([self.x], self.y, [self.lam], self.mu))

    @classmethod
    def from_flat(cls, v, n):
        return cls(float(v[0]), v[1 : 1 + n].copy(), float(v[1 + n]), v[2 + n :].copy())


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray  # rows are flat states
    n: int
    exit_forward: bool = False
    exit_backward: bool = False
    max_constraint_drift: float = 0.0
    t_exit: float = math.nan
    sol: object = field(default=None, repr=False)

    def state(self, i):
        return ZeroPhasePoint.from_flat(self.states[i], self.n)


def constraint_value(metric, state):
    """lam^2 + h^{ij} mu_i mu_j - 1 (zero on the unit cosphere)."""
    if metric.is_exact:
        m2 = float(state.mu @ state.mu)
    else:
        h, _, _ = metric.h_and_scaled_derivs(state.x, state.y)
        m2 = float(state.mu @ h @ state.mu)
    return state.lam**2 + m2 - 1.0


def geodesic_rhs(metric, state):
    """Right-hand side of the flow at a state with x > 0."""
    if state.x <= 0:
        raise DomainError("trajectory has left the chart (x <= 0)")
    x, y, lam, mu = state.x, state.y, state.lam, state.mu
    if metric.is_exact:
        dx = x * lam
        dy = x * mu
        dlam = -float(mu @ mu)
        dmu = lam * mu
    else:
        h, xdhx, xdhy = metric.h_and_scaled_derivs(x, y)
        hmu = h @ mu
        dx = x * lam
        dy = x * hmu
        dlam = -float(mu @ hmu) - 0.5 * float(mu @ (xdhx @ mu))
        dmu = lam * mu - 0.5 * np.array([float(mu @ (m @ mu)) for m in xdhy])
    return dx, dy, dlam, dmu


def _rhs_flat(metric, n):
    exact = metric.is_exact

    def fun(t, v):
        x = v[0]
        lam = v[1 + n]
        mu = v[2 + n :]
        out = np.empty_like(v)
        if exact:
            out[0] = x * lam
            out[1 : 1 + n] = x * mu
            out[1 + n] = -(mu @ mu)
            out[2 + n :] = lam * mu
        else:
            h, xdhx, xdhy = metric.h_and_scaled_derivs(x, v[1 : 1 + n])
            hmu = h @ mu
            out[0] = x * lam
            out[1 : 1 + n] = x * hmu
            out[1 + n] = -(mu @ hmu) - 0.5 * (mu @ (xdhx @ mu))
            out[2 + n :] = lam * mu - 0.5 * np.array(
                [mu @ (m @ mu) for m in xdhy]
            )
        return out

    return fun


def renormalize(metric, state):
    """Project (lam, mu) onto the unit cosphere."""
    c = constraint_value(metric, state) + 1.0
    if c <= 0:
        raise DomainError("degenerate fiber vector")
    s = 1.0 / math.sqrt(c)
    return ZeroPhasePoint(state.x, state.y, state.lam * s, state.mu * s)


def integrate(metric, start, t_span, tol=1e-10, t_eval=None, escape_x=None):
    """Adaptively integrate the flow; drift is measured, never corrected.

    Returns a Trajectory sampled at t_eval (or at the accepted steps).  If
    escape_x is given, integration stops when x crosses it from above and the
    corresponding exit flag is set.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    n = len(start.y)
    start = renormalize(metric, start)
    if start.x <= 0:
        raise DomainError("start must have x > 0")
    fun = _rhs_flat(metric, n)
    events = None
    if escape_x is not None:

        def hit_floor(t, v):
            return v[0] - escape_x

        hit_floor.terminal = True
        events = [hit_floor]
    sol = solve_ivp(
        fun,
        t_span,
        start.flat(),
        method="DOP853",
        rtol=tol,
        atol=tol,
        t_eval=t_eval,
        dense_output=True,
        events=events,
    )
    if sol.status == -1:
        last = ZeroPhasePoint.from_flat(sol.y[:, -1], n) if sol.y.size else start
        raise IntegrationError(sol.message, last_state=last, t=sol.t[-1] if sol.t.size else t_span[0])
    states = sol.y.T.copy()
    lam = states[:, 1 + n]
    mu = states[:, 2 + n :]
    if metric.is_exact:
        m2 = np.sum(mu**2, axis=1)
    else:
        m2 = np.array(
            [
                float(mu[i] @ metric.h_and_scaled_derivs(states[i, 0], states[i, 1 : 1 + n])[0] @ mu[i])
                for i in range(len(states))
            ]
        )
    drift = float(np.max(np.abs(lam**2 + m2 - 1.0))) if len(states) else 0.0
    escaped = sol.status == 1
    forward = t_span[1] >= t_span[0]
    t_exit = math.nan
    if escaped and sol.t_events and sol.t_events[0].size:
        t_exit = float(sol.t_events[0][0])
    return Trajectory(
        t=sol.t.copy(),
        states=states,
        n=n,
        exit_forward=escaped and forward,
        exit_backward=escaped and not forward,
        max_constraint_drift=drift,
        t_exit=t_exit,
        sol=sol.sol,
    )


# ---------------------------------------------------------------------------
# boundary bicharacteristics (x = 0 limit flow)
# ---------------------------------------------------------------------------


def boundary_bicharacteristic(tau, y_star, mu_star):
    """Closed-form limit state on {x = 0}: lam = cos tau, mu = sin(tau) mu*.

    Under the time change dtau/dt = sin(tau) this curve solves the flow
    restricted to the boundary.  tau must lie in (0, pi); mu_star unit.
    """
    if not 0.0 < tau < math.pi:
        raise DomainError("tau must lie in (0, pi)")
    mu_star = np.atleast_1d(np.asarray(mu_star, dtype=float))
    nrm = float(np.linalg.norm(mu_star))
    if abs(nrm - 1.0) > 1e-6:
        raise DomainError("mu_star must be a unit vector")
    mu_star = mu_star / nrm
    y_star = np.atleast_1d(np.asarray(y_star, dtype=float))
    return ZeroPhasePoint(0.0, y_star, math.cos(tau), math.sin(tau) * mu_star)


def boundary_tau(t, tau0=math.pi / 2):
    """Solution of dtau/dt = sin(tau): tan(tau/2) = e^t tan(tau0/2)."""
    return 2.0 * math.atan(math.exp(t) * math.tan(tau0 / 2.0))


# ---------------------------------------------------------------------------
# y-travel bound (apex geodesics confined to a boundary collar)
# ---------------------------------------------------------------------------


def y_travel_integral(alpha):
    """integral_0^inf (2 e^{a t} / (1 + e^{2 a t}))^{1 + 1/a} dt; equals 1 at a=1."""
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    p = 1.0 + 1.0 / alpha

    def integrand(t):
        return (1.0 / math.cosh(alpha * t)) ** p

    return quad(integrand, 0.0, np.inf, limit=200)[0]


def y_travel_check(metric, epsilon, x_max, t_max=20.0, tol=1e-10, n_dirs=4):
    """Flow apex geodesics (x = x_max, lam = 0) and record y-displacement.

    Returns (max_y_displacement, ratio) with ratio relative to 2*x_max.
    Starts stay in the collar {x <= epsilon}; leaving it raises.
    """
    if not (0.0 < x_max <= epsilon <= 0.1):
        raise DomainError("need 0 < x_max <= epsilon <= 0.1")
    n = metric.n
    dirs = []
    for i in range(min(n_dirs, n)):
        e = np.zeros(n)
        e[i] = 1.0
        dirs.append(e)
    if n >= 2 and n_dirs > n:
        dirs.append(np.ones(n) / math.sqrt(n))
    max_disp = 0.0
    t_eval = np.linspace(0.0, t_max, 201)
    for e in dirs:
        start = ZeroPhasePoint(x_max, np.zeros(n), 0.0, e.copy())
        ys = []
        for sign in (1.0, -1.0):
            traj = integrate(metric, start, (0.0, sign * t_max), tol=tol,
                             t_eval=sign * t_eval)
            xs = traj.states[:, 0]
            if np.any(xs > epsilon * (1.0 + 1e-9)):
                raise IntegrationError(
                    "trajectory left the collar {x <= epsilon}",
                    last_state=traj.state(-1),
                )
            ys.append(traj.states[:, 1 : 1 + n])
        ally = np.vstack(ys)
        # diameter of the y-trace in the boundary metric h(0)
        if metric.is_exact:
            G0 = np.eye(n)
        else:
            G0 = metric.g0(0.0, np.zeros(n))[0]
        diffs = ally[:, None, :] - ally[None, :, :]
        dist2 = np.einsum("abi,ij,abj->ab", diffs, G0, diffs)
        max_disp = max(max_disp, math.sqrt(float(dist2.max())))
    return max_disp, max_disp / (2.0 * x_max)


# ---------------------------------------------------------------------------
# nontrapping certification
# ---------------------------------------------------------------------------


@dataclass
class EscapeRecord:
    index: int
    status: str  # ESCAPED | TRAPPED | INCONCLUSIVE
    t_forward: float = math.nan
    t_backward: float = math.nan


@dataclass
class NontrapCertificate:
    passed: bool
    trapped_count: int
    inconclusive_count: int
    worst_escape_time: float
    seed: int
    records: list = field(default_factory=list)


def _sample_states(metric, count, escape_x, y_box, rng):
    n = metric.n
    states = []
    for _ in range(count):
        x = rng.uniform(1.05 * escape_x, 1.0)
        y = rng.uniform(-y_box, y_box, size=n)
        w = rng.standard_normal(n + 1)
        st = ZeroPhasePoint(x, y, w[0], w[1:])
        states.append(renormalize(metric, st))
    return states


def _escape_time(metric, state, t_max, escape_x, direction, tol):
    traj = integrate(
        metric, state, (0.0, direction * t_max), tol=tol, escape_x=escape_x,
        t_eval=np.array([0.0, direction * t_max]),
    )
    if traj.exit_forward or traj.exit_backward:
        return abs(traj.t_exit)
    return None


def certify_nontrapping(metric, sample_count=1000, escape_x=1e-3, t_max=100.0,
                        seed=0, y_box=2.0, tol=1e-8, workers=1):
    """Sample the compact phase-space region and flow until x < escape_x.

    Certificate passes iff every sampled geodesic escapes both forward and
    backward within t_max.  Integration failures count as INCONCLUSIVE and
    fail the certificate.  Deterministic given the seed; worker threads merge
    results by sample index.
    """
    if escape_x <= 0:
        raise DomainError("escape_x must be positive")
    rng = np.random.default_rng(seed)
    states = _sample_states(metric, sample_count, escape_x, y_box, rng)

    def run(idx_state):
        idx, st = idx_state
        try:
            tf = _escape_time(metric, st, t_max, escape_x, +1, tol)
            tb = _escape_time(metric, st, t_max, escape_x, -1, tol)
        except IntegrationError:
            return EscapeRecord(idx, "INCONCLUSIVE")
        if tf is None or tb is None:
            return EscapeRecord(idx, "TRAPPED",
                                tf if tf is not None else math.nan,
                                tb if tb is not None else math.nan)
        return EscapeRecord(idx, "ESCAPED", tf, tb)

    items = list(enumerate(states))
    if workers and workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run, items))
    else:
        records = [run(it) for it in items]
    records.sort(key=lambda rec: rec.index)
    trapped = sum(1 for rec in records if rec.status == "TRAPPED")
    inconclusive = sum(1 for rec in records if rec.status == "INCONCLUSIVE")
    times = [
        max(rec.t_forward, rec.t_backward)
        for rec in records
        if rec.status == "ESCAPED"
    ]
    worst = max(times) if times else math.nan
    return NontrapCertificate(
        passed=trapped == 0 and inconclusive == 0,
        trapped_count=trapped,
        inconclusive_count=inconclusive,
        worst_escape_time=worst,
        seed=seed,
        records=records,
    )


# ---------------------------------------------------------------------------
# two-point shooting
# ---------------------------------------------------------------------------


def hyperbolic_connecting_data(pair):
    """Closed-form initial covector and length for the exact metric.

    Vertical lines when y = y'; otherwise the semicircle orthogonal to the
    boundary through both points.  Returns (lam0, mu0, length).
    """
    (x, y), (xq, yq) = pair.p, pair.q
    y = np.asarray(y, dtype=float)
    yq = np.asarray(yq, dtype=float)
    dy = yq - y
    u = float(np.linalg.norm(dy))
    if u < 1e-14:
        T = abs(math.log(xq / x))
        lam0 = 1.0 if xq >= x else -1.0
        return lam0, np.zeros_like(y), T
    e = dy / u
    c_e = (u**2 + xq**2 - x**2) / (2.0 * u)
    phi_p = math.atan2(x, c_e)
    phi_q = math.atan2(xq, c_e - u)
    T = abs(math.log(math.tan(phi_q / 2.0) / math.tan(phi_p / 2.0)))
    lam0 = math.cos(phi_p)
    mu0 = math.sin(phi_p) * e
    if phi_q < phi_p:
        lam0, mu0 = -lam0, -mu0
    return lam0, mu0, T


def _measured_arrival(metric, start, T, q, tol):
    """Integrate past T and return (t*, chart residual at t*) nearest to q."""
    horizon = 1.10 * T + 0.1
    traj = integrate(metric, start, (0.0, horizon), tol=tol)
    xq, yq = q
    yq = np.asarray(yq, dtype=float)

    def mismatch(t):
        v = traj.sol(t)
        return math.log(v[0] / xq) ** 2 + float(np.sum((v[1 : 1 + metric.n] - yq) ** 2))

    res = minimize_scalar(mismatch, bounds=(0.0, horizon), method="bounded",
                          options={"xatol": 1e-13})
    t_star = float(res.x)
    v = traj.sol(t_star)
    end = PointPair.of(v[0], v[1 : 1 + metric.n], xq, yq)
    return t_star, hyperbolic_distance(end)


def shoot_distance(metric, pair, tol=1e-7, integ_tol=1e-11):
    """Geodesic distance by two-point shooting of the flow.

    Seeded with the exact-hyperbolic connecting data; the initial direction
    is refined on the cosphere (n-parameter chart) together with the flight
    time whenever the seeded trajectory misses by more than tol.  The
    returned length is always measured on the integrated trajectory.
    """
    if not isinstance(metric, HalfSpaceMetric):
        raise DomainError("shooting is defined for half-space metrics")
    n = metric.n
    (x, y), (xq, yq) = pair.p, pair.q
    y = np.asarray(y, dtype=float)
    yq = np.asarray(yq, dtype=float)
    if abs(x - xq) < 1e-15 and np.allclose(y, yq, atol=1e-15, rtol=0.0):
        return 0.0
    lam0, mu0, T = hyperbolic_connecting_data(pair)
    start = renormalize(metric, ZeroPhasePoint(x, y, lam0, mu0))
    t_star, resid = _measured_arrival(metric, start, T, pair.q, integ_tol)
    scale = max(T, 1.0)
    if resid <= tol * scale:
        return t_star

    # refine: chart for the cosphere around w0 plus the flight time
    w0 = np.concatenate(([start.lam], start.mu))
    basis = np.linalg.svd(w0.reshape(1, -1))[2][1:].T  # (n+1) x n complement

    def unpack(z):
        w = w0 + basis @ z[:n]
        st = renormalize(metric, ZeroPhasePoint(x, y, w[0], w[1:]))
        return st, z[n]

    def residual(z):
        st, tt = unpack(z)
        traj = integrate(metric, st, (0.0, max(tt, 1e-9)), tol=integ_tol,
                         t_eval=[0.0, max(tt, 1e-9)])
        v = traj.states[-1]
        return np.concatenate(
            ([math.log(v[0] / xq)], v[1 : 1 + n] - yq)
        )

    z0 = np.concatenate((np.zeros(n), [max(t_star, T)]))
    opt = least_squares(residual, z0, method="lm", xtol=1e-14, ftol=1e-14)
    st, tt = unpack(opt.x)
    t_star, resid = _measured_arrival(metric, st, tt, pair.q, integ_tol)
    if resid > 50 * tol * scale:
        raise ConvergenceError(
            f"shooting residual {resid:.3e} above tolerance", residual=resid
        )
    return t_star
