"""Ornstein-Uhlenbeck, fast diffusion and porous medium flows.

The OU flow is evaluated exactly in time through the Mehler formula
f(t, x) = int f0(e^{-t} x + sqrt(1 - e^{-2t}) y) d mu(y), with Gauss-Hermite
(and, for radial data in d >= 2, generalized Gauss-Laguerre) quadrature in y.

The rescaled fd/pm flows are written in potential form
du/dt = div(u grad Pi),  Pi = s sigma^k u^{p-1} + |x|^2,  s = sign(p - 1),
and discretized by a conservative finite-volume scheme on the radial grid
with centered face densities (upwinded next to a support edge). The
Barenblatt profile B_{M,sigma} makes Pi constant on its support, so it is an
exact discrete steady state.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import gammaln, roots_genlaguerre, roots_hermitenorm

from . import functionals as fn
from .inequalities import beckner_rate, gn_gain, gn_setting_for_p, ou_improved_bound
from .numerics import Grid, GridFunction, gaussian_density, quad, sphere_area, xlogx
from .profiles import (
    FD_EXPONENTS, PM_EXPONENTS, ProfileError, ProfileSpec, check_exponent, grid_for, normalize, sample,
)

SCHEMES = ("exact_semigroup", "explicit_fv", "semi_implicit_fv")
CFL = 0.4
CLIP_BUDGET = 1e-12
MASS_DRIFT = 1e-6
SMOOTH_RATIO = 0.5
MAX_HALVINGS = 6
VALUE_FLOOR = 1e-12  # entropies below this are roundoff around equilibrium


class DynamicsError(RuntimeError):
    """Numerical failure along a trajectory."""


class CFLError(DynamicsError):
    """Time step above the stability restriction of an explicit scheme."""


@dataclass(frozen=True)
class TrajectoryPoint:
    t: float
    value: float
    fisher: float
    sigma: float
    theta: float
    plain_bound: float
    improved_bound: float
    mass: float = float("nan")

    def as_row(self) -> list[float]:
        return [self.t, self.value, self.fisher, self.sigma, self.theta, self.plain_bound, self.improved_bound]


@dataclass
class Trajectory:
    """Recorded points plus run metadata (constraint residuals, quadrature error, ...)."""

    kind: str
    points: list[TrajectoryPoint]
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[TrajectoryPoint]:
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(pt, name) for pt in self.points])


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-3
    t_end: float = 1.0
    scheme: str = "semi_implicit_fv"
    grid: Optional[Grid] = None
    record_every: int = 10
    quad_nodes: int = 24

    def __post_init__(self):
        if not self.dt > 0:
            raise DynamicsError(f"dt={self.dt} must be positive")
        if self.t_end < 0:
            raise DynamicsError("t_end must be nonnegative")
        if self.scheme not in SCHEMES:
            raise DynamicsError(f"unknown scheme {self.scheme!r}")
        if self.record_every < 1:
            raise DynamicsError("record_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


def rk4(rate, y0: float, dt: float, n_steps: int) -> np.ndarray:
    """Classical 4th-order integration of y' = -rate(y); returns all n_steps + 1 values."""
    out = np.empty(n_steps + 1)
    y = float(y0)
    out[0] = y
    for i in range(n_steps):
        k1 = -rate(y)
        k2 = -rate(y + 0.5 * dt * k1)
        k3 = -rate(y + 0.5 * dt * k2)
        k4 = -rate(y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = y
    return out


# --- Ornstein-Uhlenbeck -----------------------------------------------------------

def ou_initial_datum(density: GridFunction, constrained: bool = True) -> GridFunction:
    """f0 = density / mu, the OU datum whose |f0| mu is the given Lebesgue density.

    With ``constrained`` the density is first dilated to temperature 1, which
    is the second-moment condition int f0 |x|^2 d mu = d int f0 d mu.
    """
    if np.any(density.values < 0):
        raise DynamicsError("negative initial density")
    if constrained:
        try:
            density = normalize(density, "moment_constraint")
        except ProfileError as exc:
            raise DynamicsError(str(exc)) from None
    d = density.grid.d
    inv_mu = lambda x: (2 * np.pi) ** (d / 2) * np.exp(0.5 * np.asarray(x) ** 2)  # noqa: E731
    src = None
    if density.source is not None:
        s0 = density.source
        src = lambda x: s0(x) * inv_mu(x)  # noqa: E731
    return GridFunction(density.grid, density.values * inv_mu(density.grid.nodes), True, src)


def _mehler_rule(d: int, radial: bool, n: int):
    """Nodes (y1, rho^2) and weights for Gaussian expectations in y."""
    y, wy = roots_hermitenorm(n)
    wy = wy / np.sqrt(2 * np.pi)
    if d == 1 or not radial:
        return y, np.zeros(1), wy, np.ones(1)
    a = 0.5 * (d - 3)
    tau, wt = roots_genlaguerre(max(8, n // 2), a)
    wt = wt * np.exp(-gammaln(a + 1))
    return y, 2.0 * tau, wy, wt


def ou_at(f0: GridFunction, t: float, quad_nodes: int = 24) -> np.ndarray:
    """Exact OU semigroup at time t, evaluated at the grid nodes."""
    g = f0.grid
    if t == 0:
        return np.array(f0.values, dtype=float)
    e = np.exp(-t)
    s = np.sqrt(-np.expm1(-2.0 * t))
    y, rho2, wy, wr = _mehler_rule(g.d, g.kind == "radial", quad_nodes)
    x = g.nodes[:, None, None]
    arg2 = (e * x + s * y[None, :, None]) ** 2 + s * s * rho2[None, None, :]
    if g.kind == "radial":
        vals = f0.evaluate(np.sqrt(arg2))
    else:
        vals = f0.evaluate(e * x + s * y[None, :, None])
    return np.einsum("nij,i,j->n", vals, wy, wr)


def ou_corpus(n: int = 2048) -> list[tuple[str, int, GridFunction]]:
    """Five constrained OU data (label, d, f0).

    Centered Gaussians are absent on purpose: dilated to temperature 1 they
    are the equilibrium itself.
    """
    entries = [
        (ProfileSpec("gaussian_offcenter", center=1.0), 1),
        (ProfileSpec("gaussian_offcenter", center=0.5), 1),
        (ProfileSpec("gaussian_mixture", temperature=0.5, center=1.0), 1),
        (ProfileSpec("perturbed_gaussian", eps=0.2, k=2), 2),
        (ProfileSpec("perturbed_gaussian", eps=0.2, k=3), 3),
    ]
    out = []
    for spec, d in entries:
        g = grid_for(spec, d, n)
        out.append((spec.label, d, ou_initial_datum(sample(spec, g))))
    return out


def flow_corpus(case: str, d: int, exponents=None) -> list[tuple[str, float, ProfileSpec]]:
    """Perturbed Barenblatt initial data (label, p, spec) for the rescaled flows."""
    if exponents is None:
        exponents = FD_EXPONENTS[d] if case == "fd" else PM_EXPONENTS
    out = []
    for p in exponents:
        for eps in (0.05, 0.2):
            spec = ProfileSpec("perturbed_barenblatt", p=p, eps=eps, k=2)
            out.append((spec.label, p, spec))
    return out


def ou_entropy(f: np.ndarray, grid: Grid) -> tuple[float, float, float]:
    """(mass, E = int f log(f/M) d mu, constrained second-moment residual)."""
    mu = gaussian_density(grid)
    M = quad(grid, f * mu)
    ent = M * quad(grid, xlogx(f / M) * mu)
    m2 = quad(grid, grid.r2 * f * mu)
    return M, ent, m2 / (grid.d * M) - 1.0


def ou_evolve(f0: GridFunction, cfg: SolverConfig, times: Optional[np.ndarray] = None) -> Trajectory:
    """Exact-in-time OU trajectory with the plain and improved entropy bounds.

    Both bounds are stated for unit mass; for mass M they are applied to E/M
    and scaled back, which keeps them homogeneous like E itself.
    """
    if np.any(f0.values < 0):
        raise DynamicsError("negative initial values")
    g = f0.grid
    if times is None:
        times = np.arange(cfg.n_steps + 1)[:: cfg.record_every] * cfg.dt
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0):
        raise DynamicsError("times must be nondecreasing")
    M0, e0, resid0 = ou_entropy(f0.values, g)
    points = []
    max_resid = 0.0
    for t in times:
        f = ou_at(f0, t, cfg.quad_nodes)
        M, ent, resid = ou_entropy(f, g)
        max_resid = max(max_resid, abs(resid))
        mu = gaussian_density(g)
        fis = quad(g, fn.dirichlet_density(g, f) / np.maximum(f, 1e-300) * mu)
        points.append(TrajectoryPoint(
            t=float(t), value=ent, fisher=fis, sigma=float("nan"), theta=1.0 + resid,
            plain_bound=e0 * np.exp(-2.0 * t),
            improved_bound=M0 * float(ou_improved_bound(e0 / M0, t, g.d)), mass=M,
        ))
    # quadrature error estimate: redo the last point with twice the nodes
    t_last = float(times[-1])
    f_fine = ou_at(f0, t_last, 2 * cfg.quad_nodes)
    qerr = abs(ou_entropy(f_fine, g)[1] - points[-1].value)
    return Trajectory("ou", points, {
        "mass0": M0, "entropy0": e0, "constraint_residual0": abs(resid0),
        "constraint_residual_max": max_resid, "quadrature_error": qerr,
    })


def q_entropy(f: np.ndarray, grid: Grid, q: float) -> tuple[float, float]:
    """(M, int (f^q - M^q)/(q - 1) d mu)."""
    mu = gaussian_density(grid)
    M = quad(grid, f * mu)
    return M, (quad(grid, f ** q * mu) - M ** q) / (q - 1.0)


def ou_beckner_trace(f0: GridFunction, p: float, cfg: SolverConfig) -> Trajectory:
    """q-entropy along the OU flow with its Beckner comparator, q = 2/p.

    The comparator integrates y' = -R(y) by RK4 with step dt, where R is
    the improved-Beckner lower bound on the entropy production. Its linear
    branch gives the plain y0 exp(-2t) decay.
    """
    if not 1.0 < p < 2.0:
        raise DynamicsError(f"p={p} outside (1, 2)")
    g = f0.grid
    q = 2.0 / p
    M, y0 = q_entropy(f0.values, g, q)
    n = cfg.n_steps
    comp = rk4(lambda y: float(beckner_rate(y, p, g.d, M)), y0, cfg.dt, n)
    steps = np.arange(n + 1)[:: cfg.record_every]
    points = []
    for i in steps:
        t = i * cfg.dt
        f = ou_at(f0, t, cfg.quad_nodes)
        Mt, y = q_entropy(f, g, q)
        points.append(TrajectoryPoint(
            t=float(t), value=y, fisher=float("nan"), sigma=float("nan"), theta=float("nan"),
            plain_bound=y0 * np.exp(-2.0 * t), improved_bound=float(comp[i]), mass=Mt,
        ))
    X = (q - 1.0) * y0 / M ** q
    return Trajectory("ou_beckner", points, {"p": p, "q": q, "x0": X / (1.0 + X), "mass0": M})


# --- rescaled fast diffusion / porous medium ------------------------------------------

class _FluxOperator:
    """Face geometry of a radial grid for the potential-form flux."""

    def __init__(self, grid: Grid):
        if grid.kind != "radial" or grid.edges is None:
            raise DynamicsError("the rescaled flows need a radial grid")
        self.grid = grid
        inner = grid.edges[1:-1]
        self.area = sphere_area(grid.d) * inner ** (grid.d - 1)
        self.dr = np.diff(grid.nodes)
        self.width = np.diff(grid.edges)
        self.vol = grid.weights
        self.r2 = grid.r2

    def potential(self, u: np.ndarray, p: float, sigma_k: float) -> np.ndarray:
        s = 1.0 if p > 1 else -1.0
        pres = np.where(u > 0, np.maximum(u, 1e-300) ** (p - 1), 0.0)
        return s * sigma_k * pres + self.r2

    def face_density(self, u: np.ndarray, dpi: np.ndarray) -> np.ndarray:
        """Centered where neighbours are comparable, upwinded near a support edge.

        Upwinding is first order and smears mass outward; the centered value
        would drain the thin cells at a compact-support edge.
        """
        up = np.where(dpi > 0, u[1:], u[:-1])
        lo = np.minimum(u[1:], u[:-1])
        hi = np.maximum(u[1:], u[:-1])
        smooth = lo > SMOOTH_RATIO * hi
        return np.where(smooth, 0.5 * (u[1:] + u[:-1]), up)

    def divergence(self, face_flux: np.ndarray) -> np.ndarray:
        """Cell rates from fluxes F (positive F moves mass from cell i+1 into i)."""
        out = np.zeros(self.vol.size)
        out[:-1] += face_flux
        out[1:] -= face_flux
        return out / self.vol

    def explicit_dt(self, u: np.ndarray, p: float, sigma_k: float) -> float:
        """c h^2 / max diffusivity, together with the drift restriction h / |2x|."""
        on = u > 0
        diff = abs(p - 1.0) * sigma_k * np.where(on, np.maximum(u, 1e-300) ** (p - 1), 0.0)
        with np.errstate(divide="ignore"):
            dd = np.where(on & (diff > 0), self.width ** 2 / diff, np.inf)
            dv = self.width / (2.0 * np.sqrt(self.r2))
        return CFL * float(min(dd.min(), dv.min()))


def _explicit_step(op: _FluxOperator, u: np.ndarray, p: float, sigma_k: float, dt: float) -> np.ndarray:
    limit = op.explicit_dt(u, p, sigma_k)
    if dt > limit * (1 + 1e-12):
        raise CFLError(f"dt={dt:.3e} above the explicit limit {limit:.3e}")
    pi = op.potential(u, p, sigma_k)
    dpi = np.diff(pi)
    flux = op.area * op.face_density(u, dpi) * dpi / op.dr
    return u + dt * op.divergence(flux)


def _semi_implicit_step(op: _FluxOperator, u: np.ndarray, p: float, sigma_k: float, dt: float,
                        depth: int = 0) -> np.ndarray:
    """Diffusion implicit with frozen coefficients, drift explicit.

    The face difference s sigma^k (u_{i+1}^{p-1} - u_i^{p-1}) is written as
    c (u_{i+1} - u_i) with the secant slope c >= 0 taken at the old level,
    so a steady state of the explicit flux is also one of this step. When
    the explicit drift would drain a cell below zero the step is halved.
    """
    s = 1.0 if p > 1 else -1.0
    pi = op.potential(u, p, sigma_k)
    dpi = np.diff(pi)
    uf = op.face_density(u, dpi)
    du = np.diff(u)
    pres = np.where(u > 0, np.maximum(u, 1e-300) ** (p - 1), 0.0)
    dpres = np.diff(pres)
    um = 0.5 * (u[1:] + u[:-1])
    tiny = np.abs(du) <= 1e-12 * np.maximum(um, 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = np.where(tiny, (p - 1.0) * np.maximum(um, 1e-300) ** (p - 2), dpres / du)
    coef = np.where(uf > 0, s * sigma_k * slope * uf * op.area / op.dr, 0.0)
    coef = np.maximum(coef, 0.0)
    drift = op.area * uf * np.diff(op.r2) / op.dr
    n = u.size
    vdt = op.vol / dt
    ab = np.zeros((3, n))
    ab[1] = vdt
    ab[1, :-1] += coef
    ab[1, 1:] += coef
    ab[0, 1:] = -coef
    ab[2, :-1] = -coef
    rhs = vdt * u + op.vol * op.divergence(drift)
    if depth < MAX_HALVINGS and np.any(rhs < 0):
        half = _semi_implicit_step(op, u, p, sigma_k, 0.5 * dt, depth + 1)
        return _semi_implicit_step(op, half, p, sigma_k, 0.5 * dt, depth + 1)
    return solve_banded((1, 1), ab, rhs)


def _comparator(p: float, case: str, d: int, F0: float, h0: float, dt: float, n_steps: int) -> np.ndarray:
    """y' = -4y - h gain(beta |1-p| y / h), frozen at h = h(0).

    h(t) is nonincreasing along the flow and h gain(s/h) decreases in h for
    a convex gain vanishing at 0, so freezing h at its initial value gives a
    valid (slightly weaker) comparator.
    """
    setting = gn_setting_for_p(p, d)
    c = abs(1.0 - p) * setting.beta

    def rate(y):
        y = max(y, 0.0)
        return 4.0 * y + h0 * float(gn_gain(c * y / h0, setting))

    return rk4(rate, F0, dt, n_steps)


def sigma_rate(ctx: fn.RescaleContext, F: float, displayed: bool = False) -> float:
    """d sigma/dt predicted from the free energy: -+ 2 (1-p)^2 sigma^k F lam^{2 alpha - 1} / (p M* Theta*).

    The second-moment identity gives the negative sign for fd and the
    positive sign for pm (sigma grows along the pm flow). ``displayed``
    uses the negative sign in both cases.
    """
    sign = -1.0 if (ctx.case == "fd" or displayed) else 1.0
    return sign * 2.0 * (1.0 - ctx.p) ** 2 * ctx.sigma ** ctx.k * F * ctx.lam ** (2 * ctx.alpha - 1) / (
        ctx.p * ctx.M_star * ctx.theta_star)


def rescaled_flow_evolve(u0: GridFunction, p: float, case: str, cfg: SolverConfig) -> Trajectory:
    """Integrate the rescaled fd (p < 1) or pm (p > 1) flow from u0."""
    try:
        check_exponent(p, u0.grid.d, case)
    except ProfileError as exc:
        raise DynamicsError(str(exc)) from None
    if cfg.scheme == "exact_semigroup":
        raise DynamicsError("exact_semigroup applies to the OU flow only")
    if np.any(u0.values < 0):
        raise DynamicsError("negative initial density")
    grid = cfg.grid or u0.grid
    if grid is not u0.grid:
        u0 = GridFunction(grid, u0.evaluate(grid.nodes), True, u0.source)
    op = _FluxOperator(grid)
    step = _explicit_step if cfg.scheme == "explicit_fv" else _semi_implicit_step
    u = np.array(u0.values, dtype=float)
    mass0 = quad(grid, u)
    n = cfg.n_steps
    clipped = 0.0
    points = []
    sigma_law = []
    sigma_shown = []
    comp = None
    for i in range(n + 1):
        uf = GridFunction(grid, u, True)
        ctx = fn.sigma_best(uf, p, case)
        if i % cfg.record_every == 0 or i == n:
            F = fn.relative_free_energy(uf, ctx)
            if comp is None:
                comp = _comparator(p, case, grid.d, max(F, 0.0), ctx.h, cfg.dt, n)
                F0 = F
            t = i * cfg.dt
            points.append(TrajectoryPoint(
                t=t, value=F, fisher=fn.relative_fisher(uf, ctx), sigma=ctx.sigma,
                theta=fn.moments(uf).temperature, plain_bound=F0 * np.exp(-4.0 * t),
                improved_bound=float(comp[i]), mass=ctx.M,
            ))
            sigma_law.append(sigma_rate(ctx, F))
            sigma_shown.append(sigma_rate(ctx, F, displayed=True))
        if i == n:
            break
        u = step(op, u, p, ctx.sigma ** ctx.k, cfg.dt)
        if not np.all(np.isfinite(u)):
            raise DynamicsError(f"non-finite density at t={(i + 1) * cfg.dt:.4g}")
        neg = -float(u.min())
        if neg > CLIP_BUDGET * float(u.max()):
            raise DynamicsError(f"negative density {-neg:.3e} beyond the clip budget")
        if neg > 0:
            clipped = max(clipped, neg)
            u = np.maximum(u, 0.0)
        drift = abs(quad(grid, u) / mass0 - 1.0)
        if drift > MASS_DRIFT:
            raise DynamicsError(f"mass drift {drift:.2e} at t={(i + 1) * cfg.dt:.4g}")
    return Trajectory(case, points, {
        "p": p, "mass0": mass0, "mass_drift": abs(quad(grid, u) / mass0 - 1.0),
        "clipped": clipped, "sigma_rate_law": sigma_law,
        "sigma_rate_displayed": sigma_shown, "scheme": cfg.scheme,
        "dt": cfg.dt, "final": GridFunction(grid, u, True),
    })


def sigma_law_residual(traj: Trajectory, displayed: bool = False) -> float:
    """Worst relative mismatch between the observed d sigma/dt (central differences) and the law.

    Only interior records where the predicted rate is not negligible count.
    """
    t = traj.column("t")
    s = traj.column("sigma")
    law = np.asarray(traj.meta["sigma_rate_displayed" if displayed else "sigma_rate_law"])
    if t.size < 3:
        return float("nan")
    obs = (s[2:] - s[:-2]) / (t[2:] - t[:-2])
    pred = law[1:-1]
    keep = (np.abs(pred) > 1e-3 * np.max(np.abs(pred))) & (traj.column("value")[1:-1] > VALUE_FLOOR)
    if not np.any(keep):
        return float("nan")
    return float(np.max(np.abs(obs[keep] - pred[keep]) / np.abs(pred[keep])))


def production_residual(traj: Trajectory) -> float:
    """Worst relative mismatch between dF/dt (central differences) and -I at interior records."""
    t = traj.column("t")
    F = traj.column("value")
    fis = traj.column("fisher")
    if t.size < 3:
        return float("nan")
    obs = (F[2:] - F[:-2]) / (t[2:] - t[:-2])
    ref = fis[1:-1]
    keep = (ref > 1e-3 * ref.max()) & (F[1:-1] > VALUE_FLOOR)
    if not np.any(keep):
        return float("nan")
    return float(np.max(np.abs(obs[keep] + ref[keep]) / ref[keep]))


# --- reporting ----------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayReport:
    kind: str
    t: np.ndarray
    margin_improved: np.ndarray
    margin_plain: np.ndarray
    value_monotone: bool
    sigma_monotone: Optional[bool]
    bounds_ordered: bool
    initial_rate: Optional[float]
    asymptotic_rate: Optional[float]
    slopes_defined: bool

    @property
    def min_margin_improved(self) -> float:
        return float(self.margin_improved.min())

    @property
    def min_margin_plain(self) -> float:
        return float(self.margin_plain.min())

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "min_margin_improved": self.min_margin_improved,
            "min_margin_plain": self.min_margin_plain,
            "value_monotone": self.value_monotone,
            "sigma_monotone": self.sigma_monotone,
            "bounds_ordered": self.bounds_ordered,
            "initial_rate": self.initial_rate,
            "asymptotic_rate": self.asymptotic_rate,
            "slopes_defined": self.slopes_defined,
        }


def _log_slope(t: np.ndarray, v: np.ndarray) -> Optional[float]:
    ok = v > VALUE_FLOOR
    if ok.sum() < 2:
        return None
    tt, lv = t[ok], np.log(v[ok])
    if tt[-1] == tt[0]:
        return None
    return float((lv[-1] - lv[0]) / (tt[-1] - tt[0]))


def decay_report(traj: Trajectory, tol: float = 1e-12) -> DecayReport:
    """Margins against both comparators, monotonicity flags and observed decay exponents.

    The initial rate is the log-slope from t = 0 until the value first drops
    by a factor 10 (or to the end); the asymptotic rate is the log-slope over
    the last factor 10 recorded.
    """
    if len(traj) == 0:
        raise DynamicsError("empty trajectory")
    t = traj.column("t")
    v = traj.column("value")
    imp = traj.column("improved_bound")
    pl = traj.column("plain_bound")
    scale = max(1.0, float(np.abs(v).max()))
    mono = bool(np.all(np.diff(v) <= tol * scale))
    sig = traj.column("sigma")
    sigma_mono = None if np.all(np.isnan(sig)) else bool(np.all(np.diff(sig) <= tol * max(1.0, np.nanmax(sig))))
    ordered = bool(np.all(imp <= pl + tol * scale))
    init = rate = None
    if v[0] > VALUE_FLOOR and t.size >= 2:
        drop = np.nonzero(v <= v[0] / 10.0)[0]
        j = int(drop[0]) if drop.size else t.size - 1
        init = _log_slope(t[: j + 1], v[: j + 1])
        last = v[-1]
        k = np.nonzero(v >= 10.0 * last)[0]
        k0 = int(k[-1]) if k.size else 0
        rate = _log_slope(t[k0:], v[k0:])
    return DecayReport(
        traj.kind, t, imp - v, pl - v, mono, sigma_mono, ordered,
        init, rate, init is not None and rate is not None,
    )
