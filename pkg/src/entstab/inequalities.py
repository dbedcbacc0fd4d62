"""Improvement functions, Gagliardo-Nirenberg constants, and inequality verdicts.

Every check returns a :class:`Verdict` whose ``lhs`` is the side claimed to
be larger; ``margin = lhs - rhs`` is nonnegative when the inequality holds.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import functionals as fn
from .numerics import Grid, GridFunction, build_grid, gaussian_density, gradient, quad, xlogx
from .profiles import (
    ProfileError,
    ProfileSpec,
    barenblatt_corpus,
    barenblatt_source,
    check_exponent,
    density_corpus,
    gaussian_corpus,
    grid_for,
    normalize,
    sample,
    PM_CK_EXPONENTS,
)

RESIDUAL_BUDGET = 1e-6
REL_TOL = 1e-5
FD_GAIN_GUARD = 0.999


class InequalityError(ValueError):
    pass


# --- verdicts -------------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    inequality_id: str
    lhs: float
    rhs: float
    tolerance: float
    metadata: dict = field(default_factory=dict)
    valid: bool = True

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tolerance

    @property
    def residual(self) -> float:
        return float(self.metadata.get("residual", 0.0))

    def to_dict(self) -> dict:
        return {
            "id": self.inequality_id,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "valid": self.valid,
            "metadata": dict(self.metadata),
        }


def verdict(ident: str, lhs: float, rhs: float, tolerance: Optional[float] = None, **meta) -> Verdict:
    lhs, rhs = float(lhs), float(rhs)
    if tolerance is None:
        tolerance = REL_TOL * max(1.0, abs(lhs))
    resid = float(meta.get("residual", 0.0))
    return Verdict(ident, lhs, rhs, float(tolerance), meta, resid <= RESIDUAL_BUDGET)


# --- log-Sobolev gain --------------------------------------------------------------

def phi(t, d: int):
    """(d/4)[exp(2t/d) - 1 - 2t/d]."""
    t = np.asarray(t, dtype=float)
    z = 2.0 * t / d
    # expm1(z) - z cancels for small z; the series is exact to roundoff there
    series = 0.5 * z * z * (1 + z / 3 * (1 + z / 4 * (1 + z / 5 * (1 + z / 6))))
    return 0.25 * d * np.where(np.abs(z) < 1e-2, series, np.expm1(z) - z)


def phi_pp0(d: int) -> float:
    return 1.0 / d


# --- Beckner gains -----------------------------------------------------------------

def _check_beckner_p(p: float) -> None:
    if not 1.0 <= p < 2.0:
        raise InequalityError(f"p={p} outside [1, 2)")


def phi_p(x, p: float, d: int):
    """(d/4)[(1 - x)^{-2p/(d(2-p))} - 1] on [0, 1)."""
    _check_beckner_p(p)
    x = np.asarray(x, dtype=float)
    if np.any(x >= 1.0):
        raise InequalityError("phi_p needs x < 1")
    e = 2.0 * p / (d * (2.0 - p))
    return 0.25 * d * np.expm1(-e * np.log1p(-x))


@lru_cache(maxsize=None)
def x_star(p: float, d: int) -> float:
    """Unique root of phi_p(x) = x/(2-p) in (0, 1)."""
    _check_beckner_p(p)
    g = lambda x: float(phi_p(x, p, d)) - x / (2.0 - p)  # noqa: E731
    lo, hi = 1e-9, 1.0 - 1e-15
    with np.errstate(over="ignore"):  # phi_p overflows to +inf next to 1, which still brackets
        while g(hi) <= 0:  # pragma: no cover - phi_p blows up at 1
            hi = 0.5 * (1.0 + hi)
        return brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def Phi_p(x, p: float, d: int):
    """Best of the two Beckner bounds: max(phi_p(x), x/(2-p)).

    phi_p lies below the line on (0, x_star) and above it on (x_star, 1), so
    this equals x/(2-p) up to x_star and phi_p afterwards.
    """
    x = np.asarray(x, dtype=float)
    return np.maximum(phi_p(x, p, d), x / (2.0 - p))


def Psi_p(t, p: float, d: int):
    """(2p/(2-p)) Phi_p((2-p) t / p)."""
    t = np.asarray(t, dtype=float)
    return 2.0 * p / (2.0 - p) * Phi_p((2.0 - p) * t / p, p, d)


def beckner_rate(y, p: float, d: int, mass: float = 1.0):
    """Lower bound on -dy/dt for y = int (f^q - M^q)/(q - 1) d mu along the OU flow, q = 2/p.

    With N = int f^q d mu = M^q (1 + X), X = (q - 1) y / M^q, the improved
    Beckner inequality applied to u = f^{q/2} gives
    -dy/dt >= (4/q) N Phi_p(X/(1+X)) = 2 p M^q (1 + X) Phi_p(X/(1+X)),
    whose linear branch is exactly 2y.
    """
    q = 2.0 / p
    y = np.asarray(y, dtype=float)
    mq = mass ** q
    X = np.maximum((q - 1.0) * y / mq, 0.0)
    return 2.0 * p * mq * (1.0 + X) * Phi_p(X / (1.0 + X), p, d)


def spectral_lambda_bound(p: float) -> float:
    """lambda_3 / (1 - (p-1)^{lambda_3/lambda_1}) with lambda_i = i."""
    if not 1.0 < p < 2.0:
        raise InequalityError(f"p={p} outside (1, 2)")
    return 3.0 / (1.0 - (p - 1.0) ** 3)


def ou_improved_bound(e0: float, t, d: int):
    """-(d/2) log[1 - (1 - exp(-2 E0/d)) exp(-2t)]."""
    t = np.asarray(t, dtype=float)
    a = 2.0 * e0 / d
    y = np.expm1(-a) * np.exp(-2.0 * t)
    # log1p loses digits once its argument nears -1; there the argument
    # 1 + y = (1 - e^{-2t}) + e^{-a-2t} is summed from two positive terms
    far = np.log(np.maximum(-np.expm1(-2.0 * t) + np.exp(-a - 2.0 * t), 1e-300))
    return -0.5 * d * np.where(y > -0.5, np.log1p(y), far)


# --- Gagliardo-Nirenberg machinery ---------------------------------------------------

@dataclass(frozen=True)
class GNSetting:
    case: str
    d: int
    q: float
    p: float
    a: float
    b: float
    zeta_or_eta: float
    kappa: float
    beta: float
    alpha: float
    theta_gn: float
    theta_gn_display: float
    grad_coef: float  # coefficient of int |grad w|^2 in J[w]
    C_gn: float
    C: float  # C evaluated at the optimizer
    B_star: float
    K: float
    w_star_norms: dict = field(default_factory=dict, compare=False)

    @property
    def gain_pp0(self) -> float:
        return gn_gain_pp(0.0, self)

    @property
    def kappa_quadratic(self) -> float:
        """kappa = (1/2) beta^2 (1-p)^2 phi''(0) of the quadratic corollary."""
        return 0.5 * self.beta ** 2 * (1.0 - self.p) ** 2 * self.gain_pp0


def q_of_p(p: float) -> float:
    return 1.0 / (2.0 * p - 1.0)


def p_of_q(q: float) -> float:
    return 0.5 * (1.0 + 1.0 / q)


def gn_case(q: float, d: int) -> str:
    if q > 1.0:
        if d >= 3 and q >= d / (d - 2):
            raise InequalityError(f"q={q} not below d/(d-2) for d={d}")
        return "fd"
    if 0.0 < q < 1.0:
        return "pm"
    raise InequalityError(f"q={q} outside (0, 1) U (1, d/(d-2))")


def gn_exponents(q: float, d: int) -> dict:
    """Closed-form exponents and constants that do not need quadrature."""
    case = gn_case(q, d)
    a = d / q - (d - 2)
    if case == "fd":
        b = d * (q - 1) / (2 * q)
        z = b / (a + b)
        kappa = (a + b) / (a ** (1 - z) * b ** z)
        beta = 2 * q / (q - 1) - d
        alpha = q + 1 - z * (q - 1)
        theta = 2 * z / alpha
        theta_disp = d / q * (q - 1) / (d + 2 - q * (d - 2))
        grad_coef = 0.25 * (q * q - 1)
    else:
        b = d * (1 - q) / (2 * q)
        z = b / (a - b)
        kappa = (a - b) / (b ** (-z) * a ** (1 + z))
        beta = 2 * q / (1 - q) + d
        alpha = q + 1 + z * (q - 1)
        theta = 2 * z / ((q + 1) * (1 + z))
        theta_disp = d / (1 + q) * (1 - q) / (d - q * (d - 2))
        grad_coef = 0.25 * (1 - q * q)
    return dict(case=case, a=a, b=b, zeta_or_eta=z, kappa=kappa, beta=beta, alpha=alpha,
                theta_gn=theta, theta_gn_display=theta_disp, grad_coef=grad_coef)


def w_star_source(q: float, d: int):
    """fd: (1+|x|^2)^{1/(1-q)}; pm: (1-|x|^2)_+^{1/(1-q)}."""
    e = 1.0 / (1.0 - q)
    if q > 1:
        return lambda x: (1.0 + np.asarray(x) ** 2) ** e
    return lambda x: np.maximum(1.0 - np.asarray(x) ** 2, 0.0) ** e


def gn_grid(q: float, d: int, n: int = 2048) -> Grid:
    p = p_of_q(q)
    fam = "barenblatt_fd" if q > 1 else "barenblatt_pm"
    return grid_for(ProfileSpec(fam, p=p), d, n)


def gn_integrals(w: GridFunction, q: float) -> dict:
    """int |grad w|^2, int |w|^{q+1}, int |w|^{2q}, int |w|^{2q} |x|^2."""
    g = w.grid
    aw = np.abs(w.values)
    support = aw > fn.SUPPORT_FLOOR
    dw = gradient(g, w.values, support=None if np.all(support) else support)
    return {
        "grad2": quad(g, dw ** 2),
        "lq1": quad(g, aw ** (q + 1)),
        "l2q": quad(g, np.where(support, aw, 0.0) ** (2 * q)),
        "m2q": quad(g, g.r2 * np.where(support, aw, 0.0) ** (2 * q)),
    }


def gn_quotient(ints: dict, q: float, theta: float, case: str) -> float:
    grad = np.sqrt(ints["grad2"])
    n_q1 = ints["lq1"] ** (1.0 / (q + 1))
    n_2q = ints["l2q"] ** (1.0 / (2 * q))
    if case == "fd":
        return grad ** theta * n_q1 ** (1 - theta) / n_2q
    return grad ** theta * n_2q ** (1 - theta) / n_q1


def _c_of(ints: dict, ex: dict, C_gn: float, q: float) -> float:
    z = ex["zeta_or_eta"]
    n_2q = ints["l2q"] ** (1.0 / (2 * q))
    if ex["case"] == "fd":
        return ex["grad_coef"] ** z * ex["beta"] ** (1 - z) * (C_gn * n_2q) ** ex["alpha"]
    return ex["grad_coef"] ** (-z) * ex["beta"] ** (1 + z) * C_gn ** (-(q + 1) * (1 + z)) * n_2q ** ex["alpha"]


def _b_star_of(C: float, ex: dict) -> float:
    z = ex["zeta_or_eta"]
    if ex["case"] == "fd":
        return C * ((1 - z) / z) ** z
    return C * (z / (1 + z)) ** z


@lru_cache(maxsize=64)
def gn_setting(q: float, d: int, n: int = 2048) -> GNSetting:
    """All constants of one GN case; C_gn is the GN quotient at w_star on the grid."""
    ex = gn_exponents(q, d)
    g = gn_grid(q, d, n)
    src = w_star_source(q, d)
    w = GridFunction(g, src(g.nodes), True, src)
    ints = gn_integrals(w, q)
    C_gn = gn_quotient(ints, q, ex["theta_gn"], ex["case"])
    C = _c_of(ints, ex, C_gn, q)
    z = ex["zeta_or_eta"]
    if ex["case"] == "fd":
        K = ex["grad_coef"] ** z * ex["beta"] ** (1 - z) * ex["kappa"]
    else:
        K = ex["grad_coef"] ** (-z) * ex["beta"] ** (1 + z) * ex["kappa"]
    return GNSetting(
        d=d, q=q, p=p_of_q(q), C_gn=C_gn, C=C, B_star=_b_star_of(C, ex), K=K,
        w_star_norms=dict(ints), **ex,
    )


def gn_setting_for_p(p: float, d: int, n: int = 2048) -> GNSetting:
    return gn_setting(q_of_p(p), d, n)


def gn_gain(s, setting: GNSetting, C: Optional[float] = None, B_star: Optional[float] = None):
    """fd: C^{1/z}[(B*-s)^{1-1/z} - B*^{1-1/z}] - s; pm: C^{-1/e}[(B*+s)^{1+1/e} - B*^{1+1/e}] - s.

    The closed form stays valid for negative s (B > B* in the fd case,
    B < B* in the pm case); only the fd pole at s = B* is guarded.
    """
    C = setting.C if C is None else C
    bs = setting.B_star if B_star is None else B_star
    z = setting.zeta_or_eta
    s = np.asarray(s, dtype=float)
    if setting.case == "fd":
        if np.any(s >= FD_GAIN_GUARD * bs):
            raise InequalityError("fd gain argument too close to B_star")
        return C ** (1 / z) * ((bs - s) ** (1 - 1 / z) - bs ** (1 - 1 / z)) - s
    if np.any(s <= -bs):
        raise InequalityError("pm gain argument below -B_star")
    return C ** (-1 / z) * ((bs + s) ** (1 + 1 / z) - bs ** (1 + 1 / z)) - s


def gn_gain_pp(s, setting: GNSetting):
    """Second derivative of the gain."""
    C, bs, z = setting.C, setting.B_star, setting.zeta_or_eta
    s = np.asarray(s, dtype=float)
    if setting.case == "fd":
        return C ** (1 / z) * (1 - 1 / z) * (-1 / z) * (bs - s) ** (-1 - 1 / z)
    return C ** (-1 / z) * (1 + 1 / z) * (1 / z) * (bs + s) ** (1 / z - 1)


def scale_function(lam, A: float, B: float, C: float, setting: GNSetting):
    """fd: lam^a A + lam^{-b} B - kappa C; pm: lam^a A - lam^b B + kappa C."""
    lam = np.asarray(lam, dtype=float)
    a, b, k = setting.a, setting.b, setting.kappa
    if setting.case == "fd":
        return lam ** a * A + lam ** (-b) * B - k * C
    return lam ** a * A - lam ** b * B + k * C


def scale_optimize(A: float, B: float, setting: GNSetting, C: Optional[float] = None) -> tuple[float, float]:
    """Minimizer lam* = (bB/(aA))^{1/(a +- b)} and the minimum value."""
    if A <= 0 or B <= 0:
        raise InequalityError("A and B must be positive")
    C = setting.C if C is None else C
    a, b = setting.a, setting.b
    expo = 1.0 / (a + b) if setting.case == "fd" else 1.0 / (a - b)
    lam = (b * B / (a * A)) ** expo
    return float(lam), float(scale_function(lam, A, B, C, setting))


def scale_minimum_closed_form(A: float, B: float, C: float, setting: GNSetting) -> float:
    """fd: kappa (A^z B^{1-z} - C); pm: kappa (C - A^{-e} B^{1+e})."""
    z, k = setting.zeta_or_eta, setting.kappa
    if setting.case == "fd":
        return k * (A ** z * B ** (1 - z) - C)
    return k * (C - A ** (-z) * B ** (1 + z))


def gn_deficit(w: GridFunction, setting: GNSetting) -> float:
    """J[w] with the grid-quadrature value of C_gn."""
    ints = gn_integrals(w, setting.q)
    return _gn_deficit_from(ints, setting)


def _gn_deficit_from(ints: dict, s: GNSetting) -> float:
    A = s.grad_coef * ints["grad2"]
    B = s.beta * ints["lq1"]
    tail = ints["l2q"] ** (s.alpha / (2 * s.q))
    if s.case == "fd":
        return A + B - s.K * s.C_gn ** s.alpha * tail
    return A - B + s.K * s.C_gn ** (-(s.q + 1) * (1 + s.zeta_or_eta)) * tail


# --- Gaussian log-Sobolev checks ---------------------------------------------------

LOGSOB_VARIANTS = ("gaussian", "euclidean", "scale_invariant", "improved", "exponential")


def prepare_u(u: GridFunction, constrained: bool) -> tuple[GridFunction, float]:
    """Unit L2(d mu) norm, plus the second-moment constraint when asked."""
    if constrained:
        u = normalize(u, "moment_constraint", measure="gaussian", tol=1.0)
    u = normalize(u, "unit_l2_mu")
    resid = abs(fn.l2_mu_sq(u) - 1.0)
    if constrained:
        from .profiles import constraint_residual
        resid = max(resid, constraint_residual(u, measure="gaussian"))
    return u, resid


def check_logsob(u: GridFunction, variant: str = "improved", prepare: bool = True) -> Verdict:
    """Gaussian log-Sobolev inequality and its relatives for u (Gaussian side)."""
    if variant not in LOGSOB_VARIANTS:
        raise InequalityError(f"unknown variant {variant!r}")
    constrained = variant in ("improved", "exponential")
    if prepare:
        u, resid = prepare_u(u, constrained)
    else:
        resid = abs(fn.l2_mu_sq(u) - 1.0)
    g = u.grid
    ent = fn.gaussian_entropy(u)
    fis = fn.gaussian_fisher(u) / fn.l2_mu_sq(u)
    meta = {"entropy": ent, "residual": resid}
    d = g.d
    if variant == "gaussian":
        return verdict("logsob.gaussian", fis, 0.5 * ent, **meta)
    if variant == "improved":
        plain = 0.5 * ent
        return verdict("logsob.improved", fis, plain + float(phi(ent, d)), plain_rhs=plain, **meta)
    if variant == "exponential":
        return verdict("logsob.exponential", fis, 0.25 * d * np.expm1(2.0 * ent / d),
                       plain_rhs=0.5 * ent, **meta)
    # Euclidean forms act on v = u sqrt(mu), a unit vector of L2(dx)
    mu = gaussian_density(g)
    v = u.values * np.sqrt(mu)
    nv = quad(g, v ** 2)
    v = v / np.sqrt(nv)
    grad2 = quad(g, fn.dirichlet_density(g, v))
    ent_v = quad(g, xlogx(v ** 2))
    meta["residual"] = abs(nv - 1.0) if not prepare else resid
    if variant == "euclidean":
        return verdict("logsob.euclidean", grad2, 0.5 * ent_v + 0.25 * d * np.log(2 * np.pi * np.e ** 2), **meta)
    lhs = 0.5 * d * np.log(2.0 / (np.pi * d * np.e) * grad2)
    return verdict("logsob.scale_invariant", lhs, ent_v, **meta)


# --- Euclidean stability chain -------------------------------------------------------

def check_stability(f: GridFunction) -> list[Verdict]:
    """Lemma-type stability chain on a Lebesgue density, made homogeneous in the mass.

    With g = f/M: deficit(f) = M deficit(g) >= 2 M phi(e[g|mu_g])
    >= M ||g - mu_g||_1^4 / 16, i.e. ||f - mu_f||_1^4 / (16 M^3).
    For M = 1 these are exactly the unnormalized statements.
    """
    m = fn.moments(f)
    M = m.mass
    g = f.scaled(1.0 / M)
    gp = fn.best_gaussian(g)
    e = fn.relative_entropy(g, gp)
    l1 = fn.l1_distance(g, gp)
    d = f.grid.d
    dfc = M * fn.euclidean_entropy_deficit(g)
    mid = 2.0 * M * float(phi(e, d))
    low = M * l1 ** 4 / 16.0
    meta = {"relative_entropy": M * e, "l1_distance": M * l1, "mass": M, "residual": 0.0}
    return [
        verdict("stability.lemma", dfc, mid, **meta),
        verdict("stability.chain", mid, low, **meta),
        verdict("stability.pinsker", M * e, (M * l1) ** 2 / (4.0 * M), **meta),
    ]


# --- Beckner inequalities ---------------------------------------------------------------

BECKNER_VARIANTS = ("plain", "improved", "combined", "lemma", "distance", "kconvex")


def _k_func(u: GridFunction, s: float) -> float:
    mu = gaussian_density(u.grid)
    return s * np.log(quad(u.grid, np.abs(u.values) ** (2.0 / s) * mu))


def check_beckner(u: GridFunction, p: float, variant: str = "plain", prepare: bool = True) -> Verdict:
    _check_beckner_p(p)
    if variant not in BECKNER_VARIANTS:
        raise InequalityError(f"unknown variant {variant!r}")
    constrained = variant in ("improved", "combined")
    if prepare:
        u, resid = prepare_u(u, constrained)
    else:
        resid = 0.0
    g = u.grid
    d = g.d
    n2 = fn.l2_mu_sq(u)
    np2 = fn.lp_norm_mu(u, p) ** 2
    fis = fn.gaussian_fisher(u)
    x = (n2 - np2) / n2
    meta = {"x": x, "residual": resid, "p": p}
    if variant == "plain":
        return verdict("beckner.plain", (2 - p) * fis, n2 - np2, **meta)
    if variant == "improved":
        return verdict("beckner.improved", fis, n2 * float(phi_p(x, p, d)), **meta)
    if variant == "combined":
        return verdict("beckner.combined", fis, n2 * float(Phi_p(x, p, d)), x_star=x_star(p, d), **meta)
    if variant == "lemma":
        # evaluated at unit L2 norm
        uu = u.scaled(1.0 / np.sqrt(n2))
        ent = quad(g, xlogx(uu.values ** 2) * gaussian_density(g))
        lhs = (2 - p) / p * ent
        return verdict("beckner.lemma", lhs, 1.0 - fn.lp_norm_mu(uu, p) ** 2,
                       ratio_bound=np.exp((2 - p) / p * ent), ratio=n2 / np2, **meta)
    if variant == "distance":
        mu = gaussian_density(g)
        ubar = quad(g, np.abs(u.values) * mu)
        dist = quad(g, (np.abs(u.values) - ubar) ** 2 * mu)
        # |u|_p >= |u|_1 for a probability measure, so the p-gap is the smaller side
        return verdict("beckner.distance", dist, n2 - np2, reversed_holds=bool(n2 - np2 >= dist), **meta)
    # kconvex: second differences of k(s) = s log int u^{2/s} d mu
    hs = 1e-3
    worst = np.inf
    for s in (1.1, 1.5, 2.0):
        k2 = (_k_func(u, s + hs) - 2 * _k_func(u, s) + _k_func(u, s - hs)) / hs ** 2
        worst = min(worst, k2)
    return verdict("beckner.kconvex", worst, 0.0, tolerance=1e-6, **meta)


# --- Gagliardo-Nirenberg checks ----------------------------------------------------------

def match_gn_constraints(w: GridFunction, setting: GNSetting) -> tuple[GridFunction, float]:
    """a w(lam x) with int |w|^{2q} and (fd only) int |w|^{2q}|x|^2 matched to w_star."""
    q = setting.q
    target = setting.w_star_norms
    out = w
    for _ in range(4):
        ints = gn_integrals(out, q)
        if setting.case == "fd":
            lam = np.sqrt((ints["m2q"] / ints["l2q"]) / (target["m2q"] / target["l2q"]))
        else:
            lam = 1.0
        amp = (target["l2q"] / ints["l2q"] * lam ** setting.d) ** (1.0 / (2 * q))
        src0 = out.source
        if src0 is None:
            raise InequalityError("constraint matching needs a closed-form source")
        src = (lambda s0, a_, l_: (lambda x: a_ * s0(l_ * np.asarray(x))))(src0, amp, lam)
        out = GridFunction(out.grid, src(out.grid.nodes), out.nonnegative, src)
    ints = gn_integrals(out, q)
    resid = abs(ints["l2q"] / target["l2q"] - 1.0)
    if setting.case == "fd":
        resid = max(resid, abs(ints["m2q"] / target["m2q"] - 1.0))
    return out, resid


def check_gn(w: GridFunction, setting: GNSetting, prepare: bool = True) -> list[Verdict]:
    """Improved GN deficit bound and the raw GN inequality for w."""
    if w.grid.d != setting.d:
        raise InequalityError("setting and profile dimensions differ")
    if prepare:
        w, resid = match_gn_constraints(w, setting)
    else:
        resid = 0.0
    q = setting.q
    ints = gn_integrals(w, q)
    J = _gn_deficit_from(ints, setting)
    ref = setting.w_star_norms["lq1"]
    if setting.case == "fd":
        s = setting.beta * (ref - ints["lq1"])
    else:
        s = setting.beta * (ints["lq1"] - ref)
    gain = float(gn_gain(s, setting))
    quot = gn_quotient(ints, q, setting.theta_gn, setting.case)
    meta = {"gain_argument": s, "residual": resid, "q": q}
    return [
        verdict(f"gn.{setting.case}", J, gain, **meta),
        verdict("gn.raw", quot, setting.C_gn * (1 - REL_TOL), tolerance=0.0, quotient=quot, **meta),
    ]


def w_from_v(v: GridFunction, p: float) -> GridFunction:
    """w = v^{p - 1/2}."""
    e = p - 0.5
    return v.map(lambda a: np.maximum(a, 0.0) ** e, nonnegative=True)


# --- flow entropies ------------------------------------------------------------------------

FLOW_VARIANTS = ("constrained", "unscaled", "quadratic")


def check_flow_entropy(u: GridFunction, p: float, case: str, variant: str = "unscaled",
                       setting: Optional[GNSetting] = None) -> Verdict:
    """Improved entropy / entropy-production inequality for the fd or pm flow."""
    if variant not in FLOW_VARIANTS:
        raise InequalityError(f"unknown variant {variant!r}")
    g = u.grid
    try:
        check_exponent(p, g.d, case)
    except ProfileError as exc:
        raise InequalityError(str(exc)) from None
    setting = setting or gn_setting_for_p(p, g.d)
    ctx = fn.sigma_best(u, p, case)
    c = abs(1.0 - p) * setting.beta
    if variant == "unscaled":
        F = fn.relative_free_energy(u, ctx)
        J = fn.relative_deficit(u, ctx)
        h = ctx.h
        rhs = h * float(gn_gain(c * F / h, setting))
        return verdict(f"flow.{case}.unscaled", J, rhs, F=F, h=h, sigma=ctx.sigma, residual=0.0)
    # constrained variants act on v, the mass and temperature matched rescaling of u
    v = fn.to_reference_frame(u, ctx)
    consts = fn.barenblatt_constants(p, g, case)
    m = fn.moments(v)
    resid = max(abs(m.mass / consts.mass - 1.0), abs(m.temperature / consts.temperature - 1.0))
    F = fn.free_energy(v, p, case)
    J = fn.deficit(v, p, case)
    meta = {"F": F, "residual": resid}
    if variant == "constrained":
        return verdict(f"flow.{case}.constrained", J, float(gn_gain(c * F, setting)),
                       sharp_rhs=4.0 * float(gn_gain(c * F, setting)), **meta)
    return verdict(f"flow.{case}.quadratic", J, setting.kappa_quadratic * F ** 2, **meta)


# --- Csiszar-Kullback type bounds ------------------------------------------------------------

def c_p(p: float) -> float:
    return min(1.0, p - 1.0)


def chi(t, p: float):
    """t^p - 1 - p(t-1) - c_p |t-1|^p."""
    t = np.asarray(t, dtype=float)
    return t ** p - 1.0 - p * (t - 1.0) - c_p(p) * np.abs(t - 1.0) ** p


def ck_fd_constant_cm(ctx: fn.RescaleContext) -> float:
    """C_M with B_{M,1}(x) = (C_M + |x|^2)^{1/(p-1)}, i.e. lam^{(1+alpha d)(p-1)}."""
    return ctx.lam ** ((1.0 + ctx.alpha * ctx.d) * (ctx.p - 1.0))


def check_ck(u: GridFunction, p: float, case: str, constant: str = "displayed") -> Verdict:
    """fd: the weighted L1 lower bound on F; pm: F >= const ||u - B||_p^p.

    For pm, ``constant="displayed"`` uses p/(p-1) min{1, p-1};
    ``constant="proof"`` uses min{1, p-1}/(p-1), the value the argument yields.
    """
    g = u.grid
    try:
        check_exponent(p, g.d, case)
    except ProfileError as exc:
        raise InequalityError(str(exc)) from None
    ctx = fn.sigma_best(u, p, case)
    F = fn.relative_free_energy(u, ctx)
    b = ctx.barenblatt_values(g)
    diff = np.abs(u.values - b)
    d = g.d
    if case == "fd":
        if not d / (d + 2.0) < p < 1.0:
            raise InequalityError(f"p={p} outside (d/(d+2), 1)")
        b1 = barenblatt_source(p, d, ctx.lam * ctx_mass_closed(ctx), 1.0)(g.nodes)
        cm = ck_fd_constant_cm(ctx)
        inner = cm * quad(g, diff) + quad(g, g.r2 * diff) / ctx.sigma
        rhs = p * ctx.sigma ** (0.5 * d * (1 - p)) / (8.0 * quad(g, b1 ** p)) * inner ** 2
        return verdict("ck.fd", F, rhs, C_M=cm, sigma=ctx.sigma, residual=0.0)
    if constant not in ("displayed", "proof"):
        raise InequalityError(f"unknown constant {constant!r}")
    pref = c_p(p) * (p / (p - 1.0) if constant == "displayed" else 1.0 / (p - 1.0))
    ts = np.linspace(0.0, 5.0, 5001)
    chi_min = float(np.min(chi(ts, p)))
    return verdict(f"ck.pm.{constant}", F, pref * quad(g, diff ** p), chi_min=chi_min,
                   sigma=ctx.sigma, residual=0.0)


def ctx_mass_closed(ctx: fn.RescaleContext) -> float:
    from .profiles import barenblatt_mass
    return barenblatt_mass(ctx.p, ctx.d)


# --- corpus suites ---------------------------------------------------------------------

SUITES = ("logsob", "stability", "beckner", "gn", "flow", "ck")
BECKNER_P = (1.0, 1.25, 1.5, 1.75)


@dataclass(frozen=True)
class SuiteRecord:
    suite: str
    profile: str
    d: int
    param: str
    verdict: Verdict


def _gaussian_u(spec: ProfileSpec, d: int, n: int) -> GridFunction:
    g = grid_for(spec, d, n)
    return fn.density_to_u(sample(spec, g))


def default_corpus(suite: str, d: int, exponents=None) -> list[tuple[str, ProfileSpec]]:
    """The standard profile corpus of a suite (ordered)."""
    if suite not in SUITES:
        raise InequalityError(f"unknown suite {suite!r}")
    if suite in ("logsob", "beckner"):
        return gaussian_corpus(d)
    if suite == "stability":
        return density_corpus(d)
    if suite in ("gn", "flow"):
        out = []
        for case in ("fd", "pm"):
            out += barenblatt_corpus(case, d, exponents=_filter(exponents, case, d))
        return out
    pm_ps = tuple(p for p in (exponents or PM_CK_EXPONENTS) if p > 1)
    return barenblatt_corpus("fd", d, exponents=_filter(exponents, "fd", d)) + barenblatt_corpus("pm", d, exponents=pm_ps)


def profile_records(suite: str, label: str, spec: ProfileSpec, d: int, n: int = 2048,
                    exponents=None) -> list[SuiteRecord]:
    """All verdicts of one suite for one profile."""
    out: list[SuiteRecord] = []
    if suite == "logsob":
        u = _gaussian_u(spec, d, n)
        for var in LOGSOB_VARIANTS:
            out.append(SuiteRecord(suite, label, d, var, check_logsob(u, var)))
    elif suite == "stability":
        f = sample(spec, grid_for(spec, d, n))
        for v in check_stability(f):
            out.append(SuiteRecord(suite, label, d, "", v))
    elif suite == "beckner":
        u = _gaussian_u(spec, d, n)
        for p in exponents or BECKNER_P:
            for var in BECKNER_VARIANTS:
                out.append(SuiteRecord(suite, label, d, f"p={p:g}:{var}", check_beckner(u, p, var)))
    elif suite in ("gn", "flow", "ck"):
        p = spec.p
        if p is None:
            raise InequalityError(f"suite {suite!r} needs a profile with an exponent p")
        case = "fd" if p < 1 else "pm"
        v = sample(spec, grid_for(spec, d, n))
        if suite == "ck":
            consts = ("displayed",) if case == "fd" else ("displayed", "proof")
            for const in consts:
                param = f"p={p:g}" if case == "fd" else f"p={p:g}:{const}"
                out.append(SuiteRecord(suite, label, d, param, check_ck(v, p, case, const)))
        else:
            setting = gn_setting_for_p(p, d)
            if suite == "gn":
                for vd in check_gn(w_from_v(v, p), setting):
                    out.append(SuiteRecord(suite, label, d, f"q={setting.q:.6g}", vd))
            else:
                for var in FLOW_VARIANTS:
                    vd = check_flow_entropy(v, p, case, var, setting)
                    out.append(SuiteRecord(suite, label, d, f"p={p:g}:{var}", vd))
    else:
        raise InequalityError(f"unknown suite {suite!r}")
    return out


def run_suite(suite: str, d: int, n: int = 2048, exponents=None, corpus=None) -> list[SuiteRecord]:
    """All verdicts of one suite in dimension d, on the standard corpus unless ``corpus`` is given."""
    if suite not in SUITES:
        raise InequalityError(f"unknown suite {suite!r}")
    if corpus is None:
        corpus = default_corpus(suite, d, exponents)
    out: list[SuiteRecord] = []
    for label, spec in corpus:
        out += profile_records(suite, label, spec, d, n, exponents)
    return out


def _filter(exponents, case: str, d: int):
    if exponents is None:
        return None
    sel = tuple(p for p in exponents if (p < 1) == (case == "fd"))
    if not sel:
        return ()
    return sel
