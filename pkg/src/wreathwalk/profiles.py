"""Return-probability profiles and the volume / Folner-couple machinery.

Profiles are reported as (exponent, value) pairs with value = exp(-exponent):
at interesting n the value underflows, and the statements being checked are
about exponents up to constants anyway.

The gamma function attached to a volume function V solves

    integral from V(1) to gamma(t) of [V^-1(s)]^2 ds/s  =  t,

computed here in log space (s = e^y) so that volume functions of wreath type
exp(C V log V) stay representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize
from scipy.sparse import csc_matrix, identity
from scipy.sparse.linalg import splu

from .groups import AbelianGroup, Element, MarkedGroup
from .measures import MeasureSpec


class ProfileError(ValueError):
    pass


def iterated_log(i: int, n: float) -> float:
    """log_[1] n = log(1+n), log_[i] n = log(1 + log_[i-1] n); log_[0] n = n."""
    if i < 0:
        raise ProfileError("i must be >= 0")
    x = float(n)
    for _ in range(i):
        x = math.log1p(x)
    return x


def mobius(k: int) -> int:
    if k < 1:
        raise ProfileError("mobius needs k >= 1")
    result = 1
    d = 2
    while d * d <= k:
        if k % d == 0:
            k //= d
            if k % d == 0:
                return 0
            result = -result
        d += 1
    if k > 1:
        result = -result
    return result


def witt_degree(r: int, c: int) -> int:
    """D(r,c) = sum_{m=1..c} sum_{k|m} mu(k) r^{m/k}: the polynomial volume
    growth degree of the free nilpotent group of class c on r generators."""
    if r < 2 or c < 1:
        raise ProfileError("need r >= 2 and c >= 1")
    total = 0
    for m in range(1, c + 1):
        for k in range(1, m + 1):
            if m % k == 0:
                total += mobius(k) * r ** (m // k)
    return total


# -- profile families ----------------------------------------------------------

_FAMILIES = (
    "polynomial-D",
    "metabelian-r",
    "free-solvable-d-r",
    "nilpotent-base-D",
    "log2",
    "lamplighter-base-d",
    "zwr-zd-base",
    "alpha-metabelian",
    "scdr",
)


@dataclass(frozen=True)
class ProfileSpec:
    family: str
    params: dict

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ProfileError(f"unknown profile family {self.family!r}")
        p = self.params
        need = {
            "polynomial-D": ("D",),
            "metabelian-r": ("r",),
            "free-solvable-d-r": ("d", "r"),
            "nilpotent-base-D": ("D",),
            "log2": (),
            "lamplighter-base-d": ("d",),
            "zwr-zd-base": ("D",),
            "alpha-metabelian": ("r", "alpha"),
            "scdr": ("d", "r", "c"),
        }[self.family]
        for key in need:
            if key not in p:
                raise ProfileError(f"{self.family} needs parameter {key!r}")
        if self.family in ("metabelian-r", "alpha-metabelian") and p["r"] < 2:
            raise ProfileError("r must be >= 2")
        if self.family == "free-solvable-d-r" and (p["d"] <= 2 or p["r"] < 2):
            raise ProfileError("need d > 2 and r >= 2")
        if self.family == "scdr" and (p["d"] <= 2 or p["r"] < 2 or p["c"] < 1):
            raise ProfileError("need d > 2, r >= 2, c >= 1")
        if self.family in ("polynomial-D", "nilpotent-base-D", "zwr-zd-base") and p["D"] < 1:
            raise ProfileError("need D >= 1")
        if self.family == "lamplighter-base-d" and p["d"] < 1:
            raise ProfileError("need d >= 1")
        if self.family == "alpha-metabelian" and not (0 < p["alpha"] < 2):
            raise ProfileError("alpha must lie in (0,2)")


def combined_alpha(alphas: Sequence[float]) -> float:
    """The single tail exponent governing a walk with per-generator heavy
    tails alpha_1..alpha_r: the harmonic mean 1/alpha = (1/r) sum 1/alpha_i."""
    if not alphas or any(a <= 0 for a in alphas):
        raise ProfileError("alphas must be positive")
    return len(alphas) / sum(1.0 / a for a in alphas)


def phi_profile(spec: ProfileSpec, n: float) -> tuple[float, float]:
    """Evaluate the profile at n >= 3: returns (exponent, exp(-exponent))."""
    if n < 3:
        raise ProfileError("need n >= 3")
    p = spec.params
    ln = math.log(n)
    fam = spec.family
    if fam == "polynomial-D":
        expo = 0.5 * p["D"] * ln
    elif fam == "metabelian-r":
        r = p["r"]
        expo = n ** (r / (r + 2)) * ln ** (2 / (r + 2))
    elif fam == "free-solvable-d-r":
        d, r = p["d"], p["r"]
        expo = n * (iterated_log(d - 1, n) / iterated_log(d - 2, n)) ** (2 / r)
    elif fam == "nilpotent-base-D":
        D = p["D"]
        expo = n ** (D / (D + 2)) * ln ** (2 / (D + 2))
    elif fam == "log2":
        expo = n / ln**2
    elif fam == "lamplighter-base-d":
        expo = n / ln ** (2 / p["d"])
    elif fam == "zwr-zd-base":
        expo = n * (math.log(ln) / ln) ** (2 / p["D"])
    elif fam == "alpha-metabelian":
        r, alpha = p["r"], p["alpha"]
        expo = n ** (r / (r + alpha)) * ln ** (alpha / (r + alpha))
    else:  # scdr
        d, r, c = p["d"], p["r"], p["c"]
        D = witt_degree(r, c)
        expo = n * (iterated_log(d - 1, n) / iterated_log(d - 2, n)) ** (2 / D)
    try:
        value = math.exp(-expo)
    except OverflowError:
        value = 0.0
    return expo, value


# -- volume functions and the gamma solver --------------------------------------


class VolumeFunction:
    """A positive increasing function on [1, oo) with a usable inverse.

    ``log_value`` / ``inverse_log`` work on log-scale arguments so that
    wreath-type volumes exp(C V log V) never overflow.
    """

    def __init__(
        self,
        tag: str,
        log_value: Callable[[float], float],
        inverse_log: Callable[[float], float],
    ):
        self.tag = tag
        self.log_value = log_value  # t -> log V(t)
        self.inverse_log = inverse_log  # y -> V^-1(e^y)

    def value(self, t: float) -> float:
        return math.exp(self.log_value(t))

    def inverse(self, s: float) -> float:
        return self.inverse_log(math.log(s))

    def __repr__(self):
        return f"<volume {self.tag}>"


def polynomial_volume(D: float) -> VolumeFunction:
    if D <= 0:
        raise ProfileError("D must be positive")
    return VolumeFunction(f"poly:{D}", lambda t: D * math.log(t), lambda y: math.exp(y / D))


def _bisect_increasing(fn: Callable[[float], float], target: float, lo: float = 1.0) -> float:
    hi = max(2.0, 2 * lo)
    while fn(hi) < target:
        hi *= 2
        if hi > 1e300:
            raise ProfileError("inverse bisection overflow")
    return optimize.brentq(lambda v: fn(v) - target, lo, hi, rtol=1e-13)


def wreath_volume(inner: VolumeFunction, C: float = 1.0) -> VolumeFunction:
    """W(v) = exp(C V(v) log V(v)): the volume of Z^r wr G built from the
    Folner couples of a group with volume V."""

    def logw(t: float) -> float:
        lv = inner.log_value(t)
        return C * math.exp(lv) * lv

    return VolumeFunction(f"wreath({inner.tag},C={C})", logw, lambda y: _bisect_increasing(logw, y))


def stretched_exp_volume(alpha: float, ell: Optional[Callable[[float], float]] = None, tag: str = "") -> VolumeFunction:
    """V(t) = exp(t^alpha ell(t)) with ell slowly varying (default 1)."""
    if alpha <= 0:
        raise ProfileError("alpha must be positive")
    ell = ell or (lambda t: 1.0)

    def logv(t: float) -> float:
        return t**alpha * ell(t)

    return VolumeFunction(tag or f"stretchedexp:{alpha}", logv, lambda y: _bisect_increasing(logv, y))


def iterated_exp_volume(m: int) -> VolumeFunction:
    """V(t) = exp(ell^-1(t)) with ell^-1 = exp o ... o exp(t log t), m
    exponentials: here ell(t) behaves like log_m t / log_{m+1} t."""
    if m < 1:
        raise ProfileError("m must be >= 1")

    def logv(t: float) -> float:
        x = t * math.log(max(t, 1.0 + 1e-12))
        for _ in range(m):
            if x > 700:
                raise ProfileError("iterated exponential overflow")
            x = math.exp(x)
        return x

    return VolumeFunction(f"iterexp:{m}", logv, lambda y: _bisect_increasing(logv, y))


def gamma_log(V: VolumeFunction, t: float, rtol: float = 1e-9) -> float:
    """log gamma(t) for the gamma attached to V by the integral equation.

    The integral form with lower limit V(1) is used; the ODE initial
    condition gamma(0) = V(1) differs by an additive constant in t, which is
    immaterial for the up-to-constants statements this feeds.
    """
    if t <= 0:
        raise ProfileError("t must be positive")
    y0 = V.log_value(1.0)

    def F(Y: float) -> float:
        if Y <= y0:
            return 0.0
        val, _err = integrate.quad(lambda y: V.inverse_log(y) ** 2, y0, Y, epsrel=rtol, epsabs=0.0, limit=400)
        return val

    hi = y0 + 1.0
    while F(hi) < t:
        hi = y0 + 2 * (hi - y0)
        if hi - y0 > 1e12:
            raise ProfileError("gamma integral does not reach t")
    return optimize.brentq(lambda Y: F(Y) - t, y0, hi, rtol=1e-12)


def gamma_from_volume(V: VolumeFunction, t: float, rtol: float = 1e-9) -> float:
    """gamma(t); can overflow to inf for fast-growing volumes (use gamma_log
    for log-scale analysis)."""
    Y = gamma_log(V, t, rtol)
    try:
        return math.exp(Y)
    except OverflowError:
        return math.inf


def delta_regular_check(V: VolumeFunction, delta: float, t_values: Sequence[float], samples: int = 8) -> bool:
    """Check gamma'(s)/gamma(s) >= delta gamma'(t)/gamma(t) for sampled
    s in (t, 2t), using gamma'/gamma = 1 / [V^-1(gamma)]^2."""

    def rate(x: float) -> float:
        return 1.0 / V.inverse_log(gamma_log(V, x)) ** 2

    for t in t_values:
        rt = rate(t)
        for j in range(1, samples + 1):
            s = t * (1.0 + j / samples)
            if rate(s) < delta * rt - 1e-15:
                return False
    return True


# -- Folner couples on Z^D and their wreath lift --------------------------------


@dataclass
class FolnerCouple:
    k: int
    D: int
    r: int
    omega_size: int  # (2k+1)^D
    omega_prime_size: int  # (2 ceil(k/2) + 1)^D
    inner_distance: int  # d(Omega', Omega^c)
    log_theta: float  # log #Theta_k
    log_theta_prime: float  # log #Theta'_k
    log_volume: float  # log V(k) = D log(2k+1)


def folner_zd(k: int, D: int, r: int) -> FolnerCouple:
    """The box couple Omega = [-k,k]^D, Omega' = [-ceil(k/2),ceil(k/2)]^D and
    the counts of its wreath lift Theta (log-space to avoid overflow):

        #Theta  = #Omega (k #Omega)^(r #Omega)
        #Theta' = #Omega' (k #Omega - k)^(r #Omega)
    """
    if k < 2 or D < 1 or r < 1:
        raise ProfileError("need k >= 2, D >= 1, r >= 1")
    omega = (2 * k + 1) ** D
    half = (k + 1) // 2
    omega_p = (2 * half + 1) ** D
    dist = k + 1 - half
    log_theta = math.log(omega) + r * omega * math.log(k * omega)
    log_theta_p = math.log(omega_p) + r * omega * math.log(k * omega - k)
    return FolnerCouple(k, D, r, omega, omega_p, dist, log_theta, log_theta_p, D * math.log(2 * k + 1))


# -- Dirichlet eigenvalue ---------------------------------------------------------


def _distance_to_complement(group: MarkedGroup, vertices: Sequence[Element]) -> dict:
    inside = set(vertices)
    steps = group.generators() + [group.inverse(g) for g in group.generators()]
    dist: dict[Element, int] = {}
    frontier = []
    for v in vertices:
        if any(group.multiply(v, s) not in inside for s in steps):
            dist[v] = 1
            frontier.append(v)
    level = 1
    while frontier:
        nxt = []
        for v in frontier:
            for s in steps:
                u = group.multiply(v, s)
                if u in inside and u not in dist:
                    dist[u] = level + 1
                    nxt.append(u)
        frontier = nxt
        level += 1
    return dist


def dirichlet_lambda1(
    spec: MeasureSpec,
    vertices: Sequence[Element],
    tol: float = 1e-10,
    max_iter: int = 10_000,
    dense_budget: int = 20_000,
) -> tuple[float, float]:
    """Smallest eigenvalue of (I - P) on the vertex set with Dirichlet
    boundary, by inverse power iteration on the sparse operator, together
    with the variational upper bound from the test function
    f = d(., complement).

    Returns (lambda_1, test_function_bound); lambda_1 <= bound always.
    """
    group = spec.group
    n = len(vertices)
    if n == 0:
        raise ProfileError("empty vertex set")
    if n > dense_budget:
        raise ProfileError(f"vertex set of size {n} exceeds the solver budget {dense_budget}")
    index = {v: i for i, v in enumerate(vertices)}
    rows, cols, vals = [], [], []
    for v, i in index.items():
        for a in spec.atoms:
            u = group.multiply(v, a.element)
            j = index.get(u)
            if j is not None:
                rows.append(i)
                cols.append(j)
                vals.append(float(a.weight))
    P = csc_matrix((vals, (rows, cols)), shape=(n, n))
    A = (identity(n, format="csc") - P).tocsc()

    lu = splu(A)
    rng = np.random.default_rng(12345)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    lam = float("inf")
    for _ in range(max_iter):
        x = lu.solve(x)
        x /= np.linalg.norm(x)
        new_lam = float(x @ (A @ x))
        if abs(new_lam - lam) <= tol * max(abs(new_lam), 1e-300):
            lam = new_lam
            break
        lam = new_lam

    dist = _distance_to_complement(group, vertices)
    f = np.array([float(dist.get(v, 0)) for v in vertices])
    energy = 0.0
    for v, i in index.items():
        for a in spec.atoms:
            u = group.multiply(v, a.element)
            j = index.get(u)
            fu = f[j] if j is not None else 0.0
            w = float(a.weight)
            energy += 0.5 * w * (fu - f[i]) ** 2
            if j is None:
                # boundary term with x outside, image inside (nu symmetric)
                energy += 0.5 * w * f[i] ** 2
    bound = energy / float(f @ f)
    return lam, bound


def box_vertices(group: MarkedGroup, k: int) -> list[Element]:
    """The box [-k,k]^D in a free abelian group, as group elements."""
    if not isinstance(group, AbelianGroup) or group.moduli is not None:
        raise ProfileError("box vertices need a free abelian group")
    out = [()]
    for _ in range(group.rank):
        out = [v + (x,) for v in out for x in range(-k, k + 1)]
    return out


def ball_vertices(group: MarkedGroup, radius: int, budget: int = 200_000) -> list[Element]:
    levels = group.ball(radius, budget)
    return [v for _rad, _size, frontier in levels for v in frontier]
