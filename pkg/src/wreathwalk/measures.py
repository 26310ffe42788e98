"""Step measures, exact convolution, and Monte Carlo return probabilities.

Measures come in two flavors and are never mixed silently: exact specs carry
``fractions.Fraction`` weights and convolve exactly; float specs (power laws)
carry floats and may prune, reporting the pruned mass as a deficit bound.

The switch-walk-switch composite eta * mu * eta on a wreath product and its
iterates, the lower-bound measure supported on conjugated generator powers,
and pushforwards under group homomorphisms are all computed as explicit
finitely supported objects.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .groups import AbelianGroup, Element, Hom, MarkedGroup, WordHom, WreathProduct
from .words import ReducedWord, empty_word, generator_word

Weight = Union[Fraction, float]


class MeasureError(ValueError):
    pass


class ConvolutionBudgetError(RuntimeError):
    """Exact convolution exceeded the support budget; partial result attached."""

    def __init__(self, partial: "Distribution"):
        super().__init__("convolution support budget exceeded")
        self.partial = partial


# -- laws on Z ---------------------------------------------------------------


@dataclass
class IntegerLaw:
    """A symmetric probability law on Z with finite support."""

    table: dict  # m -> weight
    exact: bool
    tag: str = ""
    normalization: Optional[float] = None  # recorded constant for power laws
    tail_bound: float = 0.0  # mass bound lost to truncation

    def __post_init__(self):
        for m, w in self.table.items():
            if w <= 0:
                raise MeasureError("law weights must be positive")
            if self.table.get(-m) != w:
                raise MeasureError("law must be symmetric")
        total = sum(self.table.values())
        if self.exact:
            if total != 1:
                raise MeasureError("exact law must sum to 1")
        elif abs(float(total) - 1.0) > 1e-12:
            raise MeasureError("law weights must sum to 1 within 1e-12")


def lazy_law() -> IntegerLaw:
    """p(0) = 1/2, p(+-1) = 1/4: one lazy simple random walk step on Z."""
    return IntegerLaw({0: Fraction(1, 2), 1: Fraction(1, 4), -1: Fraction(1, 4)}, exact=True, tag="lazy")


def uniform_pm_one() -> IntegerLaw:
    return IntegerLaw({1: Fraction(1, 2), -1: Fraction(1, 2)}, exact=True, tag="pm1")


def make_power_law(alpha: float, cutoff: int = 10_000) -> IntegerLaw:
    """Weights proportional to (1+|m|)^(-1-alpha) on |m| <= cutoff,
    renormalized; the normalization constant and a bound on the truncated
    tail mass are recorded on the law."""
    if not (0 < alpha <= 2):
        raise MeasureError("alpha must lie in (0, 2]")
    if cutoff < 1:
        raise MeasureError("cutoff must be >= 1")
    raw = {m: (1.0 + abs(m)) ** (-1.0 - alpha) for m in range(-cutoff, cutoff + 1)}
    total = sum(raw.values())
    tail = 2.0 * (1.0 + cutoff) ** (-alpha) / alpha  # integral bound on the lost mass
    return IntegerLaw(
        {m: w / total for m, w in raw.items()},
        exact=False,
        tag=f"powerlaw:{alpha}",
        normalization=1.0 / total,
        tail_bound=tail / total,
    )


# -- measures on groups -------------------------------------------------------


@dataclass(frozen=True)
class Atom:
    element: Element
    weight: Weight
    word: Optional[ReducedWord] = None  # constructor word, when there is one
    power: Optional[tuple[int, int]] = None  # (i, m) for generator-power atoms s_i^m

    def generator_length(self) -> Optional[int]:
        """|s_i^m| = |m| when the atom is a generator power, else None."""
        if self.power is not None:
            return abs(self.power[1])
        if self.word is not None and len({i for i, _ in self.word}) <= 1:
            return len(self.word)
        return None


class MeasureSpec:
    """A finitely supported symmetric probability measure on a marked group."""

    def __init__(self, group: MarkedGroup, atoms: Sequence[Atom], exact: bool, name: str = ""):
        merged: dict[Element, Atom] = {}
        for a in atoms:
            if a.weight <= 0:
                raise MeasureError("atom weights must be positive")
            if a.element in merged:
                old = merged[a.element]
                merged[a.element] = Atom(a.element, old.weight + a.weight, old.word, old.power)
            else:
                merged[a.element] = a
        self.group = group
        self.atoms: list[Atom] = list(merged.values())
        self.exact = exact
        self.name = name
        total = sum(a.weight for a in self.atoms)
        if exact:
            if total != 1:
                raise MeasureError(f"exact weights sum to {total}, not 1")
        elif abs(float(total) - 1.0) > 1e-12:
            raise MeasureError("weights must sum to 1 within 1e-12")
        for a in self.atoms:
            w_inv = merged.get(group.inverse(a.element))
            ok = w_inv is not None and (
                w_inv.weight == a.weight if exact else abs(float(w_inv.weight - a.weight)) <= 1e-12
            )
            if not ok:
                raise MeasureError("measure must be symmetric")

    def mass(self, x: Element) -> Weight:
        for a in self.atoms:
            if a.element == x:
                return a.weight
        return Fraction(0) if self.exact else 0.0

    def __repr__(self):
        return f"<measure {self.name or '?'} on {self.group.name}, {len(self.atoms)} atoms>"


def make_lazy_srw(group: MarkedGroup) -> MeasureSpec:
    """mu(e) = 1/2, mu(s_i^{+-1}) = 1/(4r)."""
    r = group.rank
    atoms = [Atom(group.identity(), Fraction(1, 2), empty_word(r), power=(1, 0))]
    for i in range(1, r + 1):
        for e in (1, -1):
            atoms.append(
                Atom(group.power(group.generator(i), e), Fraction(1, 4 * r), generator_word(r, i, e), power=(i, e))
            )
    return MeasureSpec(group, atoms, exact=True, name="lazy")


def make_generator_power_measure(group: MarkedGroup, laws: Sequence[IntegerLaw]) -> MeasureSpec:
    """Atoms s_i^m with weight p_i(m)/r, one symmetric law p_i per generator.

    Atoms carry the compact constructor tag (i, m) rather than a
    letter-by-letter word: power-law supports reach |m| = 10^4 and beyond.
    """
    r = group.rank
    if len(laws) != r:
        raise MeasureError("need one law per generator")
    exact = all(law.exact for law in laws)
    atoms = []
    for i, law in enumerate(laws, start=1):
        for m, w in law.table.items():
            atoms.append(
                Atom(group.power(group.generator(i), m), w * (Fraction(1, r) if exact else 1.0 / r), power=(i, m))
            )
    return MeasureSpec(group, atoms, exact=exact, name="genpow")


def make_phi_lower_measure(laws: Sequence[IntegerLaw], base: MarkedGroup) -> MeasureSpec:
    """The lower-bound measure on Z^r wr base supported on the elements
    (delta^i, 0)(0, sbar_i^m)(-delta^i, 0), with weight p_i(m)/r.

    Every designated generator of the base must have infinite order; for a
    torsion generator the defining return-probability identity fails and the
    construction is refused.
    """
    r = base.rank
    if len(laws) != r:
        raise MeasureError("need one law per generator")
    torsion = base.generator_torsion()
    if any(torsion):
        bad = [i + 1 for i, t in enumerate(torsion) if t]
        raise MeasureError(
            f"generator(s) {bad} of {base.name} are torsion; the lower-bound "
            "measure requires every marked generator to have infinite order"
        )
    W = WreathProduct(AbelianGroup(r), base)
    exact = all(law.exact for law in laws)
    atoms = []
    for i, law in enumerate(laws, start=1):
        eps = tuple(1 if j == i - 1 else 0 for j in range(r))
        neg = tuple(-x for x in eps)
        for m, w in law.table.items():
            g = W.multiply(
                W.multiply(W.lamp_element(base.identity(), eps), W.base_element(base.power(base.generator(i), m))),
                W.lamp_element(base.identity(), neg),
            )
            atoms.append(Atom(g, w * (Fraction(1, r) if exact else 1.0 / r)))
    return MeasureSpec(W, atoms, exact=exact, name="phi-lower")


def uniform_on_words(group: MarkedGroup, wordlist: Sequence[ReducedWord], name: str = "uniform") -> MeasureSpec:
    """Uniform measure on the closure of a word list under inversion."""
    seen: dict[Element, ReducedWord] = {}
    for w in wordlist:
        for u in (w, w.inverse()):
            seen.setdefault(group.evaluate(u), u)
    n = len(seen)
    return MeasureSpec(group, [Atom(g, Fraction(1, n), u) for g, u in seen.items()], exact=True, name=name)


# -- distributions and convolution --------------------------------------------


class Distribution:
    """Finitely supported (sub-)probability mass over group elements."""

    def __init__(self, group: MarkedGroup, masses: dict, exact: bool, deficit: Weight = 0):
        self.group = group
        self.masses = masses
        self.exact = exact
        self.deficit = deficit  # total mass pruned along the way (float mode)

    @classmethod
    def point(cls, group: MarkedGroup, exact: bool = True) -> "Distribution":
        one = Fraction(1) if exact else 1.0
        return cls(group, {group.identity(): one}, exact)

    def total(self) -> Weight:
        return sum(self.masses.values())

    def at(self, x: Element) -> Weight:
        return self.masses.get(x, Fraction(0) if self.exact else 0.0)

    def at_identity(self) -> Weight:
        return self.at(self.group.identity())

    def support_size(self) -> int:
        return len(self.masses)

    def pushforward(self, hom: Hom) -> "Distribution":
        out: dict = {}
        for x, w in self.masses.items():
            y = hom.apply(x)
            out[y] = out.get(y, 0) + w
        return Distribution(hom.target, out, self.exact, self.deficit)

    def __eq__(self, other):
        return (
            isinstance(other, Distribution)
            and self.group.name == other.group.name
            and self.masses == other.masses
        )


def spec_distribution(spec: MeasureSpec) -> Distribution:
    return Distribution(spec.group, {a.element: a.weight for a in spec.atoms}, spec.exact)


def convolve(dist: Distribution, spec: MeasureSpec, support_budget: int = 2_000_000, mass_floor: float = 0.0) -> Distribution:
    """One convolution step dist * spec by sparse multiply-accumulate.

    Exact distributions are never pruned; exceeding the support budget raises
    ConvolutionBudgetError with the partial result.  Float distributions drop
    atoms below ``mass_floor``, accumulating the dropped mass into deficit.
    """
    if dist.group.name != spec.group.name:
        raise MeasureError("group mismatch in convolution")
    group = dist.group
    out: dict = {}
    for x, px in dist.masses.items():
        for a in spec.atoms:
            y = group.multiply(x, a.element)
            out[y] = out.get(y, 0) + px * a.weight
    exact = dist.exact and spec.exact
    deficit = dist.deficit
    if not exact and mass_floor > 0.0:
        kept = {y: w for y, w in out.items() if w >= mass_floor}
        deficit = deficit + (sum(out.values()) - sum(kept.values()))
        out = kept
    result = Distribution(group, out, exact, deficit)
    if len(out) > support_budget:
        raise ConvolutionBudgetError(result)
    return result


def convolve_power(
    spec: Union[MeasureSpec, Distribution],
    n: int,
    support_budget: int = 2_000_000,
    mass_floor: float = 0.0,
) -> Distribution:
    """The exact n-fold convolution power; n = 0 gives the point mass at e."""
    if n < 0:
        raise MeasureError("n must be >= 0")
    if isinstance(spec, Distribution):
        base = MeasureSpec(
            spec.group,
            [Atom(x, w) for x, w in spec.masses.items()],
            spec.exact,
            name="dist",
        )
    else:
        base = spec
    dist = Distribution.point(base.group, exact=base.exact)
    for _ in range(n):
        dist = convolve(dist, base, support_budget, mass_floor)
    return dist


def return_probability_exact(spec: Union[MeasureSpec, Distribution], n: int, **kw) -> Weight:
    return convolve_power(spec, n, **kw).at_identity()


def convolve_sequence(specs: Sequence[MeasureSpec], **kw) -> Distribution:
    """spec_1 * spec_2 * ... as a Distribution (e.g. nu * phi * nu)."""
    dist = Distribution.point(specs[0].group, exact=all(s.exact for s in specs))
    for s in specs:
        dist = convolve(dist, s, **kw)
    return dist


# -- switch-walk-switch --------------------------------------------------------


def sws(eta: MeasureSpec, mu: MeasureSpec) -> MeasureSpec:
    """The switch-walk-switch measure eta * mu * eta on lamp wr base, with
    eta on the (abelian) lamp group and mu on the base group."""
    W = WreathProduct(eta.group, mu.group)
    acc: dict[Element, Weight] = {}
    for a in eta.atoms:
        ea = W.lamp_element(W.base.identity(), a.element)
        for g in mu.atoms:
            mid = W.multiply(ea, W.base_element(g.element))
            wag = a.weight * g.weight
            for b in eta.atoms:
                x = W.multiply(mid, W.lamp_element(W.base.identity(), b.element))
                acc[x] = acc.get(x, 0) + wag * b.weight
    exact = eta.exact and mu.exact
    return MeasureSpec(W, [Atom(x, w) for x, w in acc.items()], exact, name=f"sws({eta.name},{mu.name})")


def iterated_sws(eta: MeasureSpec, mu: MeasureSpec, k: int) -> MeasureSpec:
    """q_k = eta * q_{k-1} * eta on W_k = lamp wr W_{k-1}; q_1 = sws(eta, mu)."""
    if k < 1:
        raise MeasureError("k must be >= 1")
    q = sws(eta, mu)
    for _ in range(k - 1):
        q = sws(eta, q)
    return q


def pushforward(measure: MeasureSpec, hom: Union[Hom, WordHom]) -> MeasureSpec:
    """Image measure: masses are summed over the fibers of the homomorphism."""
    acc: dict[Element, Weight] = {}
    for a in measure.atoms:
        if isinstance(hom, WordHom):
            if a.power is not None:
                i, m = a.power
                y = hom.target.power(hom.target.evaluate(hom.images[i - 1]), m)
            elif a.word is not None:
                y = hom.apply_word(a.word)
            else:
                raise MeasureError("generator-image pushforward needs atom words or power tags")
        else:
            y = hom.apply(a.element)
        acc[y] = acc.get(y, 0) + a.weight
    return MeasureSpec(
        hom.target,
        [Atom(x, w) for x, w in acc.items()],
        measure.exact,
        name=f"{hom.name}({measure.name})",
    )


# -- weak moments ---------------------------------------------------------------


def weak_moment(spec: MeasureSpec, alpha: float) -> float:
    """W(rho_alpha, mu) = sup_s s mu({g: rho_alpha(g) > s}),
    rho_alpha(g) = (1 + |g|)^alpha.

    The spec must be supported on generator powers s_i^m (atoms carry their
    constructor tags), where the word length |s_i^m| = |m| is exact.  The
    supremum is a maximum over the finitely many jump points of the tail
    function.
    """
    lengths = []
    for a in spec.atoms:
        length = a.generator_length()
        if length is None:
            raise MeasureError("weak_moment needs generator-power atoms")
        lengths.append((length, float(a.weight)))
    # suffix sums over the sorted jump points: sup s mu(rho >= s) is attained
    # there (as a supremum over s approaching each jump from below)
    pairs = sorted(((1.0 + L) ** alpha, w) for L, w in lengths)
    best = 0.0
    tail = 0.0
    for v, w in reversed(pairs):
        tail += w
        best = max(best, v * tail)
    return best


# -- Monte Carlo -----------------------------------------------------------------


@dataclass
class WalkEstimate:
    n: int
    trials: int
    hits: int
    estimate: float
    ci_lo: float
    ci_hi: float
    seed: int


_BLOCK = 8192


def _wilson(hits: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if trials == 0:
        return (0.0, 1.0)
    p = hits / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def _block_hits(group: MarkedGroup, atoms, identity, idx_matrix) -> int:
    hits = 0
    if isinstance(group, WreathProduct):
        base = group.base
        base_id = base.identity()
        lamp = group.lamp
        lamp_id = lamp.identity()
        id_indices = {k for k, a in enumerate(atoms) if a == ((), base_id)}
        for row in idx_matrix:
            cfg: dict = {}
            pos = base_id
            for k in row:
                if k in id_indices:
                    continue
                acfg, ab = atoms[k]
                for pt, val in acfg:
                    p = base.multiply(pos, pt)
                    v = lamp.multiply(cfg.get(p, lamp_id), val)
                    if v == lamp_id:
                        del cfg[p]
                    else:
                        cfg[p] = v
                pos = base.multiply(pos, ab)
            if not cfg and pos == base_id:
                hits += 1
        return hits
    for row in idx_matrix:
        acc = identity
        for k in row:
            acc = group.multiply(acc, atoms[k])
        if acc == identity:
            hits += 1
    return hits


def mc_return_probability(
    spec: MeasureSpec,
    n: int,
    trials: int,
    seed: int,
    workers: Optional[int] = None,
) -> WalkEstimate:
    """Estimate the n-step return probability by i.i.d. products of sampled
    steps; a hit is a product equal to the identity.

    Trials are partitioned into fixed-size blocks and block b draws from a
    generator seeded by (seed, b), so the result is bit-identical for any
    worker count.  Workers default to the WREATHWALK_THREADS environment
    variable (1 if unset).
    """
    if trials < 1:
        raise MeasureError("trials must be >= 1")
    if workers is None:
        workers = int(os.environ.get("WREATHWALK_THREADS", "1"))
    group = spec.group
    identity = group.identity()
    atoms = [a.element for a in spec.atoms]
    cum = np.cumsum(np.array([float(a.weight) for a in spec.atoms]))
    cum[-1] = 1.0

    def run_block(b: int) -> int:
        size = min(_BLOCK, trials - b * _BLOCK)
        if n == 0:
            return size
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(b,)))
        idx = np.searchsorted(cum, rng.random((size, n)), side="right")
        return _block_hits(group, atoms, identity, idx)

    nblocks = (trials + _BLOCK - 1) // _BLOCK
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(run_block, range(nblocks)))
    else:
        hits = sum(run_block(b) for b in range(nblocks))
    lo, hi = _wilson(hits, trials)
    return WalkEstimate(n, trials, hits, hits / trials, lo, hi, seed)
