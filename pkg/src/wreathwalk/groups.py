"""Concrete marked groups with exact arithmetic.

Every group carries a designated generator tuple (a marked group), exact
multiply / inverse / equality, and a canonical byte key per element usable as
an associative-collection key.  Elements are immutable nested tuples of
integers in a canonical form, so structural equality ``a == b`` coincides with
group equality and Python's tuple ordering gives a total order.

Built-in families:

* ``AbelianGroup(r, moduli)``   -- Z^r, or T_m when moduli are given
* ``Lamplighter(q)``            -- Z_q wr Z, generators a, t
* ``BaumslagSolitar(q)``        -- BS(1,q) = <a,b | a^-1 b a = b^q>
* ``WreathProduct(lamp, base)`` -- K wr H with K abelian
* ``magnus_group(base)``        -- the image of F_r/[N,N] inside Z^r wr base
* ``free_solvable(d, r)``       -- recursive Magnus tower over Z^r
* ``remark(G, words)``          -- same group, new designated generators

Element JSON schema (also the shape of ``canonical_obj``):

* abelian:      ``[x1, ..., xr]``
* lamplighter:  ``{"lamps": [[pos, val], ...], "pos": p}``
* BS(1,q):      ``{"t": t, "num": n, "qexp": k}`` meaning (t, n / q^k)
* wreath:       ``{"config": [[point, value], ...], "base": point}``
"""

from __future__ import annotations

import json
from typing import Callable, Iterable, Optional, Sequence

from .words import ReducedWord, empty_word, generator_word, parse_word

Element = object  # nested tuples of ints; shape is fixed per group


class GroupError(ValueError):
    pass


class BallBudgetExceeded(RuntimeError):
    """BFS enumeration hit the element-count budget; partial levels attached."""

    def __init__(self, levels):
        super().__init__("ball enumeration budget exceeded")
        self.levels = levels


class MarkedGroup:
    """A group with designated generator tuple and exact arithmetic."""

    rank: int
    name: str
    is_abelian: bool = False

    def identity(self) -> Element:
        raise NotImplementedError

    def generator(self, i: int) -> Element:
        """Image of the i-th designated generator, i in 1..rank."""
        raise NotImplementedError

    def multiply(self, a: Element, b: Element) -> Element:
        raise NotImplementedError

    def inverse(self, a: Element) -> Element:
        raise NotImplementedError

    def is_torsion(self, a: Element) -> bool:
        raise NotImplementedError

    def canonical_obj(self, a: Element):
        """JSON-able canonical structure mirroring the element."""
        raise NotImplementedError

    # -- derived operations ------------------------------------------------

    def equal(self, a: Element, b: Element) -> bool:
        return a == b

    def is_identity(self, a: Element) -> bool:
        return a == self.identity()

    def canonical_key(self, a: Element) -> bytes:
        return json.dumps(self.canonical_obj(a), separators=(",", ":")).encode()

    def generators(self) -> list[Element]:
        return [self.generator(i) for i in range(1, self.rank + 1)]

    def generator_torsion(self) -> tuple[bool, ...]:
        return tuple(self.is_torsion(g) for g in self.generators())

    def power(self, a: Element, n: int) -> Element:
        out = self.identity()
        base = a if n >= 0 else self.inverse(a)
        for _ in range(abs(n)):
            out = self.multiply(out, base)
        return out

    def evaluate(self, w: ReducedWord) -> Element:
        if w.rank != self.rank:
            raise GroupError(f"word rank {w.rank} != group rank {self.rank}")
        gens = self.generators()
        invs = [self.inverse(g) for g in gens]
        out = self.identity()
        for i, e in w:
            out = self.multiply(out, gens[i - 1] if e == 1 else invs[i - 1])
        return out

    def ball(self, radius: int, budget: int = 200_000):
        """Breadth-first ball enumeration with generator set {s_i^{+-1}}.

        Returns a list of (radius, cumulative size, frontier elements).
        Raises BallBudgetExceeded (carrying partial levels) past the budget.
        """
        steps = self.generators() + [self.inverse(g) for g in self.generators()]
        seen = {self.identity()}
        frontier = [self.identity()]
        levels = [(0, 1, [self.identity()])]
        for rad in range(1, radius + 1):
            nxt = []
            for x in frontier:
                for s in steps:
                    y = self.multiply(x, s)
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
                        if len(seen) > budget:
                            raise BallBudgetExceeded(levels)
            frontier = nxt
            levels.append((rad, len(seen), frontier))
        return levels

    # -- subgroup membership predicates -------------------------------------

    def __init_membership(self):
        if not hasattr(self, "_memberships"):
            self._memberships: dict[str, Callable[[Element], bool]] = {}

    def register_membership(self, name: str, predicate: Callable[[Element], bool]):
        self.__init_membership()
        self._memberships[name] = predicate

    def membership(self, name: str) -> Callable[[Element], bool]:
        self.__init_membership()
        if name in self._memberships:
            return self._memberships[name]
        pred = self._builtin_membership(name)
        if pred is None:
            raise GroupError(f"no membership predicate {name!r} on {self.name}")
        return pred

    def _builtin_membership(self, name: str) -> Optional[Callable[[Element], bool]]:
        return None

    # -- optional hooks ------------------------------------------------------

    def stretch_element(self, a: Element, m: int) -> Element:
        """delta_m on elements, where defined (Z^r and the Magnus tower)."""
        raise GroupError(f"stretch is not defined on {self.name}")

    stretch_verified: bool = False

    def __repr__(self):
        return f"<{self.name}>"


class AbelianGroup(MarkedGroup):
    """Z^r, or the finite product of Z_{m_i} when moduli are given.

    Mixed free/finite coordinates are allowed: modulus 0 means a free Z factor.
    """

    is_abelian = True

    def __init__(self, rank: int, moduli: Optional[Sequence[int]] = None):
        if rank < 1:
            raise GroupError("rank must be >= 1")
        if moduli is not None:
            if len(moduli) != rank:
                raise GroupError("moduli length must equal rank")
            for m in moduli:
                if m != 0 and m < 2:
                    raise GroupError("modulus must be >= 2 (or 0 for a free factor)")
        self.rank = rank
        self.moduli = tuple(moduli) if moduli is not None else None
        if self.moduli is None:
            self.name = f"zr:{rank}"
        else:
            self.name = "tm:" + ",".join(str(m) for m in self.moduli)

    def _norm(self, v: Iterable[int]) -> tuple[int, ...]:
        if self.moduli is None:
            return tuple(v)
        return tuple(x % m if m else x for x, m in zip(v, self.moduli))

    def identity(self):
        return (0,) * self.rank

    def generator(self, i):
        return self._norm(1 if j == i - 1 else 0 for j in range(self.rank))

    def multiply(self, a, b):
        return self._norm(x + y for x, y in zip(a, b))

    def inverse(self, a):
        return self._norm(-x for x in a)

    def is_torsion(self, a):
        if self.moduli is None:
            return a == self.identity()
        return all(m != 0 or x == 0 for x, m in zip(a, self.moduli))

    def power(self, a, n):
        return self.scale(a, n)

    def canonical_obj(self, a):
        return list(a)

    def scale(self, a, n: int):
        return self._norm(n * x for x in a)

    def stretch_element(self, a, m):
        if self.moduli is not None:
            raise GroupError("stretch is only defined on free abelian groups")
        return tuple(m * x for x in a)

    @property
    def stretch_verified(self):
        return self.moduli is None

    def _builtin_membership(self, name):
        if name.startswith("sublattice:"):
            ms = tuple(int(x) for x in name.split(":", 1)[1].split(","))
            if len(ms) != self.rank or any(m < 1 for m in ms):
                raise GroupError(f"bad sublattice spec {name!r}")

            def pred(x, ms=ms):
                return all(c % m == 0 for c, m in zip(x, ms))

            return pred
        return None


class Lamplighter(MarkedGroup):
    """Z_q wr Z with generators a (lamp at the origin) and t (translation).

    Elements are (lamps, pos): lamps is a sorted tuple of (position, value)
    pairs with values in 1..q-1, pos is the lamplighter position.
    """

    def __init__(self, q: int):
        if q < 2:
            raise GroupError("q must be >= 2")
        self.q = q
        self.rank = 2
        self.name = f"ll:{q}"

    def identity(self):
        return ((), 0)

    def generator(self, i):
        if i == 1:
            return (((0, 1),), 0)  # a
        if i == 2:
            return ((), 1)  # t
        raise GroupError("generator index out of range")

    def multiply(self, x, y):
        lx, px = x
        ly, py = y
        lamps = dict(lx)
        for pos, val in ly:
            p = pos + px
            v = (lamps.get(p, 0) + val) % self.q
            if v:
                lamps[p] = v
            else:
                lamps.pop(p, None)
        return (tuple(sorted(lamps.items())), px + py)

    def inverse(self, x):
        lx, px = x
        return (tuple(sorted((p - px, (-v) % self.q) for p, v in lx)), -px)

    def is_torsion(self, x):
        return x[1] == 0

    def canonical_obj(self, x):
        return {"lamps": [[p, v] for p, v in x[0]], "pos": x[1]}

    def _builtin_membership(self, name):
        if name == "even_t":
            # image of <a, t^2>: even position, lamps at even positions
            def pred(x):
                return x[1] % 2 == 0 and all(p % 2 == 0 for p, _ in x[0])

            return pred
        return None


class BaumslagSolitar(MarkedGroup):
    """BS(1,q) = <a,b | a^-1 b a = b^q>, exact semidirect representation.

    Elements are (t, num, k) denoting the affine map u -> q^t u + num/q^k,
    normalized so k >= 0 and q does not divide num when k > 0.
    """

    def __init__(self, q: int):
        if q < 2:
            raise GroupError("q must be >= 2")
        self.q = q
        self.rank = 2
        self.name = f"bs:{q}"

    def _norm(self, t, num, k):
        if num == 0:
            return (t, 0, 0)
        while k > 0 and num % self.q == 0:
            num //= self.q
            k -= 1
        return (t, num, k)

    def identity(self):
        return (0, 0, 0)

    def generator(self, i):
        if i == 1:
            return (1, 0, 0)  # a
        if i == 2:
            return (0, 1, 0)  # b
        raise GroupError("generator index out of range")

    def multiply(self, x, y):
        # (t,x)(t',x') = (t+t', x + q^-t x')
        t1, n1, k1 = x
        t2, n2, k2 = y
        if t1 >= 0:
            n2b, k2b = n2, k2 + t1
        else:
            n2b, k2b = n2 * self.q ** (-t1), k2
        k = max(k1, k2b)
        num = n1 * self.q ** (k - k1) + n2b * self.q ** (k - k2b)
        return self._norm(t1 + t2, num, k)

    def inverse(self, x):
        # (t,x)^-1 = (-t, -q^t x)
        t, n, k = x
        if t >= k:
            return self._norm(-t, -n * self.q ** (t - k), 0)
        return self._norm(-t, -n, k - t)

    def is_torsion(self, x):
        return x == self.identity()

    def canonical_obj(self, x):
        return {"t": x[0], "num": x[1], "qexp": x[2]}

    def _builtin_membership(self, name):
        if name == "even_t":
            # image of <a^2, b>: exactly the elements with even t
            return lambda x: x[0] % 2 == 0
        return None


class WreathProduct(MarkedGroup):
    """K wr H for an abelian lamp group K over an arbitrary base H.

    Elements are (config, base): config is a tuple of (point, value) pairs,
    points are base elements sorted by their canonical tuple order, values are
    non-identity lamp elements.  Group law (f,h)(f',h') = (f + tau_h f', hh')
    with (tau_h f')(x) = f'(h^-1 x).

    With ``magnus=True`` the designated generators are the Magnus images
    (delta_e eps_i, sbar_i) instead of lamp generators followed by base
    generators; the lamp group must then be Z^rank(base).
    """

    def __init__(self, lamp: MarkedGroup, base: MarkedGroup, magnus: bool = False):
        if not lamp.is_abelian:
            raise GroupError("lamp group must be abelian")
        self.lamp = lamp
        self.base = base
        self.magnus = magnus
        if magnus:
            if not isinstance(lamp, AbelianGroup) or lamp.moduli is not None or lamp.rank != base.rank:
                raise GroupError("Magnus marking needs lamp = Z^rank(base)")
            self.rank = base.rank
            self.name = f"magnus({base.name})"
        else:
            self.rank = lamp.rank + base.rank
            self.name = f"wr({lamp.name},{base.name})"

    def identity(self):
        return ((), self.base.identity())

    def generator(self, i):
        if self.magnus:
            cfg = ((self.base.identity(), self.lamp.generator(i)),)
            return (cfg, self.base.generator(i))
        if i <= self.lamp.rank:
            return (((self.base.identity(), self.lamp.generator(i)),), self.base.identity())
        return ((), self.base.generator(i - self.lamp.rank))

    def _pack(self, cfg: dict) -> tuple:
        return tuple(sorted(cfg.items()))

    def multiply(self, x, y):
        cx, bx = x
        cy, by = y
        cfg = dict(cx)
        for pt, val in cy:
            p = self.base.multiply(bx, pt)
            v = self.lamp.multiply(cfg.get(p, self.lamp.identity()), val)
            if self.lamp.is_identity(v):
                cfg.pop(p, None)
            else:
                cfg[p] = v
        return (self._pack(cfg), self.base.multiply(bx, by))

    def inverse(self, x):
        cx, bx = x
        binv = self.base.inverse(bx)
        cfg = {self.base.multiply(binv, pt): self.lamp.inverse(val) for pt, val in cx}
        return (self._pack(cfg), binv)

    def is_torsion(self, x):
        cx, bx = x
        if not self.base.is_torsion(bx):
            return False
        # (f,h)^d lands in the lamp sum once h has finite order d
        d = 1
        h = bx
        while not self.base.is_identity(h):
            h = self.base.multiply(h, bx)
            d += 1
        acc = self.identity()
        for _ in range(d):
            acc = self.multiply(acc, x)
        return all(self.lamp.is_torsion(v) for _, v in acc[0])

    def canonical_obj(self, x):
        cfg, base = x
        return {
            "config": [[self.base.canonical_obj(p), self.lamp.canonical_obj(v)] for p, v in cfg],
            "base": self.base.canonical_obj(base),
        }

    def lamp_element(self, point, value) -> Element:
        """The element with a single lamp ``value`` at ``point``."""
        if self.lamp.is_identity(value):
            return self.identity()
        return (((point, value),), self.base.identity())

    def base_element(self, b) -> Element:
        return ((), b)

    def stretch_element(self, x, m):
        """delta_m on the Magnus tower: stretch the config and the base.

        Well defined when the base supports stretch_element injectively with
        sbar_i^j outside delta_m's image for 0 < j < m, which holds for Z^r
        and for the recursive free solvable tower.
        """
        if not isinstance(self.lamp, AbelianGroup) or self.lamp.moduli is not None:
            raise GroupError("stretch needs a free abelian lamp")
        if self.lamp.rank != self.base.rank:
            raise GroupError("stretch needs lamp rank equal to base rank")
        cx, bx = x
        cfg: dict = {}
        gens = self.base.generators()
        for pt, vec in cx:
            anchor = self.base.stretch_element(pt, m)
            for i, c in enumerate(vec):
                if c == 0:
                    continue
                unit = tuple(c if j == i else 0 for j in range(self.lamp.rank))
                p = anchor
                for _ in range(m):
                    v = self.lamp.multiply(cfg.get(p, self.lamp.identity()), unit)
                    if self.lamp.is_identity(v):
                        cfg.pop(p, None)
                    else:
                        cfg[p] = v
                    p = self.base.multiply(p, gens[i])
        return (self._pack(cfg), self.base.stretch_element(bx, m))

    @property
    def stretch_verified(self):
        return self.magnus and getattr(self.base, "stretch_verified", False)


class RemarkedGroup(MarkedGroup):
    """The same group with a new designated generator tuple."""

    def __init__(self, parent: MarkedGroup, generator_words: Sequence[ReducedWord], name: str = ""):
        self.parent = parent
        self.rank = len(generator_words)
        self.gens = [parent.evaluate(w) for w in generator_words]
        self.generator_words = list(generator_words)
        self.is_abelian = parent.is_abelian
        self.name = name or f"mark({parent.name};" + ";".join(str(w) for w in generator_words) + ")"

    def identity(self):
        return self.parent.identity()

    def generator(self, i):
        return self.gens[i - 1]

    def multiply(self, a, b):
        return self.parent.multiply(a, b)

    def inverse(self, a):
        return self.parent.inverse(a)

    def is_torsion(self, a):
        return self.parent.is_torsion(a)

    def canonical_obj(self, a):
        return self.parent.canonical_obj(a)

    def _builtin_membership(self, name):
        return self.parent._builtin_membership(name)


def make_abelian_group(r: int, moduli: Optional[Sequence[int]] = None) -> AbelianGroup:
    return AbelianGroup(r, moduli)


def make_lamplighter(q: int) -> Lamplighter:
    return Lamplighter(q)


def make_bs(q: int) -> BaumslagSolitar:
    return BaumslagSolitar(q)


def make_wreath(lamp: MarkedGroup, base: MarkedGroup) -> WreathProduct:
    return WreathProduct(lamp, base)


def magnus_group(base: MarkedGroup) -> WreathProduct:
    """The Magnus image of F_r/[N,N] inside Z^r wr base, base = F_r/N.

    By Magnus's theorem the subgroup generated by the marked generators is an
    exact copy of F_r/[N,N]: a word evaluates to the identity here if and
    only if it lies in [N,N].
    """
    return WreathProduct(AbelianGroup(base.rank), base, magnus=True)


def free_solvable(d: int, r: int) -> MarkedGroup:
    """S_{d,r} = F_r/F_r^(d) in the recursive Magnus representation."""
    if d < 1 or r < 1:
        raise GroupError("need d >= 1 and r >= 1")
    if d == 1:
        return AbelianGroup(r)
    group = magnus_group(free_solvable(d - 1, r))
    group.name = f"sdr:{d},{r}"
    return group


def remark(parent: MarkedGroup, generator_words: Sequence[ReducedWord], name: str = "") -> RemarkedGroup:
    return RemarkedGroup(parent, generator_words, name)


def lamplighter_nontorsion(q: int) -> RemarkedGroup:
    """Z_q wr Z remarked on (a t, t): both designated generators have
    infinite order, as the lower-bound measure construction requires."""
    ll = Lamplighter(q)
    w1 = generator_word(2, 1) * generator_word(2, 2)
    w2 = generator_word(2, 2)
    return RemarkedGroup(ll, [w1, w2], name=f"llnt:{q}")


# -- group homomorphisms ----------------------------------------------------


class Hom:
    """An element-level group homomorphism."""

    def __init__(self, source: MarkedGroup, target: MarkedGroup, fn: Callable[[Element], Element], name: str):
        self.source = source
        self.target = target
        self.fn = fn
        self.name = name

    def apply(self, x: Element) -> Element:
        return self.fn(x)

    def __repr__(self):
        return f"<hom {self.name}: {self.source.name} -> {self.target.name}>"


def base_projection_hom(W: WreathProduct) -> Hom:
    """(f, h) -> h, the projection of a wreath product onto its base."""
    return Hom(W, W.base, lambda x: x[1], "base-projection")


def abelianization_hom(G: MarkedGroup) -> Hom:
    """Projection onto Z^r (or the abelian group itself)."""
    if isinstance(G, AbelianGroup):
        return Hom(G, G, lambda x: x, "identity")
    if isinstance(G, WreathProduct) and G.magnus:
        inner = abelianization_hom(G.base)
        return Hom(G, inner.target, lambda x: inner.apply(x[1]), "abelianization")
    raise GroupError(f"no built-in abelianization for {G.name}")


def mod_hom(source: AbelianGroup, moduli: Sequence[int]) -> Hom:
    """Coordinate-wise reduction Z^r -> prod Z_{m_i} (0 keeps a factor free)."""
    if source.moduli is not None:
        raise GroupError("mod_hom expects a free abelian source")
    target = AbelianGroup(source.rank, moduli)
    return Hom(source, target, lambda x: target._norm(x), f"mod:{','.join(map(str, moduli))}")


def stretch_hom(G: MarkedGroup, m: int) -> Hom:
    return Hom(G, G, lambda x: G.stretch_element(x, m), f"delta_{m}")


def wreath_lift_hom(theta: Hom, lamp: MarkedGroup) -> Hom:
    """Lift theta: G -> H to lamp wr G -> lamp wr H by summing lamp values
    over fibers of theta."""
    WG = WreathProduct(lamp, theta.source)
    WH = WreathProduct(lamp, theta.target)

    def fn(x):
        cfg: dict = {}
        for pt, val in x[0]:
            p = theta.apply(pt)
            v = lamp.multiply(cfg.get(p, lamp.identity()), val)
            if lamp.is_identity(v):
                cfg.pop(p, None)
            else:
                cfg[p] = v
        return (WH._pack(cfg), theta.apply(x[1]))

    return Hom(WG, WH, fn, f"lift({theta.name})")


def generator_image_hom(source: MarkedGroup, target: MarkedGroup, images: Sequence[ReducedWord]) -> "WordHom":
    return WordHom(source, target, images)


def coset_membership(hom: Hom, allowed: Iterable[Element]) -> Callable[[Element], bool]:
    """Membership test for a finite-index subgroup given as the preimage of
    an element set under a map onto a finite quotient.  The returned
    predicate is usable with ``register_membership``."""
    table = {hom.target.canonical_key(x) for x in allowed}

    def pred(x: Element) -> bool:
        return hom.target.canonical_key(hom.apply(x)) in table

    return pred


class WordHom:
    """A homomorphism given by generator images; applies to words only."""

    def __init__(self, source: MarkedGroup, target: MarkedGroup, images: Sequence[ReducedWord]):
        if len(images) != source.rank:
            raise GroupError("need one image word per source generator")
        self.source = source
        self.target = target
        self.images = list(images)
        self.name = "gen-images"

    def apply_word(self, w: ReducedWord) -> Element:
        out = empty_word(self.target.rank)
        for i, e in w:
            img = self.images[i - 1]
            out = out * (img if e == 1 else img.inverse())
        return self.target.evaluate(out)


# -- CLI group spec strings --------------------------------------------------


def parse_group_spec(spec: str) -> MarkedGroup:
    """Parse specs like ``zr:2``, ``tm:2,2``, ``ll:2``, ``llnt:2``, ``bs:3``,
    ``sdr:3,2``, ``wr(zr:1,zr:2)``, ``magnus(ll:2)``,
    ``mark(ll:2;s1 s2;s2)``."""
    spec = spec.strip()
    if spec.startswith("wr(") and spec.endswith(")"):
        inner = spec[3:-1]
        lamp_spec, base_spec = _split_top_level(inner)
        return make_wreath(parse_group_spec(lamp_spec), parse_group_spec(base_spec))
    if spec.startswith("magnus(") and spec.endswith(")"):
        return magnus_group(parse_group_spec(spec[7:-1]))
    if spec.startswith("mark(") and spec.endswith(")"):
        parts = spec[5:-1].split(";")
        parent = parse_group_spec(parts[0])
        wordlist = [parse_word(p, parent.rank) for p in parts[1:]]
        return remark(parent, wordlist)
    if ":" not in spec:
        raise GroupError(f"bad group spec {spec!r}")
    kind, args = spec.split(":", 1)
    if kind == "zr":
        return make_abelian_group(int(args))
    if kind == "tm":
        ms = [int(x) for x in args.split(",")]
        return make_abelian_group(len(ms), ms)
    if kind == "ll":
        return make_lamplighter(int(args))
    if kind == "llnt":
        return lamplighter_nontorsion(int(args))
    if kind == "bs":
        return make_bs(int(args))
    if kind == "sdr":
        d, r = (int(x) for x in args.split(","))
        return free_solvable(d, r)
    raise GroupError(f"unknown group spec {spec!r}")


def _split_top_level(s: str) -> tuple[str, str]:
    depth = 0
    for i, c in enumerate(s):
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
        elif c == "," and depth == 0:
            return s[:i], s[i + 1 :]
    raise GroupError(f"expected two comma-separated specs in {s!r}")
