"""Fox derivatives, the Magnus embedding, and flows on marked Cayley graphs.

A word w over F_r and a marked group G = F_r/N determine

* the projected Fox derivatives pi(d_{s_i} w) in the group ring Z(G),
* the Magnus image (a(w), pi(w)) in Z^r wr G, and
* the edge flow f_w of the path traced by w from the identity of G.

The flow value on the marked edge (x, x sbar_i, s_i) equals the coefficient
of x in pi(d_{s_i} w); two words are equal mod [N,N] iff their flows agree.
Edges are keyed by (origin vertex, generator index): the endpoint is implied.
"""

from __future__ import annotations

from dataclasses import dataclass

from .groups import AbelianGroup, Element, GroupError, MarkedGroup, WreathProduct
from .words import ReducedWord


class GroupRingElement:
    """Finitely supported integer combination of elements of a group."""

    def __init__(self, group: MarkedGroup, terms: dict | None = None):
        self.group = group
        self.terms: dict[Element, int] = {}
        if terms:
            for g, c in terms.items():
                self.add(g, c)

    def add(self, g: Element, c: int):
        v = self.terms.get(g, 0) + c
        if v:
            self.terms[g] = v
        else:
            self.terms.pop(g, None)

    def coefficient(self, g: Element) -> int:
        return self.terms.get(g, 0)

    def __add__(self, other: "GroupRingElement") -> "GroupRingElement":
        out = GroupRingElement(self.group, dict(self.terms))
        for g, c in other.terms.items():
            out.add(g, c)
        return out

    def __neg__(self) -> "GroupRingElement":
        return GroupRingElement(self.group, {g: -c for g, c in self.terms.items()})

    def translate(self, h: Element) -> "GroupRingElement":
        """Left translation h . sum c_g g = sum c_g (hg)."""
        return GroupRingElement(self.group, {self.group.multiply(h, g): c for g, c in self.terms.items()})

    def __eq__(self, other):
        return isinstance(other, GroupRingElement) and self.terms == other.terms

    def __repr__(self):
        return f"GroupRingElement({self.terms!r})"


class ModuleVector:
    """Finitely supported map from group elements to Z-vectors of length r:
    an element of the free Z(G)-module of rank r."""

    def __init__(self, group: MarkedGroup, rank: int, entries: dict | None = None):
        self.group = group
        self.rank = rank
        self.entries: dict[Element, tuple[int, ...]] = {}
        if entries:
            for g, v in entries.items():
                self.add(g, v)

    def add(self, g: Element, vec):
        cur = self.entries.get(g, (0,) * self.rank)
        new = tuple(a + b for a, b in zip(cur, vec))
        if any(new):
            self.entries[g] = new
        else:
            self.entries.pop(g, None)

    def translate(self, h: Element) -> "ModuleVector":
        return ModuleVector(self.group, self.rank, {self.group.multiply(h, g): v for g, v in self.entries.items()})

    def __add__(self, other: "ModuleVector") -> "ModuleVector":
        out = ModuleVector(self.group, self.rank, dict(self.entries))
        for g, v in other.entries.items():
            out.add(g, v)
        return out

    def __neg__(self) -> "ModuleVector":
        return ModuleVector(self.group, self.rank, {g: tuple(-x for x in v) for g, v in self.entries.items()})

    def is_zero(self) -> bool:
        return not self.entries

    def __eq__(self, other):
        return isinstance(other, ModuleVector) and self.entries == other.entries

    def __repr__(self):
        return f"ModuleVector({self.entries!r})"


@dataclass
class WreathImage:
    """The Magnus image (a(w), pi(w)) with the wreath multiplication law."""

    a: ModuleVector
    base: Element

    def __mul__(self, other: "WreathImage") -> "WreathImage":
        return WreathImage(self.a + other.a.translate(self.base), self.a.group.multiply(self.base, other.base))

    def inverse(self) -> "WreathImage":
        binv = self.a.group.inverse(self.base)
        return WreathImage((-self.a).translate(binv), binv)

    def is_identity(self) -> bool:
        return self.a.is_zero() and self.a.group.is_identity(self.base)

    def __eq__(self, other):
        return isinstance(other, WreathImage) and self.base == other.base and self.a == other.a

    def group_element(self, W: WreathProduct) -> Element:
        """The same data as an element of the wreath product group W."""
        return (W._pack(dict(self.a.entries)), self.base)


class Flow:
    """Integer edge function on the marked Cayley graph of a group.

    Keys are (vertex, generator index); the key (x, i) denotes the marked
    edge (x, x sbar_i, s_i).
    """

    def __init__(self, group: MarkedGroup, edges: dict | None = None):
        self.group = group
        self.edges: dict[tuple[Element, int], int] = {}
        if edges:
            for e, c in edges.items():
                self.add(e, c)

    def add(self, edge: tuple[Element, int], c: int):
        v = self.edges.get(edge, 0) + c
        if v:
            self.edges[edge] = v
        else:
            self.edges.pop(edge, None)

    def value(self, vertex: Element, i: int) -> int:
        return self.edges.get((vertex, i), 0)

    def support(self):
        return set(self.edges)

    def __add__(self, other: "Flow") -> "Flow":
        out = Flow(self.group, dict(self.edges))
        for e, c in other.edges.items():
            out.add(e, c)
        return out

    def translate(self, h: Element) -> "Flow":
        return Flow(self.group, {(self.group.multiply(h, x), i): c for (x, i), c in self.edges.items()})

    def net_flow(self) -> dict:
        """f*(v) = sum of outgoing values minus sum of incoming values."""
        net: dict[Element, int] = {}
        gens = self.group.generators()
        for (x, i), c in self.edges.items():
            y = self.group.multiply(x, gens[i - 1])
            for v, d in ((x, c), (y, -c)):
                n = net.get(v, 0) + d
                if n:
                    net[v] = n
                else:
                    net.pop(v, None)
        return net

    def is_circulation(self) -> bool:
        return not self.net_flow()

    def is_zero(self) -> bool:
        return not self.edges

    def __eq__(self, other):
        return isinstance(other, Flow) and self.edges == other.edges

    def __repr__(self):
        return f"Flow({self.edges!r})"


def fox_derivatives(w: ReducedWord, group: MarkedGroup) -> list[GroupRingElement]:
    """All r projected Fox derivatives pi(d_{s_i} w), in one prefix pass."""
    if w.rank != group.rank:
        raise GroupError("word rank does not match group rank")
    outs = [GroupRingElement(group) for _ in range(group.rank)]
    gens = group.generators()
    invs = [group.inverse(g) for g in gens]
    x = group.identity()
    for i, e in w:
        if e == 1:
            outs[i - 1].add(x, 1)
            x = group.multiply(x, gens[i - 1])
        else:
            x = group.multiply(x, invs[i - 1])
            outs[i - 1].add(x, -1)
    return outs


def fox_derivative(w: ReducedWord, i: int, group: MarkedGroup) -> GroupRingElement:
    return fox_derivatives(w, group)[i - 1]


def magnus_embed(w: ReducedWord, group: MarkedGroup) -> WreathImage:
    """psi(w) = (a(w), pi(w)): column i of the a-part is pi(d_{s_i} w)."""
    derivs = fox_derivatives(w, group)
    a = ModuleVector(group, group.rank)
    for i, d in enumerate(derivs):
        for g, c in d.terms.items():
            a.add(g, tuple(c if j == i else 0 for j in range(group.rank)))
    return WreathImage(a, group.evaluate(w))


def flow_of_word(w: ReducedWord, group: MarkedGroup) -> Flow:
    """Trace the path of w from the identity, counting signed edge crossings."""
    if w.rank != group.rank:
        raise GroupError("word rank does not match group rank")
    f = Flow(group)
    gens = group.generators()
    invs = [group.inverse(g) for g in gens]
    x = group.identity()
    for i, e in w:
        if e == 1:
            f.add((x, i), 1)
            x = group.multiply(x, gens[i - 1])
        else:
            x = group.multiply(x, invs[i - 1])
            f.add((x, i), -1)
    return f


def words_equal_mod_NN(u: ReducedWord, v: ReducedWord, group: MarkedGroup) -> bool:
    """Equality in F_r/[N,N], N = ker(F_r -> group): same flow iff equal."""
    return flow_of_word(u, group) == flow_of_word(v, group)


def stretch_word(w: ReducedWord, m: int) -> ReducedWord:
    """delta_m replaces each letter s_i^e by s_i^(e m)."""
    if m < 1:
        raise GroupError("m must be >= 1")
    letters = []
    for i, e in w:
        letters.extend([(i, e)] * m)
    return ReducedWord(w.rank, tuple(letters))


def stretch_flow(f: Flow, m: int) -> tuple[Flow, bool]:
    """t_m: the stretched flow puts the value of (x, i) on the m edges
    (delta_m(x) sbar_i^j, i), 0 <= j < m.

    Returns (flow, verified): verified is False when the base group can not
    certify the injectivity hypotheses behind t_m (free abelian groups and
    the recursive Magnus tower can).
    """
    if m < 1:
        raise GroupError("m must be >= 1")
    G = f.group
    out = Flow(G)
    gens = G.generators()
    for (x, i), c in f.edges.items():
        p = G.stretch_element(x, m)
        for _ in range(m):
            out.add((p, i), c)
            p = G.multiply(p, gens[i - 1])
    return out, bool(getattr(G, "stretch_verified", False))


def vartheta_project(
    group: MarkedGroup,
    gammas: list[ReducedWord],
    exponents: list[int],
) -> tuple[WreathProduct, Element]:
    """Project a product gamma_1 rho^{x_1} ... gamma_p rho^{x_p} gamma_{p+1}
    onto Z wr Gbar, given the alternating form explicitly.

    gammas are words in the generators of group (the Gbar-projection oracle is
    evaluation in group); the i-th lamp increment x_i lands at the partial
    product sigma_i = gamma_1 ... gamma_i.  Returns the target wreath group
    (lamp Z over ``group``) together with the image element.
    """
    if len(gammas) != len(exponents) + 1:
        raise GroupError("alternating form needs one more gamma than exponents")
    W = WreathProduct(AbelianGroup(1), group)
    cfg: dict = {}
    sigma = group.identity()
    for gamma, x in zip(gammas, exponents):
        sigma = group.multiply(sigma, group.evaluate(gamma))
        v = cfg.get(sigma, (0,))[0] + x
        if v:
            cfg[sigma] = (v,)
        else:
            cfg.pop(sigma, None)
    sigma = group.multiply(sigma, group.evaluate(gammas[-1]))
    return W, (W._pack(cfg), sigma)
