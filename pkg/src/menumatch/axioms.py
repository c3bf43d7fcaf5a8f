"""Choice-behavior axioms over unit-demand choice functions.

Four conditions are checked: weak acyclicity and acceptable-consistency (the
existence conditions for stable matchings), acyclicity (the stronger chain
condition the sequential cut-off mechanism needs), and path independence (the
condition equivalent to maximizing a strict order over acceptable
institutions).  The module also computes C-maximal sets, extracts
rationalizing orders, and builds proxy preference orders layer by layer.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Sequence

from .core import (
    AxiomViolationError,
    ChoiceFunction,
    Completeness,
    Menu,
    RequiresFullTableError,
    from_preference_list,
    iter_menus,
    menu_members,
    menu_size,
)

WEAKLY_ACYCLIC = "weakly-acyclic"
ACCEPTABLE_CONSISTENT = "acceptable-consistent"
ACYCLIC = "acyclic"
PATH_INDEPENDENT = "path-independent"


@dataclass(frozen=True)
class AxiomVerdict:
    """Outcome of one axiom check.  When the axiom fails, ``witness`` carries
    a payload that re-validates as a genuine violation through menu lookups:

    - acceptable-consistent: (acceptable, unacceptable) pair with the
      unacceptable institution chosen from the pair,
    - weakly-acyclic: a tuple of acceptable institutions where each beats the
      next in the pair menu, cyclically,
    - acyclic: (chain, (start, end)) where consecutive chain members beat the
      next but the start does not beat the end,
    - path-independent: (menu_a, menu_b) bitmasks violating the identity.
    """

    axiom: str
    holds: bool
    witness: tuple = ()


@dataclass(frozen=True)
class PairwiseDigraph:
    """Revealed pairwise relation on acceptable institutions: an edge s -> s'
    means s is chosen from the pair {s, s'}."""

    nodes: Menu
    beats: tuple[Menu, ...]  # indexed by institution; only acceptable bits set

    def edge(self, s: int, t: int) -> bool:
        return bool(self.beats[s] & (1 << t))


def pairwise_digraph(cf: ChoiceFunction) -> PairwiseDigraph:
    nodes = cf.acceptable_menu()
    beats = [0] * cf.ground_size
    members = menu_members(nodes)
    for a_pos, a in enumerate(members):
        for b in members[a_pos + 1:]:
            chosen = cf.choice((1 << a) | (1 << b))
            if chosen == a:
                beats[a] |= 1 << b
            elif chosen == b:
                beats[b] |= 1 << a
    return PairwiseDigraph(nodes, tuple(beats))


def check_acceptable_consistency(cf: ChoiceFunction) -> AxiomVerdict:
    """An unacceptable institution is never chosen over an acceptable one."""
    acceptable = cf.acceptable_menu()
    for s in range(cf.ground_size):
        if not acceptable & (1 << s):
            continue
        for t in range(cf.ground_size):
            if t == s or acceptable & (1 << t):
                continue
            if cf.choice((1 << s) | (1 << t)) == t:
                return AxiomVerdict(ACCEPTABLE_CONSISTENT, False, (s, t))
    return AxiomVerdict(ACCEPTABLE_CONSISTENT, True)


def _find_cycle(digraph: PairwiseDigraph) -> tuple[int, ...] | None:
    """First directed cycle in deterministic DFS order, as a node tuple with
    consecutive (and wrap-around) edges in the beats direction."""
    color: dict[int, int] = {}  # 0 absent, 1 on stack, 2 done
    stack: list[int] = []

    def dfs(node: int) -> tuple[int, ...] | None:
        color[node] = 1
        stack.append(node)
        for nxt in menu_members(digraph.beats[node]):
            state = color.get(nxt, 0)
            if state == 1:
                return tuple(stack[stack.index(nxt):])
            if state == 0:
                found = dfs(nxt)
                if found:
                    return found
        stack.pop()
        color[node] = 2
        return None

    for start in menu_members(digraph.nodes):
        if color.get(start, 0) == 0:
            found = dfs(start)
            if found:
                return found
    return None


def check_weak_acyclicity(cf: ChoiceFunction) -> AxiomVerdict:
    """No strict cycle of pairwise choices among acceptable institutions."""
    cycle = _find_cycle(pairwise_digraph(cf))
    if cycle is None:
        return AxiomVerdict(WEAKLY_ACYCLIC, True)
    return AxiomVerdict(WEAKLY_ACYCLIC, False, cycle)


def _shortest_chain(digraph: PairwiseDigraph, start: int, end: int) -> tuple[int, ...]:
    """Shortest beats-path from start to end (length >= 2 by construction of
    the caller), found by breadth-first search."""
    frontier = [(start,)]
    seen = {start}
    while frontier:
        nxt: list[tuple[int, ...]] = []
        for path in frontier:
            for t in menu_members(digraph.beats[path[-1]]):
                if t == end and len(path) >= 2:
                    return path + (t,)
                if t not in seen:
                    seen.add(t)
                    nxt.append(path + (t,))
        frontier = nxt
    raise AssertionError("chain vanished while building an acyclicity witness")


def check_acyclicity(cf: ChoiceFunction) -> AxiomVerdict:
    """Chains of pairwise choices are transitively closed: whenever s' is
    reachable from s through two or more beats edges, s must beat s' directly.
    Implies weak acyclicity."""
    digraph = pairwise_digraph(cf)
    members = menu_members(digraph.nodes)
    # reach[s]: nodes reachable from s along >= 1 edges.
    reach = list(digraph.beats)
    changed = True
    while changed:
        changed = False
        for s in members:
            mask = reach[s]
            for t in menu_members(mask):
                mask |= reach[t]
            if mask != reach[s]:
                reach[s] = mask
                changed = True
    for s in members:
        two_plus = 0
        for t in menu_members(digraph.beats[s]):
            two_plus |= reach[t]
        for t in menu_members(two_plus & ~(1 << s)):
            if not digraph.edge(s, t):
                chain = _shortest_chain(digraph, s, t)
                return AxiomVerdict(ACYCLIC, False, (chain, (s, t)))
    return AxiomVerdict(ACYCLIC, True)


def check_path_independence(cf: ChoiceFunction) -> AxiomVerdict:
    """C(A u B) = C(C(A) u B) for every ordered pair of menus."""
    if cf.kind is not Completeness.FULL:
        raise RequiresFullTableError("path independence needs a full choice table")
    total = 1 << cf.ground_size
    for menu_a in range(total):
        inner = cf.choice(menu_a)
        segmented_base = 0 if inner is None else (1 << inner)
        for menu_b in range(total):
            if cf.choice(menu_a | menu_b) != cf.choice(segmented_base | menu_b):
                return AxiomVerdict(PATH_INDEPENDENT, False, (menu_a, menu_b))
    return AxiomVerdict(PATH_INDEPENDENT, True)


def c_maximal(cf: ChoiceFunction, menu: Menu) -> Menu:
    """Members of the menu that no other menu member is chosen over in a
    pairwise comparison."""
    result = 0
    members = menu_members(menu)
    for s in members:
        dominated = False
        for t in members:
            if t != s and cf.choice((1 << s) | (1 << t)) == t:
                dominated = True
                break
        if not dominated:
            result |= 1 << s
    return result


# ---------------------------------------------------------------------------
# Orders over acceptable institutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimpleOrder:
    """Strict order over the acceptable institutions, best first; unacceptable
    institutions sit below the empty option and are listed separately."""

    ranked: tuple[int, ...]
    unacceptable: tuple[int, ...]

    @property
    def ground_size(self) -> int:
        return len(self.ranked) + len(self.unacceptable)

    def is_acceptable(self, institution: int) -> bool:
        return institution in self.ranked

    def position(self, institution: int) -> int:
        return self.ranked.index(institution)

    def best(self, menu: Menu) -> int | None:
        """Highest-ranked acceptable institution on the menu, if any."""
        for s in self.ranked:
            if menu & (1 << s):
                return s
        return None

    def to_choice_function(self) -> ChoiceFunction:
        return from_preference_list(self.ground_size, self.ranked)


@dataclass(frozen=True)
class RationalizationResult:
    order: SimpleOrder | None
    failing_menu: Menu | None

    @property
    def rationalizable(self) -> bool:
        return self.order is not None


def rationalize(cf: ChoiceFunction) -> RationalizationResult:
    """Extract the unique simple order that rationalizes the table, verifying
    it against every menu; succeeds exactly on path independent tables."""
    if cf.kind is not Completeness.FULL:
        raise RequiresFullTableError("rationalization needs a full choice table")
    acceptable = menu_members(cf.acceptable_menu())
    unacceptable = tuple(s for s in range(cf.ground_size) if s not in acceptable)

    wins = {s: 0 for s in acceptable}
    for a_pos, a in enumerate(acceptable):
        for b in acceptable[a_pos + 1:]:
            pair = (1 << a) | (1 << b)
            chosen = cf.choice(pair)
            if chosen is None:
                return RationalizationResult(None, pair)
            wins[chosen] += 1
    # A transitive total pairwise relation has pairwise distinct win counts;
    # any defect surfaces below when the candidate is checked on every menu.
    ranked = tuple(sorted(acceptable, key=lambda s: (-wins[s], s)))
    candidate = SimpleOrder(ranked, unacceptable)
    for menu in iter_menus(cf.ground_size):
        if cf.choice(menu) != candidate.best(menu):
            return RationalizationResult(None, menu)
    return RationalizationResult(candidate, None)


@functools.lru_cache(maxsize=65536)
def build_proxy(cf: ChoiceFunction, tie_break: tuple[int, ...] | None = None,
                checked: bool = True) -> SimpleOrder:
    """Proxy preference order consistent with all singleton and pair choices:
    whenever s is chosen from {s, s'}, s ranks above s'; acceptable
    institutions rank above the empty option, unacceptable ones below.

    Built by peeling C-maximal layers of the acceptable set; ties inside a
    layer break by lowest institution index (or by the given permutation).
    """
    if checked:
        for verdict in (check_weak_acyclicity(cf), check_acceptable_consistency(cf)):
            if not verdict.holds:
                raise AxiomViolationError(
                    f"proxy construction requires a {verdict.axiom} choice function",
                    ((verdict),),
                )
    layer_key = (lambda s: s) if tie_break is None else tie_break.index
    ranked: list[int] = []
    work = cf.acceptable_menu()
    while work:
        layer = c_maximal(cf, work)
        if layer == 0:
            raise AxiomViolationError("proxy construction stalled on a pairwise cycle")
        ranked.extend(sorted(menu_members(layer), key=layer_key))
        work &= ~layer
    unacceptable = tuple(s for s in range(cf.ground_size) if not cf.is_acceptable(s))
    order = SimpleOrder(tuple(ranked), unacceptable)
    _assert_proxy_conditions(cf, order)
    return order


def _assert_proxy_conditions(cf: ChoiceFunction, order: SimpleOrder) -> None:
    """Mechanical re-check of the three proxy conditions after construction."""
    for s in range(cf.ground_size):
        if cf.is_acceptable(s) != order.is_acceptable(s):
            raise AssertionError("proxy misplaces an institution relative to the empty option")
    for a_pos, a in enumerate(order.ranked):
        for b in order.ranked[a_pos + 1:]:
            if cf.choice((1 << a) | (1 << b)) == b:
                raise AssertionError("proxy order contradicts a pairwise choice")


def describe_witness(verdict: AxiomVerdict, institutions: Sequence[str]) -> str:
    """Human-readable rendering of a violation witness."""
    if verdict.holds:
        return ""
    if verdict.axiom == ACCEPTABLE_CONSISTENT:
        s, t = verdict.witness
        return f"{institutions[t]} (unacceptable) chosen over {institutions[s]} (acceptable)"
    if verdict.axiom == WEAKLY_ACYCLIC:
        names = [institutions[s] for s in verdict.witness]
        return "pairwise cycle " + " > ".join(names + [names[0]])
    if verdict.axiom == ACYCLIC:
        chain, (s, t) = verdict.witness
        chain_names = " > ".join(institutions[x] for x in chain)
        return f"chain {chain_names} but {institutions[s]} does not beat {institutions[t]}"
    if verdict.axiom == PATH_INDEPENDENT:
        menu_a, menu_b = verdict.witness
        fmt = lambda m: "{" + ",".join(institutions[x] for x in menu_members(m)) + "}"
        return f"C({fmt(menu_a)} u {fmt(menu_b)}) != C(C({fmt(menu_a)}) u {fmt(menu_b)})"
    return repr(verdict.witness)
