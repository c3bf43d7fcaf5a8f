"""Stability concepts: individual rationality, blocking pairs, weak
non-wastefulness, Pareto domination among matchings, constrained efficiency,
and group stability against responsive institution preferences.

Every scan runs in individual-major, institution-minor index order so that
reported witnesses are reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import (
    AdmissionsProblem,
    ChoiceFunction,
    Matching,
    PriorityOrder,
    SearchSpaceTooLargeError,
    menu_size,
)

FILLS_EMPTY_SEAT = "fills-empty-seat"
DISPLACES_LOWER_PRIORITY = "displaces-lower-priority"


@dataclass(frozen=True)
class IRViolation:
    kind: str  # "individual-unacceptable-assignment" | "institution-holds-unacceptable"
    individual: int
    institution: int


@dataclass(frozen=True)
class BlockingPair:
    individual: int
    institution: int
    reason: str
    displaced: int | None = None


@dataclass(frozen=True)
class StabilityReport:
    ir_violations: tuple[IRViolation, ...]
    blocking_pairs: tuple[BlockingPair, ...]

    @property
    def stable(self) -> bool:
        return not self.ir_violations and not self.blocking_pairs


@dataclass(frozen=True)
class WasteReport:
    witnesses: tuple[tuple[int, int], ...]  # (individual, institution)

    @property
    def holds(self) -> bool:
        return not self.witnesses


@dataclass(frozen=True)
class Coalition:
    individuals: tuple[int, ...]
    institutions: tuple[int, ...]
    alternative: Matching


def _pair_menu(assigned: int | None, institution: int) -> int:
    menu = 1 << institution
    if assigned is not None:
        menu |= 1 << assigned
    assert menu_size(menu) <= 2
    return menu


def individually_rational(problem: AdmissionsProblem, matching: Matching) -> tuple[IRViolation, ...]:
    """Individuals assigned an institution they would not choose alone, and
    institutions holding individuals ranked below the empty seat."""
    violations = []
    for i, s in enumerate(matching.assignment):
        if s is not None and not problem.choices[i].is_acceptable(s):
            violations.append(IRViolation("individual-unacceptable-assignment", i, s))
    for s in range(problem.n_institutions):
        for i in matching.institution_members(s):
            if not problem.priorities[s].is_acceptable(i):
                violations.append(IRViolation("institution-holds-unacceptable", i, s))
    return tuple(violations)


def blocking_pairs(problem: AdmissionsProblem, matching: Matching) -> tuple[BlockingPair, ...]:
    """All pairs (i, s) with s != mu(i) where i chooses s from {mu(i), s} and
    s either has a free seat for the acceptable i or holds someone i beats."""
    pairs = []
    sizes = matching.roster_sizes(problem.n_institutions)
    for i, assigned in enumerate(matching.assignment):
        cf = problem.choices[i]
        for s in range(problem.n_institutions):
            if s == assigned:
                continue
            if cf.choice(_pair_menu(assigned, s)) != s:
                continue
            priority = problem.priorities[s]
            if sizes[s] < problem.capacities[s] and priority.is_acceptable(i):
                pairs.append(BlockingPair(i, s, FILLS_EMPTY_SEAT))
                continue
            members = matching.institution_members(s)
            rank_i = priority.rank_of(i)
            beaten = [j for j in members if priority.rank_of(j) > rank_i]
            if beaten:
                displaced = max(beaten, key=priority.rank_of)
                pairs.append(BlockingPair(i, s, DISPLACES_LOWER_PRIORITY, displaced))
    return tuple(pairs)


def is_stable(problem: AdmissionsProblem, matching: Matching) -> StabilityReport:
    return StabilityReport(
        individually_rational(problem, matching),
        blocking_pairs(problem, matching),
    )


def weakly_non_wasteful(problem: AdmissionsProblem, matching: Matching) -> WasteReport:
    """No unassigned individual faces an under-capacity institution that she
    finds acceptable and that finds her acceptable."""
    witnesses = []
    sizes = matching.roster_sizes(problem.n_institutions)
    for i, assigned in enumerate(matching.assignment):
        if assigned is not None:
            continue
        for s in range(problem.n_institutions):
            if (
                sizes[s] < problem.capacities[s]
                and problem.choices[i].is_acceptable(s)
                and problem.priorities[s].is_acceptable(i)
            ):
                witnesses.append((i, s))
    return WasteReport(tuple(witnesses))


def pareto_dominates(choices: Sequence[ChoiceFunction], challenger: Matching,
                     incumbent: Matching) -> bool:
    """challenger Pareto dominates incumbent when no individual's pair choice
    picks her incumbent assignment and at least one individual's pair choice
    picks her challenger assignment (empty menus choose Nothing)."""
    someone_gains = False
    for i, cf in enumerate(choices):
        new, old = challenger.assignment[i], incumbent.assignment[i]
        menu = (0 if new is None else 1 << new) | (0 if old is None else 1 << old)
        chosen = cf.choice(menu)
        if chosen == old:
            return False
        if chosen == new:
            someone_gains = True
    return someone_gains


def constrained_efficient(problem: AdmissionsProblem, matching: Matching,
                          stable_set: Iterable[Matching]) -> bool:
    """True when no member of the stable set Pareto dominates the matching."""
    return not any(
        pareto_dominates(problem.choices, other, matching)
        for other in stable_set
        if other != matching
    )


def responsive_prefers(priority: PriorityOrder, capacity: int,
                       left: Iterable[int], right: Iterable[int]) -> bool:
    """Rank dominance: pad both rosters to capacity with the empty seat, sort
    by priority (acceptable > empty > unacceptable), and require pointwise
    weak improvement with at least one strict one.  This is the partial order
    every responsive completion of the priority agrees on."""

    def score(individual: int | None) -> tuple[int, int]:
        if individual is None:
            return (1, 0)
        if priority.is_acceptable(individual):
            return (0, priority.rank_of(individual))
        return (2, priority.rank_of(individual))

    pad_left = sorted(map(score, left)) + [(1, 0)] * capacity
    pad_right = sorted(map(score, right)) + [(1, 0)] * capacity
    strict = False
    for a, b in zip(pad_left[:capacity], pad_right[:capacity]):
        if a > b:
            return False
        if a < b:
            strict = True
    return strict


def _feasible_matchings(problem: AdmissionsProblem) -> Iterable[Matching]:
    # Local enumeration to keep this module independent of the oracle layer.
    options = [None] + list(range(problem.n_institutions))
    for combo in itertools.product(options, repeat=problem.n_individuals):
        sizes = [0] * problem.n_institutions
        feasible = True
        for s in combo:
            if s is not None:
                sizes[s] += 1
                if sizes[s] > problem.capacities[s]:
                    feasible = False
                    break
        if feasible:
            yield Matching(combo)


def group_blocking_coalition(problem: AdmissionsProblem, matching: Matching,
                             size_cap: int | None = None,
                             search_cap: int = 2_000_000) -> Coalition | None:
    """Exhaustive search for a coalition of individuals and institutions that
    blocks the matching through some alternative matching: coalition
    individuals strictly move to coalition institutions they choose over their
    current assignment, coalition institutions strictly gain under rank
    dominance, and any new admit of a coalition institution belongs to the
    coalition.  Returns the first witness in deterministic order.
    """
    n_ind, n_inst = problem.n_individuals, problem.n_institutions
    space = (n_inst + 1) ** n_ind * (1 << (n_ind + n_inst))
    if space > search_cap:
        raise SearchSpaceTooLargeError(
            f"coalition search space {space} exceeds cap {search_cap}"
        )
    for nu in _feasible_matchings(problem):
        if nu == matching:
            continue
        # Individuals eligible for the coalition: strictly moved, choosing the
        # new assignment from the pair.
        eligible_ind = []
        for i in range(n_ind):
            new, old = nu.assignment[i], matching.assignment[i]
            if new == old:
                continue
            menu = (0 if new is None else 1 << new) | (0 if old is None else 1 << old)
            if problem.choices[i].choice(menu) == new:
                eligible_ind.append(i)
        eligible_inst = [
            s for s in range(n_inst)
            if responsive_prefers(
                problem.priorities[s], problem.capacities[s],
                nu.institution_members(s), matching.institution_members(s),
            )
        ]
        new_members = [
            frozenset(nu.institution_members(s)) - frozenset(matching.institution_members(s))
            for s in range(n_inst)
        ]
        for k_ind in range(len(eligible_ind) + 1):
            for ind_combo in itertools.combinations(eligible_ind, k_ind):
                ind_set = frozenset(ind_combo)
                for k_inst in range(len(eligible_inst) + 1):
                    if k_ind + k_inst == 0:
                        continue
                    if size_cap is not None and k_ind + k_inst > size_cap:
                        continue
                    for inst_combo in itertools.combinations(eligible_inst, k_inst):
                        inst_set = frozenset(inst_combo)
                        # Coalition individuals matched by nu stay inside the
                        # coalition; new admits come from the coalition.
                        if any(
                            nu.assignment[i] is not None and nu.assignment[i] not in inst_set
                            for i in ind_combo
                        ):
                            continue
                        if any(not new_members[s] <= ind_set for s in inst_combo):
                            continue
                        return Coalition(ind_combo, inst_combo, nu)
    return None
