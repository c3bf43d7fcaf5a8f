"""Ground data model for admissions markets with unit-demand choice functions.

Individuals carry choice functions (a chosen institution, or nothing, for each
menu of institutions); institutions carry strict priority orders with an
explicit acceptability threshold.  Menus are encoded as bitmasks over the
institution roster, so two equal sets always encode identically.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

# A menu is a bitmask over institution indices; bit k set means institution k
# is on the menu.  "Nothing" (the empty choice) is represented by None.
Menu = int
Choice = int | None

MAX_INSTITUTIONS = 16
MAX_INDIVIDUALS = 16


class MenumatchError(Exception):
    """Base class for errors raised by this package."""


class MenuNotCoveredError(MenumatchError):
    """A choice table was queried with a menu it does not define."""


class RequiresFullTableError(MenumatchError):
    """An operation needs a full choice table but got a binary-complete one."""


class AxiomViolationError(MenumatchError):
    """A mechanism with a stability guarantee was given a violating profile."""

    def __init__(self, message: str, violations: tuple = ()):
        super().__init__(message)
        self.violations = violations


class SearchSpaceTooLargeError(MenumatchError):
    """An exhaustive enumeration would exceed the configured cap."""


class NoViolationPresentError(MenumatchError):
    """A counterexample constructor was given a non-violating choice function."""


class UnknownIdError(MenumatchError):
    """A matching or document references an id outside the problem's rosters."""


class ReplayMismatchError(MenumatchError):
    """Replaying a mechanism trace did not reproduce the recorded run."""


# ---------------------------------------------------------------------------
# Menus
# ---------------------------------------------------------------------------

def menu_of(indices: Iterable[int]) -> Menu:
    """Encode a set of institution indices as a canonical bitmask menu."""
    mask = 0
    for idx in indices:
        mask |= 1 << idx
    return mask


def menu_members(menu: Menu) -> tuple[int, ...]:
    """Decode a menu into its sorted institution indices."""
    members = []
    idx = 0
    while menu:
        if menu & 1:
            members.append(idx)
        menu >>= 1
        idx += 1
    return tuple(members)


def menu_size(menu: Menu) -> int:
    return bin(menu).count("1")


def iter_menus(ground_size: int, *, max_size: int | None = None) -> Iterator[Menu]:
    """All nonempty menus over a ground set, ascending; optionally size-capped."""
    for mask in range(1, 1 << ground_size):
        if max_size is None or menu_size(mask) <= max_size:
            yield mask


class Completeness(enum.Enum):
    FULL = "full"
    BINARY = "binary"


# ---------------------------------------------------------------------------
# Choice functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=True)
class ChoiceFunction:
    """Unit-demand choice table: menu -> chosen institution or Nothing (None).

    Full tables define every nonempty menu over the ground set; binary-complete
    tables define every menu of size one and two (which is all that stability
    checks and the proposal mechanisms ever query).  The empty menu is not
    stored: choosing from it is always Nothing.
    """

    ground_size: int
    kind: Completeness
    table: Mapping[Menu, Choice] = field(hash=False)

    def __hash__(self) -> int:
        return hash(self.fingerprint())

    def fingerprint(self) -> tuple:
        return (
            self.ground_size,
            self.kind.value,
            tuple(sorted(self.table.items(), key=lambda kv: kv[0])),
        )

    def choice(self, menu: Menu) -> Choice:
        """The stored choice from a menu; Nothing for the empty menu."""
        if menu == 0:
            return None
        if menu >> self.ground_size:
            raise ValueError(f"menu {bin(menu)} outside ground set of size {self.ground_size}")
        if self.kind is Completeness.BINARY and menu_size(menu) > 2:
            raise MenuNotCoveredError(
                f"binary-complete table queried with a menu of size {menu_size(menu)}"
            )
        try:
            return self.table[menu]
        except KeyError:
            raise MenuNotCoveredError(f"menu {menu_members(menu)} not in choice table") from None

    def is_acceptable(self, institution: int) -> bool:
        """An institution is acceptable when chosen from its own singleton menu."""
        return self.choice(1 << institution) == institution

    def acceptable_menu(self) -> Menu:
        """Bitmask of all acceptable institutions."""
        mask = 0
        for s in range(self.ground_size):
            if self.is_acceptable(s):
                mask |= 1 << s
        return mask


def full_table(ground_size: int, table: Mapping[Menu, Choice]) -> ChoiceFunction:
    return ChoiceFunction(ground_size, Completeness.FULL, dict(table))


def binary_table(ground_size: int, table: Mapping[Menu, Choice]) -> ChoiceFunction:
    return ChoiceFunction(ground_size, Completeness.BINARY, dict(table))


def from_preference_list(ground_size: int, ranked: Iterable[int]) -> ChoiceFunction:
    """Full table induced by a strict order over acceptable institutions.

    The choice from any menu is the highest-ranked acceptable institution on
    it, or Nothing when the menu holds no acceptable institution.
    """
    order = tuple(ranked)
    if len(set(order)) != len(order):
        raise ValueError("preference list repeats an institution")
    table: dict[Menu, Choice] = {}
    for menu in iter_menus(ground_size):
        chosen: Choice = None
        for s in order:
            if menu & (1 << s):
                chosen = s
                break
        table[menu] = chosen
    return ChoiceFunction(ground_size, Completeness.FULL, table)


# Spec-named operations over the table types.

def menu_choice(cf: ChoiceFunction, menu: Menu) -> Choice:
    return cf.choice(menu)


def is_acceptable_to_individual(cf: ChoiceFunction, institution: int) -> bool:
    return cf.is_acceptable(institution)


# ---------------------------------------------------------------------------
# Priorities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PriorityOrder:
    """Strict ranking of all individuals, best first, with an acceptability
    threshold: individuals at positions < threshold rank above the empty seat."""

    ranking: tuple[int, ...]
    threshold: int

    def rank_of(self, individual: int) -> int:
        return self.ranking.index(individual)

    def is_acceptable(self, individual: int) -> bool:
        return self.rank_of(individual) < self.threshold

    def merit(self, individual: int) -> int:
        """Merit score: one plus the count of individuals ranked below, or 0
        when unacceptable.  Higher priority means a higher score."""
        rank = self.rank_of(individual)
        if rank >= self.threshold:
            return 0
        return len(self.ranking) - rank

    def lowest_merit(self) -> int | None:
        """Lowest non-zero merit score, or None when nobody is acceptable."""
        if self.threshold == 0:
            return None
        return len(self.ranking) - (self.threshold - 1)


def is_acceptable_to_institution(priority: PriorityOrder, individual: int) -> bool:
    return priority.is_acceptable(individual)


def merit_score(priority: PriorityOrder, individual: int) -> int:
    return priority.merit(individual)


# ---------------------------------------------------------------------------
# Problems and matchings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdmissionsProblem:
    """Individuals, institutions with capacities, one choice function per
    individual and one priority order per institution."""

    institutions: tuple[str, ...]
    individuals: tuple[str, ...]
    capacities: tuple[int, ...]
    choices: tuple[ChoiceFunction, ...]
    priorities: tuple[PriorityOrder, ...]

    @property
    def n_institutions(self) -> int:
        return len(self.institutions)

    @property
    def n_individuals(self) -> int:
        return len(self.individuals)

    @property
    def full_menu(self) -> Menu:
        return (1 << self.n_institutions) - 1

    def institution_index(self, name: str) -> int:
        try:
            return self.institutions.index(name)
        except ValueError:
            raise UnknownIdError(f"unknown institution {name!r}") from None

    def individual_index(self, name: str) -> int:
        try:
            return self.individuals.index(name)
        except ValueError:
            raise UnknownIdError(f"unknown individual {name!r}") from None

    def mutually_acceptable(self, individual: int) -> Menu:
        """Menu of institutions acceptable to the individual that also find
        the individual acceptable."""
        mask = 0
        cf = self.choices[individual]
        for s in range(self.n_institutions):
            if cf.is_acceptable(s) and self.priorities[s].is_acceptable(individual):
                mask |= 1 << s
        return mask


@dataclass(frozen=True)
class Matching:
    """Assignment of each individual to one institution or to None.  The
    institution rosters are derived, so the inverse is consistent by
    construction."""

    assignment: tuple[Choice, ...]

    def institution_members(self, institution: int) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.assignment) if s == institution)

    def roster_sizes(self, n_institutions: int) -> list[int]:
        sizes = [0] * n_institutions
        for s in self.assignment:
            if s is not None:
                sizes[s] += 1
        return sizes

    def sort_key(self) -> tuple[int, ...]:
        return tuple(-1 if s is None else s for s in self.assignment)


def empty_matching(problem: AdmissionsProblem) -> Matching:
    return Matching((None,) * problem.n_individuals)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    issues: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def add(self, issue: str) -> None:
        self.issues.append(issue)


def validate_problem(problem: AdmissionsProblem) -> ValidationReport:
    """Collect every violated structural invariant; never raises."""
    report = ValidationReport()
    n_inst = problem.n_institutions
    n_ind = problem.n_individuals
    if n_inst > MAX_INSTITUTIONS:
        report.add(f"too many institutions ({n_inst} > {MAX_INSTITUTIONS})")
    if n_ind > MAX_INDIVIDUALS:
        report.add(f"too many individuals ({n_ind} > {MAX_INDIVIDUALS})")
    if len(set(problem.institutions)) != n_inst:
        report.add("duplicate institution names")
    if len(set(problem.individuals)) != n_ind:
        report.add("duplicate individual names")
    if len(problem.capacities) != n_inst:
        report.add("capacity list does not match the institution roster")
    if len(problem.choices) != n_ind:
        report.add("choice profile does not match the individual roster")
    if len(problem.priorities) != n_inst:
        report.add("priority profile does not match the institution roster")

    for s, capacity in enumerate(problem.capacities[:n_inst]):
        if capacity < 1:
            report.add(f"institution {problem.institutions[s]!r} has capacity {capacity} < 1")

    for idx, cf in enumerate(problem.choices[:n_ind]):
        name = problem.individuals[idx]
        if cf.ground_size != n_inst:
            report.add(f"choice function of {name!r} has ground size {cf.ground_size}, expected {n_inst}")
            continue
        full = problem.full_menu
        for menu, chosen in cf.table.items():
            if menu == 0:
                if chosen is not None:
                    report.add(f"choice function of {name!r} chooses from the empty menu")
                continue
            if menu & ~full:
                report.add(f"choice function of {name!r} has a menu outside the ground set")
            elif chosen is not None and not (menu & (1 << chosen)):
                inst = problem.institutions[chosen] if chosen < n_inst else chosen
                report.add(
                    f"choice function of {name!r} picks {inst!r} outside menu "
                    f"{{{','.join(problem.institutions[m] for m in menu_members(menu))}}}"
                )
            if cf.kind is Completeness.BINARY and menu_size(menu) > 2:
                report.add(f"binary-complete table of {name!r} defines a menu of size {menu_size(menu)}")
        required = iter_menus(n_inst) if cf.kind is Completeness.FULL else iter_menus(n_inst, max_size=2)
        missing = [m for m in required if m not in cf.table]
        if missing:
            report.add(f"choice table of {name!r} is missing {len(missing)} required menu(s)")

    for s, priority in enumerate(problem.priorities[:n_inst]):
        name = problem.institutions[s]
        if sorted(priority.ranking) != list(range(n_ind)):
            report.add(f"priority order of {name!r} is not a permutation of the individual roster")
        if not 0 <= priority.threshold <= n_ind:
            report.add(f"priority threshold of {name!r} out of range")
    return report


def validate_matching(problem: AdmissionsProblem, matching: Matching) -> ValidationReport:
    """Check capacities (inverse consistency is structural).  Raises
    UnknownIdError when the matching references ids outside the problem."""
    if len(matching.assignment) != problem.n_individuals:
        raise UnknownIdError(
            f"matching covers {len(matching.assignment)} individuals, problem has {problem.n_individuals}"
        )
    for s in matching.assignment:
        if s is not None and not 0 <= s < problem.n_institutions:
            raise UnknownIdError(f"matching references institution index {s}")
    report = ValidationReport()
    sizes = matching.roster_sizes(problem.n_institutions)
    for s, size in enumerate(sizes):
        if size > problem.capacities[s]:
            report.add(
                f"institution {problem.institutions[s]!r} holds {size} individuals, capacity {problem.capacities[s]}"
            )
    return report


# ---------------------------------------------------------------------------
# JSON documents
# ---------------------------------------------------------------------------

def _menu_key(menu: Menu, institutions: tuple[str, ...]) -> str:
    return ",".join(sorted(institutions[s] for s in menu_members(menu)))


def _parse_menu_key(key: str, index: Mapping[str, int]) -> Menu:
    if key == "":
        return 0
    mask = 0
    for part in key.split(","):
        name = part.strip()
        if name not in index:
            raise UnknownIdError(f"unknown institution {name!r} in menu key {key!r}")
        bit = 1 << index[name]
        if mask & bit:
            raise ValueError(f"menu key {key!r} repeats {name!r}")
        mask |= bit
    return mask


def problem_to_dict(problem: AdmissionsProblem) -> dict:
    doc: dict = {
        "institutions": [
            {"name": name, "capacity": problem.capacities[s]}
            for s, name in enumerate(problem.institutions)
        ],
        "individuals": list(problem.individuals),
        "priorities": {
            problem.institutions[s]: {
                "ranking": [problem.individuals[i] for i in priority.ranking],
                "threshold": priority.threshold,
            }
            for s, priority in enumerate(problem.priorities)
        },
        "choices": {},
    }
    for i, cf in enumerate(problem.choices):
        table = {
            _menu_key(menu, problem.institutions): (
                None if chosen is None else problem.institutions[chosen]
            )
            for menu, chosen in cf.table.items()
            if menu != 0
        }
        doc["choices"][problem.individuals[i]] = {"kind": cf.kind.value, "table": table}
    return doc


def problem_from_dict(doc: Mapping) -> AdmissionsProblem:
    institutions = tuple(entry["name"] for entry in doc["institutions"])
    capacities = tuple(int(entry["capacity"]) for entry in doc["institutions"])
    individuals = tuple(doc["individuals"])
    if len(institutions) > MAX_INSTITUTIONS:
        raise ValueError(f"at most {MAX_INSTITUTIONS} institutions supported, got {len(institutions)}")
    if len(individuals) > MAX_INDIVIDUALS:
        raise ValueError(f"at most {MAX_INDIVIDUALS} individuals supported, got {len(individuals)}")
    for name in institutions + individuals:
        if not name or "," in name:
            raise ValueError(f"names must be non-empty and comma-free, got {name!r}")

    inst_index = {name: s for s, name in enumerate(institutions)}
    ind_index = {name: i for i, name in enumerate(individuals)}

    priorities = []
    for name in institutions:
        entry = doc["priorities"][name]
        ranking = tuple(ind_index[n] for n in entry["ranking"])
        priorities.append(PriorityOrder(ranking, int(entry["threshold"])))

    choices = []
    for name in individuals:
        entry = doc["choices"][name]
        kind = entry.get("kind", "full")
        if kind == "preference-list":
            ranked = [inst_index[n] for n in entry["list"]]
            choices.append(from_preference_list(len(institutions), ranked))
            continue
        table: dict[Menu, Choice] = {}
        for key, value in entry["table"].items():
            menu = _parse_menu_key(key, inst_index)
            if menu == 0:
                if value is not None:
                    raise ValueError("the empty menu must map to null")
                continue
            if value is None:
                table[menu] = None
            else:
                if value not in inst_index:
                    raise UnknownIdError(f"unknown institution {value!r} in choice table")
                table[menu] = inst_index[value]
        completeness = Completeness.FULL if kind == "full" else Completeness.BINARY
        if kind not in ("full", "binary"):
            raise ValueError(f"unknown choice table kind {kind!r}")
        choices.append(ChoiceFunction(len(institutions), completeness, table))

    return AdmissionsProblem(institutions, individuals, capacities, tuple(choices), tuple(priorities))


def load_problem(path: str) -> AdmissionsProblem:
    with open(path, "r", encoding="utf-8") as fh:
        return problem_from_dict(json.load(fh))


def dump_problem(problem: AdmissionsProblem, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(problem), fh, indent=2, sort_keys=True)
        fh.write("\n")


def matching_to_dict(problem: AdmissionsProblem, matching: Matching) -> dict:
    return {
        "assignment": {
            problem.individuals[i]: (None if s is None else problem.institutions[s])
            for i, s in enumerate(matching.assignment)
        }
    }


def matching_from_dict(problem: AdmissionsProblem, doc: Mapping) -> Matching:
    assignment: list[Choice] = [None] * problem.n_individuals
    for name, inst in doc["assignment"].items():
        i = problem.individual_index(name)
        assignment[i] = None if inst is None else problem.institution_index(inst)
    return Matching(tuple(assignment))


def load_matching(problem: AdmissionsProblem, path: str) -> Matching:
    with open(path, "r", encoding="utf-8") as fh:
        return matching_from_dict(problem, json.load(fh))
