"""Type-class partitions for the multi-hypothesis converse.

A type class collects all message vectors with exactly t active entries.
For t >= 2 it is partitioned by first growing a maximal greedy code of
minimum Hamming distance 5 inside the class, then assigning the radius-2
ball of each codeword (unique by the distance-5 property) and finally
attaching every leftover vector to the lowest-indexed codeword within
distance 4.  Each resulting cell has at least ell+1 members and diameter
at most 8, which is what the hypothesis-testing bound needs.  Weight
t = 1 classes are kept whole.  All of this is desk-scale only: class
sizes are C(ell,t) M^t and enumeration is guarded by a budget.
"""

import json
import math
from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .errors import ComplexityBudgetError

DEFAULT_ENUM_BUDGET = 10**6


def hamming(w: tuple | np.ndarray, w2: tuple | np.ndarray) -> int:
    """Number of positions at which the two message vectors differ."""
    if len(w) != len(w2):
        raise ValueError(f"length mismatch: {len(w)} vs {len(w2)}")
    return int(sum(a != b for a, b in zip(w, w2)))


@dataclass(frozen=True)
class TypeClass:
    """All message vectors over {0..M} of length ell with t nonzero entries."""

    ell: int
    M: int
    t: int
    members: tuple[tuple[int, ...], ...]

    @property
    def size(self) -> int:
        return len(self.members)


def type_class_size(ell: int, M: int, t: int) -> int:
    return math.comb(ell, t) * M**t


def enumerate_type_class(
    ell: int, M: int, t: int, budget: int = DEFAULT_ENUM_BUDGET
) -> TypeClass:
    """Enumerate the class in lexicographic order of the message vectors."""
    if not 0 <= t <= ell:
        raise ValueError(f"weight must be in 0..{ell}, got {t}")
    if M < 1:
        raise ValueError(f"message count must be >= 1, got {M}")
    size = type_class_size(ell, M, t)
    if size > budget:
        raise ComplexityBudgetError(f"type class size {size} exceeds the budget {budget}")
    members = []
    for support in combinations(range(ell), t):
        for vals in product(range(1, M + 1), repeat=t):
            w = [0] * ell
            for pos, val in zip(support, vals):
                w[pos] = val
            members.append(tuple(w))
    members.sort()
    return TypeClass(ell=ell, M=M, t=t, members=tuple(members))


def greedy_min_dist_code(tc: TypeClass, dmin: int = 5) -> list[tuple[int, ...]]:
    """Greedy maximal code of minimum distance dmin, scanning members in
    lexicographic order.  Maximality means every member of the class is
    within dmin-1 of some codeword."""
    code: list[tuple[int, ...]] = []
    for w in tc.members:
        if all(hamming(w, c) >= dmin for c in code):
            code.append(w)
    return code


@dataclass(frozen=True)
class Partition:
    """Disjoint cover of a type class by cells around distance-5 codewords."""

    ell: int
    M: int
    t: int
    centers: tuple[tuple[int, ...], ...]
    sets: tuple[tuple[tuple[int, ...], ...], ...]

    @property
    def num_sets(self) -> int:
        return len(self.sets)


def build_partition(
    ell: int, M: int, t: int, budget: int = DEFAULT_ENUM_BUDGET
) -> Partition:
    """Partition the weight-t type class as used by the converse argument.

    t = 1: the whole class is a single cell (its diameter is already 2).
    t >= 2: greedy distance-5 code inside the class itself, radius-2 balls
    first, then leftover members to the lowest-indexed codeword within
    distance 4.  This includes t = ell, whose code also lives inside the
    class (distance-1 neighbours within the class number ell(M-1) >= ell).
    """
    if ell < 5:
        raise ValueError(f"user count must be >= 5, got {ell}")
    if M < 2:
        raise ValueError(f"message count must be >= 2, got {M}")
    if not 1 <= t <= ell:
        raise ValueError(f"weight must be in 1..{ell}, got {t}")
    tc = enumerate_type_class(ell, M, t, budget=budget)
    if t == 1:
        return Partition(ell=ell, M=M, t=t, centers=(tc.members[0],), sets=(tc.members,))
    code = greedy_min_dist_code(tc, dmin=5)
    cells: list[list[tuple[int, ...]]] = [[] for _ in code]
    for w in tc.members:
        dists = [hamming(w, c) for c in code]
        ring2 = [j for j, dj in enumerate(dists) if dj <= 2]
        if ring2:
            # unique codeword by the minimum distance 5 of the code
            cells[ring2[0]].append(w)
            continue
        for j, dj in enumerate(dists):
            if dj <= 4:
                cells[j].append(w)
                break
        else:
            raise AssertionError("greedy code not maximal: member beyond distance 4")
    return Partition(
        ell=ell,
        M=M,
        t=t,
        centers=tuple(code),
        sets=tuple(tuple(cell) for cell in cells),
    )


@dataclass(frozen=True)
class PartitionReport:
    disjoint_cover: bool
    size_ok: bool
    diameter_ok: bool
    min_set_size: int
    max_diameter: int
    min_center_distance: int | None
    set_sizes: tuple[int, ...]
    set_diameters: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return self.disjoint_cover and self.size_ok and self.diameter_ok


def verify_partition(p: Partition, ell: int) -> PartitionReport:
    """Check disjoint cover, |cell| >= ell+1, and diameter <= 8.

    Failures are carried in the report, not raised."""
    seen = set()
    disjoint = True
    for cell in p.sets:
        for w in cell:
            if w in seen:
                disjoint = False
            seen.add(w)
    full = set(enumerate_type_class(p.ell, p.M, p.t).members)
    cover = seen == full
    sizes = tuple(len(cell) for cell in p.sets)
    diameters = tuple(
        max((hamming(a, b) for a, b in combinations(cell, 2)), default=0) for cell in p.sets
    )
    center_d = (
        min(hamming(a, b) for a, b in combinations(p.centers, 2))
        if len(p.centers) > 1
        else None
    )
    min_size = min(sizes) if sizes else 0
    max_diam = max(diameters) if diameters else 0
    return PartitionReport(
        disjoint_cover=disjoint and cover,
        size_ok=min_size >= ell + 1,
        diameter_ok=max_diam <= 8,
        min_set_size=min_size,
        max_diameter=max_diam,
        min_center_distance=center_d,
        set_sizes=sizes,
        set_diameters=diameters,
    )


def typeclass_probability(ell: int, M: int, t: int, alpha: float) -> float:
    """Probability that the message vector has exactly t active entries:

        (1-alpha)^(ell-t) (alpha/M)^t |T^t|  with  |T^t| = C(ell,t) M^t.
    """
    if not 0 <= t <= ell:
        raise ValueError(f"weight must be in 0..{ell}, got {t}")
    if M < 1:
        raise ValueError(f"message count must be >= 1, got {M}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"activity probability must be in [0,1], got {alpha}")
    return (1.0 - alpha) ** (ell - t) * (alpha / M) ** t * type_class_size(ell, M, t)


def partition_to_json(p: Partition, report: PartitionReport | None = None) -> str:
    """Dump a partition (and optionally its verification report) as JSON."""
    payload = {
        "ell": p.ell,
        "M": p.M,
        "t": p.t,
        "num_sets": p.num_sets,
        "centers": [list(c) for c in p.centers],
        "sets": [[list(w) for w in cell] for cell in p.sets],
    }
    if report is not None:
        payload["report"] = {
            "disjoint_cover": report.disjoint_cover,
            "min_set_size": report.min_set_size,
            "max_diameter": report.max_diameter,
            "min_center_distance": report.min_center_distance,
            "ok": report.ok,
        }
    return json.dumps(payload, indent=2)
