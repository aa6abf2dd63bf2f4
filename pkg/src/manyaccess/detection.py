"""Receiver-side user-activity estimation.

The reference detector minimizes ||Y_sig - S d||^2 exhaustively over all
binary activity vectors of weight at most v = floor(k*(1+c)).  The
candidate set also contains d = 0 so the receiver can prefer the empty
set when nothing fits; ties break toward smaller weight, then the
lexicographically smallest support, making the output deterministic.
"""

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from itertools import combinations

import numpy as np

from .codebooks import SignatureMatrix
from .errors import ComplexityBudgetError, InvalidRegimeError
from .model import EnergySchedule, SystemParams

DEFAULT_CANDIDATE_BUDGET = 10**7


@dataclass(frozen=True)
class DetectionResult:
    """Estimated activity pattern plus achieved residual.

    Miss / false-alarm counts are filled in once the truth is known (see
    `scored`); they stay None for raw detector output.
    """

    d_hat: np.ndarray
    residual: float
    misses: int | None = None
    false_alarms: int | None = None

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self.d_hat))

    def scored(self, d_true: np.ndarray) -> "DetectionResult":
        k1, k2 = detection_stats(d_true, self.d_hat)
        return replace(self, misses=k1, false_alarms=k2)


def v_cap(params: SystemParams, sched: EnergySchedule) -> int:
    """Maximum admissible estimated-active count floor(k*(1+c))."""
    if sched.c <= 0.0:
        raise InvalidRegimeError(f"schedule constant c = {sched.c:.4g} <= 0")
    return math.floor(params.k * (1.0 + sched.c))


def candidate_count(ell: int, v: int) -> int:
    """Number of binary vectors with weight 0..min(v, ell)."""
    return sum(math.comb(ell, j) for j in range(min(v, ell) + 1))


@lru_cache(maxsize=8)
def _candidate_matrix(ell: int, v: int) -> np.ndarray:
    """All weight <= v activity vectors, ordered by (weight, support lex)."""
    rows = [np.zeros(ell)]
    for j in range(1, min(v, ell) + 1):
        for support in combinations(range(ell), j):
            row = np.zeros(ell)
            row[list(support)] = 1.0
            rows.append(row)
    out = np.array(rows)
    out.setflags(write=False)
    return out


def detect_ls_exhaustive(
    Y_sig: np.ndarray,
    S: SignatureMatrix,
    v: int,
    budget: int = DEFAULT_CANDIDATE_BUDGET,
) -> DetectionResult:
    """Exhaustive least-squares support recovery over weights 0..v.

    Residuals are evaluated through the Gram form
    ||Y - S d||^2 = ||Y||^2 - 2 d.(S^T Y) + d.(S^T S)d, vectorized over
    the full candidate list.  Candidates are ordered by weight then
    lexicographic support, and the first strict minimum wins, which
    implements the documented tie-break.
    """
    Y_sig = np.asarray(Y_sig, dtype=float)
    if Y_sig.shape != (S.n_sig,):
        raise ValueError(f"received length {Y_sig.shape} != signature length {S.n_sig}")
    if v < 0:
        raise ValueError(f"weight cap must be >= 0, got {v}")
    n_cands = candidate_count(S.ell, v)
    if n_cands > budget:
        raise ComplexityBudgetError(
            f"{n_cands} candidates exceed the budget of {budget} (ell={S.ell}, v={v})"
        )
    cands = _candidate_matrix(S.ell, v)
    gram = S.matrix.T @ S.matrix
    corr = S.matrix.T @ Y_sig
    base = float(Y_sig @ Y_sig)
    residuals = base - 2.0 * (cands @ corr) + np.einsum("ij,ij->i", cands @ gram, cands)
    best = int(np.argmin(residuals))
    return DetectionResult(d_hat=cands[best].astype(int), residual=float(residuals[best]))


def detect_pilot(y_pilot: float, t: float, E: float) -> bool:
    """Threshold test: user declared active iff y_pilot > sqrt(t*E)/2."""
    if not 0.0 < t < 1.0:
        raise ValueError(f"pilot fraction must be in (0,1), got {t}")
    if E <= 0.0:
        raise ValueError(f"energy must be positive, got {E}")
    return bool(y_pilot > math.sqrt(t * E) / 2.0)


def detection_stats(d_true: np.ndarray, d_hat: np.ndarray) -> tuple[int, int]:
    """Counts (misses, false alarms) between true and estimated activity."""
    d_true = np.asarray(d_true).astype(bool)
    d_hat = np.asarray(d_hat).astype(bool)
    if d_true.shape != d_hat.shape:
        raise ValueError(f"length mismatch: {d_true.shape} vs {d_hat.shape}")
    kappa1 = int(np.count_nonzero(d_true & ~d_hat))
    kappa2 = int(np.count_nonzero(~d_true & d_hat))
    return kappa1, kappa2
