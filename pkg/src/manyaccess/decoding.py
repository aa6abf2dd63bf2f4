"""Message decoders, end-to-end receivers, and error accounting.

Two receivers are implemented: the two-phase receiver (activity detection
followed by exhaustive joint ML decoding of the detected users, with an
overflow abort when more than floor(xi*k) users are detected) and the
slotted pilot+PPM receiver.  A user detected active is always decoded to
some message in 1..M, so a false alarm necessarily produces a message
error for that user.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel import TransmissionPlan
from .detection import DetectionResult, detect_ls_exhaustive, detect_pilot, v_cap
from .errors import ComplexityBudgetError
from .model import EnergySchedule, SystemParams

DEFAULT_TUPLE_BUDGET = 10**7


@dataclass(frozen=True)
class BoundParams:
    """Free parameters of the union bounds: Gallager rho, detection lambda,
    and the overflow multiple xi."""

    rho: float = 0.75
    lam: float = 2.0 / 3.0
    xi: int = 8

    def __post_init__(self):
        if not 0.0 < self.rho <= 1.0:
            raise ValueError(f"rho must be in (0,1], got {self.rho}")
        if self.lam < 0.0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.xi < 1:
            raise ValueError(f"xi must be a positive integer, got {self.xi}")


@dataclass(frozen=True)
class ErrorStats:
    """Joint and per-user error indicators for one transmission."""

    joint_error: bool
    per_user_errors: int
    ape: float
    overflow: bool


@dataclass(frozen=True)
class TwoPhaseResult:
    w_hat: np.ndarray
    detection: DetectionResult
    overflow: bool


def decode_ppm(y_slot: np.ndarray, M: int, t: float, E: float) -> int:
    """ML decoding of one PPM slot given the user is active.

    All nonzero words share the pilot coordinate and have equal energy, so
    ML reduces to the largest sample among the M message positions; ties
    go to the smallest message index.
    """
    if len(y_slot) < M + 1:
        raise ValueError(f"slot length {len(y_slot)} < M+1 = {M + 1}")
    return int(np.argmax(y_slot[1 : M + 1])) + 1


def decode_joint_ml(
    Y_msg: np.ndarray,
    plan: TransmissionPlan,
    active: list[int],
    budget: int = DEFAULT_TUPLE_BUDGET,
) -> dict[int, int]:
    """Exhaustive joint ML over message tuples of the detected users.

    Minimizes ||Y - sum_i x~_i(w_i)||^2 over w in {1..M}^active via the
    Gram expansion, broadcasting per-user and pairwise terms over the
    M^|active| tuple grid.  np.argmin's first-minimum rule gives the
    lexicographically smallest optimal tuple.  Returns {user: message}.
    """
    active = sorted(active)
    k = len(active)
    if k == 0:
        return {}
    M = plan.M
    if M**k > budget:
        raise ComplexityBudgetError(
            f"M^|active| = {M}^{k} exceeds the tuple budget of {budget}"
        )
    Y_msg = np.asarray(Y_msg, dtype=float)
    words = [plan.codebooks[i].words[1:] for i in active]  # (M, n_msg) each
    if any(w.shape[1] != len(Y_msg) for w in words):
        raise ValueError("codeword length does not match received message block")

    shape = (M,) * k
    objective = np.zeros(shape)
    for i, wi in enumerate(words):
        unary = np.einsum("mj,mj->m", wi, wi) - 2.0 * (wi @ Y_msg)
        objective += unary.reshape((1,) * i + (M,) + (1,) * (k - 1 - i))
    for i in range(k):
        for j in range(i + 1, k):
            cross = 2.0 * (words[i] @ words[j].T)
            objective += cross.reshape(
                (1,) * i + (M,) + (1,) * (j - i - 1) + (M,) + (1,) * (k - 1 - j)
            )
    flat_best = int(np.argmin(objective))
    tup = np.unravel_index(flat_best, shape)
    return {user: int(w) + 1 for user, w in zip(active, tup)}


def two_phase_receive(
    Y: np.ndarray,
    plan: TransmissionPlan,
    params: SystemParams,
    sched: EnergySchedule,
    bp: BoundParams,
    detection_budget: int = 10**7,
    tuple_budget: int = DEFAULT_TUPLE_BUDGET,
) -> TwoPhaseResult:
    """Detect active users on the signature block, then jointly decode them.

    Declares overflow (and decodes nobody) when the estimated active count
    exceeds floor(xi*k); otherwise w_hat carries the ML messages for
    detected users and 0 elsewhere.
    """
    if len(Y) != sched.n_sig + sched.n_msg:
        raise ValueError(f"received length {len(Y)} != n_sig+n_msg = {sched.n_sig + sched.n_msg}")
    det = detect_ls_exhaustive(
        Y[: sched.n_sig], plan.signatures, v_cap(params, sched), budget=detection_budget
    )
    w_hat = np.zeros(params.ell, dtype=int)
    if det.weight > math.floor(bp.xi * params.k):
        return TwoPhaseResult(w_hat=w_hat, detection=det, overflow=True)
    decoded = decode_joint_ml(
        Y[sched.n_sig :], plan, list(np.flatnonzero(det.d_hat)), budget=tuple_budget
    )
    for user, w in decoded.items():
        w_hat[user] = w
    return TwoPhaseResult(w_hat=w_hat, detection=det, overflow=False)


def ortho_receive(
    Y: np.ndarray,
    plan: TransmissionPlan,
    params: SystemParams,
    sched: EnergySchedule,
) -> np.ndarray:
    """Per-slot pilot thresholding followed by PPM decoding of active slots."""
    slot = plan.slot_len
    if len(Y) < params.ell * slot:
        raise ValueError(f"received length {len(Y)} < ell*slot = {params.ell * slot}")
    w_hat = np.zeros(params.ell, dtype=int)
    for i in range(params.ell):
        y_slot = Y[i * slot : (i + 1) * slot]
        if detect_pilot(float(y_slot[0]), sched.split, sched.E):
            w_hat[i] = decode_ppm(y_slot, plan.M, sched.split, sched.E)
    return w_hat


def score_errors(w_true: np.ndarray, w_hat: np.ndarray, overflow: bool) -> ErrorStats:
    """Exact error indicators; overflow voids every active user's message."""
    w_true = np.asarray(w_true)
    w_hat = np.asarray(w_hat)
    if w_true.shape != w_hat.shape:
        raise ValueError(f"length mismatch: {w_true.shape} vs {w_hat.shape}")
    ell = len(w_true)
    if overflow:
        wrong = int(np.count_nonzero(w_true))
        return ErrorStats(joint_error=True, per_user_errors=wrong, ape=wrong / ell, overflow=True)
    wrong = int(np.count_nonzero(w_true != w_hat))
    return ErrorStats(
        joint_error=wrong > 0, per_user_errors=wrong, ape=wrong / ell, overflow=False
    )
