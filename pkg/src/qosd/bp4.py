"""Quaternary belief propagation with hard-decision reliability tracking.

Message passing runs over the qubit/check Tanner graph with one scalar
message per edge: the log-likelihood ratio of the qubit error commuting
versus anticommuting with the check's Pauli on that qubit.  The belief
for qubit i is kept as three LLRs ``G_W = ln(q_I / q_W)`` for
W in {X, Y, Z}; check messages enter the belief scaled by 1/alpha (the
step-size parameter), while the outgoing message on an edge subtracts
that edge's incoming message at full strength, so alpha = 1 recovers
plain quaternary BP and alpha != 1 leaves a memory term.

Alongside the beliefs the decoder tracks, per qubit, the length of the
final constant run of hard decisions: starting from (I, 1), the counter
increments whenever an iteration repeats the previous hard decision and
resets to 1 when it changes.  A qubit that stays at identity for all T
iterations therefore ends at T + 1.  This run length is the primary
reliability key consumed by the ordered-statistics stages.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import StabilizerCode

_SCHEDULES = ("parallel", "serial", "serial_random_order")

# For belief row w (0=X, 1=Y, 2=Z), the other two rows.
_OTHER_ROWS = np.array([[1, 2], [0, 2], [0, 1]], dtype=np.int64)


@dataclass
class BpConfig:
    """Decoder settings: prior error rate, iteration cap T, step size."""

    error_rate: float
    max_iters: int = 100
    alpha: float = 1.0
    schedule: str = "parallel"
    # LLR magnitude cap.  Must sit above the natural message fixpoints
    # (~2 atanh(1 - eps_machine) per hop, compounded): tighter caps leave
    # beliefs within reach of transient swings, which resets hard-decision
    # runs and visibly degrades the reliability statistics downstream.
    clamp: float = 300.0
    early_stop: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.error_rate < 0.75:
            raise ValueError(f"error_rate must be in (0, 3/4), got {self.error_rate}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.schedule not in _SCHEDULES:
            raise ValueError(f"schedule must be one of {_SCHEDULES}")


@dataclass
class BeliefState:
    """Per-qubit beliefs and hard-decision bookkeeping after a BP run.

    probs: (n, 4) distributions over (I, X, Y, Z), each row summing to 1.
    hard: hard decisions as codes 0..3 (argmax of probs, ties to I).
    run_length: length of the final constant run of hard decisions,
        in 1 .. iterations_run + 1.
    """

    probs: np.ndarray
    hard: np.ndarray
    run_length: np.ndarray
    iterations_run: int


@dataclass
class BpOutcome:
    success: bool
    estimate: np.ndarray | None
    belief: BeliefState
    iterations: int


def soft_reliability_arrays(belief: BeliefState) -> tuple[np.ndarray, np.ndarray]:
    """Per-qubit soft reliabilities (phi_x, phi_z), each in [1/2, 1].

    phi_x = max(qX + qY, qI + qZ) is the confidence of the X bit's
    marginal; phi_z analogously for the Z bit.
    """
    q = belief.probs
    phi_x = np.maximum(q[:, 1] + q[:, 2], q[:, 0] + q[:, 3])
    phi_z = np.maximum(q[:, 3] + q[:, 2], q[:, 0] + q[:, 1])
    return phi_x, phi_z


def soft_reliability(belief: BeliefState, qubit: int, component: str) -> float:
    phi_x, phi_z = soft_reliability_arrays(belief)
    if component == "X":
        return float(phi_x[qubit])
    if component == "Z":
        return float(phi_z[qubit])
    raise ValueError(f"component must be 'X' or 'Z', got {component!r}")


class Bp4Decoder:
    """Reusable message-passing state for one check matrix."""

    def __init__(self, code: StabilizerCode, cfg: BpConfig):
        self.code = code
        self.cfg = cfg
        H = code.H
        n = code.n
        m = H.shape[0]
        x, z = H[:, :n].astype(bool), H[:, n:].astype(bool)
        pauli = np.zeros((m, n), dtype=np.int64)
        pauli[x & ~z] = 1
        pauli[x & z] = 2
        pauli[~x & z] = 3
        ci, qi = np.nonzero(pauli)
        self.n = n
        self.m = m
        self.ci = ci.astype(np.int64)
        self.eq = qi.astype(np.int64)
        self.ew = pauli[ci, qi].astype(np.int64)
        counts = np.bincount(self.ci, minlength=m)
        if (counts == 0).any():
            raise ValueError("check matrix has an all-identity row")
        self.check_starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        self.own_row = self.ew - 1
        self.o1_row = _OTHER_ROWS[self.own_row, 0]
        self.o2_row = _OTHER_ROWS[self.own_row, 1]
        self.idx_by_w = [np.nonzero(self.ew == w)[0] for w in (1, 2, 3)]
        # Adjacency for the serial schedules.
        self.qubit_edges = [np.nonzero(self.eq == i)[0] for i in range(n)]
        self.check_edges = [
            np.arange(self.check_starts[j], self.check_starts[j] + counts[j])
            for j in range(m)
        ]

    # -- message passes (parallel schedule) --------------------------------

    def _check_pass(self, d_msg: np.ndarray, sign_flip: np.ndarray) -> np.ndarray:
        t = np.tanh(0.5 * d_msg)
        neg = (t < 0).astype(np.int64)
        mag = np.abs(t)
        np.clip(mag, 1e-30, None, out=mag)
        logm = np.log(mag)
        sum_log = np.add.reduceat(logm, self.check_starts)
        sum_neg = np.add.reduceat(neg, self.check_starts)
        excl = np.exp(sum_log[self.ci] - logm)
        np.clip(excl, None, 1.0 - 1e-16, out=excl)
        parity = (sum_neg[self.ci] - neg) & 1
        delta = 2.0 * np.arctanh(excl)
        delta *= sign_flip[self.ci] * (1.0 - 2.0 * parity)
        return np.clip(delta, -self.cfg.clamp, self.cfg.clamp)

    def _var_pass(self, delta: np.ndarray, prior: float, inv_alpha: float) -> np.ndarray:
        total = np.bincount(self.eq, weights=delta, minlength=self.n)
        gamma = np.empty((3, self.n))
        for row in range(3):
            idx = self.idx_by_w[row]
            own = np.bincount(self.eq[idx], weights=delta[idx], minlength=self.n)
            gamma[row] = prior + inv_alpha * (total - own)
        return np.clip(gamma, -self.cfg.clamp, self.cfg.clamp)

    def _msg_pass(self, gamma: np.ndarray, delta: np.ndarray) -> np.ndarray:
        g_own = gamma[self.own_row, self.eq]
        g1 = gamma[self.o1_row, self.eq] - delta
        g2 = gamma[self.o2_row, self.eq] - delta
        num = np.logaddexp(0.0, -g_own)
        den = np.logaddexp(-g1, -g2)
        return np.clip(num - den, -self.cfg.clamp, self.cfg.clamp)

    # -- serial schedule ----------------------------------------------------

    def _serial_sweep(
        self,
        d_msg: np.ndarray,
        gamma: np.ndarray,
        delta: np.ndarray,
        sign_flip: np.ndarray,
        prior: float,
        inv_alpha: float,
        order: np.ndarray,
    ) -> None:
        clamp = self.cfg.clamp
        for i in order:
            edges = self.qubit_edges[i]
            for e in edges:
                j = self.ci[e]
                others = self.check_edges[j]
                others = others[others != e]
                t = np.tanh(0.5 * d_msg[others])
                neg = int((t < 0).sum()) & 1
                mag = np.abs(t)
                np.clip(mag, 1e-30, None, out=mag)
                prod = np.exp(np.log(mag).sum())
                prod = min(prod, 1.0 - 1e-16)
                val = 2.0 * np.arctanh(prod) * sign_flip[j] * (1.0 - 2.0 * neg)
                delta[e] = np.clip(val, -clamp, clamp)
            dsum = np.zeros(3)
            for e in edges:
                w = self.own_row[e]
                dsum[_OTHER_ROWS[w, 0]] += delta[e]
                dsum[_OTHER_ROWS[w, 1]] += delta[e]
            gamma[:, i] = np.clip(prior + inv_alpha * dsum, -clamp, clamp)
            for e in edges:
                w = self.own_row[e]
                g_own = gamma[w, i]
                g1 = gamma[_OTHER_ROWS[w, 0], i] - delta[e]
                g2 = gamma[_OTHER_ROWS[w, 1], i] - delta[e]
                val = np.logaddexp(0.0, -g_own) - np.logaddexp(-g1, -g2)
                d_msg[e] = np.clip(val, -clamp, clamp)

    # -- main loop ----------------------------------------------------------

    def decode(
        self,
        syndrome: np.ndarray,
        rng: np.random.Generator | None = None,
        alpha: float | None = None,
    ) -> BpOutcome:
        cfg = self.cfg
        eps = cfg.error_rate
        alpha = cfg.alpha if alpha is None else alpha
        inv_alpha = 1.0 / alpha
        n, m = self.n, self.m
        syndrome = np.asarray(syndrome, dtype=np.uint8)
        if syndrome.shape[0] != m:
            raise ValueError(f"syndrome length {syndrome.shape[0]} != m = {m}")
        sign_flip = 1.0 - 2.0 * syndrome.astype(np.float64)

        prior = float(np.log(3.0 * (1.0 - eps) / eps))
        d_msg = np.full(self.eq.shape[0], np.log((3.0 - 2.0 * eps) / (2.0 * eps)))

        hard = np.zeros(n, dtype=np.int64)
        run_length = np.ones(n, dtype=np.int64)
        gamma = np.full((3, n), prior)
        delta = np.zeros_like(d_msg)
        serial = cfg.schedule != "parallel"
        if cfg.schedule == "serial_random_order":
            if rng is None:
                raise ValueError("serial_random_order needs an rng")
            order = rng.permutation(n)
        else:
            order = np.arange(n)

        iterations = 0
        matched = False
        for it in range(1, cfg.max_iters + 1):
            iterations = it
            if serial:
                self._serial_sweep(
                    d_msg, gamma, delta, sign_flip, prior, inv_alpha, order
                )
            else:
                delta = self._check_pass(d_msg, sign_flip)
                gamma = self._var_pass(delta, prior, inv_alpha)
                d_msg = self._msg_pass(gamma, delta)

            h_new = hard_decisions(gamma)
            run_length = update_run_lengths(hard, h_new, run_length)
            hard = h_new

            if cfg.early_stop and self._matches(hard, syndrome):
                matched = True
                break

        if not cfg.early_stop and self._matches(hard, syndrome):
            matched = True

        belief = BeliefState(
            probs=_probs_from_llrs(gamma),
            hard=hard.astype(np.uint8),
            run_length=run_length,
            iterations_run=iterations,
        )
        estimate = _hard_to_bits(hard) if matched else None
        return BpOutcome(matched, estimate, belief, iterations)

    def _matches(self, hard: np.ndarray, syndrome: np.ndarray) -> bool:
        anti = (hard[self.eq] != 0) & (hard[self.eq] != self.ew)
        parity = np.bincount(self.ci[anti], minlength=self.m) & 1
        return np.array_equal(parity.astype(np.uint8), syndrome)


def hard_decisions(gamma: np.ndarray) -> np.ndarray:
    """Most likely Pauli per qubit from the (3, n) LLR stack; ties and
    all-nonnegative rows go to I, then X before Y before Z."""
    mins = gamma.min(axis=0)
    return np.where(mins < 0.0, gamma.argmin(axis=0) + 1, 0)


def update_run_lengths(
    prev_hard: np.ndarray, new_hard: np.ndarray, run_length: np.ndarray
) -> np.ndarray:
    """Advance the final-constant-run counters by one iteration."""
    return np.where(new_hard == prev_hard, run_length + 1, 1)


def _probs_from_llrs(gamma: np.ndarray) -> np.ndarray:
    n = gamma.shape[1]
    logits = np.vstack([np.zeros(n), -gamma])
    logits -= logits.max(axis=0)
    expv = np.exp(logits)
    return (expv / expv.sum(axis=0)).T


def _hard_to_bits(hard: np.ndarray) -> np.ndarray:
    x = ((hard == 1) | (hard == 2)).astype(np.uint8)
    z = ((hard == 2) | (hard == 3)).astype(np.uint8)
    return np.concatenate([x, z])


def hard_decision_bits(belief: BeliefState) -> np.ndarray:
    """The hard decision as a [x | z] bit vector."""
    return _hard_to_bits(belief.hard)


def bp4_decode(
    code: StabilizerCode,
    syndrome: np.ndarray,
    cfg: BpConfig,
    rng: np.random.Generator | None = None,
) -> BpOutcome:
    """One-shot decode; builds a throwaway :class:`Bp4Decoder`."""
    return Bp4Decoder(code, cfg).decode(syndrome, rng=rng)


def bp4_decode_adaptive(
    decoder: Bp4Decoder | StabilizerCode,
    syndrome: np.ndarray,
    cfg: BpConfig | None = None,
    alphas: list[float] | np.ndarray = (1.0,),
    rng: np.random.Generator | None = None,
) -> BpOutcome:
    """Try each step size in order; return the first success, else the
    failure outcome of the last one."""
    if isinstance(decoder, StabilizerCode):
        if cfg is None:
            raise ValueError("cfg required when passing a code")
        decoder = Bp4Decoder(decoder, cfg)
    alphas = list(alphas)
    if not alphas:
        raise ValueError("alpha sequence is empty")
    outcome = None
    for a in alphas:
        outcome = decoder.decode(syndrome, rng=rng, alpha=a)
        if outcome.success:
            return outcome
    return outcome


def alpha_of_epsilon(eps: float) -> float:
    """Step size schedule alpha(eps) = -0.16 log10(eps) - 0.48, clamped
    to the validated range [0.5, 2.0]."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    return float(np.clip(-0.16 * np.log10(eps) - 0.48, 0.5, 2.0))


def alpha_sequence(start: float, step: float, stop: float) -> list[float]:
    """Inclusive arithmetic sequence, e.g. (1.6, -0.01, 0.5) -> 1.60,
    1.59, ..., 0.50."""
    if step == 0:
        raise ValueError("step must be nonzero")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    if count < 1:
        raise ValueError("empty alpha sequence: stop unreachable from start")
    return [float(v) for v in np.round(start + step * np.arange(count), 12)]
