"""Depolarizing-channel Monte-Carlo trials and decoder pipelines.

One trial samples an i.i.d. depolarizing error, computes its syndrome,
runs belief propagation, and (when BP fails) the configured
post-processor; the outcome is classified against the injected error.
Trials are reproducible: every trial derives its own generator from
(seed, trial index), so results are identical for any worker count.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from math import sqrt

import numpy as np

from .bp4 import (
    BpConfig,
    Bp4Decoder,
    bp4_decode_adaptive,
    hard_decision_bits,
)
from .codes import StabilizerCode
from .osd import build_order, build_system, osd2_budget, osd_w
from .reduction import adosd
from .symplectic import codes_to_bits, lam_column_order, pauli_weight, syndrome_of

PIPELINES = ("bp", "bp+osd0", "bp+osdw", "bp+adosd", "ambp", "ambp+adosd")


@dataclass
class ChannelModel:
    """I.i.d. depolarizing noise: X, Y, Z each with probability eps/3."""

    error_rate: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.error_rate < 0.75:
            raise ValueError(f"error_rate must be in [0, 3/4), got {self.error_rate}")


def sample_error(rng: np.random.Generator, n: int, error_rate: float) -> np.ndarray:
    """One depolarizing error as a [x | z] bit vector."""
    draw = rng.random(n)
    pauli = np.zeros(n, dtype=np.int64)
    third = error_rate / 3.0
    pauli[draw < third] = 1
    pauli[(draw >= third) & (draw < 2 * third)] = 2
    pauli[(draw >= 2 * third) & (draw < error_rate)] = 3
    return codes_to_bits(pauli)


@dataclass
class PipelineConfig:
    """Which decoder chain to run and with what knobs."""

    pipeline: str = "bp+adosd"
    bp: BpConfig | None = None
    theta: float = 0.999995
    budget: int | None = None  # None: order-2 budget of the full system
    order: int = 2  # osd order for bp+osdw; fallback order for adosd
    metric: str = "hard_then_soft"
    alpha_sequence: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.pipeline not in PIPELINES:
            raise ValueError(f"pipeline must be one of {PIPELINES}, got {self.pipeline!r}")
        if self.pipeline.startswith("ambp") and not self.alpha_sequence:
            raise ValueError("ambp pipelines need an alpha_sequence")


@dataclass
class DecodeOutcome:
    """Per-decode diagnostics; ``estimate`` is None on outright failure."""

    valid: bool
    estimate: np.ndarray | None
    stage: str
    bp_success: bool
    bp_iterations: int
    osd_order: int
    m_reduced: int
    cols_reduced: int
    corollary_fired: bool
    t_bp: float
    t_post: float


class Decoder:
    """A code plus a pipeline config, ready to decode syndromes."""

    def __init__(self, code: StabilizerCode, cfg: PipelineConfig):
        if cfg.bp is None:
            raise ValueError("PipelineConfig.bp must be set")
        self.code = code
        self.cfg = cfg
        self.bp = Bp4Decoder(code, cfg.bp)
        self.syndrome_matrix = code.H[:, lam_column_order(code.n)]
        self.budget = cfg.budget if cfg.budget is not None else osd2_budget(code.n + code.k)

    def decode(self, syndrome: np.ndarray, rng: np.random.Generator | None = None) -> DecodeOutcome:
        cfg = self.cfg
        code = self.code
        t0 = time.perf_counter()
        if cfg.pipeline.startswith("ambp"):
            outcome = bp4_decode_adaptive(
                self.bp, syndrome, alphas=cfg.alpha_sequence, rng=rng
            )
        else:
            outcome = self.bp.decode(syndrome, rng=rng)
        t_bp = time.perf_counter() - t0

        if outcome.success:
            return DecodeOutcome(
                True, outcome.estimate, "bp", True, outcome.iterations,
                -1, -1, -1, False, t_bp, 0.0,
            )
        if cfg.pipeline in ("bp", "ambp"):
            return DecodeOutcome(
                False, None, "none", False, outcome.iterations,
                -1, -1, -1, False, t_bp, 0.0,
            )

        hard = hard_decision_bits(outcome.belief)
        t0 = time.perf_counter()
        if cfg.pipeline.endswith("adosd"):
            estimate, diag = adosd(
                code, syndrome, outcome.belief, hard,
                theta=cfg.theta, budget=self.budget,
                backup_order=cfg.order, metric=cfg.metric,
            )
            t_post = time.perf_counter() - t0
            stage = "adosd" if diag.stage == "reduced" else "adosd_fallback"
            return DecodeOutcome(
                True, estimate, stage, False, outcome.iterations,
                diag.order_used, diag.m_reduced, diag.cols_reduced,
                diag.corollary_fired, t_bp, t_post,
            )
        # Full-size OSD, order 0 or the configured order.
        order = build_order(outcome.belief, cfg.metric)
        system = build_system(
            self.syndrome_matrix, syndrome, order, hard,
            n=code.n, require_rank=code.n - code.k,
        )
        w = 0 if cfg.pipeline == "bp+osd0" else cfg.order
        res = osd_w(system, w, self.budget if w else None)
        t_post = time.perf_counter() - t0
        return DecodeOutcome(
            True, res.vector, "osd0" if w == 0 else "osdw", False,
            outcome.iterations, w, code.m, 2 * code.n, False, t_bp, t_post,
        )


@dataclass
class TrialRecord:
    trial: int
    seed: int
    err_weight: int
    bp_status: str
    bp_iters: int
    stage: str
    osd_order: int
    m_red: int
    cols_red: int
    logical_error: bool
    t_bp_us: float
    t_post_us: float

    CSV_HEADER = (
        "trial,seed,err_weight,bp_status,bp_iters,stage,osd_order,"
        "m_red,cols_red,logical_error,t_bp_us,t_post_us"
    )

    def csv_row(self) -> str:
        return (
            f"{self.trial},{self.seed},{self.err_weight},{self.bp_status},"
            f"{self.bp_iters},{self.stage},{self.osd_order},{self.m_red},"
            f"{self.cols_red},{int(self.logical_error)},"
            f"{self.t_bp_us:.3f},{self.t_post_us:.3f}"
        )


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials == 0:
        return (0.0, 1.0)
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = (z / denom) * sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials))
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass
class AggregateStats:
    """Run-level observables; fractions over post-processed trials."""

    trials: int = 0
    logical_errors: int = 0
    ler: float = 0.0
    ler_ci_low: float = 0.0
    ler_ci_high: float = 0.0
    bp_failures: int = 0
    bp_failure_rate: float = 0.0
    mean_bp_iterations_success: float = 0.0
    post_processed: int = 0
    osd0_only_fraction: float = 0.0
    higher_order_fraction: float = 0.0
    fallback_fraction: float = 0.0
    dims20_fraction: float = 0.0
    dims30_fraction: float = 0.0
    mean_time_bp_iteration_us: float = 0.0
    mean_time_post_us: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class _Tally:
    trials: int = 0
    logical: int = 0
    bp_failures: int = 0
    success_iters: int = 0
    successes: int = 0
    post: int = 0
    fired: int = 0
    higher: int = 0
    fallback: int = 0
    dims20: int = 0
    dims30: int = 0
    t_bp: float = 0.0
    bp_iters: int = 0
    t_post: float = 0.0

    def add(self, code: StabilizerCode, out: DecodeOutcome, logical: bool) -> None:
        self.trials += 1
        self.logical += int(logical)
        self.t_bp += out.t_bp
        self.bp_iters += out.bp_iterations
        if out.bp_success:
            self.successes += 1
            self.success_iters += out.bp_iterations
        else:
            self.bp_failures += 1
        if out.stage in ("adosd", "adosd_fallback", "osd0", "osdw"):
            self.post += 1
            self.t_post += out.t_post
            if out.stage == "adosd_fallback":
                self.fallback += 1
            elif out.corollary_fired:
                self.fired += 1
            else:
                self.higher += 1
            if out.stage == "adosd":
                eff = max(out.m_reduced / code.m, out.cols_reduced / (2 * code.n))
                if eff <= 0.2:
                    self.dims20 += 1
                if eff <= 0.3:
                    self.dims30 += 1

    def merge(self, other: "_Tally") -> None:
        for name in self.__dataclass_fields__:
            setattr(self, name, getattr(self, name) + getattr(other, name))

    def stats(self) -> AggregateStats:
        lo, hi = wilson_interval(self.logical, self.trials)
        post = max(self.post, 1)
        return AggregateStats(
            trials=self.trials,
            logical_errors=self.logical,
            ler=self.logical / self.trials if self.trials else 0.0,
            ler_ci_low=lo,
            ler_ci_high=hi,
            bp_failures=self.bp_failures,
            bp_failure_rate=self.bp_failures / self.trials if self.trials else 0.0,
            mean_bp_iterations_success=(
                self.success_iters / self.successes if self.successes else 0.0
            ),
            post_processed=self.post,
            osd0_only_fraction=self.fired / post,
            higher_order_fraction=self.higher / post,
            fallback_fraction=self.fallback / post,
            dims20_fraction=self.dims20 / post,
            dims30_fraction=self.dims30 / post,
            mean_time_bp_iteration_us=(
                self.t_bp / self.bp_iters * 1e6 if self.bp_iters else 0.0
            ),
            mean_time_post_us=self.t_post / self.post * 1e6 if self.post else 0.0,
        )


def _trial_rng(seed: int, trial: int) -> tuple[np.random.Generator, int]:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(trial,))
    return np.random.default_rng(ss), int(ss.generate_state(1)[0])


def run_one_trial(
    decoder: Decoder,
    channel: ChannelModel,
    seed: int,
    trial: int,
    check_estimate: bool = True,
) -> TrialRecord:
    code = decoder.code
    rng, trial_seed = _trial_rng(seed, trial)
    error = sample_error(rng, code.n, channel.error_rate)
    syndrome = code.syndrome(error)
    out = decoder.decode(syndrome, rng=rng)
    if check_estimate and out.estimate is not None:
        if not np.array_equal(syndrome_of(code.H, out.estimate), syndrome):
            raise AssertionError(f"trial {trial}: estimate does not match syndrome")
    logical = code.is_logical_error(error, out.estimate)
    return TrialRecord(
        trial=trial,
        seed=trial_seed,
        err_weight=pauli_weight(error),
        bp_status="success" if out.bp_success else "failure",
        bp_iters=out.bp_iterations,
        stage=out.stage,
        osd_order=out.osd_order,
        m_red=out.m_reduced,
        cols_red=out.cols_reduced,
        logical_error=logical,
        t_bp_us=out.t_bp * 1e6,
        t_post_us=out.t_post * 1e6,
    )


_WORKER_STATE: dict = {}


def _worker_init(code, pcfg, channel, seed, check):
    _WORKER_STATE["decoder"] = Decoder(code, pcfg)
    _WORKER_STATE["channel"] = channel
    _WORKER_STATE["seed"] = seed
    _WORKER_STATE["check"] = check


def _worker_run(span: tuple[int, int]) -> list[TrialRecord]:
    lo, hi = span
    d = _WORKER_STATE["decoder"]
    return [
        run_one_trial(
            d, _WORKER_STATE["channel"], _WORKER_STATE["seed"], t, _WORKER_STATE["check"]
        )
        for t in range(lo, hi)
    ]


def run_trials(
    code: StabilizerCode,
    channel: ChannelModel,
    pcfg: PipelineConfig,
    trials: int,
    seed: int,
    workers: int = 1,
    target_logical_errors: int | None = None,
    keep_records: bool = False,
    check_estimates: bool = True,
) -> tuple[AggregateStats, list[TrialRecord]]:
    """Monte-Carlo loop.  Stops at ``trials`` or, when
    ``target_logical_errors`` is set, as soon as that many logical
    errors have been seen (whichever comes first)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    tally = _Tally()
    records: list[TrialRecord] = []

    if workers <= 1:
        decoder = Decoder(code, pcfg)
        for t in range(trials):
            rec = run_one_trial(decoder, channel, seed, t, check_estimates)
            tally.add(code, _record_outcome(rec), rec.logical_error)
            if keep_records:
                records.append(rec)
            if target_logical_errors and tally.logical >= target_logical_errors:
                break
        return tally.stats(), records

    import multiprocessing as mp

    chunk = max(64, trials // (workers * 8))
    spans = [(lo, min(lo + chunk, trials)) for lo in range(0, trials, chunk)]
    ctx = mp.get_context("fork")
    with ctx.Pool(
        workers, initializer=_worker_init, initargs=(code, pcfg, channel, seed, check_estimates)
    ) as pool:
        for batch in pool.imap(_worker_run, spans):
            for rec in batch:
                tally.add(code, _record_outcome(rec), rec.logical_error)
                if keep_records:
                    records.append(rec)
            if target_logical_errors and tally.logical >= target_logical_errors:
                pool.terminate()
                break
    return tally.stats(), records


def _record_outcome(r: TrialRecord) -> DecodeOutcome:
    return DecodeOutcome(
        valid=r.stage != "none",
        estimate=None,
        stage=r.stage,
        bp_success=r.bp_status == "success",
        bp_iterations=r.bp_iters,
        osd_order=r.osd_order,
        m_reduced=r.m_red,
        cols_reduced=r.cols_red,
        corollary_fired=(r.stage == "adosd" and r.osd_order == 0),
        t_bp=r.t_bp_us / 1e6,
        t_post=r.t_post_us / 1e6,
    )


def enumerate_errors_of_weight(n: int, weight: int):
    """All [x | z] vectors of exact Pauli weight ``weight``."""
    from itertools import combinations, product

    for qubits in combinations(range(n), weight):
        for paulis in product((1, 2, 3), repeat=weight):
            pauli = np.zeros(n, dtype=np.int64)
            for q, p in zip(qubits, paulis):
                pauli[q] = p
            yield codes_to_bits(pauli)


def run_exhaustive(
    code: StabilizerCode,
    pcfg: PipelineConfig,
    weight: int,
    seed: int = 0,
) -> tuple[int, int]:
    """Inject every error of the given weight; return (count, logical
    errors)."""
    decoder = Decoder(code, pcfg)
    rng = np.random.default_rng(seed)
    total = 0
    logical = 0
    for error in enumerate_errors_of_weight(code.n, weight):
        syndrome = code.syndrome(error)
        out = decoder.decode(syndrome, rng=rng)
        total += 1
        logical += int(code.is_logical_error(error, out.estimate))
    return total, logical


@dataclass
class CrossingReport:
    code_a: str
    code_b: str
    bracket: tuple[float, float] | None
    estimate: float | None
    note: str = ""


def threshold_scan(
    codes: list[StabilizerCode],
    eps_grid: list[float],
    make_pcfg,
    trials: int,
    seed: int,
    workers: int = 1,
) -> dict:
    """LER curves on a rate grid plus pairwise crossing intervals.

    ``make_pcfg(eps)`` builds the pipeline config per grid point.
    Crossings are located by linear interpolation of log-LER between
    adjacent grid points; codes are compared in the order given
    (ascending distance expected).
    """
    if len(codes) < 2:
        raise ValueError("threshold_scan needs at least two codes")
    table: dict[str, list[AggregateStats]] = {}
    for code in codes:
        rows = []
        for eps in eps_grid:
            stats, _ = run_trials(
                code, ChannelModel(eps), make_pcfg(eps), trials, seed, workers=workers
            )
            rows.append(stats)
        table[code.name] = rows

    floor = 0.5 / trials  # continuity guard for log of zero counts
    crossings = []
    for a, b in zip(codes[:-1], codes[1:]):
        la = np.log([max(s.ler, floor) for s in table[a.name]])
        lb = np.log([max(s.ler, floor) for s in table[b.name]])
        diff = lb - la  # negative where the larger code wins
        est = None
        bracket = None
        note = ""
        for i in range(len(eps_grid) - 1):
            if diff[i] < 0 <= diff[i + 1] or diff[i] <= 0 < diff[i + 1]:
                t = diff[i] / (diff[i] - diff[i + 1])
                est = eps_grid[i] + t * (eps_grid[i + 1] - eps_grid[i])
                bracket = (eps_grid[i], eps_grid[i + 1])
                break
        if bracket is None:
            if diff[-1] < 0:
                note = f"no crossing: larger code better across grid (above {eps_grid[-1]})"
            else:
                note = f"no crossing: smaller code better across grid (below {eps_grid[0]})"
        crossings.append(
            CrossingReport(a.name, b.name, bracket, est, note)
        )
    return {
        "eps_grid": list(eps_grid),
        "ler_table": {
            name: [s.to_dict() for s in rows] for name, rows in table.items()
        },
        "crossings": [asdict(c) for c in crossings],
    }


def _median_of_means(values: list[float], batches: int = 10) -> float:
    if not values:
        return 0.0
    arr = np.asarray(values)
    if arr.size < batches * 2:
        return float(arr.mean())
    splits = np.array_split(arr, batches)
    return float(np.median([s.mean() for s in splits]))


def timing_probe(
    code: StabilizerCode,
    eps: float,
    trials: int,
    seed: int,
    theta: float = 0.999995,
    warmup: int = 20,
) -> dict:
    """Mean per-call times for BP iterations, the reduced pipeline, and
    full order-2 OSD, measured on the same failed-BP instances.

    Timings use median-of-means over batches and are reported in
    microseconds; warm-up trials are excluded.
    """
    from .reduction import adosd as run_adosd

    bp_cfg = BpConfig(error_rate=eps)
    decoder = Bp4Decoder(code, bp_cfg)
    syndrome_matrix = code.H[:, lam_column_order(code.n)]
    budget = osd2_budget(code.n + code.k)
    rng_master = np.random.default_rng(seed)

    bp_iter_times: list[float] = []
    adosd_times: list[float] = []
    osd2_times: list[float] = []
    done = 0
    trial = 0
    while done < trials:
        trial += 1
        error = sample_error(rng_master, code.n, eps)
        syndrome = code.syndrome(error)
        t0 = time.perf_counter()
        out = decoder.decode(syndrome)
        t_bp = time.perf_counter() - t0
        done += 1
        if done <= warmup:
            continue
        bp_iter_times.append(t_bp / out.iterations)
        if out.success:
            continue
        hard = hard_decision_bits(out.belief)
        t0 = time.perf_counter()
        run_adosd(code, syndrome, out.belief, hard, theta=theta, budget=budget)
        adosd_times.append(time.perf_counter() - t0)
        order = build_order(out.belief)
        t0 = time.perf_counter()
        system = build_system(
            syndrome_matrix, syndrome, order, hard,
            n=code.n, require_rank=code.n - code.k,
        )
        osd_w(system, 2, budget)
        osd2_times.append(time.perf_counter() - t0)

    bp_iter_us = _median_of_means(bp_iter_times) * 1e6
    adosd_us = _median_of_means(adosd_times) * 1e6 if adosd_times else None
    osd2_us = _median_of_means(osd2_times) * 1e6 if osd2_times else None
    return {
        "trials": trials,
        "post_processed": len(adosd_times),
        "mean_bp_iteration_us": bp_iter_us,
        "mean_adosd_us": adosd_us,
        "mean_osd2_us": osd2_us,
        "adosd_over_bp_iteration": (adosd_us / bp_iter_us) if adosd_us else None,
        "adosd_over_osd2": (adosd_us / osd2_us) if adosd_us and osd2_us else None,
    }
