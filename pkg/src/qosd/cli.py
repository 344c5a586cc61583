"""Command-line front end: curves, thresholds, code files, timing, selftest.

Runs are described by a RunConfig that can come from an INI-style
config file, command-line flags, or both (flags win).  Every emitted
artifact embeds the top-level seed and a hash of the resolved config so
results can be replayed.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, fields

import click
import numpy as np

from . import codes as codes_mod
from .bp4 import BpConfig, alpha_sequence
from .codes import CodeSpec, StabilizerCode, code_report, load_code, save_code
from .sim import (
    ChannelModel,
    PipelineConfig,
    TrialRecord,
    run_trials,
    threshold_scan,
    timing_probe,
)

CSV_COLUMNS = (
    "eps,trials,logical_errors,ler,ler_ci_low,ler_ci_high,bp_failure_rate,"
    "osd0_only_fraction,dims20_fraction,dims30_fraction,"
    "mean_bp_iterations_success,mean_time_bp_iteration_us,mean_time_post_us"
)


@dataclass
class RunConfig:
    """Everything a simulation run needs, in one serializable object."""

    code: str = "rotated_surface"
    d: int = 3
    eps: tuple[float, ...] = (0.01,)
    pipeline: str = "bp+adosd"
    alpha: float = 1.0
    alpha_seq: str = ""  # "start,step,stop" for ambp pipelines
    max_iters: int = 100
    schedule: str = "parallel"
    theta: float = 0.999995
    gamma: int = 0  # 0: order-2 budget of the full system
    order: int = 2
    metric: str = "hard_then_soft"
    trials: int = 1000
    target_logical_errors: int = 0  # 0: run all trials
    seed: int = 0
    workers: int = 1

    def to_ini(self) -> str:
        parser = configparser.ConfigParser()
        parser["run"] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "eps":
                value = ",".join(repr(v) for v in value)
            parser["run"][f.name] = str(value)
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser()
        parser.read_string(text)
        section = parser["run"]
        kwargs = {}
        for f in fields(cls):
            if f.name not in section:
                continue
            raw = section[f.name]
            if f.name == "eps":
                kwargs[f.name] = tuple(float(tok) for tok in raw.split(",") if tok.strip())
            elif f.type in ("int", int):
                kwargs[f.name] = int(raw)
            elif f.type in ("float", float):
                kwargs[f.name] = float(raw)
            else:
                kwargs[f.name] = raw
        return cls(**kwargs)

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_ini().encode()).hexdigest()[:16]

    def build_code(self) -> StabilizerCode:
        return parse_code_spec(self.code, self.d).build()

    def pipeline_config(self, eps: float) -> PipelineConfig:
        alphas: tuple[float, ...] = ()
        if self.pipeline.startswith("ambp"):
            if self.alpha_seq:
                start, step, stop = (float(t) for t in self.alpha_seq.split(","))
                alphas = tuple(alpha_sequence(start, step, stop))
            else:
                alphas = tuple(alpha_sequence(1.6, -0.01, 0.5))
        return PipelineConfig(
            pipeline=self.pipeline,
            bp=BpConfig(
                error_rate=eps,
                max_iters=self.max_iters,
                alpha=self.alpha,
                schedule=self.schedule,
            ),
            theta=self.theta,
            budget=self.gamma if self.gamma > 0 else None,
            order=self.order,
            metric=self.metric,
            alpha_sequence=alphas,
        )


def parse_code_spec(code: str, d: int) -> CodeSpec:
    """'rotated_surface' / 'rotated_toric' (+ --d), 'bb:<preset>', or
    'file:<path>'."""
    if code.startswith("bb:"):
        return CodeSpec(family="bivariate_bicycle", preset=code[3:])
    if code.startswith("file:"):
        return CodeSpec(family="from_file", path=code[5:])
    if code in ("rotated_surface", "rotated_toric"):
        return CodeSpec(family=code, d=d)
    raise click.BadParameter(
        f"unknown code {code!r}; use rotated_surface, rotated_toric, "
        f"bb:<preset>, or file:<path>"
    )


def _resolve_workers(workers: int) -> int:
    env = os.environ.get("QOSD_THREADS")
    if env:
        return max(1, int(env))
    return max(1, workers)


def _apply_flags(cfg: RunConfig, flags: dict) -> RunConfig:
    for key, value in flags.items():
        if value is None:
            continue
        setattr(cfg, key, value)
    return cfg


_SHARED_FLAGS = [
    click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                 help="INI config file; flags override its values."),
    click.option("--code", default=None, help="rotated_surface | rotated_toric | bb:<preset> | file:<path>"),
    click.option("--d", type=int, default=None, help="code distance for lattice families"),
    click.option("--eps", default=None, help="comma-separated depolarizing rates"),
    click.option("--pipeline", default=None, type=click.Choice(
        ["bp", "bp+osd0", "bp+osdw", "bp+adosd", "ambp", "ambp+adosd"])),
    click.option("--alpha", type=float, default=None),
    click.option("--alpha-seq", "alpha_seq", default=None, help="start,step,stop"),
    click.option("--T", "max_iters", type=int, default=None, help="max BP iterations"),
    click.option("--theta", type=float, default=None),
    click.option("--gamma", type=int, default=None, help="candidate budget (0 = order-2 budget)"),
    click.option("--order", type=int, default=None),
    click.option("--trials", type=int, default=None),
    click.option("--target-logical-errors", "target_logical_errors", type=int, default=None),
    click.option("--seed", type=int, default=None),
    click.option("--workers", type=int, default=None),
]


def shared_flags(fn):
    for flag in reversed(_SHARED_FLAGS):
        fn = flag(fn)
    return fn


def _load_config(config_path: str | None, flags: dict) -> RunConfig:
    cfg = RunConfig()
    if config_path:
        cfg = RunConfig.from_ini(open(config_path).read())
    if flags.get("eps") is not None:
        flags = dict(flags)
        flags["eps"] = tuple(float(t) for t in flags["eps"].split(","))
    return _apply_flags(cfg, flags)


@click.group()
def main() -> None:
    """Stabilizer-code decoding experiments."""


@main.command("decode-curve")
@shared_flags
@click.option("--out", type=click.Path(), default=None, help="CSV output path")
@click.option("--trial-log", "trial_log", type=click.Path(), default=None)
def cmd_decode_curve(config_path, out, trial_log, **flags):
    """Logical-error-rate curve over the configured rates (CSV + JSON)."""
    cfg = _load_config(config_path, flags)
    code = cfg.build_code()
    workers = _resolve_workers(cfg.workers)
    header = f"# seed={cfg.seed} config={cfg.config_hash()} code={code.name}"
    rows = [header, CSV_COLUMNS]
    aggregates = []
    log_lines = [header, TrialRecord.CSV_HEADER]
    for eps in cfg.eps:
        stats, records = run_trials(
            code,
            ChannelModel(eps),
            cfg.pipeline_config(eps),
            cfg.trials,
            cfg.seed,
            workers=workers,
            target_logical_errors=cfg.target_logical_errors or None,
            keep_records=trial_log is not None,
        )
        s = stats
        rows.append(
            f"{eps},{s.trials},{s.logical_errors},{s.ler:.6g},{s.ler_ci_low:.6g},"
            f"{s.ler_ci_high:.6g},{s.bp_failure_rate:.6g},{s.osd0_only_fraction:.6g},"
            f"{s.dims20_fraction:.6g},{s.dims30_fraction:.6g},"
            f"{s.mean_bp_iterations_success:.6g},{s.mean_time_bp_iteration_us:.6g},"
            f"{s.mean_time_post_us:.6g}"
        )
        aggregates.append({"eps": eps, **s.to_dict()})
        if trial_log:
            log_lines.extend(r.csv_row() for r in records)
    csv_text = "\n".join(rows) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(csv_text)
        json_path = os.path.splitext(out)[0] + ".json"
        with open(json_path, "w") as fh:
            json.dump(
                {"seed": cfg.seed, "config_hash": cfg.config_hash(),
                 "code": code.name, "points": aggregates},
                fh, indent=2,
            )
        click.echo(f"wrote {out} and {json_path}")
    else:
        click.echo(csv_text, nl=False)
    if trial_log:
        with open(trial_log, "w") as fh:
            fh.write("\n".join(log_lines) + "\n")


@main.command("threshold")
@shared_flags
@click.option("--d-list", "d_list", default="3,5,7", help="comma-separated distances")
@click.option("--out", type=click.Path(), default=None)
def cmd_threshold(config_path, d_list, out, **flags):
    """Pairwise crossing intervals over a rate grid (JSON report)."""
    cfg = _load_config(config_path, flags)
    distances = [int(t) for t in d_list.split(",")]
    if len(distances) < 2:
        raise click.BadParameter("need at least two distances")
    spec = parse_code_spec(cfg.code, cfg.d)
    if spec.family not in ("rotated_surface", "rotated_toric"):
        raise click.BadParameter("threshold scans need a lattice family")
    builder = (
        codes_mod.build_rotated_surface
        if spec.family == "rotated_surface"
        else codes_mod.build_rotated_toric
    )
    code_list = [builder(d) for d in distances]
    workers = _resolve_workers(cfg.workers)
    report = threshold_scan(
        code_list, list(cfg.eps), cfg.pipeline_config, cfg.trials, cfg.seed, workers=workers
    )
    report["seed"] = cfg.seed
    report["config_hash"] = cfg.config_hash()
    text = json.dumps(report, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
        click.echo(f"wrote {out}")
    else:
        click.echo(text)


@main.group("code")
def cmd_code() -> None:
    """Build, export, and verify stabilizer-code files."""


@cmd_code.command("build")
@click.option("--code", required=True)
@click.option("--d", type=int, default=3)
@click.option("--out", type=click.Path(), required=True)
def cmd_code_build(code, d, out):
    built = parse_code_spec(code, d).build()
    save_code(built, out)
    click.echo(f"wrote {out}: [[{built.n},{built.k},{built.distance}]] m={built.m}")


@cmd_code.command("export")
@click.option("--code", required=True, help="any code spec, including file:<path>")
@click.option("--d", type=int, default=3)
@click.option("--out", type=click.Path(), required=True)
def cmd_code_export(code, d, out):
    built = parse_code_spec(code, d).build()
    save_code(built, out)
    click.echo(f"wrote {out}: [[{built.n},{built.k},{built.distance}]] m={built.m}")


@cmd_code.command("verify")
@click.option("--code", required=True)
@click.option("--d", type=int, default=3)
def cmd_code_verify(code, d):
    try:
        built = parse_code_spec(code, d).build()
    except codes_mod.CodeConstructionError as exc:
        click.echo(f"INVALID: {exc}")
        sys.exit(1)
    report = code_report(built)
    click.echo(json.dumps(report, indent=2))
    sys.exit(0 if report["valid"] else 1)


@main.command("timing-probe")
@shared_flags
@click.option("--out", type=click.Path(), default=None)
def cmd_timing_probe(config_path, out, **flags):
    """Per-stage timing comparison on failed-BP instances."""
    cfg = _load_config(config_path, flags)
    code = cfg.build_code()
    results = []
    for eps in cfg.eps:
        probe = timing_probe(code, eps, cfg.trials, cfg.seed, theta=cfg.theta)
        probe["eps"] = eps
        results.append(probe)
    payload = {
        "seed": cfg.seed,
        "config_hash": cfg.config_hash(),
        "code": code.name,
        "points": results,
    }
    text = json.dumps(payload, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
        click.echo(f"wrote {out}")
    else:
        click.echo(text)


@main.command("selftest")
def cmd_selftest():
    """Run the deterministic invariant suites."""
    from . import selftest

    failed = 0
    for name, ok, detail in selftest.run_all():
        click.echo(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        if not ok:
            failed += 1
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
