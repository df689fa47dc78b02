"""Command-line front door: ``coalgame <subcommand> ...``.

Exit codes: 0 success / Nash / converged, 1 not Nash / not converged,
2 Monte Carlo verdict indeterminate, 3 bad input or refused request.
"""
from __future__ import annotations

import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import click

from . import bounds as bnd
from .equilibrium import DynamicsConfig, best_response_dynamics, enumerate_nash, is_nash
from .generators import gen_Gkl, gen_Gz, gen_random
from .io import (
    FormatError,
    atomic_write,
    format_edge_list,
    format_positions,
    load_instance,
    load_partition,
    trace_to_json,
)
from .model import Partition, RiskModel
from .topology import GraphTopology, SamplingConfig, coverage_measure

CONFIG_SCHEMA_VERSION = 1
EXIT_ERROR = 3


class InputError(click.ClickException):
    exit_code = EXIT_ERROR


@dataclass
class RunConfig:
    r: float = 0.5
    M: float = 1.0
    samples: int = 200_000
    seed: int = 0
    allow_empty_defect: bool = False
    rtol: float = 1e-12
    n_limit: int = 12
    max_steps: int = 10_000
    order: str = "deterministic"

    @property
    def risk(self) -> RiskModel:
        return RiskModel(self.r, self.M, self.rtol)

    @property
    def sampling(self) -> SamplingConfig:
        return SamplingConfig(self.samples, self.seed)


def resolve_config(config_path: str | None, overrides: dict) -> RunConfig:
    """Defaults, then the JSON config file, then ``COALITION_SEED``, then flags."""
    values = asdict(RunConfig())
    if config_path:
        try:
            doc = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {config_path}: {exc}") from None
        version = doc.pop("schema_version", None)
        if version != CONFIG_SCHEMA_VERSION:
            raise InputError(f"config schema_version must be {CONFIG_SCHEMA_VERSION}, got {version!r}")
        known = {f.name for f in fields(RunConfig)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise InputError(f"unknown config keys: {', '.join(unknown)}")
        values.update(doc)
    env_seed = os.environ.get("COALITION_SEED")
    if env_seed is not None:
        try:
            values["seed"] = int(env_seed)
        except ValueError:
            raise InputError(f"COALITION_SEED must be an integer, got {env_seed!r}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    cfg = RunConfig(**values)
    try:
        cfg.risk, cfg.sampling
        DynamicsConfig(cfg.max_steps, cfg.order, cfg.seed, cfg.allow_empty_defect)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return cfg


def common_options(f):
    opts = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON run config."),
        click.option("--r", type=float, help="Risk aversion in (0, 1)."),
        click.option("--M", "M", type=float, help="Prize money."),
        click.option("--samples", type=int, help="Monte Carlo samples (Euclidean d >= 2)."),
        click.option("--seed", type=int, help="64-bit seed."),
        click.option("--allow-empty-defect/--no-empty-defect", default=None, help="Permit defecting to a new singleton group."),
        click.option("--rtol", type=float, help="Relative tolerance of a strict increase."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _config(kw: dict) -> RunConfig:
    config_path = kw.pop("config_path", None)
    return resolve_config(config_path, kw)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load(path, cfg: RunConfig):
    try:
        return load_instance(path, cfg.sampling)
    except (OSError, FormatError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_partition(path, n: int) -> Partition:
    try:
        part = load_partition(path)
        part.validate(n)
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None
    return part


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write(out, text)
    else:
        click.echo(text, nl=False)


@click.group()
def cli():
    """Risk-averse coalition formation: equilibria, dynamics, bounds."""


@cli.command("check-nash")
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@click.argument("partition", type=click.Path(exists=True, dir_okay=False))
@common_options
@click.pass_context
def check_nash_cmd(ctx, instance, partition, **kw):
    """Decide whether PARTITION is a Nash equilibrium of INSTANCE."""
    cfg = _config(kw)
    inst = _load(instance, cfg)
    part = _load_partition(partition, inst.n_players)
    report = is_nash(part, inst, cfg.risk, cfg.allow_empty_defect)
    doc = report.to_dict()
    doc.update(seed=cfg.seed, r=cfg.r, M=cfg.M, allow_empty_defect=cfg.allow_empty_defect)
    click.echo(_dump(doc), nl=False)
    ctx.exit({"nash": 0, "not_nash": 1, "indeterminate": 2}[report.verdict])


@cli.command("dynamics")
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@click.option("--initial", type=click.Path(exists=True, dir_okay=False), help="Start partition (default: singletons).")
@click.option("--max-steps", type=int)
@click.option("--order", type=click.Choice(["deterministic", "random"]))
@click.option("--out", type=click.Path(dir_okay=False), help="Write the final partition here.")
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), help="Write the JSON move trace here.")
@common_options
@click.pass_context
def dynamics_cmd(ctx, instance, initial, out, trace_path, **kw):
    """Run best-response dynamics on INSTANCE."""
    cfg = _config(kw)
    inst = _load(instance, cfg)
    start = _load_partition(initial, inst.n_players) if initial else Partition.singletons(inst.n_players)
    config = DynamicsConfig(cfg.max_steps, cfg.order, cfg.seed, cfg.allow_empty_defect)
    result = best_response_dynamics(start, inst, cfg.risk, config)
    if out:
        atomic_write(out, result.partition.to_text())
    if trace_path:
        atomic_write(trace_path, trace_to_json(result.trace))
    doc = {
        "converged": result.converged,
        "steps": len(result.trace),
        "partition": [sorted(g) for g in result.partition],
        "trace": [m.to_dict() for m in result.trace],
        "seed": cfg.seed,
    }
    click.echo(_dump(doc), nl=False)
    ctx.exit(0 if result.converged else 1)


@cli.command("enumerate")
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@click.option("--n-limit", type=int)
@click.option("--out", type=click.Path(dir_okay=False), help="Write the CSV here instead of stdout.")
@common_options
def enumerate_cmd(instance, out, **kw):
    """List every Nash partition of INSTANCE with a bound check."""
    cfg = _config(kw)
    inst = _load(instance, cfg)
    risk = cfg.risk
    try:
        found = enumerate_nash(inst, risk, cfg.allow_empty_defect, cfg.n_limit)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["partition", "richest_fraction", "bound", "satisfied"])
    for part in found:
        check = bnd.verify_richest_bound(inst, part, risk, cfg.allow_empty_defect)
        w.writerow([
            str(part),
            repr(check.observed),
            "" if check.bound_value is None else repr(check.bound_value),
            "" if check.satisfied is None else str(check.satisfied).lower(),
        ])
    _emit(buf.getvalue(), out)


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise InputError(f"expected a list of numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise InputError(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


def bounds_table(rs, ds, fs, lam, area, c, k, n) -> list[tuple[str, str, float]]:
    rows = []
    for r in rs:
        rows.append(("line", f"r={r:g}", bnd.line_richest_bound(r)))
    for d in ds:
        rows.append(("euclid_basic", f"d={d}", bnd.euclid_bound_basic(d)))
    for d in ds:
        if d < 2:
            continue
        for r in rs:
            rows.append(("euclid_improved", f"d={d};r={r:g}", bnd.euclid_bound_improved(d, r)))
    for f in fs:
        for r in rs:
            rows.append(("regular_graph", f"f={f};r={r:g}", bnd.regular_graph_bound(f, r)))
    for r in rs:
        rows.append(("money_area", f"lam={lam:g};A={area:g};c={c:g};r={r:g}", bnd.min_money_by_area(lam, area, c, r)))
        rows.append(("money_size", f"k={k};c={c:g};A={area:g};N={n};r={r:g}", bnd.min_money_by_size(k, c, area, n, r)))
    return rows


@cli.command("bounds")
@click.option("--r", "r_list", default="0.1 0.2 0.3 0.4 0.5 0.6 0.7 0.8 0.9", show_default=True)
@click.option("--d", "d_list", default="1 2 3 4", show_default=True)
@click.option("--f", "f_list", default="1 2 3 4 5", show_default=True)
@click.option("--lam", default=0.5, show_default=True)
@click.option("--area", default=100.0, show_default=True)
@click.option("--c", default=1.0, show_default=True)
@click.option("--k", default=10, show_default=True)
@click.option("--n", default=100, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
def bounds_cmd(r_list, d_list, f_list, lam, area, c, k, n, out):
    """Tabulate every closed-form bound over a parameter grid (CSV)."""
    try:
        rows = bounds_table(_floats(r_list), _ints(d_list), _ints(f_list), lam, area, c, k, n)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["topology", "params", "bound_value"])
    for topo, params, value in rows:
        w.writerow([topo, params, repr(value)])
    _emit(buf.getvalue(), out)


@cli.command("gen")
@click.argument("kind", type=click.Choice(["gz", "gkl", "line", "euclid", "regular"]))
@click.option("--out", "prefix", required=True, help="Output path prefix.")
@click.option("--r", type=float, default=0.5, show_default=True)
@click.option("--z", type=int)
@click.option("--k", type=int)
@click.option("--l", "ell", type=int)
@click.option("--n", type=int)
@click.option("--d", type=int, default=2, show_default=True)
@click.option("--f", type=int, default=3, show_default=True)
@click.option("--extent", type=float, default=20.0, show_default=True)
@click.option("--seed", type=int)
def gen_cmd(kind, prefix, r, z, k, ell, n, d, f, extent, seed):
    """Generate an instance (and, for gkl, its star partition)."""
    env_seed = os.environ.get("COALITION_SEED")
    if seed is None:
        seed = int(env_seed) if env_seed is not None else 0
    meta: dict = {"kind": kind, "seed": seed}
    try:
        if kind == "gz":
            if z is None:
                raise InputError("gen gz needs --z")
            gz = gen_Gz(z, r)
            meta.update(gz.spec.to_dict(), v=gz.v)
            files = {".edges": format_edge_list(gz.graph)}
        elif kind == "gkl":
            if k is None or ell is None:
                raise InputError("gen gkl needs --k and --l")
            gkl = gen_Gkl(k, ell, r)
            meta.update(gkl.spec.to_dict())
            files = {".edges": format_edge_list(gkl.graph), ".partition": gkl.partition.to_text()}
        else:
            if n is None:
                raise InputError(f"gen {kind} needs --n")
            inst = gen_random(kind, n, seed, extent=extent, d=d, f=f)
            meta.update(n=n, extent=extent, d=1 if kind == "line" else d, f=f if kind == "regular" else None)
            if isinstance(inst, GraphTopology):
                files = {".edges": format_edge_list(inst)}
            else:
                files = {".csv": format_positions(inst.positions)}
    except ValueError as exc:
        raise InputError(str(exc)) from None
    meta["files"] = sorted(prefix + ext for ext in files)
    for ext, text in files.items():
        atomic_write(prefix + ext, text)
    atomic_write(prefix + ".json", _dump(meta))
    click.echo(_dump(meta), nl=False)


@cli.command("coverage")
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@click.option("--members", required=True, help="Space-separated player ids.")
@common_options
def coverage_cmd(instance, members, **kw):
    """Coverage measure of a member set."""
    cfg = _config(kw)
    inst = _load(instance, cfg)
    try:
        report = coverage_measure(_ints(members), inst)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    doc = report.to_dict()
    doc["seed"] = cfg.seed
    click.echo(_dump(doc), nl=False)


def main(argv=None) -> int:
    """Console entry point; maps every input error to exit code 3."""
    try:
        code = cli.main(args=argv, prog_name="coalgame", standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return EXIT_ERROR
    except click.exceptions.Abort:
        return EXIT_ERROR
    except (ValueError, OSError) as exc:
        click.echo(f"Error: {exc}", err=True)
        return EXIT_ERROR
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
