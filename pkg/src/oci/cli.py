"""Command-line entry point: ``oci <subcommand>``.

Configuration files are INI-style sections of ``key = value`` lines where
every value is a JSON literal (numbers, ``true``/``false``, quoted strings,
arrays). Flags override file values, and ``OCI_SEED`` overrides the file's
seed. Every command that writes to ``--out`` stores the fully resolved
configuration there as ``config.ini``.

Exit codes: 0 success, 1 runtime failure, 2 configuration or input error.
"""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional, Sequence

from . import __version__
from .augmenter import AugmentError, ParaphraseError, RenderConfig, TaskSpec, augment, bank_for
from .autodiff import CheckpointError, read_checkpoint
from .frm import FrmConfig, FrmConfigError
from .geometry import GeometryError, SectorConfig, scene_from_json

log = logging.getLogger("oci")

# Training budget of the ablation grid: 250 train+eval cells must fit in
# half an hour on one core, far below the 200 epochs of a single run.
GRID_EPOCHS = 32
GRID_LR = 3e-3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridSection:
    families: tuple[int, ...] = (1, 2, 3, 4, 5)
    regimes: tuple[int, ...] = (10, 25)
    variants: tuple[str, ...] = ("full", "no-abs", "no-rel", "no-frm", "plain")
    seeds: Optional[tuple[int, ...]] = None


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; serialized into each output directory."""

    train: Any = None  # TrainConfig; imported lazily to keep ``augment`` light
    grid: GridSection = field(default_factory=GridSection)
    out: Optional[str] = None

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        t = self.train
        cp["train"] = {f.name: _dump(getattr(t, f.name)) for f in fields(t)
                       if f.name not in ("frm", "sector", "decimals")}
        cp["frm"] = {f.name: _dump(getattr(t.frm, f.name)) for f in fields(t.frm)}
        cp["sector"] = {f.name: _dump(getattr(t.sector, f.name)) for f in fields(t.sector)}
        cp["render"] = {"decimals": _dump(t.decimals)}
        cp["grid"] = {f.name: _dump(getattr(self.grid, f.name)) for f in fields(self.grid)}
        cp["run"] = {"out": _dump(self.out)}
        lines = []
        for section in cp.sections():
            lines.append(f"[{section}]")
            lines.extend(f"{k} = {v}" for k, v in cp[section].items())
            lines.append("")
        return "\n".join(lines)


def _dump(v) -> str:
    if isinstance(v, tuple):
        v = list(v)
    return json.dumps(v)


def _coerce(cls, values: dict, section: str, exclude: tuple[str, ...] = ()):
    known = {f.name: f for f in fields(cls) if f.name not in exclude}
    unknown = sorted(set(values) - set(known))
    if unknown:
        raise ConfigError(f"[{section}] unknown keys: {', '.join(unknown)}")
    out = {}
    for k, v in values.items():
        default = getattr(cls(), k)
        if isinstance(default, tuple) or (default is None and isinstance(v, list)):
            if not isinstance(v, list):
                raise ConfigError(f"[{section}] {k} must be an array")
            v = tuple(v)
        elif isinstance(default, bool):
            if not isinstance(v, bool):
                raise ConfigError(f"[{section}] {k} must be true or false")
        elif isinstance(default, int) and not isinstance(default, bool):
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"[{section}] {k} must be an integer")
        elif isinstance(default, float):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"[{section}] {k} must be a number")
            v = float(v)
        out[k] = v
    return out


def read_ini(path) -> dict[str, dict[str, Any]]:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    except configparser.Error as e:
        raise ConfigError(f"malformed config {path}: {e}") from None
    sections = {"train", "frm", "sector", "render", "grid", "run"}
    extra = sorted(set(cp.sections()) - sections)
    if extra:
        raise ConfigError(f"unknown config sections: {', '.join(extra)}")
    raw: dict[str, dict[str, Any]] = {}
    for s in cp.sections():
        raw[s] = {}
        for k, v in cp[s].items():
            try:
                raw[s][k] = json.loads(v)
            except json.JSONDecodeError:
                raise ConfigError(f"[{s}] {k}: value is not a JSON literal: {v!r}") from None
    return raw


def build_config(raw: dict, overrides: dict, grid_defaults: bool = False) -> ExperimentConfig:
    """Merge file sections, ``OCI_SEED`` and flag overrides, in that order."""
    from .trainer import TrainConfig

    train_vals = _coerce(TrainConfig, raw.get("train", {}), "train",
                         exclude=("frm", "sector", "decimals"))
    if grid_defaults:
        train_vals.setdefault("epochs", GRID_EPOCHS)
        train_vals.setdefault("lr", GRID_LR)
    render = raw.get("render", {})
    if set(render) - {"decimals"}:
        raise ConfigError(f"[render] unknown keys: {', '.join(sorted(set(render) - {'decimals'}))}")
    if "decimals" in render:
        if isinstance(render["decimals"], bool) or not isinstance(render["decimals"], int):
            raise ConfigError("[render] decimals must be an integer")
        train_vals["decimals"] = render["decimals"]
    env_seed = os.environ.get("OCI_SEED")
    if env_seed is not None:
        try:
            train_vals["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"OCI_SEED must be an integer, got {env_seed!r}") from None
    variant = overrides.pop("variant", None)
    train_vals.update({k: v for k, v in overrides.items() if v is not None and k in
                       {f.name for f in fields(TrainConfig)}})
    grid_vals = _coerce(GridSection, raw.get("grid", {}), "grid")
    run = raw.get("run", {})
    if set(run) - {"out"}:
        raise ConfigError(f"[run] unknown keys: {', '.join(sorted(set(run) - {'out'}))}")
    try:
        frm = FrmConfig(**_coerce(FrmConfig, raw.get("frm", {}), "frm"))
        sector = SectorConfig(**_coerce(SectorConfig, raw.get("sector", {}), "sector"))
        train = TrainConfig(**train_vals, frm=frm, sector=sector)
        if variant is not None:
            train = train.variant(variant)
        RenderConfig(decimals=train.decimals)
        grid = GridSection(**grid_vals)
    except (TypeError, FrmConfigError, GeometryError, AugmentError, KeyError) as e:
        raise ConfigError(f"invalid configuration: {e}") from None
    from .trainer import VARIANTS

    bad = [v for v in grid.variants if v not in VARIANTS]
    if bad:
        raise ConfigError(f"[grid] unknown variants {bad}; expected some of {list(VARIANTS)}")
    if train.epochs < 0 or train.batch_size < 1 or train.eval_episodes < 1 or train.eval_seeds < 1:
        raise ConfigError("epochs must be >= 0 and batch_size, eval_episodes, eval_seeds >= 1")
    return ExperimentConfig(train=train, grid=grid, out=overrides.get("out") or run.get("out"))


# --- helpers ------------------------------------------------------------------


def _emit(obj: dict) -> None:
    """The machine-readable final line."""
    print(json.dumps(obj, sort_keys=True, allow_nan=False, default=_json_default))


def _json_default(v):
    if hasattr(v, "item"):
        return v.item()
    raise TypeError(f"not JSON serializable: {type(v).__name__}")


def _finite(x: float) -> Optional[float]:
    return x if x == x and abs(x) != float("inf") else None


def _prepare_out(exp: ExperimentConfig) -> Path:
    if not exp.out:
        raise ConfigError("--out is required")
    out = Path(exp.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.ini").write_text(exp.to_ini(), encoding="utf-8")
    except OSError as e:
        raise RuntimeError(f"cannot write to {out}: {e.strerror}") from None
    return out


def _load_config(args, grid_defaults: bool = False) -> ExperimentConfig:
    raw = read_ini(args.config) if args.config else {}
    overrides = {
        "family": args.family, "n_demos": args.n_demos, "epochs": args.epochs, "lr": args.lr,
        "seed": args.seed, "eval_episodes": args.eval_episodes, "variant": args.variant,
        "out": args.out,
    }
    for flag, key in (("no_abs", "use_abs"), ("no_rel", "use_rel"), ("no_frm", "use_frm")):
        if getattr(args, flag, False):
            overrides[key] = False
    return build_config(raw, overrides, grid_defaults)


# --- subcommands ------------------------------------------------------------------


def cmd_augment(args) -> int:
    try:
        scene = scene_from_json(Path(args.scene).read_text(encoding="utf-8"))
        task = TaskSpec.from_dict(json.loads(Path(args.task).read_text(encoding="utf-8")))
    except OSError as e:
        return _fail(2, f"cannot read input: {e.filename}: {e.strerror}")
    except (json.JSONDecodeError, GeometryError, AugmentError, TypeError, AttributeError) as e:
        return _fail(2, f"invalid input: {e}")
    cfg = RenderConfig(decimals=args.decimals, canonical=True, ablate_abs=args.no_abs, ablate_rel=args.no_rel)
    sector = SectorConfig(cardinal_half_angle_deg=args.half_angle)
    try:
        tasks = [task]
        if args.paraphrase:
            tasks = [task.with_template(t) for t in bank_for(task).select(args.paraphrase, args.seed)]
        for t in tasks:
            print(augment(scene, t, cfg, sector)[1])
    except (AugmentError, GeometryError, ParaphraseError) as e:
        return _fail(2, str(e))
    return 0


def cmd_gen(args) -> int:
    from .trainer import gen_dataset

    exp = _load_config(args)
    out = _prepare_out(exp)
    path = out / "demos.jsonl"
    episodes = gen_dataset(exp.train, path)
    _emit({"command": "gen", "episodes": len(episodes), "path": str(path),
           "mean_length": sum(len(e) for e in episodes) / max(len(episodes), 1)})
    return 0


def cmd_train(args) -> int:
    from .sim import read_jsonl
    from .trainer import gen_dataset, train_bc

    exp = _load_config(args)
    out = _prepare_out(exp)
    data = read_jsonl(args.data) if args.data else gen_dataset(exp.train, out / "demos.jsonl")
    ckpt = out / "model.ckpt"
    result = train_bc(data, exp.train, checkpoint=ckpt)
    (out / "losses.csv").write_text(
        "epoch,loss\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(result.losses)), encoding="utf-8")
    _emit({"command": "train", "checkpoint": str(ckpt), "epochs": len(result.losses),
           "final_loss": _finite(result.losses[-1]) if result.losses else None,
           "train_accuracy": result.accuracy})
    return 0


def cmd_eval(args) -> int:
    from .encoders import Vocab
    from .trainer import build_model, evaluate

    exp = _load_config(args)
    out = _prepare_out(exp)
    cfg = exp.train
    if args.expert:
        metrics = [evaluate(None, replace(cfg, seed=s), "expert", expert=True) for s in range(cfg.eval_seeds)]
    else:
        if not args.checkpoint:
            raise ConfigError("eval needs --checkpoint or --expert")
        model = build_model(cfg, Vocab.default())
        model.load(args.checkpoint)
        metrics = [evaluate(model, replace(cfg, seed=s), args.variant or "custom")
                   for s in range(cfg.eval_seeds)]
    rows = [dataclasses.asdict(m) for m in metrics]
    (out / "metrics.json").write_text(json.dumps(rows, indent=1, default=_json_default, allow_nan=True) + "\n",
                                      encoding="utf-8")
    mean = sum(m.success_rate for m in metrics) / len(metrics)
    _emit({"command": "eval", "success_rate": mean, "seeds": len(metrics),
           "episodes": sum(m.episodes for m in metrics),
           "embedder_calls": sum(m.embedder_calls for m in metrics),
           "mean_episode_length": sum(m.mean_episode_length for m in metrics) / len(metrics)})
    return 0


def cmd_grid(args) -> int:
    from .trainer import GridSpec, run_ablation_grid

    exp = _load_config(args, grid_defaults=True)
    out = _prepare_out(exp)
    g = exp.grid
    spec = GridSpec(families=g.families, regimes=g.regimes, variants=g.variants, seeds=g.seeds)

    def progress(m):
        log.info("family %d regime %d %-6s seed %d: success %.2f", m.family, m.regime, m.variant,
                 m.seed, m.success_rate)

    result = run_ablation_grid(exp.train, spec, jobs=args.jobs, progress=progress)
    (out / "metrics.csv").write_text(result.to_csv(), encoding="utf-8")
    (out / "cache_audit.csv").write_text(result.audit_csv(), encoding="utf-8")
    (out / "failures.json").write_text(json.dumps(
        [{"cell": list(c), "error": e} for c, e in result.failures], indent=1) + "\n", encoding="utf-8")
    summary = {"command": "grid", "rows": len(result.rows), "failures": len(result.failures),
               "elapsed_s": round(result.elapsed, 1), "metrics": str(out / "metrics.csv"),
               "cache_ok": all(m.embedder_calls == m.episodes for m in result.rows)}
    for v in spec.variants:
        summary[f"mean_{v}"] = _finite(result.mean(v))
    _emit(summary)
    return 1 if result.failures else 0


def cmd_selftest(args) -> int:
    from .checks import run_all

    if args.checkpoint:
        try:
            stored = read_checkpoint(args.checkpoint)
        except CheckpointError as e:
            print(f"checkpoint: FAIL {e}")
            _emit({"command": "selftest", "passed": False, "error": str(e)})
            return 1
        print(f"checkpoint: ok ({len(stored)} tensors)")
    results = run_all(quick=args.quick)
    for r in results:
        status = "ok" if r.passed else "FAIL"
        print(f"{r.name}: {status} cases={r.cases} failures={len(r.failures)} "
              f"max_error={r.max_error:.3g} ({r.seconds:.1f}s)")
        for f in r.failures[:5]:
            print(f"  {f}")
    passed = all(r.passed for r in results)
    _emit({"command": "selftest", "passed": passed,
           "suites": {r.name: {"passed": r.passed, "cases": r.cases, "max_error": r.max_error}
                      for r in results}})
    return 0 if passed else 1


# --- parser ---------------------------------------------------------------------------


def _fail(code: int, message: str) -> int:
    print(f"oci: error: {message}", file=sys.stderr)
    return code


def _run_flags(p: argparse.ArgumentParser, out_required: bool = True) -> None:
    p.add_argument("--config", help="INI config file with JSON values")
    p.add_argument("--out", required=out_required, help="output directory")
    p.add_argument("--family", type=int)
    p.add_argument("--n-demos", dest="n_demos", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--eval-episodes", dest="eval_episodes", type=int)
    p.add_argument("--variant", choices=("full", "no-abs", "no-rel", "no-frm", "plain"))
    p.add_argument("--no-abs", action="store_true")
    p.add_argument("--no-rel", action="store_true")
    p.add_argument("--no-frm", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oci", description="Position-aware instruction augmentation toolkit.")
    parser.add_argument("--version", action="version", version=f"oci {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="progress logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("augment", help="augment one instruction")
    p.add_argument("--scene", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--no-abs", action="store_true")
    p.add_argument("--no-rel", action="store_true")
    p.add_argument("--paraphrase", type=int, default=0, metavar="K")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--decimals", type=int, default=3)
    p.add_argument("--half-angle", dest="half_angle", type=float, default=22.5)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("gen", help="generate expert demonstrations")
    _run_flags(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="behavior-clone a policy")
    _run_flags(p)
    p.add_argument("--data", help="existing demos.jsonl (default: generate)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint or the scripted expert")
    _run_flags(p)
    p.add_argument("--checkpoint")
    p.add_argument("--expert", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grid", help="run the ablation grid")
    _run_flags(p)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("selftest", help="gradient, round-trip and direction suites")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--checkpoint", help="also verify this checkpoint file")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    if getattr(args, "jobs", 1) < 1:
        return _fail(2, "--jobs must be >= 1")
    try:
        return args.func(args)
    except ConfigError as e:
        code, msg = 2, str(e)
    except (CheckpointError, FrmConfigError) as e:
        code, msg = 1, str(e)
    except Exception as e:  # runtime failure: report, never a silent partial result
        log.debug("failure", exc_info=True)
        code, msg = 1, f"{type(e).__name__}: {e}"
    _emit({"command": args.command, "error": msg, "exit_code": code})
    return _fail(code, msg)
