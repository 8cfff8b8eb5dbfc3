"""Batch command line front end.

One self-describing JSON config per run; command line flags override config
fields so every reported number is reproducible from the emitted files.
Exit status: 0 success, 1 precondition violation, 2 numerical failure;
failures print a machine-readable reason to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bifurcation as bif
from . import oracle, product, spectral
from .errors import ConfigError, SteklovBifError
from .fem import assemble
from .mesh import generate_disk, generate_interval, load_mesh

COMMANDS = ("steklov", "eigencurve", "instants", "certify", "report")


@dataclass
class RunConfig:
    """Merged parameters of one run (defaults < config file < flags)."""

    command: str
    model_path: str | None = None
    mesh_spec: str | None = None
    k: int = 7
    i_list: tuple = (1,)
    j_list: tuple = (0,)
    t_min: float = 0.1
    t_max: float = 10.0
    t_steps: int = 30
    epsilon: float | None = None
    degeneracy_rtol: float | None = None
    instants_path: str | None = None
    oracle_check: bool = False
    out: str | None = None
    out_json: str | None = None
    out_csv: str | None = None
    extras: dict = field(default_factory=dict)

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.t_min <= 0 or self.t_max <= self.t_min:
            raise ConfigError(f"t range must be ascending and positive, got "
                              f"[{self.t_min}, {self.t_max}]")
        if self.t_steps < 1:
            raise ConfigError("t_steps must be >= 1")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.degeneracy_rtol is not None and self.degeneracy_rtol <= 0:
            raise ConfigError("degeneracy_rtol must be positive")
        for path in (self.model_path, self.instants_path):
            if path is not None and not Path(path).exists():
                raise ConfigError(f"referenced file does not exist: {path}")
        return self


def _mesh_from_spec(spec: str):
    if spec.startswith("builtin:"):
        parts = spec.split(":")
        try:
            if parts[1] == "disk" and len(parts) == 3:
                return generate_disk(int(parts[2]))
            if parts[1] == "interval" and len(parts) == 4:
                return generate_interval(int(parts[2]), float(parts[3]))
        except ValueError as exc:
            raise ConfigError(f"malformed builtin mesh {spec!r}: {exc}") from exc
        raise ConfigError(
            f"unrecognized builtin mesh {spec!r}; expected builtin:disk:<level> "
            "or builtin:interval:<n>:<L>"
        )
    if not Path(spec).exists():
        raise ConfigError(f"mesh file does not exist: {spec}")
    return load_mesh(spec)


def _load_model(cfg: RunConfig):
    if cfg.model_path is None:
        raise ConfigError(f"command {cfg.command!r} needs --model")
    return product.load_model(cfg.model_path)


def _oracle_instants(model, records):
    """Closed-form instants for a unit-disk boundary factor: the lowest
    branch depends only on c = t * rho_i, so one root serves every i."""
    c_star = oracle.solve_branch_root(oracle.disk_branch(0), model.Hhat)
    deltas = []
    for r in records:
        if len(r.crossings) == 1 and r.crossings[0][1] == 0:
            i = r.crossings[0][0]
            t_oracle = c_star / model.factor.value(i)
            deltas.append(
                {
                    "t_star": r.t_star,
                    "t_oracle": t_oracle,
                    "rel_delta": abs(r.t_star - t_oracle) / t_oracle,
                }
            )
    return deltas


def _is_unit_disk_model(cfg: RunConfig) -> bool:
    if cfg.model_path is None:
        return False
    with open(cfg.model_path) as fh:
        doc = json.load(fh)
    return doc.get("boundary", {}).get("builtin") == "disk"


def cmd_steklov(cfg: RunConfig) -> list[str]:
    if cfg.mesh_spec is None:
        raise ConfigError("steklov needs --mesh")
    mesh = _mesh_from_spec(cfg.mesh_spec)
    forms = assemble(mesh)
    sl = spectral.steklov_spectrum(forms, cfg.k)
    out = cfg.out or "steklov.csv"
    spectral.slice_to_csv(sl, out)
    return [out]


def cmd_eigencurve(cfg: RunConfig) -> list[str]:
    model = _load_model(cfg)
    t_grid = np.linspace(cfg.t_min, cfg.t_max, cfg.t_steps)
    curves = []
    for i in cfg.i_list:
        rho_i = model.factor.value(i)
        for j in cfg.j_list:
            curves.append(
                spectral.trace_eigencurve(
                    model.boundary_forms, rho_i, j, t_grid, factor_index=i
                )
            )
    out = cfg.out or "eigencurves.csv"
    spectral.curves_to_csv(curves, out)
    return [out]


def cmd_instants(cfg: RunConfig) -> list[str]:
    if cfg.oracle_check and not _is_unit_disk_model(cfg):
        raise ConfigError("--oracle requires a builtin disk boundary factor")
    model = _load_model(cfg)
    records = bif.enumerate_instants(model, cfg.t_min, cfg.t_max)
    out_json = cfg.out_json or "instants.json"
    out_csv = cfg.out_csv or "instants.csv"
    bif.records_to_json(records, out_json)
    bif.records_to_csv(records, out_csv)
    emitted = [out_json, out_csv]
    if cfg.oracle_check:
        deltas = _oracle_instants(model, records)
        out_oracle = (cfg.out_json or "instants.json").replace(".json", "") + "_oracle.json"
        with open(out_oracle, "w") as fh:
            json.dump(deltas, fh, indent=2)
        emitted.append(out_oracle)
    return emitted


def cmd_certify(cfg: RunConfig) -> list[str]:
    model = _load_model(cfg)
    if cfg.instants_path is None:
        raise ConfigError("certify needs --instants <file>")
    records = bif.records_from_json(cfg.instants_path)
    neighbors = [r.t_star for r in records]
    certified = [
        bif.certify_bifurcation(
            model,
            r,
            cfg.epsilon,
            neighbors=[t for t in neighbors if t != r.t_star],
            degeneracy_rtol=cfg.degeneracy_rtol,
        )
        for r in records
    ]
    out_json = cfg.out_json or "certified.json"
    out_csv = cfg.out_csv or "certified.csv"
    bif.records_to_json(certified, out_json)
    bif.records_to_csv(certified, out_csv)
    return [out_json, out_csv]


def cmd_report(cfg: RunConfig) -> list[str]:
    if cfg.oracle_check and not _is_unit_disk_model(cfg):
        raise ConfigError("--oracle requires a builtin disk boundary factor")
    model = _load_model(cfg)
    out_dir = Path(cfg.out or "report")
    out_dir.mkdir(parents=True, exist_ok=True)

    records = bif.enumerate_instants(model, cfg.t_min, cfg.t_max)
    neighbors = [r.t_star for r in records]
    certified = [
        bif.certify_bifurcation(
            model, r, cfg.epsilon,
            neighbors=[t for t in neighbors if t != r.t_star],
            degeneracy_rtol=cfg.degeneracy_rtol,
        )
        for r in records
    ]
    bif.records_to_json(certified, out_dir / "instants.json")
    bif.records_to_csv(certified, out_dir / "instants.csv")

    # Morse index between consecutive instants (geometric midpoints).
    cuts = [cfg.t_max] + [r.t_star for r in certified] + [cfg.t_min]
    indices = []
    for hi, lo in zip(cuts, cuts[1:]):
        if hi / lo < 1.0 + 10 * bif.MERGE_RTOL:
            continue
        t_mid = float(np.sqrt(lo * hi))
        indices.append(
            {
                "t": t_mid,
                "morse_index": product.morse_index(model, t_mid, rtol=cfg.degeneracy_rtol),
            }
        )

    summary = {
        "model": {
            "m1": model.m1,
            "m2": model.m2,
            "H2": model.H2,
            "Hhat": model.Hhat,
            "factor_cutoff": model.factor.cutoff,
            "factor_entries": len(model.factor),
            "boundary_vertices": model.boundary_mesh.n_vertices,
            "boundary_dofs": len(model.boundary_forms.boundary_dofs),
        },
        "t_range": [cfg.t_min, cfg.t_max],
        "instants": json.loads(Path(out_dir / "instants.json").read_text()),
        "morse_indices": indices,
    }
    if cfg.oracle_check:
        summary["oracle_deltas"] = _oracle_instants(model, certified)
    report_path = out_dir / "report.json"
    with open(report_path, "w") as fh:
        json.dump(summary, fh, indent=2, default=float)
    return [str(report_path)]


def run(command: str, config: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    handlers = {
        "steklov": cmd_steklov,
        "eigencurve": cmd_eigencurve,
        "instants": cmd_instants,
        "certify": cmd_certify,
        "report": cmd_report,
    }
    try:
        config.validate()
        emitted = handlers[command](config)
    except SteklovBifError as exc:
        json.dump(exc.payload(), sys.stderr)
        sys.stderr.write("\n")
        return exc.exit_code
    for path in emitted:
        print(path)
    return 0


def _int_list(text: str) -> tuple:
    return tuple(int(x) for x in text.split(",") if x != "")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="steklovbif",
        description="Steklov spectra, eigencurves, and bifurcation instants "
        "of product metrics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON run config; flags override its fields")
        p.add_argument("--model", dest="model_path", help="model description JSON")

    p = sub.add_parser("steklov", help="Steklov spectrum of one mesh")
    add_common(p)
    p.add_argument("--mesh", dest="mesh_spec",
                   help="mesh file or builtin:disk:<level> / builtin:interval:<n>:<L>")
    p.add_argument("-k", type=int, dest="k", help="number of eigenvalues")
    p.add_argument("--out")

    p = sub.add_parser("eigencurve", help="sample branches over a t grid")
    add_common(p)
    p.add_argument("--i", dest="i_list", type=_int_list, help="factor indices, comma separated")
    p.add_argument("--j", dest="j_list", type=_int_list, help="branch positions, comma separated")
    p.add_argument("--t-min", dest="t_min", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--t-steps", dest="t_steps", type=int)
    p.add_argument("--out")

    p = sub.add_parser("instants", help="enumerate degeneracy instants")
    add_common(p)
    p.add_argument("--t-min", dest="t_min", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--oracle", dest="oracle_check", action="store_true", default=None)
    p.add_argument("--out-json", dest="out_json")
    p.add_argument("--out-csv", dest="out_csv")

    p = sub.add_parser("certify", help="certify instants from a records file")
    add_common(p)
    p.add_argument("--instants", dest="instants_path")
    p.add_argument("--epsilon", dest="epsilon", type=float)
    p.add_argument("--degeneracy-rtol", dest="degeneracy_rtol", type=float)
    p.add_argument("--out-json", dest="out_json")
    p.add_argument("--out-csv", dest="out_csv")

    p = sub.add_parser("report", help="summary report: instants, indices, oracle deltas")
    add_common(p)
    p.add_argument("--t-min", dest="t_min", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--epsilon", dest="epsilon", type=float)
    p.add_argument("--degeneracy-rtol", dest="degeneracy_rtol", type=float)
    p.add_argument("--oracle", dest="oracle_check", action="store_true", default=None)
    p.add_argument("--out")

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file does not exist: {path}")
        with open(path) as fh:
            doc = json.load(fh)
        for key, value in doc.items():
            if key in ("i_list", "j_list"):
                value = tuple(int(v) for v in value)
            if hasattr(cfg, key):
                setattr(cfg, key, value)
            else:
                cfg.extras[key] = value
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        setattr(cfg, key, value)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except SteklovBifError as exc:
        json.dump(exc.payload(), sys.stderr)
        sys.stderr.write("\n")
        return exc.exit_code
    return run(args.command, cfg)


if __name__ == "__main__":
    sys.exit(main())
