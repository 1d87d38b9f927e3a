"""Command-line front end.

``rabipat <command> --config run.json --out table.csv [--threads N] [--seed S]``

Commands: ``spectrum``, ``patterns``, ``phase-diagram``, ``analytic`` and
``validate``. Each reads one strict JSON document and writes one CSV whose
leading ``#`` block records the tool version, a hash of the canonical
config, and the formula-ledger entries that bear on the command.

Exit codes: 0 success, 2 config error (no output written), 3 convergence
failure (output written, see the ``converged`` column), 4 invariant
violation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import replace

import jsonschema
import numpy as np

from . import __version__, errata, phases, validation
from .hilbert import HilbertConfig
from .models import BUILDERS, AnisotropicRabiParams, ParametricJCParams
from .spectra import (
    Axis,
    CutoffPolicy,
    SweepSpec,
    converge_cutoff,
    diagonalize,
    param_columns,
    parity_values,
    photon_numbers,
    run_sweep,
)

__all__ = ["main", "format_csv", "read_csv", "reemit", "config_hash", "EXIT_OK", "EXIT_CONFIG",
           "EXIT_CONVERGENCE", "EXIT_INVARIANT"]

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_INVARIANT = 0, 2, 3, 4
COMMANDS = ("spectrum", "patterns", "phase-diagram", "analytic", "validate")

USAGE = """\
usage: rabipat <spectrum|patterns|phase-diagram|analytic|validate> --config FILE.json --out FILE.csv
               [--threads N] [--seed S]

The config is a single JSON object; unknown keys are rejected. Examples live
in the configs/ directory of the source tree. Minimal shapes:

  spectrum       {"model": "anisotropic", "params": {"omega0": 1, "Omega": 100, "xi1": 0.1, "xi2": 0}}
  patterns       {"params": {...}, "axis": {"name": "xi1_over_xi1c", "start": 0.5, "stop": 1.5, "num": 101},
                  "k": [0.5, 0.9, 1.0, 1.5]}
  phase-diagram  {"params": {"delta_c": 1, "delta_q": 23.56, "r": 0},
                  "axes": [{"name": "g", ...}, {"name": "r", ...}]}
  analytic       {"params": {"delta_c": 1, "delta_q": 23.56, "r": 1.4142}, "coupling": {"start": 0.5, ...}}
  validate       {"suites": ["reconstruction", "negative-control", ...]}
"""


class ConfigError(ValueError):
    pass


# -- schema -------------------------------------------------------------------

_NUM = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}

_ANISO_PARAMS = {
    "type": "object",
    "properties": {k: _NUM for k in ("omega0", "Omega", "xi1", "xi2")},
    "required": ["omega0", "Omega", "xi1", "xi2"],
    "additionalProperties": False,
}
_PJC_PARAMS = {
    "type": "object",
    "properties": {k: _NUM for k in ("delta_c", "delta_q", "g", "eta", "r")},
    "required": ["delta_c", "delta_q"],
    "additionalProperties": False,
}
_CUTOFF = {
    "type": "object",
    "properties": {
        "tol_E": {"type": "number", "exclusiveMinimum": 0},
        "tol_n": {"type": "number", "exclusiveMinimum": 0},
        "N_start": _POS_INT,
        "N_max": _POS_INT,
    },
    "additionalProperties": False,
}
_RANGE = {
    "type": "object",
    "properties": {"start": _NUM, "stop": _NUM, "num": _POS_INT},
    "required": ["start", "stop", "num"],
    "additionalProperties": False,
}


def _axis(names):
    props = dict(_RANGE["properties"], name={"enum": list(names)})
    return {**_RANGE, "properties": props, "required": ["name", *_RANGE["required"]]}


_COMMON = {"levels": _POS_INT, "cutoff": _CUTOFF, "fixed_cutoff": _POS_INT}

SCHEMAS = {
    "spectrum": {
        "type": "object",
        "properties": {
            "model": {"enum": list(BUILDERS)},
            "params": {"type": "object"},
            "ordering": {"enum": ["minus_plus", "plus_minus"]},
            **_COMMON,
        },
        "required": ["model", "params"],
        "additionalProperties": False,
    },
    "patterns": {
        "type": "object",
        "properties": {
            "params": _ANISO_PARAMS,
            "axis": _axis(("k_over_kc", "xi1_over_xi1c")),
            "k": {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 1}]},
            "d2": {"type": "boolean"},
            "h": {"type": "number", "exclusiveMinimum": 0},
            **_COMMON,
        },
        "required": ["params", "axis"],
        "additionalProperties": False,
    },
    "phase-diagram": {
        "type": "object",
        "properties": {
            "model": {"enum": ["squeezed-frame", "parametric-jc"]},
            "params": _PJC_PARAMS,
            "axes": {"type": "array", "items": _axis(("g", "g_over_g0", "r")), "minItems": 1, "maxItems": 2},
            "gap_floor": {"type": "number", "exclusiveMinimum": 0},
            **_COMMON,
        },
        "required": ["params", "axes"],
        "additionalProperties": False,
    },
    "analytic": {
        "type": "object",
        "properties": {
            "model": {"enum": ["parametric-jc", "anisotropic"]},
            "params": {"type": "object"},
            "coupling": _RANGE,
            "h": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["params", "coupling"],
        "additionalProperties": False,
    },
    "validate": {
        "type": "object",
        "properties": {
            "suites": {"type": "array", "items": {"enum": list(validation.SUITES)}, "minItems": 1},
            "draws": _POS_INT,
            "assembly": {"enum": ["consistent", "literal"]},
        },
        "additionalProperties": False,
    },
}


def _check_schema(schema, doc, where="config"):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or where
        raise ConfigError(f"{path}: {exc.message}") from None


def _params(model: str, doc: dict):
    if model == "anisotropic":
        _check_schema(_ANISO_PARAMS, doc, "params")
        return AnisotropicRabiParams(**doc)
    _check_schema(_PJC_PARAMS, doc, "params")
    doc = {"g": 0.0, **doc}
    if "eta" not in doc and "r" not in doc:
        raise ConfigError("params: give one of 'eta' or 'r'")
    return ParametricJCParams(**doc)


def _policy(cfg: dict) -> CutoffPolicy:
    return CutoffPolicy(**cfg.get("cutoff", {}))


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


# -- CSV ----------------------------------------------------------------------

def _format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def _parse_cell(t: str):
    if t == "":
        return None
    if t in ("true", "false"):
        return t == "true"
    try:
        i = int(t)
        if str(i) == t:
            return i
    except ValueError:
        pass
    try:
        f = float(t)
        if "%.17g" % f == t:
            return f
    except ValueError:
        pass
    return t


def format_csv(comments, header, rows) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n" if line else "#\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_cell(row.get(col)) for col in header])
    return buf.getvalue()


def read_csv(text: str):
    """Split an emitted table into ``(comments, header, rows)`` with typed cells."""
    lines = text.splitlines(keepends=True)
    comments = []
    while lines and lines[0].startswith("#"):
        line = lines.pop(0).rstrip("\n")
        comments.append(line[2:] if line.startswith("# ") else line[1:])
    reader = csv.reader(lines)
    header = next(reader)
    rows = [dict(zip(header, (_parse_cell(t) for t in rec))) for rec in reader]
    return comments, header, rows


def reemit(text: str) -> str:
    return format_csv(*read_csv(text))


def _header(rows) -> list:
    cols = []
    seen = set()
    for row in rows:
        for key in row:
            if key not in seen:
                seen.add(key)
                cols.append(key)
    return cols


def _comments(command: str, cfg: dict, seed: int | None) -> list:
    lines = [f"rabipat {__version__}", f"command: {command}", f"config_sha256: {config_hash(cfg)}"]
    if seed is not None:
        lines.append(f"seed: {seed}")
    lines += [f"ledger: {errata.format_entry(e)}" for e in errata.entries_for(command)]
    return lines


# -- commands -----------------------------------------------------------------

def _prepare_spectrum(cfg):
    model = cfg["model"]
    p = _params("anisotropic" if model == "anisotropic" else "driven", cfg["params"])
    kwargs = {}
    if "ordering" in cfg:
        if model != "dispersive":
            raise ConfigError("'ordering' only applies to the dispersive model")
        kwargs["ordering"] = cfg["ordering"]
    levels = cfg.get("levels", 4)
    policy = _policy(cfg)
    fixed = cfg.get("fixed_cutoff")

    def run(_threads):
        builder = BUILDERS[model]
        if fixed is not None:
            res = replace(diagonalize(builder(p, HilbertConfig(fixed), **kwargs), levels), cutoff_used=fixed)
        else:
            res = converge_cutoff(builder, p, policy, levels, **kwargs)
        row = {"model": model, **param_columns(p)}
        row.update(cutoff_used=res.cutoff_used, converged=bool(res.converged),
                   convergence_residual=res.convergence_residual)
        nn, pv = photon_numbers(res), parity_values(res)
        for i, e in enumerate(res.eigenvalues):
            row[f"E{i}"] = float(e)
        row["gap"] = res.gap if len(res.eigenvalues) > 1 else math.nan
        for i in range(len(nn)):
            row[f"n{i}"] = float(nn[i])
        for i in range(len(pv)):
            row[f"parity{i}"] = float(pv[i])
        return [row], True

    return run


def _prepare_patterns(cfg):
    p = _params("anisotropic", cfg["params"])
    ax = cfg["axis"]
    axis = Axis(ax["name"], ax["start"], ax["stop"], ax["num"])
    ks = cfg.get("k")
    if ax["name"] == "k_over_kc":
        if ks is not None:
            raise ConfigError("'k' cannot be combined with the k_over_kc axis")
        if p.xi1 <= 0:
            raise ConfigError("k_over_kc axis needs params.xi1 > 0")
        ks = [None]
    else:
        if ks is None:
            if p.xi1 <= 0:
                raise ConfigError("give 'k' or a positive params.xi1 to fix k = xi2/xi1")
            ks = [p.k]
        ks = ks if isinstance(ks, list) else [ks]
        if any(k < 0 for k in ks):
            raise ConfigError("k must be non-negative")
    observables = {"levels", "gap", "photons", "parity", "patterns"}
    if cfg.get("d2", True):
        observables.add("d2")
    specs = [
        SweepSpec(
            model="anisotropic",
            base=p,
            axes=(axis,),
            observables=frozenset(observables),
            levels=cfg.get("levels", 4),
            cutoff=_policy(cfg),
            fixed_cutoff=cfg.get("fixed_cutoff"),
            h=cfg.get("h", 1e-3),
            k=k,
        )
        for k in ks
    ]

    def run(threads):
        rows = []
        for spec in specs:
            rows += run_sweep(replace(spec, threads=threads))
        e_err, n_err = validation.attribution_errors(rows, specs[0].levels)
        return rows, e_err < 1e-9 and n_err < 1e-10

    return run


def _prepare_phase_diagram(cfg):
    p = _params("driven", cfg["params"])
    axes = tuple(Axis(a["name"], a["start"], a["stop"], a["num"]) for a in cfg["axes"])
    floor = cfg.get("gap_floor", 1e-16)
    spec = SweepSpec(
        model=cfg.get("model", "squeezed-frame"),
        base=p,
        axes=axes,
        observables=frozenset({"levels", "gap"}),
        levels=max(2, cfg.get("levels", 2)),
        cutoff=_policy(cfg),
        fixed_cutoff=cfg.get("fixed_cutoff"),
    )

    def run(threads):
        rows = run_sweep(replace(spec, threads=threads))
        for row in rows:
            row["log10_gap"] = math.log10(max(row["gap"], floor))
            row["gap_floor"] = floor
        return rows, all(row["gap"] >= -1e-12 * (1 + abs(row["E0"])) for row in rows)

    return run


def _prepare_analytic(cfg):
    model = cfg.get("model", "parametric-jc")
    p = _params("anisotropic" if model == "anisotropic" else "driven", cfg["params"])
    if model == "anisotropic" and p.xi1 + p.xi2 == 0:
        raise ConfigError("anisotropic analytic sweeps need xi1 + xi2 > 0 to fix k")
    c = cfg["coupling"]
    if c["start"] < 0 or c["stop"] < 0:
        raise ConfigError("coupling range must be non-negative")
    grid = np.linspace(c["start"], c["stop"], c["num"])
    h = cfg.get("h", 1e-3)
    coord = "xi_c" if model == "anisotropic" else "g_over_g0"

    def run(_threads):
        rows = []
        offset = phases.ground_energy_offset(p)
        for x in grid:
            x = float(x)
            pt = phases.phase_point(p, x, h)
            q = phases.at_coupling(p, x)
            row = {coord: x, "model": model}
            for key, val in param_columns(q).items():
                row.setdefault(key, val)
            row["regime"] = pt.regime
            row.update(
                eps_np=pt.eps_np,
                eps_sp=pt.eps_sp,
                E_G=pt.E_G,
                E_G_offset=offset,
                E_G_offset_subtracted=pt.E_G - offset,
                d2E_G=pt.d2E_G,
                h=h,
                N_c=pt.N_c,
                alpha0=pt.alpha0,
                alpha0_minus=-pt.alpha0 if pt.alpha0 else 0.0,  # the partner displacement D(-alpha0)
                r_np=pt.r_np,
                r_sp=pt.r_sp,
                spin_plus_up=pt.spin_plus[0],
                spin_plus_down=pt.spin_plus[1],
                spin_minus_up=pt.spin_minus[0],
                spin_minus_down=pt.spin_minus[1],
            )
            rows.append(row)
        ok = all(r["N_c"] >= 0 and (r["regime"] != "normal" or r["N_c"] == 0) for r in rows)
        return rows, ok

    return run


def _prepare_validate(cfg, seed):
    suites = cfg.get("suites")
    draws = cfg.get("draws", 100)
    assembly = cfg.get("assembly", "consistent")

    def run(threads):
        checks = validation.run_suites(suites, seed=seed, draws=draws, assembly=assembly, threads=threads)
        for chk in checks:
            print(chk.line())
        print("formula ledger:")
        for e in errata.LEDGER:
            print(f"  {errata.format_entry(e)}")
        rows = [
            {
                "suite": chk.suite,
                "check": chk.name,
                "observed": float(chk.observed),
                "relation": chk.relation,
                "tolerance": float(chk.tolerance),
                "passed": chk.passed,
                "ledger": chk.ledger,
            }
            for chk in checks
        ]
        return rows, all(chk.passed for chk in checks)

    return run


def _prepare(command, cfg, seed):
    _check_schema(SCHEMAS[command], cfg)
    if command == "spectrum":
        return _prepare_spectrum(cfg)
    if command == "patterns":
        return _prepare_patterns(cfg)
    if command == "phase-diagram":
        return _prepare_phase_diagram(cfg)
    if command == "analytic":
        return _prepare_analytic(cfg)
    return _prepare_validate(cfg, seed)


def _threads(arg):
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("RABIPAT_THREADS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        raise ConfigError(f"RABIPAT_THREADS must be an integer, got {env!r}") from None


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    if not text.strip():
        return None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if doc == {}:
        return None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


class _UsageError(ConfigError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parser():
    # argparse prepends its own "usage: "; the rest goes to the description
    synopsis, _, body = USAGE.partition("\n\n")
    ap = _Parser(prog="rabipat", add_help=True, usage=synopsis.removeprefix("usage: "),
                 description=body, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--seed", type=int, default=0)
    return ap


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
        cfg = _load(args.config)
        if cfg is None:
            sys.stderr.write(USAGE)
            return EXIT_CONFIG
        threads = _threads(args.threads)
        run = _prepare(args.command, cfg, args.seed)
    except (ConfigError, ValueError, TypeError) as exc:
        sys.stderr.write(f"rabipat: config error: {exc}\n")
        if isinstance(exc, _UsageError):
            sys.stderr.write(USAGE)
        return EXIT_CONFIG

    rows, invariants_ok = run(threads)
    seed = args.seed if args.command == "validate" else None
    text = format_csv(_comments(args.command, cfg, seed), _header(rows), rows)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    if not invariants_ok:
        sys.stderr.write("rabipat: invariant violation (see output)\n")
        return EXIT_INVARIANT
    if any(row.get("converged") is False for row in rows):
        sys.stderr.write("rabipat: cutoff convergence failed for some rows (converged=false)\n")
        return EXIT_CONVERGENCE
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
