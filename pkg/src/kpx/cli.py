"""``kpx`` command line: bands, wavefunc, dispersion and validate subcommands."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import validation
from .bands import band_structure, default_window
from .dispersion import dispersion_residual, rhs, solve_alpha
from .emit import csv_text, fmt_float, json_text
from .errors import KPError, NotOnDispersionLocus, ParameterError
from .model import CellType, Sign, make_geometry, validate_params
from .wavefunction import build_state, matching_residuals, sample_arrays

log = logging.getLogger("kpx")

EXIT_OK, EXIT_SUITE, EXIT_PARAMS, EXIT_IO, EXIT_NUMERIC, EXIT_OFF_LOCUS = range(6)
RESIDUAL_OK = 1e-10

DEFAULTS = {
    "model": "barrier", "a": 1.0, "b": 1.0, "V": 10.0, "m1": 1.0, "m2": 1.0,
    "cell": "kp1", "x2": 0.0, "format": "csv", "seed": 42, "sign": None, "out": None,
    # bands
    "alpha_points": 256, "e_points": 2000, "e_min": None, "e_max": None,
    # wavefunc
    "E": None, "alpha": None, "x_min": None, "x_max": None, "samples": 201,
    "normalize": "b-unit",
    # dispersion
    "e_grid": None, "alpha_grid": None,
    # validate
    "trials": 1000,
}


class UsageError(Exception):
    """Bad command-line or config input (exit 2)."""


def _grid(text: str) -> np.ndarray:
    """``start:stop:n`` -> linspace, or a comma separated list of values."""
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            n = int(n)
            if n < 1:
                raise ValueError
            return np.linspace(float(lo), float(hi), n)
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"bad grid {text!r}: use start:stop:n or v1,v2,...") from None


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    g = shared.add_argument_group("model and output")
    g.add_argument("--model", choices=["barrier", "well"])
    g.add_argument("--a", type=float, help="width of the zero-potential slab")
    g.add_argument("--b", type=float,
                   help="width of the barrier (barrier model) or well (well model)")
    g.add_argument("--V", type=float, help="barrier height or well depth, > 0")
    g.add_argument("--m1", type=float, help="mass in region I")
    g.add_argument("--m2", type=float, help="mass in region II")
    g.add_argument("--x2", type=float, help="interior interface position of the unit cell")
    g.add_argument("--cell", choices=["kp1", "kp2"], help="unit cell type")
    g.add_argument("--sign", choices=["plus", "minus"], help="branch sign for E < 0 wells")
    g.add_argument("--config", type=Path, help="JSON file of option values; flags win")
    g.add_argument("--out", type=Path, help="output file (default: stdout)")
    g.add_argument("--format", choices=["csv", "json"])
    g.add_argument("--seed", type=int, help="seed for randomized commands")

    parser = argparse.ArgumentParser(prog="kpx", description="Generalized Kronig-Penney solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bands", parents=[shared], help="band energies on an alpha grid")
    p.add_argument("--alpha-points", type=int, help="alpha grid size over [0, pi/(a+b)]")
    p.add_argument("--e-points", type=int, help="energy scan resolution")
    p.add_argument("--e-min", type=float, help="energy window start (default: model domain)")
    p.add_argument("--e-max", type=float, help="energy window end")

    p = sub.add_parser("wavefunc", parents=[shared], help="sample a Bloch state")
    p.add_argument("--E", type=float, help="energy (required)")
    p.add_argument("--alpha", type=float, help="Bloch parameter (default: smallest root at E)")
    p.add_argument("--x-min", type=float, help="sampling start (default: x1)")
    p.add_argument("--x-max", type=float, help="sampling end (default: x3)")
    p.add_argument("--samples", type=int, help="number of sample points")
    p.add_argument("--normalize", choices=["b-unit", "l2"], help="amplitude convention")

    p = sub.add_parser("dispersion", parents=[shared], help="RHS and residual tables")
    e = p.add_mutually_exclusive_group()
    e.add_argument("--E", type=float, help="single energy")
    e.add_argument("--e-grid", type=_grid, help="energies as lo:hi:n or v1,v2,...")
    al = p.add_mutually_exclusive_group()
    al.add_argument("--alpha", type=float, help="single alpha")
    al.add_argument("--alpha-grid", type=_grid, help="alphas as lo:hi:n or v1,v2,...")

    p = sub.add_parser("validate", parents=[shared], help="randomized oracle suites")
    p.add_argument("--trials", type=int, help="draws per suite")
    return parser


def resolve_options(ns: argparse.Namespace) -> dict:
    """Defaults, overlaid by the --config file, overlaid by explicit flags."""
    opts = dict(DEFAULTS)
    if ns.config is not None:
        try:
            raw = json.loads(ns.config.read_text(encoding="utf-8"))
        except OSError as exc:
            raise OSError(f"cannot read config {ns.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {ns.config} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in raw.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"unknown config key {key!r}")
            if key in ("e_grid", "alpha_grid") and value is not None:
                try:
                    value = (np.asarray(value, dtype=float) if isinstance(value, list)
                             else _grid(str(value)))
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise UsageError(str(exc)) from None
            opts[key] = value
    for key, value in vars(ns).items():
        if key in DEFAULTS and value is not None:
            opts[key] = value
    return opts


def _params(opts):
    try:
        params = validate_params({"kind": opts["model"], "a": opts["a"], "b": opts["b"],
                                  "V": opts["V"], "m1": opts["m1"], "m2": opts["m2"]})
    except (TypeError, ValueError) as exc:
        raise ParameterError(str(exc)) from None
    try:
        cell = CellType(str(opts["cell"]).lower())
    except ValueError:
        raise UsageError(f"unknown cell type {opts['cell']!r}") from None
    return params, make_geometry(params, cell, float(opts["x2"]))


def _sign(opts):
    if opts["sign"] is None:
        return None
    try:
        return Sign(str(opts["sign"]).lower())
    except ValueError:
        raise UsageError(f"unknown sign {opts['sign']!r}") from None


def cmd_bands(opts) -> tuple[str, int]:
    params, _ = _params(opts)
    window = None
    if opts["e_min"] is not None or opts["e_max"] is not None:
        lo, hi = default_window(params)
        window = (float(opts["e_min"]) if opts["e_min"] is not None else lo,
                  float(opts["e_max"]) if opts["e_max"] is not None else hi)
    bs = band_structure(params, n_alpha=int(opts["alpha_points"]), E_window=window,
                        n_energy=int(opts["e_points"]))
    if opts["format"] == "json":
        return json_text(bs.to_dict()), EXIT_OK
    edges = [f"band {i} edges {fmt_float(b.bottom)},{fmt_float(b.top)}"
             + (" touching" if b.touching_above else "") for i, b in enumerate(bs.bands)]
    return csv_text(["alpha", "band_index", "E"], bs.rows(), comments_after=edges), EXIT_OK


def cmd_wavefunc(opts) -> tuple[str, int]:
    params, geometry = _params(opts)
    if opts["E"] is None:
        raise UsageError("wavefunc needs --E")
    E = float(opts["E"])
    sign = _sign(opts)
    alpha = opts["alpha"]
    if alpha is None:
        roots = solve_alpha(params, E)
        if not roots:
            raise NotOnDispersionLocus(f"E={E!r} lies in a gap: no real alpha solves the relation")
        alpha = roots[0].alpha
    normalization = {"b-unit": "b_unit", "l2": "l2"}.get(opts["normalize"])
    if normalization is None:
        raise UsageError(f"unknown normalization {opts['normalize']!r}")
    state = build_state(params, geometry, E, float(alpha), normalization, sign)
    res = matching_residuals(state)
    x_min = geometry.x1 if opts["x_min"] is None else float(opts["x_min"])
    x_max = geometry.x3 if opts["x_max"] is None else float(opts["x_max"])
    x, u, psi = sample_arrays(state, x_min, x_max, int(opts["samples"]))
    status = "ok" if res.max() < RESIDUAL_OK else "FAIL"
    if opts["format"] == "json":
        doc = {
            "params": params.to_dict(), "cell": geometry.cell_type, "x2": geometry.x2,
            "E": state.E, "alpha": state.alpha, "sign": state.sign,
            "normalization": normalization,
            "amplitudes": {"A": state.A, "B": state.B, "C": state.C, "D": state.D},
            "residuals": res.as_dict(), "residual_status": status,
            "samples": {"x": x, "re_u": u.real, "im_u": u.imag,
                        "re_psi": psi.real, "im_psi": psi.imag},
        }
        return json_text(doc), EXIT_OK
    summary = " ".join(f"{k}={fmt_float(v)}" for k, v in res.as_dict().items())
    summary = f"matching residuals {summary} status={status}"
    rows = zip(x, u.real, u.imag, psi.real, psi.imag)
    return csv_text(["x", "re_u", "im_u", "re_psi", "im_psi"], rows, [summary]), EXIT_OK


def cmd_dispersion(opts) -> tuple[str, int]:
    params, geometry = _params(opts)
    if opts["E"] is not None:
        Es = np.array([float(opts["E"])])
    elif opts["e_grid"] is not None:
        Es = np.asarray(opts["e_grid"], dtype=float)
    else:
        Es = np.linspace(*default_window(params), 201)
    alpha_free = params.y == 1.0 and opts["alpha"] is None and opts["alpha_grid"] is None
    if opts["alpha"] is not None:
        alphas = np.array([float(opts["alpha"])])
    elif opts["alpha_grid"] is not None:
        alphas = np.asarray(opts["alpha_grid"], dtype=float)
    elif alpha_free:
        alphas = np.array([0.0])   # the right side does not depend on alpha here
    else:
        alphas = np.linspace(0.0, math.pi / params.period, 33)
    R = np.asarray(rhs(params, Es[:, None], alphas[None, :]), dtype=float)
    if alpha_free:
        if opts["format"] == "json":
            return json_text({"params": params.to_dict(), "E": Es, "rhs": R[:, 0]}), EXIT_OK
        return csv_text(["E", "rhs"], zip(Es, R[:, 0])), EXIT_OK
    G = np.asarray(dispersion_residual(params, geometry, Es[:, None], alphas[None, :]), dtype=float)
    rows = [(E, al, R[i, j], G[i, j]) for i, E in enumerate(Es) for j, al in enumerate(alphas)]
    if opts["format"] == "json":
        doc = {"params": params.to_dict(),
               "rows": [{"E": E, "alpha": al, "rhs": r, "residual": g} for E, al, r, g in rows]}
        return json_text(doc), EXIT_OK
    return csv_text(["E", "alpha", "rhs", "residual"], rows), EXIT_OK


def cmd_validate(opts) -> tuple[str, int]:
    trials = int(opts["trials"])
    if trials < 0:
        raise UsageError("--trials must be non-negative")
    results = validation.run_all(int(opts["seed"]), trials)
    code = EXIT_OK if all(r.passed for r in results) else EXIT_SUITE
    return json_text([r.to_dict() for r in results]), code


COMMANDS = {"bands": cmd_bands, "wavefunc": cmd_wavefunc, "dispersion": cmd_dispersion,
            "validate": cmd_validate}


def _write(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARAMS if exc.code else EXIT_OK
    try:
        opts = resolve_options(ns)
        text, code = COMMANDS[ns.command](opts)
        _write(text, Path(opts["out"]) if opts["out"] is not None else None)
        return code
    except NotOnDispersionLocus as exc:
        print(f"kpx: off-locus input: {exc}", file=sys.stderr)
        return EXIT_OFF_LOCUS
    except (UsageError, ParameterError, ValueError) as exc:
        print(f"kpx: bad parameters: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except OSError as exc:
        print(f"kpx: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (KPError, ArithmeticError) as exc:
        print(f"kpx: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
