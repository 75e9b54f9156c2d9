"""Command-line front end.

Exit codes: 0 success (and every verdict passed), 1 a verdict failed, 2 invalid
input or violated hypothesis, 3 a computation stage failed.
"""

from __future__ import annotations

import os

THREADS_ENV = "RESONANCE_THREADS"

# thread pools must be sized before numpy loads
if os.environ.get(THREADS_ENV):
    for _k in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_k, os.environ[THREADS_ENV])

import argparse  # noqa: E402
import dataclasses  # noqa: E402
import json  # noqa: E402
import sys  # noqa: E402
from pathlib import Path  # noqa: E402

import numpy as np  # noqa: E402

from . import bounds as B  # noqa: E402
from .potentials import BallIndicator, ExpProfile, TubeIndicator, loads  # noqa: E402

EXIT_OK, EXIT_VERDICT, EXIT_INPUT, EXIT_STAGE = 0, 1, 2, 3

_SHORT = {"ball": BallIndicator, "tube": TubeIndicator, "exp": ExpProfile}


def parse_potential(text: str):
    """JSON (inline or ``@file``) or shorthand such as ``ball:R=1,h=-10`` / ``exp:c=1,eps=1``."""
    text = text.strip()
    if text.startswith("@"):
        return loads(Path(text[1:]).read_text())
    if text.startswith("{"):
        return loads(text)
    kind, _, rest = text.partition(":")
    if kind not in _SHORT:
        raise ValueError(f"unknown potential shorthand {kind!r} (ball, tube, exp, or JSON)")
    kw = {}
    for item in filter(None, rest.split(",")):
        key, _, val = item.partition("=")
        kw[key.strip()] = complex(val) if key.strip() == "h" else float(val)
    return _SHORT[kind](**kw)


def parse_lambda(text: str) -> complex:
    return complex(text.replace(" ", "").replace("i", "j"))


def _grid_kw(text: str) -> dict:
    out = {}
    for item in filter(None, (text or "").split(",")):
        k, _, v = item.partition("=")
        out[k.strip()] = int(v)
    return out


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _add_params(p: argparse.ArgumentParser) -> None:
    for f in dataclasses.fields(B.BoundParams):
        p.add_argument(f"--{f.name}", type=int if f.type in ("int", int) else float, default=None)


def _params(args, base: B.BoundParams = B.BoundParams()) -> B.BoundParams:
    kw = {f.name: getattr(args, f.name) for f in dataclasses.fields(B.BoundParams) if getattr(args, f.name, None) is not None}
    return dataclasses.replace(base, **kw)


# ---------------------------------------------------------------------------
# subcommands


def cmd_norms(args) -> int:
    from .potentials import lorentz_quasinorm, lp_norm, weighted_sup_norms

    V = parse_potential(args.potential)
    d = V.dim
    w = weighted_sup_norms(V, args.rho, args.R, args.gamma)
    doc = dataclasses.asdict(w)
    doc["L2"] = lp_norm(V, 2.0)
    doc["L(d+1)/2"] = lp_norm(V, (d + 1) / 2)
    doc["lorentz_2_1"] = lorentz_quasinorm(V, 2.0, 1.0)
    _emit(json.dumps(doc, sort_keys=True, indent=1), args.out)
    return EXIT_OK


def _matrix(args):
    from .birman_schwinger import assemble_bs, bs_difference
    from .presets import grid_for

    V = parse_potential(args.potential)
    g = grid_for(V, **_grid_kw(args.grid))
    lam = parse_lambda(args.lam)
    if getattr(args, "difference", False):
        return bs_difference(V, g, lam, branch=args.branch)
    return assemble_bs(V, g, lam, branch=args.branch)


def cmd_assemble(args) -> int:
    from .birman_schwinger import dump_matrix

    M = _matrix(args)
    if args.out:
        dump_matrix(M, args.out)
    info = {"n": M.size, "lambda": [M.lam.real, M.lam.imag], "branch": args.branch, "file": args.out}
    sys.stdout.write(json.dumps(info, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_svd(args) -> int:
    from .birman_schwinger import fit_decay, singular_values

    S = singular_values(_matrix(args))
    _emit(S.to_csv(), args.out)
    if args.fit:
        fit = fit_decay(S, model=args.fit)
        sys.stderr.write(json.dumps(dataclasses.asdict(fit), default=float) + "\n")
    return EXIT_OK


def cmd_det(args) -> int:
    from .determinant import det_on_contour, samples_to_csv
    from .presets import grid_for

    V = parse_potential(args.potential)
    g = grid_for(V, **_grid_kw(args.grid))
    lams = args.radius * np.exp(2j * np.pi * np.arange(args.nodes) / args.nodes)
    samples = det_on_contour(V, g, lams, alpha=args.alpha, branch=args.branch, allow_low_power=args.alpha < 4)
    _emit(samples_to_csv(samples), args.out)
    return EXIT_OK


def cmd_count(args) -> int:
    from .counting import CountConfig, count_in_disk
    from .presets import grid_for

    V = parse_potential(args.potential)
    g = grid_for(V, **_grid_kw(args.grid)) if V.sup_norm > 0 else None
    cfg = CountConfig(alpha=args.alpha, branch=args.branch, locate=args.locate, min_factor=args.min_factor)
    rep = count_in_disk(V, g, args.r, cfg)
    code = EXIT_OK
    if args.oracle:
        from .oracles import compare_counts, oracle_3d_radial, radial_total

        if not isinstance(V, BallIndicator):
            raise ValueError("the radial oracle applies to ball potentials only")
        # the principal-branch determinant vanishes at resonances of V and of its
        # rotations omega V, omega^alpha = 1; the polar branch at alpha = 1 matches V alone
        heights = [V.h] if args.branch == "polar" else [V.h * w for w in np.exp(2j * np.pi * np.arange(args.alpha) / args.alpha)]
        rep.oracle_n = sum(radial_total(oracle_3d_radial(complex(h), V.R, args.r)) for h in heights)
        cmp = compare_counts(rep.n, rep.oracle_n)
        rep.verdicts["oracle"] = {"pass": cmp.match}
        code = EXIT_OK if cmp.match else EXIT_VERDICT
    _emit(rep.to_json(), args.out)
    return code


def cmd_bounds(args) -> int:
    from .potentials import weighted_sup_norms

    p = _params(args)
    doc = {"params": dataclasses.asdict(p), "theorem": args.theorem}
    if args.theorem == "compact":
        sup = args.sup_norm if args.sup_norm is not None else parse_potential(args.potential).sup_norm
        t = B.thm_compact_terms(p, sup)
        doc.update(I=t.I, II=t.II, III=t.III, total=t.total, admissible=t.admissible, violated=t.violated)
    else:
        if not args.potential:
            raise ValueError("--potential is required for this theorem")
        V = parse_potential(args.potential)
        norms = weighted_sup_norms(V, p.rho, p.R, p.gamma)
        if args.theorem == "lp":
            res = B.thm_Lp_rhs(p, norms)
            doc.update(rhs=res.rhs, admissible=res.admissible, violated=res.violated, terms=res.terms)
        elif args.theorem == "halfplane":
            doc.update(dataclasses.asdict(B.thm_halfplane_rhs(p, norms, args.beta_d)))
        elif args.theorem == "eigenvalue":
            res = B.thm_eigenvalue_rhs(p.gamma, norms, p.d)
            doc.update(rhs=res.rhs, small_gamma=res.small_gamma, terms=res.terms)
        else:
            t = B.thm_pointwise_terms(p, norms)
            doc.update(I=t.I, II=t.II, III=t.III, total=t.total, admissible=t.admissible, violated=t.violated)
    _emit(json.dumps(doc, sort_keys=True, indent=1, default=str), args.out)
    if doc.get("admissible") is False:
        for v in doc.get("violated", []):
            sys.stderr.write(f"violated: {v}\n")
        return EXIT_INPUT
    return EXIT_OK


def cmd_oracle1d(args) -> int:
    from .oracles import oracle_1d_squarewell, squarewell_residual_csv

    roots = oracle_1d_squarewell(parse_lambda(args.V0), args.a, args.r)
    _emit(squarewell_residual_csv(roots, parse_lambda(args.V0), args.a), args.out)
    return EXIT_OK


def cmd_oracle3d(args) -> int:
    from .oracles import modes_to_csv, oracle_3d_radial, oracle_upper_radial

    V0 = parse_lambda(args.V0)
    modes = oracle_upper_radial(V0, args.R, args.r) if args.upper else oracle_3d_radial(V0, args.R, args.r)
    _emit(modes_to_csv(modes), args.out)
    return EXIT_OK


def _load_preset(args):
    from .presets import ExperimentPreset, preset

    p = preset(args.preset, quick=getattr(args, "quick", False))
    if getattr(args, "potential", None):
        from .potentials import to_dict

        p = dataclasses.replace(p, potential=to_dict(parse_potential(args.potential)))
    if getattr(args, "sweep", None):
        sweep = dict(p.sweep)
        for item in args.sweep:
            k, _, v = item.partition("=")
            sweep[k] = tuple(float(x) for x in v.split(","))
        p = dataclasses.replace(p, sweep=sweep)
    p = dataclasses.replace(p, params=_params(args, p.params), seed=args.seed)
    assert isinstance(p, ExperimentPreset)
    return p


def cmd_validate(args) -> int:
    from .presets import validate

    checks = validate(_load_preset(args))
    for c in checks:
        sys.stdout.write(f"{'ok  ' if c.ok else 'FAIL'}  {c.name}  [{c.detail}]\n")
    return EXIT_OK if all(c.ok for c in checks) else EXIT_INPUT


def cmd_run_preset(args) -> int:
    from .presets import run, violations

    p = _load_preset(args)
    bad = violations(p)
    if bad:
        for c in bad:
            sys.stderr.write(f"violated: {c.name} [{c.detail}]\n")
        return EXIT_INPUT
    res = run(p, args.out, spectra=not args.no_spectra)
    sys.stdout.write(json.dumps({"out": str(res.out), "verdicts": res.verdicts}, sort_keys=True, default=str) + "\n")
    return EXIT_OK if res.all_pass else EXIT_VERDICT


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    from .presets import PRESET_IDS

    ap = argparse.ArgumentParser(prog="resonance-bounds", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def matrix_args(p):
        p.add_argument("--potential", required=True)
        p.add_argument("--lam", required=True, help="complex spectral parameter, e.g. 3+1j")
        p.add_argument("--grid", default="", help="grid options, e.g. n_radial=12,degree=11,n_azimuth=12")
        p.add_argument("--branch", choices=("principal", "polar"), default="principal")
        p.add_argument("--difference", action="store_true", help="use the R0(lam) - R0(-lam) kernel")
        p.add_argument("--out")

    p = sub.add_parser("norms", help="norm table of a potential")
    p.add_argument("--potential", required=True)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--rho", type=float, default=3.0)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("assemble", help="assemble the Birman-Schwinger matrix")
    matrix_args(p)
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("svd", help="singular values as CSV")
    matrix_args(p)
    p.add_argument("--fit", choices=("power", "stretched_exp"))
    p.set_defaults(func=cmd_svd)

    p = sub.add_parser("det", help="determinant samples on a circle")
    p.add_argument("--potential", required=True)
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--nodes", type=int, default=64)
    p.add_argument("--alpha", type=int, default=4)
    p.add_argument("--branch", choices=("principal", "polar"), default="principal")
    p.add_argument("--grid", default="")
    p.add_argument("--out")
    p.set_defaults(func=cmd_det)

    p = sub.add_parser("count", help="determinant zeros in |lam| <= r")
    p.add_argument("--potential", required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--alpha", type=int, default=4)
    p.add_argument("--branch", choices=("principal", "polar"), default="principal")
    p.add_argument("--grid", default="")
    p.add_argument("--locate", action="store_true")
    p.add_argument("--min-factor", type=float, default=1e-2)
    p.add_argument("--oracle", action="store_true", help="compare against the radial oracle (ball potentials)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("bounds", help="evaluate one bound")
    p.add_argument("theorem", choices=B.THEOREMS)
    p.add_argument("--potential")
    p.add_argument("--sup-norm", type=float)
    p.add_argument("--beta-d", type=float)
    _add_params(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("oracle1d", help="square-well resonances in d = 1")
    p.add_argument("--V0", required=True)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--r", type=float, default=6.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle1d)

    p = sub.add_parser("oracle3d", help="radial-well resonances in d = 3")
    p.add_argument("--V0", required=True)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--r", type=float, default=4.0)
    p.add_argument("--upper", action="store_true", help="eigenvalues only (Im lam > 0)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle3d)

    for name, fn, helptext in (("run-preset", cmd_run_preset, "run an experiment preset"), ("validate", cmd_validate, "check a preset's hypotheses")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("preset", choices=PRESET_IDS)
        p.add_argument("--potential", help="override the preset potential")
        p.add_argument("--sweep", action="append", help="override a sweep, e.g. r=1,2,4")
        p.add_argument("--quick", action="store_true")
        p.add_argument("--seed", type=int, default=0)
        _add_params(p)
        if name == "run-preset":
            p.add_argument("--out", required=True)
            p.add_argument("--no-spectra", action="store_true")
        p.set_defaults(func=fn)
    return ap


def main(argv=None) -> int:
    from .presets import StageError

    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_STAGE
    except (ValueError, KeyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (RuntimeError, ArithmeticError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_STAGE


if __name__ == "__main__":
    raise SystemExit(main())
