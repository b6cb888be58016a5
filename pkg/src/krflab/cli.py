"""Command-line surface: models, maxtime, flow, ansatz, gh, verify.

Exit codes: 0 success, 2 usage error, 3 domain error (non-Kahler class,
metric positivity loss, extinction), 4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import ansatz as az
from . import cohomology as coh
from . import ghmetric as gh
from . import maflow as mf
from . import serialize as ser
from . import verify as ver
from .cohomology import models as coh_models

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_VERIFY = 4


def _load_models(args) -> dict:
    if getattr(args, "catalogue", None):
        return coh_models.load_catalogue(args.catalogue)
    return coh_models.builtin_models()


def _poly_str(f: coh.PolyFunctional, basis) -> str:
    out = ""
    for expo, coeff in sorted(f.monomials.items(), reverse=True):
        mag = abs(coeff)
        factors = [str(mag)] if mag != 1 or not any(expo) else []
        for i, e in enumerate(expo):
            if e == 1:
                factors.append(basis[i])
            elif e > 1:
                factors.append(f"{basis[i]}^{e}")
        term = "*".join(factors)
        if not out:
            out = term if coeff > 0 else f"-{term}"
        else:
            out += f" + {term}" if coeff > 0 else f" - {term}"
    return out or "0"


def _print_model(model: coh.ManifoldModel) -> None:
    kod = "minus-infinity" if model.kodaira is None else str(model.kodaira)
    print(f"{model.name}: complex dimension {model.n}, kodaira {kod}")
    print(f"  basis: {', '.join(model.basis)}")
    print(f"  2*pi*c1: {model.c1twopi}")
    for label, f in model.cone.constraints:
        print(f"  cone constraint [{label}]: {_poly_str(f, model.basis)} > 0")
    for entry in model.catalogue:
        print(f"  subvariety [{entry.label}]: dimension {entry.dim}")
    if model.notes:
        print(f"  notes: {model.notes}")


def cmd_models(args) -> int:
    try:
        models = _load_models(args)
    except (OSError, ValueError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    if args.name:
        if args.name not in models:
            print(
                f"error: unknown model {args.name!r}; "
                f"built-ins: {', '.join(sorted(models))}",
                file=sys.stderr,
            )
            return EXIT_USAGE
        selected = {args.name: models[args.name]}
    else:
        selected = models
    if args.format == "json":
        payload = {
            "schema": coh_models.SCHEMA_VERSION,
            "models": [coh_models.model_to_dict(m) for m in selected.values()],
        }
        print(json.dumps(payload, indent=2))
    elif args.format == "csv":
        print("name,n,basis,c1twopi,kodaira")
        for m in selected.values():
            kod = "minus-infinity" if m.kodaira is None else m.kodaira
            print(f"{m.name},{m.n},{' '.join(m.basis)},{m.c1twopi},{kod}")
    else:
        for model in selected.values():
            _print_model(model)
    return EXIT_OK


def _maxtime_report(models: dict, name: str, coords) -> dict:
    model = models[name]
    a0 = coh.ClassVector(tuple(coords))
    T = coh.max_existence_time(model, a0)
    report = {
        "schema": 1,
        "model": name,
        "class": [str(c) for c in a0],
        "T": str(T),
        "T_exact": T.exact,
        "T_finite": T.finite,
        "binding_constraint": T.binding,
    }
    if T.finite and T.exact:
        lim = coh.limiting_class(model, a0)
        vol = coh.volume(model, lim)
        locus = coh.null_locus(model, lim)
        report.update(
            {
                "limiting_class": [str(c) for c in lim],
                "limit_volume": str(vol),
                "noncollapsed": vol > 0,
                "null_locus": list(locus.all_labels()),
                "null_locus_catalogue_relative": locus.catalogue_relative,
                "regime": "finite-time singularity",
            }
        )
    elif T.finite:
        report["regime"] = "finite-time singularity"
        report["note"] = (
            "T is certified to an interval only; limiting-class data needs an "
            "exact rational time"
        )
    else:
        report["regime"] = str(coh.long_time_regime(model))
    return report


def cmd_maxtime(args) -> int:
    try:
        models = _load_models(args)
        if args.model not in models:
            print(
                f"error: unknown model {args.model!r}; "
                f"built-ins: {', '.join(sorted(models))}",
                file=sys.stderr,
            )
            return EXIT_USAGE
        coords = ser.parse_class_coords(args.klass)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = _maxtime_report(models, args.model, coords)
    except coh.NotKahlerError as err:
        print(f"error: {err}", file=sys.stderr)
        if err.violated:
            print(
                f"violated constraints: {', '.join(err.violated)}", file=sys.stderr
            )
        return EXIT_DOMAIN
    except coh.DomainError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DOMAIN
    if args.format == "json":
        print(json.dumps(report, indent=2))
        return EXIT_OK
    if args.format == "csv":
        print("field,value")
        for key, value in report.items():
            if key == "schema":
                continue
            cell = ";".join(map(str, value)) if isinstance(value, list) else value
            print(f"{key},{cell}")
        return EXIT_OK
    print(f"model: {report['model']}")
    print(f"class: ({', '.join(report['class'])})")
    print(f"T = {report['T']}")
    if report["T_finite"]:
        print(f"binding constraint: {report['binding_constraint']}")
    if "limiting_class" in report:
        print(f"limiting class: ({', '.join(report['limiting_class'])})")
        print(f"volume at limit: {report['limit_volume']}")
        print(f"noncollapsed: {report['noncollapsed']}")
        locus = report["null_locus"]
        print(
            "null locus: "
            + (", ".join(locus) if locus else "(empty)")
            + " [relative to catalogue]"
        )
    if "note" in report:
        print(f"note: {report['note']}")
    print(f"regime: {report['regime']}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# flow
# ---------------------------------------------------------------------------


def _parse_g0(raw, n: int) -> np.ndarray:
    arr = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            cell = raw[i][j]
            if isinstance(cell, (list, tuple)):
                arr[i, j] = complex(cell[0], cell[1])
            else:
                arr[i, j] = complex(float(cell), 0.0)
    return arr


def _modes_from_config(entries) -> list[tuple]:
    modes = []
    for item in entries or []:
        modes.append(
            (tuple(item["freq"]), float(item.get("cos", 0.0)), float(item.get("sin", 0.0)))
        )
    return modes


def load_flow_config(path) -> tuple[mf.TorusBackground, mf.RunConfig, np.ndarray]:
    cfg = ser.read_json(path)
    if cfg.get("schema") != 1:
        raise ValueError(f"unsupported flow config schema: {cfg.get('schema')!r}")
    n = int(cfg["n"])
    N = int(cfg["N"])
    g0 = _parse_g0(cfg["g0"], n)
    shell = mf.TorusBackground(n=n, N=N, g0=g0)
    f_modes = _modes_from_config(cfg.get("f_modes"))
    f = shell.field_from_modes(f_modes) if f_modes else None
    bg = mf.TorusBackground(n=n, N=N, g0=g0, f=f)
    phi0_modes = _modes_from_config(cfg.get("phi0_modes"))
    phi0 = bg.field_from_modes(phi0_modes) if phi0_modes else np.zeros(bg.shape)
    run_cfg = mf.RunConfig(
        mode=cfg.get("mode", mf.UNNORMALIZED),
        dt=cfg.get("dt"),
        t_end=float(cfg.get("t_end", 1.0)),
        record_every=int(cfg.get("record_every", 100)),
        eps_pos=float(cfg.get("eps_pos", mf.EPS_POS)),
    )
    return bg, run_cfg, phi0


def cmd_flow(args) -> int:
    try:
        bg, run_cfg, phi0 = load_flow_config(args.config)
        cfg_out = ser.read_json(args.config).get("output")
    except (OSError, ValueError, KeyError) as err:
        print(f"error: bad flow config: {err}", file=sys.stderr)
        return EXIT_USAGE
    # the config may name its own output path; an explicit flag wins
    out = Path(cfg_out) if cfg_out and args.output_dir == "krflab-out" else Path(args.output_dir)
    if run_cfg.mode == mf.UNNORMALIZED and bg.f is not None:
        mean_f = float(bg.f.mean())
        if abs(mean_f) > 1e-12:
            print(
                f"warning: reference density exponent has mean {mean_f:.3e}; the "
                "total reference volume differs from the metric volume, so the "
                "potential drifts linearly and no stationary limit exists",
                file=sys.stderr,
            )
    try:
        final, series = mf.run(bg, run_cfg, phi0=phi0)
    except (mf.AdmissibilityError, mf.StepFailure, mf.SpectralTailError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DOMAIN
    out.mkdir(parents=True, exist_ok=True)
    ser.write_csv(out / "diagnostics.csv", series.header, series.rows())
    ser.write_json(
        out / "diagnostics.json",
        {
            "schema": 1,
            "columns": list(series.header),
            "rows": series.rows(),
            "converged": series.converged,
            "termination": series.termination,
        },
    )
    final.phi.astype(np.float64).tofile(out / "phi.bin")
    ser.write_json(
        out / "phi.json",
        {
            "schema": 1,
            "n": bg.n,
            "N": bg.N,
            "g0": [[[z.real, z.imag] for z in row] for row in bg.g0],
            "t": final.t,
            "mode": final.mode,
            "layout": "row-major float64",
        },
    )
    ser.write_manifest(out, "flow", config_path=str(args.config), seed=args.seed)
    # the scalar floor is only a fact for the untwisted unnormalized flow,
    # and the decay-rate fit only makes sense once the run converged
    untwisted = bg.f is None or float(np.abs(bg.f).max()) < 1e-14
    report = mf.estimate_report(
        series,
        eps_pos=run_cfg.eps_pos,
        scalar_floor=(run_cfg.mode == mf.UNNORMALIZED and untwisted),
        normalized_cy=(run_cfg.mode == mf.NORMALIZED and series.converged),
        oracle_rate=1.0 if series.converged else None,
    )
    print(report)
    print(f"termination: {series.termination} at t = {final.t:.6g}")
    print(f"artifacts written to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# ansatz
# ---------------------------------------------------------------------------


def cmd_ansatz(args) -> int:
    try:
        scales = ser.parse_class_coords(args.scales)
        model = az.AnsatzModel.of(args.kind, scales, args.mode)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    traj = az.integrate(model, args.t_end, dt=args.dt)
    out = Path(args.output_dir)
    header = ["t", *traj.names, "volume", "fiber_diameter"]
    columns = [traj.ts] + [traj.coeffs[:, i] for i in range(traj.coeffs.shape[1])]
    columns += [traj.volume(), traj.fiber_diameter_proxy()]
    summary: dict = {
        "schema": 1,
        "kind": model.kind,
        "scales": [str(s) for s in model.scales],
        "mode": model.mode,
        "system": traj.system.description,
        "extinct": traj.extinct,
        "closed_form_max_deviation": float(np.abs(traj.coeffs - traj.closed()).max()),
    }
    if traj.extinct:
        summary["extinction_time_numeric"] = traj.extinction_numeric
    if traj.system.extinction_time is not None:
        summary["extinction_time"] = str(traj.system.extinction_time)
    if model.kind == az.PRODUCT_EC and model.mode == az.NORMALIZED:
        res = az.einstein_residual(model, traj)
        header.append("einstein_residual")
        columns.append(res)
        prof = az.collapse_profile(model, traj)
        summary["final_einstein_residual"] = float(res[-1])
        summary["collapse"] = {
            "fiber_scale_adjusted": float(prof.fiber_scale_adjusted[0]),
            "fiber_adjusted_max_error": prof.fiber_adjusted_max_error,
            "schwarz_floor": prof.schwarz_floor,
        }
    if model.mode == az.UNNORMALIZED:
        chk = az.crosscheck_T(model)
        summary["cross_check"] = {
            "ansatz_T": None if chk.ansatz_time is None else str(chk.ansatz_time),
            "cohomology_T": None
            if chk.cohomology_time is None
            else str(chk.cohomology_time),
            "equal": chk.equal,
        }
    rows = list(zip(*[list(col) for col in columns]))
    ser.write_csv(out / "trajectory.csv", header, rows)
    ser.write_json(out / "summary.json", summary)
    ser.write_manifest(out, f"ansatz {args.kind}", seed=args.seed)
    if traj.extinct:
        print(f"extinction detected at t = {traj.extinction_numeric:.12g}")
    if "extinction_time" in summary:
        print(f"exact extinction time: {summary['extinction_time']}")
    if "final_einstein_residual" in summary:
        print(f"final Einstein residual: {summary['final_einstein_residual']:.3e}")
    if "cross_check" in summary:
        print(f"cross-check vs class engine: equal = {summary['cross_check']['equal']}")
    print(f"artifacts written to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# gh
# ---------------------------------------------------------------------------


def cmd_gh(args) -> int:
    out = Path(args.output_dir)
    if args.gh_command == "sample":
        space = gh.sample_warped_torus(args.t, args.nb, args.nf)
        out.mkdir(parents=True, exist_ok=True)
        ser.write_json(out / "space.json", gh.space_to_dict(space))
        ser.write_manifest(out, "gh sample", seed=args.seed)
        print(f"wrote {len(space)}-point warped torus sample to {out / 'space.json'}")
        return EXIT_OK
    if args.gh_command == "bound":
        try:
            X = gh.space_from_dict(ser.read_json(args.space_x))
            Y = gh.space_from_dict(ser.read_json(args.space_y))
        except (OSError, ValueError, KeyError) as err:
            print(f"error: {err}", file=sys.stderr)
            return EXIT_USAGE
        bound = gh.gh_upper_bound(X, Y, seed=args.seed)
        ser.write_json(
            out / "bound.json",
            {
                "schema": 1,
                "epsilon": bound.epsilon,
                "flag": bound.flag,
                "F": [int(v) for v in bound.maps.F],
                "G": [int(v) for v in bound.maps.G],
            },
        )
        ser.write_manifest(out, "gh bound", seed=args.seed)
        print(f"epsilon = {bound.epsilon:.12g} ({bound.flag})")
        return EXIT_OK
    # collapse
    ts = np.linspace(args.t_start, args.t_end, args.steps)
    series = gh.collapse_series(ts, args.nb, args.nf)
    ser.write_csv(out / "collapse.csv", series.header, series.rows())
    ser.write_json(
        out / "collapse.json",
        {
            "schema": 1,
            "n_base": series.n_base,
            "n_fiber": series.n_fiber,
            "t": [float(t) for t in series.ts],
            "epsilon": [float(e) for e in series.epsilons],
            "flag": series.flag,
            "discretization_floor": series.floor,
            "rate_coefficient": series.rate_coefficient,
        },
    )
    ser.write_manifest(out, "gh collapse", seed=args.seed)
    print(
        f"epsilon: {series.epsilons[0]:.6g} -> {series.epsilons[-1]:.6g} over "
        f"t in [{ts[0]:g}, {ts[-1]:g}]"
    )
    print(
        f"envelope: {series.rate_coefficient:.4g}*exp(-t/2) + {series.floor:.4g} "
        "(reported, not asserted)"
    )
    print(f"artifacts written to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def cmd_verify(args) -> int:
    only = None
    if args.criteria:
        try:
            only = [int(tok) for tok in args.criteria.split(",")]
        except ValueError:
            print("error: --criteria takes comma-separated indices", file=sys.stderr)
            return EXIT_USAGE
    models = None
    if args.catalogue:
        try:
            models = coh_models.load_catalogue(args.catalogue)
        except (OSError, ValueError) as err:
            print(f"error: {err}", file=sys.stderr)
            return EXIT_USAGE
    opts = ver.VerifyOptions(seed=args.seed, flow_grid=args.flow_grid, models=models)
    results = ver.run_all(opts, only=only)
    print(ver.format_table(results))
    if args.report:
        out = Path(args.output_dir)
        ser.write_json(out / "verify.json", ver.results_payload(results))
        ser.write_manifest(out, "verify", seed=args.seed)
        print(f"report written to {out / 'verify.json'}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="krflab",
        description="Kahler-Ricci flow laboratory: exact class evolution, "
        "torus Monge-Ampere runs, product-geometry reductions, and "
        "Gromov-Hausdorff collapsing experiments.",
    )
    parser.add_argument("--version", action="version", version=f"krflab {__version__}")
    parser.add_argument(
        "--output-dir", default="krflab-out", help="directory for emitted artifacts"
    )
    parser.add_argument(
        "--format",
        choices=("text", "csv", "json"),
        default="text",
        help="report format for query commands",
    )
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized search")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("models", help="list the manifold model catalogue")
    p.add_argument("name", nargs="?", help="show a single model")
    p.add_argument("--catalogue", help="load models from a JSON catalogue file")
    p.set_defaults(func=cmd_models)

    p = sub.add_parser("maxtime", help="maximal existence time of a class")
    p.add_argument("model", help="model name (see `krflab models`)")
    p.add_argument(
        "klass",
        metavar="class",
        help="comma-separated rational coordinates, e.g. '4,-1' or '7/2'",
    )
    p.add_argument("--catalogue", help="load models from a JSON catalogue file")
    p.set_defaults(func=cmd_maxtime)

    p = sub.add_parser("flow", help="run the torus Monge-Ampere flow from a config")
    p.add_argument("config", help="JSON run configuration")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("ansatz", help="integrate a product-geometry reduction")
    p.add_argument("kind", choices=az.KINDS)
    p.add_argument("--scales", required=True, help="comma-separated rationals")
    p.add_argument(
        "--mode", choices=(az.UNNORMALIZED, az.NORMALIZED), default=az.UNNORMALIZED
    )
    p.add_argument("--t-end", type=float, default=5.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.set_defaults(func=cmd_ansatz)

    p = sub.add_parser("gh", help="Gromov-Hausdorff experiments")
    ghsub = p.add_subparsers(dest="gh_command", required=True)
    q = ghsub.add_parser("sample", help="sample a warped torus metric space")
    q.add_argument("--t", type=float, default=0.0)
    q.add_argument("--nb", type=int, default=8)
    q.add_argument("--nf", type=int, default=8)
    q.set_defaults(func=cmd_gh)
    q = ghsub.add_parser("bound", help="distance upper bound between two spaces")
    q.add_argument("space_x")
    q.add_argument("space_y")
    q.set_defaults(func=cmd_gh)
    q = ghsub.add_parser("collapse", help="collapsing series vs the base circle")
    q.add_argument("--t-start", type=float, default=0.0)
    q.add_argument("--t-end", type=float, default=10.0)
    q.add_argument("--steps", type=int, default=21)
    q.add_argument("--nb", type=int, default=8)
    q.add_argument("--nf", type=int, default=8)
    q.set_defaults(func=cmd_gh)

    p = sub.add_parser("verify", help="run the acceptance criteria")
    p.add_argument("--criteria", help="comma-separated criterion indices (default all)")
    p.add_argument("--flow-grid", type=int, default=64, help="grid for flow criteria")
    p.add_argument("--catalogue", help="verify against a JSON model catalogue")
    p.add_argument(
        "--report", action="store_true", help="write verify.json to the output dir"
    )
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except coh.DomainError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DOMAIN
    except (mf.AdmissibilityError, mf.StepFailure, mf.SpectralTailError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
