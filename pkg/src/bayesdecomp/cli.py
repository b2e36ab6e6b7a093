"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 identity violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .bayes_space import Density, clr, distance, inner_product, inner_product_direct, norm
from .copula import (
    CorrelationMatrix,
    MarginalTransform,
    beta2_density,
    copula_grid,
    copula_pipeline,
    gaussian_copula_density,
)
from .decomposition import (
    Decomposition,
    decompose,
    margin_free_residual,
    pythagoras_report,
    yule_perturb_check,
)
from .ingest import DEFAULT_PSEUDOCOUNT, histogram_density, histogram_grid, read_csv
from .measure_grid import GridMeasure, uniform_axis

EXIT_OK, EXIT_INPUT, EXIT_VIOLATION = 0, 2, 3


class IdentityViolation(Exception):
    pass


def _grid(d: int, n: int, lo: float, hi: float) -> GridMeasure:
    return GridMeasure(uniform_axis(n, lo, hi, name=f"x{i + 1}") for i in range(d))


def _sigma(args) -> CorrelationMatrix:
    if args.sigma:
        sigma = io.read_correlation(args.sigma)
        if args.d is not None and args.d != sigma.d:
            raise io.InputError(f"--d {args.d} conflicts with {sigma.d}-dimensional --sigma")
        return sigma
    return CorrelationMatrix.exchangeable(args.d or 2, args.rho)


def generate_density(args) -> tuple[Density, dict]:
    family = args.family
    meta = {"family": family}
    try:
        if family == "gaussian-copula":
            sigma = _sigma(args)
            f = gaussian_copula_density(sigma, copula_grid(sigma.d, args.n))
            meta["sigma"] = sigma.to_dict()
        elif family == "beta2":
            a0, a1, a2 = args.alpha
            f = beta2_density(a0, a1, a2, copula_grid(2, args.n))
            meta["alpha"] = [a0, a1, a2]
        elif family == "product":
            a, b = args.shape
            if not (a > 0 and b > 0):
                raise ValueError("--shape parameters must be positive")
            m = copula_grid(args.d or 2, args.n)
            logf = sum((a - 1) * np.log(x) + (b - 1) * np.log1p(-x) for x in m.mesh())
            f = Density.from_log(m, np.broadcast_to(logf, m.shape))
            meta["shape"] = [a, b]
        else:
            lo, hi = args.bounds
            m = _grid(args.d or 2, args.n, lo, hi)
            f = Density(m, np.ones(m.shape))
    except ValueError as exc:
        raise io.InputError(str(exc)) from None
    return f, meta


def decomposition_report(dec: Decomposition) -> dict:
    py = pythagoras_report(dec)
    out = py.to_dict()
    out["d"] = dec.d
    out["shape"] = list(dec.measure.shape)
    out["residuals"] = {
        "reconstruction": dec.reconstruction_residual(),
        "orthogonality": dec.orthogonality_residual(),
        "pythagoras": dec.pythagoras_residual(),
    }
    return out


def report_text(report: dict) -> str:
    lines = [f"{'subset':<16}{'kind':<13}{'norm_sq':>24}{'share':>24}"]
    for row in report["components"]:
        label = "{" + ",".join(map(str, row["subset"])) + "}"
        lines.append(f"{label:<16}{row['kind']:<13}{row['norm_sq']:>24.16e}{row['share']:>24.16e}")
    lines.append(f"{'total':<29}{report['total_norm_sq']:>24.16e}")
    for key, val in report["residuals"].items():
        lines.append(f"residual {key:<20}{val:>24.6e}")
    return "\n".join(lines) + "\n"


def _check_residuals(report: dict, tol: float):
    for key, val in report["residuals"].items():
        if not val <= tol:
            raise IdentityViolation(f"{key} residual {val:.3e} exceeds tolerance {tol:.1e}")


def _write_tsv(dec: Decomposition, path: Path, I) -> None:
    m = dec.measure
    axes = [m.axes[k] for k in I.axes]
    comp = dec._compact[I.bits].reshape([ax.n for ax in axes])
    grids = np.meshgrid(*(ax.points for ax in axes), indexing="ij")
    lines = ["\t".join([ax.name for ax in axes] + ["clr"])]
    for idx in np.ndindex(comp.shape):
        lines.append("\t".join(repr(float(g[idx])) for g in grids) + "\t" + repr(float(comp[idx])))
    path.write_text("\n".join(lines) + "\n")


def write_components(dec: Decomposition, out: Path, prefix: str = "comp", emit_tsv: bool = False):
    out.mkdir(parents=True, exist_ok=True)
    for I, comp in dec.components.items():
        meta = {
            "subset": list(I.indices),
            "kind": "margin" if len(I) == 1 else "interaction",
            "norm_sq": dec.norms_sq[I],
        }
        payload = io.density_payload(dec.measure, np.exp(comp.values), clr=comp.values, metadata=meta)
        io.write_json(payload, out / f"{prefix}_{I.label}.json")
        if emit_tsv and len(I) <= 2:
            _write_tsv(dec, out / f"{prefix}_{I.label}.tsv", I)


def cmd_generate(args) -> int:
    f, meta = generate_density(args)
    io.write_density(f, args.output, metadata=meta)
    return EXIT_OK


def cmd_ingest(args) -> int:
    try:
        s = read_csv(args.csv)
        m = histogram_grid(s, args.bins)
        f = histogram_density(s, m, pseudocount=args.pseudocount)
    except ValueError as exc:
        raise io.InputError(str(exc)) from None
    meta = {
        "source": Path(args.csv).name,
        "n": s.n,
        "bounds": [[ax.points[0] - 0.5 * ax.weights[0], ax.points[-1] + 0.5 * ax.weights[-1]] for ax in m.axes],
        "pseudocount": args.pseudocount,
    }
    io.write_density(f, args.output, metadata=meta)
    return EXIT_OK


def cmd_decompose(args) -> int:
    f, _ = io.read_density(args.input)
    dec = decompose(f)
    report = decomposition_report(dec)
    if args.out:
        out = Path(args.out)
        write_components(dec, out, emit_tsv=args.emit_tsv)
        io.write_json(report, out / "report.json")
        (out / "report.txt").write_text(report_text(report))
    sys.stdout.write(io.dumps(report) if args.json else report_text(report))
    _check_residuals(report, args.tol)
    return EXIT_OK


def _random_separable(m: GridMeasure, seed: int) -> Density:
    rng = np.random.default_rng(seed)
    logg = np.zeros(m.shape)
    for k in range(m.d):
        shape = [1] * m.d
        shape[k] = -1
        logg = logg + rng.normal(size=m.axes[k].n).reshape(shape)
    return Density.from_log(m, logg)


def verify_density(f: Density, tol: float, seed: int, g: Density | None = None) -> dict:
    """Run the decomposition identities on ``f`` and return pass/fail records."""
    dec = decompose(f)
    scale = 1.0 + np.sqrt(dec.total_norm_sq)
    checks = []

    def record(name, residual, extra=None):
        entry = {"identity": name, "residual": float(residual), "passed": bool(residual <= tol)}
        entry.update(extra or {})
        checks.append(entry)

    record("reconstruction", dec.reconstruction_residual())
    record("orthogonality", dec.orthogonality_residual())
    record("pythagoras", dec.pythagoras_residual())
    record("margin-free", margin_free_residual(f))

    max_int = max((np.sqrt(v) for I, v in dec.norms_sq.items() if len(I) >= 2), default=0.0) / scale
    ind = Density(f.measure, np.exp(dec.independence_clr().values))
    gap = distance(f, ind) / scale
    ind_dec = decompose(ind)
    forward = max((np.sqrt(v) for I, v in ind_dec.norms_sq.items() if len(I) >= 2), default=0.0) / scale
    # separable <=> all interactions vanish; both sides measured on f, forward direction on f_ind
    consistent = (max_int <= tol) == (gap <= tol)
    record(
        "independence",
        forward if consistent else max(max_int, gap),
        {"verdict": "independent" if max_int <= tol else "dependent", "max_interaction": float(max_int)},
    )

    if g is None:
        g = _random_separable(f.measure, seed)
    yule = yule_perturb_check(f, g, tol=tol)
    record("yule", max(yule.interaction_residual, yule.margin_residual, yule.independence_residual))
    return {"tol": tol, "seed": seed, "checks": checks, "passed": all(c["passed"] for c in checks)}


def cmd_verify(args) -> int:
    f, _ = io.read_density(args.input)
    g = io.read_density(args.separable)[0] if args.separable else None
    if g is not None and g.measure != f.measure:
        raise io.InputError("--separable density lives on a different grid")
    try:
        report = verify_density(f, args.tol, args.seed, g)
    except ValueError as exc:
        raise io.InputError(str(exc)) from None
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        io.write_json(report, Path(args.out) / "verify.json")
    if args.json:
        sys.stdout.write(io.dumps(report))
    else:
        for c in report["checks"]:
            status = "PASS" if c["passed"] else "FAIL"
            verdict = f"  [{c['verdict']}]" if "verdict" in c else ""
            sys.stdout.write(f"{status}  {c['identity']:<16}{c['residual']:.3e}{verdict}\n")
    for c in report["checks"]:
        if not c["passed"]:
            raise IdentityViolation(f"{c['identity']} residual {c['residual']:.3e} exceeds tolerance {args.tol:.1e}")
    return EXIT_OK


def cmd_copula(args) -> int:
    try:
        if args.csv:
            sample = read_csv(args.csv)
            marginals = None
            if args.marginal_csv:
                marginals = [io.read_marginal_csv(p) for p in args.marginal_csv]
            result = copula_pipeline(sample, marginals, bins=args.bins, pseudocount=args.pseudocount)
        else:
            args.family = "gaussian-copula"
            c, _ = generate_density(args)
            if args.marginal_csv:
                marginals = [io.read_marginal_csv(p) for p in args.marginal_csv]
            else:
                marginals = [
                    MarginalTransform.identity(ax.points[0], ax.points[-1], name=f"x{k + 1}")
                    for k, ax in enumerate(c.measure.axes)
                ]
            result = copula_pipeline(c, marginals)
    except ValueError as exc:
        raise io.InputError(str(exc)) from None
    report = decomposition_report(result.decomposition)
    report["residuals"]["composed_reconstruction"] = result.composed_reconstruction_residual()
    if args.out:
        out = Path(args.out)
        write_components(result.decomposition, out, emit_tsv=args.emit_tsv)
        io.write_density(result.copula, out / "copula.json")
        io.write_density(result.composed_density, out / "composed.json")
        for I, z in result.composed.items():
            payload = io.density_payload(z.measure, np.exp(z.values), clr=z.values, metadata={"subset": list(I.indices)})
            io.write_json(payload, out / f"composed_{I.label}.json")
        io.write_json(report, out / "report.json")
        (out / "report.txt").write_text(report_text(report))
    sys.stdout.write(io.dumps(report) if args.json else report_text(report))
    _check_residuals(report, args.tol)
    return EXIT_OK


def cmd_inner_product(args) -> int:
    f, _ = io.read_density(args.first)
    g, _ = io.read_density(args.second)
    if f.measure != g.measure:
        raise io.InputError("the two densities live on different grids")
    out = {
        "inner_product": inner_product(f, g),
        "norm_first": norm(f),
        "norm_second": norm(g),
        "distance": distance(f, g),
    }
    if args.direct:
        out["inner_product_direct"] = inner_product_direct(f, g)
    sys.stdout.write(io.dumps(out))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-10, help="structural tolerance (relative)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, default=0, help="seed for random separable perturbations")
    common.add_argument("--emit-tsv", action="store_true", help="write plot-ready TSV curves")
    common.add_argument("--json", action="store_true", help="print the report as JSON")

    gen = argparse.ArgumentParser(add_help=False)
    gen.add_argument("--d", type=int, default=None, help="dimension (default 2)")
    gen.add_argument("--n", type=int, default=32, help="points per axis")
    gen.add_argument("--rho", type=float, default=0.5, help="exchangeable correlation")
    gen.add_argument("--sigma", help="correlation matrix JSON file")

    p = argparse.ArgumentParser(prog="bayesdecomp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("generate", parents=[common, gen], help="write an analytic density file")
    s.add_argument("--family", required=True, choices=["gaussian-copula", "beta2", "product", "uniform"])
    s.add_argument("--alpha", type=float, nargs=3, default=[1.0, 1.0, 1.0], metavar=("A0", "A1", "A2"))
    s.add_argument("--shape", type=float, nargs=2, default=[2.0, 3.0], metavar=("A", "B"))
    s.add_argument("--bounds", type=float, nargs=2, default=[0.0, 1.0], metavar=("LO", "HI"))
    s.add_argument("--output", "-o", default="-", help="output file (default stdout)")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("ingest", parents=[common], help="histogram a CSV sample")
    s.add_argument("csv")
    s.add_argument("--bins", type=int, nargs="+", default=[8])
    s.add_argument("--pseudocount", type=float, default=DEFAULT_PSEUDOCOUNT)
    s.add_argument("--output", "-o", default="-")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("decompose", parents=[common], help="decompose a density file")
    s.add_argument("input", help="density file, or - for stdin")
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("verify", parents=[common], help="check the decomposition identities")
    s.add_argument("input", help="density file, or - for stdin")
    s.add_argument("--separable", help="density file to use as the separable perturbation")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("copula", parents=[common, gen], help="two-step copula decomposition")
    s.add_argument("--csv", help="sample CSV; otherwise a Gaussian copula is generated")
    s.add_argument("--bins", type=int, default=16)
    s.add_argument("--pseudocount", type=float, default=DEFAULT_PSEUDOCOUNT)
    s.add_argument("--marginal-csv", nargs="+", help="one x,F table per dimension")
    s.set_defaults(func=cmd_copula)

    s = sub.add_parser("inner-product", parents=[common], help="scalar product of two density files")
    s.add_argument("first")
    s.add_argument("second")
    s.add_argument("--direct", action="store_true", help="also evaluate the quadratic double sum")
    s.set_defaults(func=cmd_inner_product)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "bins", None) is not None and args.command == "ingest" and len(args.bins) == 1:
        args.bins = args.bins[0]
    try:
        return args.func(args)
    except io.InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except IdentityViolation as exc:
        sys.stderr.write(f"identity violated: {exc}\n")
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
