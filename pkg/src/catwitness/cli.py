"""Command-line entry point: ``catwitness <subcommand> ...``.

Subcommands: simulate, estimate, witness, schedule, kernel-grid. Failures
print one ``error: ...`` line on stderr; invalid input exits with status 2,
runtime failures with status 1.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from catwitness import estimator, kernels, scheduler, simulator, states
from catwitness.recordio import (
    parse_angle,
    read_records,
    read_schedule,
    write_jsonl,
    write_records,
    write_schedule,
)
from catwitness.specfun import DEFAULT_FOCK_CUTOFF

STATES = (
    "vacuum", "fock", "coherent", "cat", "odd-cat", "even-cat",
    "squeezed-fock", "squeezed-vacuum", "squeezed-thermal",
)
KERNELS = ("cat", "squeezed-fock", "husimi", "mean-photon")


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"--{field}: {message}")


@dataclass
class RunConfig:
    """Validated command configuration shared by the subcommands."""

    eta: float = 1.0
    samples: int | None = None
    seed: int = 0
    significance: float = estimator.DEFAULT_SIGNIFICANCE

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ConfigError("eta", f"efficiency must lie in (0, 1], got {self.eta:g}")
        if self.samples is not None and self.samples <= 0:
            raise ConfigError("samples", f"must be positive, got {self.samples}")
        if self.significance <= 0:
            raise ConfigError("significance", "must be positive")


def _angle(text: str) -> float:
    try:
        return parse_angle(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _add_kernel_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    g = p.add_argument_group("kernel selection")
    g.add_argument("--kernel", choices=KERNELS, required=required)
    g.add_argument("--alpha", type=_complex, help="cat or Husimi amplitude (complex allowed)")
    g.add_argument("--phi", type=_angle, default=np.pi, help="cat phase (default PI)")
    g.add_argument("--n", type=int, help="squeezed Fock index (0 or 1)")
    g.add_argument("--r", type=float, default=0.0, help="squeezing constant")


def _need(args, name: str):
    value = getattr(args, name)
    if value is None:
        raise ConfigError(name, f"required for --kernel {args.kernel}")
    return value


def build_kernel(args, eta: float):
    kind = args.kernel
    if kind == "cat":
        alpha = _need(args, "alpha")
        try:
            states.CatSpec(alpha, args.phi)
        except ValueError as exc:
            raise ConfigError("alpha", str(exc)) from None
        return kernels.CatKernel(alpha, args.phi, eta)
    if kind == "squeezed-fock":
        return kernels.SqueezedFockKernel(_need(args, "n"), args.r, eta)
    if kind == "husimi":
        return kernels.HusimiKernel(_need(args, "alpha"), eta, args.r)
    return kernels.MeanPhotonKernel(eta)


def build_state(args) -> states.FockDensityMatrix:
    kind, cutoff = args.state, args.cutoff
    if kind == "vacuum":
        return states.fock_density_matrix(0, cutoff)
    if kind == "fock":
        return states.fock_density_matrix(_need_state(args, "n"), cutoff)
    if kind == "coherent":
        return states.coherent_density_matrix(_need_state(args, "alpha"), cutoff)
    if kind in ("cat", "odd-cat", "even-cat"):
        phi = {"odd-cat": np.pi, "even-cat": 0.0}.get(kind, args.phi)
        try:
            spec = states.CatSpec(_need_state(args, "alpha"), phi)
        except ValueError as exc:
            raise ConfigError("alpha", str(exc)) from None
        return states.cat_density_matrix(spec, cutoff)
    if kind == "squeezed-fock":
        return states.squeezed_fock_density_matrix(
            states.SqueezedFockSpec(_need_state(args, "n"), args.r), cutoff
        )
    if kind == "squeezed-vacuum":
        return states.squeezed_fock_density_matrix(states.SqueezedFockSpec(0, args.r), cutoff)
    spec = states.SqueezedThermalSpec.thermal(args.r, args.nbar)
    return states.squeezed_thermal_density_matrix(spec, cutoff)


def _need_state(args, name: str):
    value = getattr(args, name)
    if value is None:
        raise ConfigError(name, f"required for --state {args.state}")
    return value


def _emit(lines: dict, out=None) -> None:
    out = out or sys.stdout
    for key, value in lines.items():
        if isinstance(value, float):
            value = f"{value:.10g}"
        print(f"{key}: {value}", file=out)


def cmd_simulate(args) -> int:
    cfg = RunConfig(eta=args.eta, samples=args.samples, seed=args.seed)
    rho = build_state(args)
    if args.schedule:
        schedule = read_schedule(args.schedule)
    else:
        if cfg.samples is None:
            raise ConfigError("samples", "required unless --schedule is given")
        schedule = simulator.PhaseSchedule.uniform(cfg.samples, args.bins)
    records = simulator.sample_records(rho, schedule, cfg.eta, cfg.seed)
    write_records(args.out, records)
    _emit({
        "records": len(records),
        "eta": cfg.eta,
        "seed": cfg.seed,
        "schedule": f"{schedule.kind}, {schedule.theta.size} phases, "
                    f"counts {schedule.counts.min()}..{schedule.counts.max()}",
        "output": args.out,
    })
    return 0


def _estimate_docs(args, cfg: RunConfig):
    kernel = build_kernel(args, cfg.eta)
    records = read_records(args.records)
    schedule = read_schedule(args.schedule) if args.schedule else None
    est = estimator.estimate(kernel, records, schedule)
    try:
        z = estimator.null_diagnostic(records, kernel, schedule)
    except ValueError:
        z = None
    return records, schedule, kernel, est, z


def cmd_estimate(args) -> int:
    cfg = RunConfig(eta=args.eta)
    _, _, kernel, est, z = _estimate_docs(args, cfg)
    doc = {"type": "estimate", "eta": cfg.eta, **est.as_dict(), "null_z": z}
    _emit({
        "kernel": kernel.label,
        "eta": cfg.eta,
        "value": est.value,
        "stderr": est.stderr,
        "count": est.count,
        "weighting": est.weighting,
        "null_z": "n/a" if z is None else float(z),
    })
    if args.jsonl:
        write_jsonl(args.jsonl, [doc])
    return 0


def cmd_witness(args) -> int:
    cfg = RunConfig(eta=args.eta, significance=args.significance)
    records, schedule, kernel, fid, z = _estimate_docs(args, cfg)
    if kernel.parity != "odd":
        raise estimator.WitnessMisuseError(
            f"witness needs an odd-parity target kernel; {kernel.label} is not odd"
        )
    nbar = estimator.estimate(kernels.MeanPhotonKernel(cfg.eta), records, schedule)
    neg = estimator.witness_negativity(fid, cfg.significance)
    qng = estimator.witness_qng(fid, nbar, cfg.significance)
    _emit({
        "kernel": kernel.label,
        "eta": cfg.eta,
        "fidelity": fid.value,
        "fidelity_stderr": fid.stderr,
        "count": fid.count,
        "wigner_origin_bound": neg.bound,
        "negativity": "PASS" if neg.passed else "FAIL",
        "negativity_margin_sigma": neg.margin_sigma,
        "nbar": nbar.value,
        "nbar_stderr": nbar.stderr,
        "qng_threshold": qng.bound,
        "qng": "PASS" if qng.passed else "FAIL",
        "qng_margin_sigma": qng.margin_sigma,
        "significance": cfg.significance,
        "null_z": "n/a" if z is None else float(z),
    })
    if args.jsonl:
        write_jsonl(args.jsonl, [
            {"type": "estimate", "eta": cfg.eta, **fid.as_dict(), "null_z": z},
            {"type": "estimate", "eta": cfg.eta, **nbar.as_dict()},
            {"type": "witness", "eta": cfg.eta, **neg.as_dict()},
            {"type": "witness", "eta": cfg.eta, **qng.as_dict()},
        ])
    return 0


def cmd_schedule(args) -> int:
    cfg = RunConfig(eta=args.eta, samples=args.samples)
    total = cfg.samples
    if (args.records is None) == (args.analytic_r is None):
        raise ConfigError("records", "give exactly one of --records or --analytic-r")
    if args.analytic_r is not None:
        r = args.analytic_r
        schedule = scheduler.squeezed_thermal_schedule(r, total, args.bins)
        fine = np.arange(4096) * np.pi / 4096
        a = kernels.squeezed_frame(fine, r, 1.0).a
        profile = scheduler.VarianceProfile(fine, a**-4.0)
        units = "V_n"
    else:
        if args.kernel is None:
            raise ConfigError("kernel", "required with --records")
        records = read_records(args.records)
        kernel = build_kernel(args, cfg.eta)
        profile = scheduler.empirical_variance_profile(records, kernel, args.bins)
        schedule = scheduler.optimal_schedule(profile, total)
        units = "absolute"
    v_min, v_c = scheduler.predicted_variances(profile, total)
    write_schedule(args.out, schedule)
    _emit({
        "phases": schedule.theta.size,
        "samples": schedule.total,
        "variance_units": units,
        "V_min": v_min,
        "V_c": v_c,
        "ratio": v_c / v_min,
        "output": args.out,
    })
    return 0


def cmd_kernel_grid(args) -> int:
    cfg = RunConfig(eta=args.eta)
    kernel = build_kernel(args, cfg.eta)
    if args.theta is not None:
        thetas = np.array([args.theta])
    else:
        thetas = np.linspace(args.theta_min, args.theta_max, args.theta_points)
    xs = np.linspace(args.x_min, args.x_max, args.x_points)
    T, X = np.meshgrid(thetas, xs, indexing="ij")
    values = np.asarray(kernel(X, T), dtype=float)
    out = sys.stdout if args.out == "-" else open(args.out, "w", encoding="ascii", newline="\n")
    try:
        out.write("theta,x,value\n")
        for t, x, v in zip(T.ravel().tolist(), X.ravel().tolist(), values.ravel().tolist()):
            out.write(f"{t!r},{x!r},{v!r}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="catwitness",
        description="Cat-state and squeezed-Fock fidelities from homodyne data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate homodyne records of an exact state")
    p.add_argument("--state", choices=STATES, required=True)
    p.add_argument("--alpha", type=_complex)
    p.add_argument("--phi", type=_angle, default=np.pi)
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=float, default=0.0)
    p.add_argument("--nbar", type=float, default=0.0, help="thermal photon number (squeezed-thermal)")
    p.add_argument("--cutoff", type=int, default=DEFAULT_FOCK_CUTOFF)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--samples", type=int)
    p.add_argument("--bins", type=int, default=90, help="equidistant phases for the uniform schedule")
    p.add_argument("--schedule", help="theta,count CSV to follow instead of a uniform grid")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", default="records.csv")
    p.set_defaults(func=cmd_simulate)

    for name, func, help_ in (
        ("estimate", cmd_estimate, "average a sampling function over records"),
        ("witness", cmd_witness, "Wigner-negativity and non-Gaussianity witnesses"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("records")
        _add_kernel_args(p)
        p.add_argument("--eta", type=float, default=1.0)
        p.add_argument("--schedule", help="theta,count CSV used to take the data (density weighting)")
        p.add_argument("--jsonl", help="write machine-readable results here")
        if name == "witness":
            p.add_argument("--significance", type=float, default=estimator.DEFAULT_SIGNIFICANCE)
        p.set_defaults(func=func)

    p = sub.add_parser("schedule", help="variance-optimal phase schedule")
    p.add_argument("--records", help="probe records for an empirical variance profile")
    p.add_argument("--analytic-r", type=float, help="closed-form schedule for squeezing r")
    _add_kernel_args(p, required=False)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("-o", "--out", default="schedule.csv")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("kernel-grid", help="tabulate a sampling function on a (theta, x) grid")
    _add_kernel_args(p)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--x-min", type=float, default=-5.0)
    p.add_argument("--x-max", type=float, default=5.0)
    p.add_argument("--x-points", type=int, default=201)
    p.add_argument("--theta-min", type=_angle, default=0.0)
    p.add_argument("--theta-max", type=_angle, default=np.pi)
    p.add_argument("--theta-points", type=int, default=91)
    p.add_argument("--theta", type=_angle, help="single cross-section phase, e.g. PI/2")
    p.add_argument("-o", "--out", default="-")
    p.set_defaults(func=cmd_kernel_grid)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, states.CutoffError) as exc:
        print(f"error: {' '.join(str(exc).split())}", file=sys.stderr)
        return 2
    except (RuntimeError, OSError) as exc:
        print(f"error: {' '.join(str(exc).split())}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
