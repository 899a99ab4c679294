"""Command-line experiment runner.

Exit codes: 0 success, 1 internal or numeric failure, 2 precondition
violation (including bad arguments).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from typing import Any

import numpy as np

from . import __version__
from .error_measures import epsilon_direct, epsilon_general, eta_direct, eta_general, is_faithful
from .lund_wiseman import (
    OUTCOMES,
    CircuitConfig,
    eta_strong,
    marginals,
    simulate,
    weak_reconstruction,
    z_instrument,
)
from .observables import (
    commute_check,
    distorted_observable,
    identity_instrument,
    lueders_instrument,
    qubit_observable,
    sharp_observable,
    smear,
)
from .qcore import TOL_HERM, PreconditionError, QuantumState, X, Z, bloch_coefficients, bloch_operator
from .relations import (
    additive_bound,
    branciard_disc,
    delta_sq_closed,
    epsilon_sq_closed,
    scan_joint_schemes,
)
from .sampling import (
    estimate_epsilon_direct,
    estimate_eta_direct,
    lueders_then_povm_shots,
    sample_distribution,
    sandwich_shots,
)
from .transport import delta2_search

SCHEMA = "mur-lab/1"

_ANGLE = re.compile(r"^\s*(?:(?P<mul>[-+]?[0-9.eE+-]+)\s*\*\s*)?(?P<sign>-)?pi\s*(?:/\s*(?P<div>[0-9.eE+-]+))?\s*$")


class UsageError(PreconditionError):
    pass


def parse_angle(text: str) -> float:
    """Radians as a float literal or a multiple of ``pi`` (``pi/8``, ``3*pi/16``)."""
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    m = _ANGLE.match(text)
    if not m:
        raise UsageError(f"cannot parse angle {text!r} (radians, e.g. 0.39 or pi/8)")
    val = math.pi * float(m["mul"] or 1.0) / float(m["div"] or 1.0)
    return -val if m["sign"] else val


def parse_grid(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError("--theta-grid expects start:stop:count")
    start, stop = parse_angle(parts[0]), parse_angle(parts[1])
    try:
        count = int(parts[2])
    except ValueError:
        raise UsageError("grid count must be an integer") from None
    if count < 1:
        raise UsageError("grid count must be positive")
    return [float(t) for t in np.linspace(start, stop, count)]


def parse_vector(text: str) -> np.ndarray:
    try:
        v = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise UsageError(f"cannot parse Bloch vector {text!r}") from None
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise UsageError("Bloch vectors take three comma-separated floats")
    return v


def parse_amplitudes(text: str) -> tuple[complex, complex]:
    try:
        amps = [complex(x.strip().replace(" ", "")) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse amplitudes {text!r} (use re+imj,re+imj)") from None
    if len(amps) != 2:
        raise UsageError("--state-amplitudes takes two comma-separated complex numbers")
    norm = math.sqrt(abs(amps[0]) ** 2 + abs(amps[1]) ** 2)
    if norm == 0:
        raise UsageError("amplitudes must not both vanish")
    return amps[0] / norm, amps[1] / norm


def _state_from_args(args, default_bloch=(0.0, 0.0, 1.0)) -> tuple[QuantumState, dict]:
    if args.state_bloch and args.state_amplitudes:
        raise UsageError("give either --state-bloch or --state-amplitudes, not both")
    if args.state_amplitudes:
        a, b = parse_amplitudes(args.state_amplitudes)
        return QuantumState.from_ket([a, b]), {"amplitudes": [_cx(a), _cx(b)]}
    r = parse_vector(args.state_bloch) if args.state_bloch else np.array(default_bloch)
    if np.linalg.norm(r) > 1 + 1e-10:
        raise UsageError("state Bloch vector must have norm <= 1")
    return QuantumState.from_bloch(r), {"bloch": r.tolist()}


def _cx(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _clean(obj: Any) -> Any:
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def _joint_rows(j) -> list[dict]:
    return [{"x": x, "y": y, "p": w} for (x, y), w in j.items()]


def _estimate_block(est) -> dict:
    return {
        "value": est.value,
        "std_error": est.std_error,
        "squared": est.squared,
        "squared_std_error": est.squared_std_error,
        "shots": est.n,
    }


# -- commands ------------------------------------------------------------------


def cmd_direct_test(args) -> tuple[dict, list[dict]]:
    rho, state_echo = _state_from_args(args)
    if args.lam is None and args.c_bloch is None and args.theta is None:
        raise UsageError("direct-test needs --lambda/--c-bloch (error test) or --theta (disturbance test)")
    config = {"state": state_echo, "shots": args.shots, "seed": args.seed}
    analytic: dict[str, Any] = {}
    mc: dict[str, Any] = {}
    flags: dict[str, Any] = {}
    rows: list[dict] = []

    if args.lam is not None or args.c_bloch is not None:
        if args.lam is not None and args.c_bloch is not None:
            raise UsageError("give either --lambda or --c-bloch")
        a = sharp_observable(Z)
        if args.lam is not None:
            lam = args.lam
            if not 0 <= lam <= 1:
                raise UsageError("--lambda must lie in [0, 1]")
            s = np.array([[(1 + lam) / 2, (1 - lam) / 2], [(1 - lam) / 2, (1 + lam) / 2]])
            c = smear(a, s)
            config["lambda"] = lam
        else:
            cvec = parse_vector(args.c_bloch)
            if np.linalg.norm(cvec) > 1 + 1e-10:
                raise UsageError("approximator Bloch vector must have norm <= 1")
            c = qubit_observable(cvec)
            config["c_bloch"] = cvec.tolist()
        commuting = commute_check(a, c)
        flags["error_commuting"] = commuting
        if not commuting:
            raise PreconditionError(
                "direct error test not applicable: the approximator does not commute with Z "
                f"(formal rms value {epsilon_general(rho, a, c):.12g} has no value-comparison meaning)"
            )
        eps, joint = epsilon_direct(rho, a, c)
        analytic["epsilon"] = eps
        analytic["epsilon_sq"] = eps * eps
        analytic["epsilon_general"] = epsilon_general(rho, a, c)
        analytic["error_joint"] = _joint_rows(joint)
        if args.shots:
            est = estimate_epsilon_direct(lueders_then_povm_shots(rho, a, c, args.shots, args.seed, stream=0))
            mc["epsilon"] = _estimate_block(est)
            flags["epsilon_sq_within_3se"] = abs(est.squared - eps * eps) <= 3 * est.squared_std_error
            rows.append({"quantity": "epsilon_sq", "analytic": eps * eps,
                         "monte_carlo": est.squared, "std_error": est.squared_std_error})
        else:
            rows.append({"quantity": "epsilon_sq", "analytic": eps * eps, "monte_carlo": None, "std_error": None})

    if args.theta is not None:
        theta = parse_angle(args.theta)
        gamma = args.gamma if args.gamma is not None else 1.0
        config.update(theta=theta, gamma=gamma)
        if abs(gamma - 1) > TOL_HERM:
            raise PreconditionError(
                "direct disturbance test requires a strong initial measurement (gamma = 1); "
                "use the circuit command for the weak-value method"
            )
        b = sharp_observable(X)
        inst = z_instrument(theta)
        d = distorted_observable(inst, b)
        flags["disturbance_benign"] = commute_check(b, d)
        eta, joint = eta_direct(rho, b, inst)
        analytic["eta"] = eta
        analytic["eta_sq"] = eta * eta
        analytic["eta_general"] = eta_general(rho, b, d)
        analytic["disturbance_joint"] = _joint_rows(joint)
        if args.shots:
            est = estimate_eta_direct(sandwich_shots(rho, b, inst, args.shots, args.seed, stream=1))
            mc["eta"] = _estimate_block(est)
            flags["eta_sq_within_3se"] = abs(est.squared - eta * eta) <= 3 * est.squared_std_error
            rows.append({"quantity": "eta_sq", "analytic": eta * eta,
                         "monte_carlo": est.squared, "std_error": est.squared_std_error})
        else:
            rows.append({"quantity": "eta_sq", "analytic": eta * eta, "monte_carlo": None, "std_error": None})

    return {"config": config, "analytic": analytic, "monte_carlo": mc, "flags": flags}, rows


def cmd_circuit(args) -> tuple[dict, list[dict]]:
    gamma = args.gamma if args.gamma is not None else 1.0
    alpha, beta = parse_amplitudes(args.state_amplitudes or "1,0")
    thetas = _thetas(args, default="pi/8")
    method = args.method
    want_weak = method in ("weak", "both") or (method == "auto" and 2 * gamma**2 - 1 > 1e-9)
    want_strong = method in ("strong", "both") or (method == "auto" and abs(gamma - 1) <= TOL_HERM)
    if want_weak and 2 * gamma**2 - 1 <= 1e-9:
        raise PreconditionError("weak-value reconstruction requested but gamma^2 <= 1/2")
    if want_strong and abs(gamma - 1) > TOL_HERM:
        raise PreconditionError("strong method requested but gamma != 1")

    rows, details = [], []
    for i, theta in enumerate(thetas):
        cfg = CircuitConfig(alpha, beta, gamma, theta)
        dist = simulate(cfg)
        marg = marginals(cfg)
        row: dict[str, Any] = {"theta": theta, "eta_sq_closed": 2 * (math.cos(theta) - math.sin(theta)) ** 2}
        for k, l, n in OUTCOMES:
            row[f"P{_sgn(k)}{_sgn(l)}{_sgn(n)}"] = dist[k, l, n]
        detail: dict[str, Any] = {
            "theta": theta,
            "probabilities": {f"{_sgn(k)}{_sgn(l)}{_sgn(n)}": dist[k, l, n] for k, l, n in OUTCOMES},
            "marginal_povms": {
                name: _bloch_block(obs)
                for name, obs in (("initial_P", marg.initial), ("final_D", marg.final), ("apparatus_C", marg.apparatus))
            },
            "joint_F": {f"{_sgn(k)}{_sgn(l)}": _bloch_pair(f) for (k, l), f in marg.joint.items()},
        }
        if want_weak:
            wv = weak_reconstruction(cfg)
            row["eta_sq_weak"] = wv.eta**2
            detail["eta_weak"] = wv.eta
            detail["weak_valued"] = {
                "deviation_distribution": [{"delta_x": v, "p": w} for v, w in zip(wv.deviations.values, wv.deviations.weights)],
                "joint": [{"x_i": x, "x_f": l, "p": w, "negative": w < -TOL_HERM} for (x, l), w in wv.joint.items()],
                "has_negative": wv.deviations.has_negative or any(w < -TOL_HERM for w in wv.joint.values()),
            }
        if want_strong:
            es = eta_strong(cfg)
            row["eta_sq_strong"] = es**2
            detail["eta_strong"] = es
        if args.shots:
            shots = sample_distribution(dist, args.shots, args.seed + i)
            if want_strong:
                est = estimate_eta_direct(shots)
                row["eta_sq_mc"] = est.squared
                row["eta_sq_mc_se"] = est.squared_std_error
                detail["monte_carlo"] = _estimate_block(est)
            counts = {}
            for k, l, n in OUTCOMES:
                mask = np.all(shots.values == (k, l, n), axis=1)
                counts[f"{_sgn(k)}{_sgn(l)}{_sgn(n)}"] = int(mask.sum())
            detail["counts"] = counts
        rows.append(row)
        details.append(detail)

    report = {
        "config": {"gamma": gamma, "alpha": _cx(alpha), "beta": _cx(beta), "thetas": thetas,
                   "method": method, "shots": args.shots, "seed": args.seed},
        "analytic": {"rows": details},
        "monte_carlo": {"enabled": bool(args.shots)},
        "flags": {"weak": want_weak, "strong": want_strong},
    }
    return report, rows


def _bloch_block(obs) -> dict:
    out = {}
    for v, e in zip(obs.values, obs.effects):
        out[_sgn(v)] = _bloch_pair(e)
    return out


def _bloch_pair(e) -> dict:
    c0, c = bloch_coefficients(e)
    return {"identity": c0, "x": c[0], "y": c[1], "z": c[2]}


def _sgn(v: float) -> str:
    return "+" if v > 0 else "-"


def _thetas(args, default: str) -> list[float]:
    if args.theta is not None and args.theta_grid is not None:
        raise UsageError("give either --theta or --theta-grid")
    if args.theta_grid is not None:
        return parse_grid(args.theta_grid)
    return [parse_angle(args.theta if args.theta is not None else default)]


def cmd_distance(args) -> tuple[dict, list[dict]]:
    a = parse_vector(args.a_bloch)
    if abs(np.linalg.norm(a) - 1) > 1e-10:
        raise UsageError("target Bloch vector must be a unit vector")
    if args.c_bloch is None:
        raise UsageError("distance needs --c-bloch")
    c = parse_vector(args.c_bloch)
    if np.linalg.norm(c) > 1 + 1e-10:
        raise UsageError("approximator Bloch vector must have norm <= 1")
    rho, state_echo = _state_from_args(args)
    a_obs, c_obs = sharp_observable(bloch_operator(a)), qubit_observable(c)
    search = delta2_search(a_obs, c_obs)
    closed_sq = delta_sq_closed(a, c)
    eps_sq = epsilon_sq_closed(a, c)
    eps_gen = epsilon_general(rho, a_obs, c_obs)
    faithful = is_faithful(a_obs, c_obs)
    analytic = {
        "delta2": search.value,
        "delta2_sq": search.squared,
        "delta_sq_closed": closed_sq,
        "delta_sq_difference": search.squared - closed_sq,
        "maximizing_state_bloch": search.maximizer,
        "epsilon_sq_closed": eps_sq,
        "epsilon_sq_general": eps_gen**2,
        "epsilon_sq_difference": eps_gen**2 - eps_sq,
    }
    row = {k: v for k, v in analytic.items() if k != "maximizing_state_bloch"}
    row["epsilon_label"] = "faithful" if faithful else "formal"
    report = {
        "config": {"a_bloch": a.tolist(), "c_bloch": c.tolist(), "state": state_echo, "seed": args.seed},
        "analytic": analytic,
        "monte_carlo": {},
        "flags": {"commuting": faithful, "epsilon_label": row["epsilon_label"]},
    }
    return report, [row]


def cmd_inequality_scan(args) -> tuple[dict, list[dict]]:
    if args.theta is None and args.theta_grid is None:
        thetas = parse_grid("0:pi/4:9")
    else:
        thetas = _thetas(args, default="0")
    schemes = [(f"z_instrument theta={t:.12g}", z_instrument(t)) for t in thetas]
    schemes.append(("identity", identity_instrument()))
    schemes.append(("lueders_z", lueders_instrument(sharp_observable(Z))))
    rows = []
    for pair in scan_joint_schemes(schemes):
        lhs, disc_ok = branciard_disc(pair)
        total, add_ok = additive_bound(pair)
        rows.append({
            "scheme": pair.label,
            "d_z": pair.d_z,
            "d_x": pair.d_x,
            "disc_lhs": lhs,
            "disc_satisfied": disc_ok,
            "additive_sum": total,
            "additive_satisfied": add_ok,
            "outside_region": pair.outside_region,
        })
    passed = all(r["disc_satisfied"] and r["additive_satisfied"] for r in rows)
    report = {
        "config": {"thetas": thetas, "seed": args.seed},
        "analytic": {"rows": rows, "additive_bound": 2 - math.sqrt(2)},
        "monte_carlo": {},
        "flags": {"all_satisfied": passed},
    }
    return report, rows


COMMANDS = {
    "direct-test": cmd_direct_test,
    "circuit": cmd_circuit,
    "distance": cmd_distance,
    "inequality-scan": cmd_inequality_scan,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--shots", type=int, default=0, metavar="N")
    common.add_argument("--theta", help="apparatus angle in radians (float or multiple of pi)")
    common.add_argument("--theta-grid", metavar="START:STOP:COUNT")
    common.add_argument("--gamma", type=float)
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--state-bloch", metavar="X,Y,Z")
    common.add_argument("--state-amplitudes", metavar="A,B")

    parser = _Parser(prog="mur-lab", description="Measurement uncertainty relation lab.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("direct-test", parents=[common], help="direct error/disturbance tests")
    p.add_argument("--c-bloch", metavar="X,Y,Z", help="approximator of Z (alternative to --lambda)")
    p.set_defaults(shots=100_000)

    p = sub.add_parser("circuit", parents=[common], help="three-qubit weak/strong circuit")
    p.add_argument("--method", choices=("auto", "weak", "strong", "both"), default="auto")

    p = sub.add_parser("distance", parents=[common], help="Wasserstein-2 distance between qubit observables")
    p.add_argument("--a-bloch", default="0,0,1", metavar="X,Y,Z")
    p.add_argument("--c-bloch", metavar="X,Y,Z")

    sub.add_parser("inequality-scan", parents=[common], help="check the Z/X inequalities on joint schemes")
    return parser


def _to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    fields = list(rows[0])
    for r in rows[1:]:
        fields += [k for k in r if k not in fields]
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _csv_cell(r.get(k)) for k in fields})
    return buf.getvalue()


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def render(report: dict, rows: list[dict], fmt: str) -> str:
    if fmt == "csv":
        return _to_csv(rows)
    return json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors, --help, --version
        return int(exc.code or 0)
    try:
        body, rows = COMMANDS[args.command](args)
    except PreconditionError as exc:
        print(f"mur-lab {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and map to exit code 1
        print(f"mur-lab {args.command}: internal error: {exc}", file=sys.stderr)
        return 1
    report = {"schema": SCHEMA, "command": args.command, **body}
    text = render(report, rows, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
