"""Command-line front end: analyze POMs, simulate data, run estimators.

Human-readable summaries go to stdout; machine-readable JSON is written only
to the path given with ``--out``. Exit codes: 0 success, 2 parse failure,
3 validation failure, 4 estimator did not converge.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import serialize as io
from .estimate import (
    EstimationConfig,
    closed_form_trine_mlme,
    closed_form_von_neumann_mlme,
    extended_ml_estimate,
    extended_mlme_estimate,
    is_trine_pom,
    log_likelihood,
    extended_log_likelihood,
    ml_estimate,
    mlme_estimate,
)
from .poms import gram_report
from .processes import qpt_ml_estimate, qpt_mlme_estimate
from .sampling import sample_counts, simulate_process_dataset
from .states import rho_to_bloch, von_neumann_entropy
from .serialize import ParseError

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_NONCONVERGED = 4

_CLASS_TEXT = {
    "perfect-complete": "perfect informationally complete",
    "imperfect-complete": "imperfect informationally complete",
    "perfect-incomplete": "perfect informationally incomplete",
    "imperfect-incomplete": "imperfect informationally incomplete",
}


def _setup_logging() -> None:
    level = {"quiet": logging.WARNING, "info": logging.INFO, "trace": logging.DEBUG}.get(
        os.environ.get("QTOMO_LOG", "quiet"), logging.WARNING
    )
    logging.basicConfig(stream=sys.stderr, level=level, format="%(name)s: %(message)s")


def _config_fields() -> dict:
    return {
        "epsilon0": float,
        "lambda": float,
        "max_iters": int,
        "grad_tol": float,
        "step_shrink": float,
        "log_floor": float,
        "p_floor": float,
    }


def _build_config(args) -> EstimationConfig:
    """Precedence: CLI flag > config file > built-in default."""
    values = {}
    if getattr(args, "config", None):
        raw = io.load_json(args.config)
        if not isinstance(raw, dict):
            raise ParseError("config file must be a JSON object")
        for key, cast in _config_fields().items():
            if key in raw:
                values["lam" if key == "lambda" else key] = cast(raw[key])
    flag_map = {
        "lam": getattr(args, "lam", None),
        "epsilon0": getattr(args, "eps", None),
        "max_iters": getattr(args, "max_iters", None),
        "grad_tol": getattr(args, "tol", None),
    }
    for key, val in flag_map.items():
        if val is not None:
            values[key] = val
    return EstimationConfig(**values)


def _config_echo(config: EstimationConfig) -> dict:
    raw = asdict(config)
    raw["lambda"] = raw.pop("lam")
    return raw


def _add_estimation_flags(sub) -> None:
    sub.add_argument("--lambda", dest="lam", type=float, default=None,
                     help="entropy multiplier for the mlme methods")
    sub.add_argument("--eps", type=float, default=None, help="initial step size")
    sub.add_argument("--max-iters", type=int, default=None)
    sub.add_argument("--tol", type=float, default=None, help="extremal-equation defect tolerance")
    sub.add_argument("--config", default=None, help="JSON file with config defaults")
    sub.add_argument("--allow-nonconverged", action="store_true")
    sub.add_argument("--out", default=None, help="write the JSON report here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qtomo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze-pom", help="Gram spectrum and POM classification")
    p.add_argument("pom", help="POM JSON file")
    p.add_argument("--out", default=None)

    p = sub.add_parser("simulate", help="draw synthetic counts for a state or channel")
    p.add_argument("--state", default=None, help="state JSON file")
    p.add_argument("--channel", default=None, help="channel JSON file")
    p.add_argument("--inputs", default=None, help="input-states JSON file (with --channel)")
    p.add_argument("--pom", required=True)
    p.add_argument("-N", "--n-total", dest="n_total", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("estimate-state", help="run a state estimator on counts")
    p.add_argument("--counts", required=True)
    p.add_argument("--pom", required=True)
    p.add_argument("--method", choices=("ml", "mlme", "closed-form"), default="ml")
    p.add_argument("--rho0", default=None, help="optional initial state JSON file")
    _add_estimation_flags(p)

    p = sub.add_parser("estimate-process", help="run a process estimator on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--method", choices=("ml", "mlme"), default="ml")
    _add_estimation_flags(p)

    return parser


def cmd_analyze_pom(args) -> int:
    pom = io.pom_from_json(io.load_json(args.pom))
    report = gram_report(pom)
    eig_text = ", ".join(f"{v:.12g}" for v in report.eigenvalues)
    print(f"POM: {pom.n_outcomes} outcomes on a {pom.dim}-dimensional space")
    print(f"Gram eigenvalues: [{eig_text}]")
    print(f"n>0 = {report.n_positive} (D^2 = {pom.dim**2})")
    print(f"classification: {_CLASS_TEXT[report.classification]}")
    if args.out:
        io.dump_json(args.out, {
            "eigenvalues": list(report.eigenvalues),
            "n_positive": report.n_positive,
            "perfect": report.perfect,
            "classification": report.classification,
        })
    return EXIT_OK


def cmd_simulate(args) -> int:
    pom = io.pom_from_json(io.load_json(args.pom))
    if (args.state is None) == (args.channel is None):
        raise ValueError("give exactly one of --state or --channel")
    if args.state is not None:
        rho = io.state_from_json(io.load_json(args.state))
        record = sample_counts(rho, pom, args.n_total, args.seed)
        io.dump_json(args.out, io.counts_to_json(record, pom_ref=args.pom))
        undetected = record.n_undetected if record.n_undetected is not None else 0
        print(f"simulated {args.n_total} copies: recorded {record.total}, undetected {undetected}")
        print(f"counts: {list(record.counts)}")
    else:
        if args.inputs is None:
            raise ValueError("--channel requires --inputs")
        channel = io.choi_from_json(io.load_json(args.channel))
        inputs = io.inputs_from_json(io.load_json(args.inputs))
        dataset = simulate_process_dataset(channel, inputs, pom, args.n_total, args.seed)
        io.dump_json(args.out, io.dataset_to_json(dataset, pom_ref=args.pom))
        print(f"simulated {args.n_total} copies for each of {dataset.n_inputs} inputs")
    return EXIT_OK


def _detect_von_neumann_basis(pom) -> np.ndarray | None:
    if not pom.is_perfect or pom.n_outcomes != pom.dim:
        return None
    cols = []
    for outcome in pom.outcomes:
        vals, vecs = np.linalg.eigh(outcome)
        if abs(vals[-1] - 1.0) > 1e-9 or np.any(np.abs(vals[:-1]) > 1e-9):
            return None
        cols.append(vecs[:, -1])
    return np.stack(cols, axis=1)


def cmd_estimate_state(args) -> int:
    record, _ = io.counts_from_json(io.load_json(args.counts))
    pom = io.pom_from_json(io.load_json(args.pom))
    if len(record.counts) != pom.n_outcomes:
        raise ValueError(
            f"counts length {len(record.counts)} does not match {pom.n_outcomes} outcomes"
        )
    config = _build_config(args)
    rho0 = io.state_from_json(io.load_json(args.rho0)) if args.rho0 else None
    method = args.method
    note = ""
    if method == "closed-form":
        if is_trine_pom(pom):
            est = closed_form_trine_mlme(record)
            if est is None:
                note = "closed form outside the state space; fell back to iterative mlme"
                report = mlme_estimate(record, pom, config, rho0=rho0)
            else:
                report = _closed_form_report(est, record, pom)
        else:
            basis = _detect_von_neumann_basis(pom)
            if basis is None:
                raise ValueError("no closed form available for this POM; use ml or mlme")
            est = closed_form_von_neumann_mlme(record, basis)
            report = _closed_form_report(est, record, pom)
    elif method == "ml":
        runner = ml_estimate if pom.is_perfect else extended_ml_estimate
        report = runner(record, pom, config, rho0=rho0)
    else:
        runner = mlme_estimate if pom.is_perfect else extended_mlme_estimate
        report = runner(record, pom, config, rho0=rho0)

    payload = {
        "method": method,
        "dim": report.estimator.dim,
        "estimator": io.matrix_to_json(report.estimator.matrix),
        "log_likelihood": report.log_likelihood,
        "entropy": report.entropy,
        "iterations": report.iterations,
        "converged": report.converged,
        "residual": report.residual,
        "likelihood_trace": list(report.likelihood_trace),
        "eta_hat": report.eta_hat,
        "n_emitted_estimate": report.n_emitted_estimate,
        "config": _config_echo(config),
    }
    if args.out:
        io.dump_json(args.out, payload)
    print(f"method: {method}  converged: {report.converged}  iterations: {report.iterations}")
    print(f"log-likelihood: {report.log_likelihood:.10g}  entropy: {report.entropy:.10g}")
    if report.estimator.dim == 2:
        s = rho_to_bloch(report.estimator)
        print(f"Bloch vector: ({s.s_x:.6f}, {s.s_y:.6f}, {s.s_z:.6f})")
    if note:
        print(note)
    if not report.converged and not args.allow_nonconverged:
        return EXIT_NONCONVERGED
    return EXIT_OK


def _closed_form_report(est, record, pom):
    from .estimate import EstimationReport

    ll = log_likelihood(record, est, pom) if pom.is_perfect else extended_log_likelihood(record, est, pom)
    return EstimationReport(
        estimator=est,
        log_likelihood=ll,
        entropy=von_neumann_entropy(est),
        iterations=0,
        converged=True,
        residual=0.0,
        likelihood_trace=(ll,),
    )


def cmd_estimate_process(args) -> int:
    raw = io.load_json(args.dataset)
    pom_ref = io.dataset_pom_ref(raw)
    pom_path = Path(pom_ref)
    if not pom_path.is_absolute():
        pom_path = Path(args.dataset).parent / pom_path
    pom = io.pom_from_json(io.load_json(pom_path))
    dataset = io.dataset_from_json(raw, pom)
    config = _build_config(args)
    if args.method == "ml":
        report = qpt_ml_estimate(dataset, config)
    else:
        report = qpt_mlme_estimate(dataset, config)
    payload = {
        "method": args.method,
        "dim_in": report.estimator.dim_in,
        "dim_out": report.estimator.dim_out,
        "estimator": io.matrix_to_json(report.estimator.matrix),
        "trace_preserving": report.estimator.trace_preserving,
        "log_likelihood": report.log_likelihood,
        "entropy": report.entropy,
        "iterations": report.iterations,
        "converged": report.converged,
        "residual": report.residual,
        "likelihood_trace": list(report.likelihood_trace),
        "tp_defect_max": report.tp_defect_max,
        "eta_hat": report.eta_hat,
        "n_emitted_estimate": report.n_emitted_estimate,
        "config": _config_echo(config),
    }
    if args.out:
        io.dump_json(args.out, payload)
    print(f"method: {args.method}  converged: {report.converged}  iterations: {report.iterations}")
    print(f"log-likelihood: {report.log_likelihood:.10g}  process entropy: {report.entropy:.10g}")
    if not report.converged and not args.allow_nonconverged:
        return EXIT_NONCONVERGED
    return EXIT_OK


_DISPATCH = {
    "analyze-pom": cmd_analyze_pom,
    "simulate": cmd_simulate,
    "estimate-state": cmd_estimate_state,
    "estimate-process": cmd_estimate_process,
}


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main_entry() -> None:
    sys.exit(main())
