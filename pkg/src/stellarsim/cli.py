"""Command-line driver.

Subcommands: ``exact``, ``estimate``, ``sweep-xi``, ``strongsim``,
``qsample``, ``hafnian``.  Every randomized command requires ``--seed`` and
produces byte-identical output for identical (config, seed); random numbers
come from numpy's default PCG64 generator.

Exit codes: 0 success, 1 malformed input, 2 computation failure,
3 precision failure (attenuation parameters or cutoffs out of reach).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import (
    CutoffTooSmallError,
    ParseError,
    StellarSimError,
    UnderflowRiskError,
)
from .fock import CoreState
from .gadget import GadgetPlan, choose_xi
from .gaussian import GaussianCircuit, ProjectorSpec, Squeeze, haar_unitary
from .numerics import hafnian, loop_hafnian
from .qsample import SeparableDecomposition, sample_separable
from .sampler import (
    InputState,
    bs_probability,
    build_sampler,
    estimate_probability,
    exact_probability,
    fock_outcome,
    gbs_probability,
    strong_simulate,
)

DEFAULT_CUTOFF = 10

__all__ = ["main"]


# ----------------------------------------------------------------------
# File formats (parsers and writers round-trip through each other)
# ----------------------------------------------------------------------


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}", field=f"line {exc.lineno}") from exc


def parse_instance(data: dict) -> dict:
    """Validate an instance file into input, outcome, and run parameters."""
    if "input" not in data:
        raise ParseError("instance needs an input state", field="input")
    if "outcome" not in data:
        raise ParseError("instance needs an outcome list", field="outcome")
    try:
        input_state = InputState.from_json_dict(data["input"])
    except KeyError as exc:
        raise ParseError(f"input is missing {exc}", field="input") from exc
    outcome = []
    for i, spec in enumerate(data["outcome"]):
        try:
            outcome.append(ProjectorSpec.from_json_dict(spec))
        except (TypeError, KeyError) as exc:
            raise ParseError(f"bad projector spec: {exc}", field=f"outcome[{i}]") from exc
    if len(outcome) != input_state.modes:
        raise ParseError(
            f"{len(outcome)} projectors for {input_state.modes} input modes",
            field="outcome",
        )
    xi_mode = data.get("xi_mode", "auto")
    if xi_mode not in ("auto", "uniform"):
        raise ParseError(f"xi_mode must be 'auto' or 'uniform', got {xi_mode!r}", field="xi_mode")
    if xi_mode == "uniform" and "xi" not in data:
        raise ParseError("uniform xi_mode needs an 'xi' value", field="xi")
    return {
        "input": input_state,
        "outcome": outcome,
        "epsilon": data.get("epsilon"),
        "xi_mode": xi_mode,
        "xi": data.get("xi"),
        "cutoff": int(data.get("cutoff", DEFAULT_CUTOFF)),
    }


def format_result(
    p_exact: float | None,
    p_estimate: float | None,
    bound_epsilon: float | None,
    xi_used: list[float] | None,
    extra: dict | None = None,
) -> str:
    obj = {
        "p_exact": p_exact,
        "p_estimate": p_estimate,
        "bound_epsilon": bound_epsilon,
        "xi_used": xi_used,
    }
    if extra:
        obj["diagnostics"] = extra
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def parse_result(text: str) -> dict:
    data = json.loads(text)
    for key in ("p_exact", "p_estimate", "bound_epsilon", "xi_used"):
        if key not in data:
            raise ParseError("result file is missing a field", field=key)
    return data


SWEEP_COLUMNS = ("instance", "protocol", "xi", "p_exact", "p_estimate", "mult_error")


def format_sweep_csv(rows: list[dict]) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        lines.append(
            ",".join(
                [
                    str(row["instance"]),
                    row["protocol"],
                    repr(float(row["xi"])),
                    repr(float(row["p_exact"])),
                    repr(float(row["p_estimate"])),
                    repr(float(row["mult_error"])),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def parse_sweep_csv(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != ",".join(SWEEP_COLUMNS):
        raise ParseError("sweep CSV header mismatch", field="header")
    rows = []
    for i, ln in enumerate(lines[1:]):
        parts = ln.split(",")
        if len(parts) != len(SWEEP_COLUMNS):
            raise ParseError(f"row has {len(parts)} columns", field=f"row {i + 1}")
        rows.append(
            {
                "instance": int(parts[0]),
                "protocol": parts[1],
                "xi": float(parts[2]),
                "p_exact": float(parts[3]),
                "p_estimate": float(parts[4]),
                "mult_error": float(parts[5]),
            }
        )
    return rows


QSAMPLE_COLUMNS = ("sample_index", "mode", "re", "im", "label")


def format_qsample_csv(samples: np.ndarray, labels: np.ndarray) -> str:
    lines = [",".join(QSAMPLE_COLUMNS)]
    for s in range(samples.shape[0]):
        for k in range(samples.shape[1]):
            val = complex(samples[s, k])
            lines.append(f"{s},{k},{val.real!r},{val.imag!r},{int(labels[s])}")
    return "\n".join(lines) + "\n"


def parse_qsample_csv(text: str) -> tuple[np.ndarray, np.ndarray]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != ",".join(QSAMPLE_COLUMNS):
        raise ParseError("qsample CSV header mismatch", field="header")
    records: dict[int, dict[int, complex]] = {}
    labels: dict[int, int] = {}
    for ln in lines[1:]:
        s, k, re, im, lab = ln.split(",")
        records.setdefault(int(s), {})[int(k)] = complex(float(re), float(im))
        labels[int(s)] = int(lab)
    n = len(records)
    modes = len(records[0])
    samples = np.zeros((n, modes), dtype=np.complex128)
    for s, row in records.items():
        for k, v in row.items():
            samples[s, k] = v
    return samples, np.array([labels[s] for s in range(n)])


def _parse_matrix(data: dict) -> np.ndarray:
    if "re" not in data:
        raise ParseError("matrix file needs a real part", field="re")
    re = np.asarray(data["re"], dtype=float)
    if re.size == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
    if re.shape != im.shape:
        raise ParseError("re and im shapes differ", field="im")
    return re + 1j * im


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


# ----------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------


def _make_plan(inst: dict, epsilon_override: float | None) -> tuple[GadgetPlan, float | None]:
    epsilon = epsilon_override if epsilon_override is not None else inst["epsilon"]
    if inst["xi_mode"] == "uniform":
        plan = GadgetPlan.uniform(inst["outcome"], float(inst["xi"]))
        return plan, None
    if epsilon is None:
        raise ParseError("auto xi_mode needs an epsilon (file or --epsilon)", field="epsilon")
    return choose_xi(inst["outcome"], float(epsilon)), float(epsilon)


def cmd_exact(args) -> int:
    inst = parse_instance(_load_json(args.instance))
    cutoff = args.cutoff or inst["cutoff"]
    p = exact_probability(inst["input"], inst["outcome"], cutoff)
    _emit(format_result(p, None, None, None), args.out)
    return 0


def cmd_estimate(args) -> int:
    inst = parse_instance(_load_json(args.instance))
    cutoff = args.cutoff or inst["cutoff"]
    plan, bound = _make_plan(inst, args.epsilon)
    setup = build_sampler(inst["input"], inst["outcome"], plan)
    p_est = estimate_probability(setup, cutoff)
    p_ex = exact_probability(inst["input"], inst["outcome"], cutoff)
    _emit(format_result(p_ex, p_est, bound, plan.flat()), args.out)
    return 0


def cmd_strongsim(args) -> int:
    inst = parse_instance(_load_json(args.instance))
    epsilon = args.epsilon if args.epsilon is not None else inst["epsilon"]
    if epsilon is None:
        raise ParseError("strongsim needs an epsilon (file or --epsilon)", field="epsilon")
    result = strong_simulate(
        inst["input"], inst["outcome"], float(epsilon), args.rank_budget
    )
    _emit(
        format_result(
            None,
            result.probability,
            2.0 * float(epsilon),
            result.plan.flat(),
            extra={
                "term_count": result.term_count,
                "max_matrix_dim": result.max_matrix_dim,
                "rank_used": result.rank_used,
                "truncation_fidelity": result.truncation_fidelity,
            },
        ),
        args.out,
    )
    return 0


def _sweep_instance(protocol: str, m: int, n: int, squeezing: float, rng) -> tuple:
    unitary = haar_unitary(m, rng)
    if protocol == "bs":
        input_state = InputState(CoreState.fock([1] * n + [0] * (m - n)), interferometer=unitary)
    else:
        circuit = GaussianCircuit(m, tuple(Squeeze(squeezing, k) for k in range(m)))
        input_state = InputState(CoreState.vacuum(m), circuit=circuit, interferometer=unitary)
    redraws = 0
    while True:
        modes = sorted(rng.choice(m, size=n, replace=False))
        occupation = [1 if k in modes else 0 for k in range(m)]
        if protocol == "bs":
            p_exact = bs_probability(unitary, [1] * n + [0] * (m - n), occupation)
        else:
            p_exact = gbs_probability(input_state, occupation)
        if p_exact >= 1e-12:
            return input_state, occupation, p_exact, redraws
        redraws += 1


def cmd_sweep_xi(args) -> int:
    if args.seed is None:
        raise ParseError("sweep-xi is randomized and requires --seed", field="seed")
    if args.modes > 6 or args.photons > 3:
        raise ParseError("desk scale only: modes <= 6 and photons <= 3", field="modes")
    if args.protocol == "gbs" and args.photons % 2:
        raise ParseError("gbs outcomes need an even photon total", field="photons")
    xis = [float(x) for x in args.xi_list.split(",") if x]
    if not xis:
        raise ParseError("empty xi list", field="xi-list")
    cutoff = args.cutoff or (args.photons + 4 if args.protocol == "bs" else 12)
    rng = np.random.default_rng(args.seed)
    rows = []
    total_redraws = 0
    for inst in range(args.instances):
        input_state, occupation, p_exact, redraws = _sweep_instance(
            args.protocol, args.modes, args.photons, args.squeezing, rng
        )
        total_redraws += redraws
        outcome = fock_outcome(occupation)
        for xi in xis:
            plan = GadgetPlan.uniform(outcome, xi)
            setup = build_sampler(input_state, outcome, plan)
            p_est = estimate_probability(setup, cutoff)
            rows.append(
                {
                    "instance": inst,
                    "protocol": args.protocol,
                    "xi": xi,
                    "p_exact": p_exact,
                    "p_estimate": p_est,
                    "mult_error": abs(p_est - p_exact) / p_exact,
                }
            )
    if total_redraws:
        print(f"redrew {total_redraws} outcomes below the 1e-12 division guard", file=sys.stderr)
    rows.sort(key=lambda r: (r["instance"], r["xi"]))
    _emit(format_sweep_csv(rows), args.out)
    if args.plot:
        from .figures import render_sweep_figure

        render_sweep_figure(rows, args.plot)
    return 0


def cmd_qsample(args) -> int:
    if args.seed is None:
        raise ParseError("qsample is randomized and requires --seed", field="seed")
    try:
        dec = SeparableDecomposition.from_json_dict(_load_json(args.decomposition))
    except KeyError as exc:
        raise ParseError(f"decomposition is missing {exc}", field="labels") from exc
    samples, labels = sample_separable(dec, args.samples, args.seed)
    _emit(format_qsample_csv(samples, labels), args.out)
    return 0


def cmd_hafnian(args) -> int:
    matrix = _parse_matrix(_load_json(args.matrix))
    value = loop_hafnian(matrix) if args.loops else hafnian(matrix)
    _emit(
        json.dumps({"value": {"re": value.real, "im": value.imag}}, indent=2, sort_keys=True)
        + "\n",
        args.out,
    )
    return 0


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stellarsim",
        description="Coherent-state sampler reductions of small bosonic computations.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master random seed")
    common.add_argument("--cutoff", type=int, default=None, help="per-mode Fock cutoff")
    common.add_argument("--epsilon", type=float, default=None, help="accuracy target")
    common.add_argument("--out", type=str, default=None, help="output path (default stdout)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact", parents=[common], help="exact outcome probability")
    p.add_argument("instance", help="instance JSON file")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("estimate", parents=[common], help="coherent-sampler estimate")
    p.add_argument("instance", help="instance JSON file")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("strongsim", parents=[common], help="loop-hafnian strong simulation")
    p.add_argument("instance", help="instance JSON file")
    p.add_argument("--rank-budget", type=int, default=4, help="input stellar-rank budget")
    p.set_defaults(func=cmd_strongsim)

    p = sub.add_parser("sweep-xi", parents=[common], help="estimate-quality sweep over xi")
    p.add_argument("--protocol", choices=("bs", "gbs"), required=True)
    p.add_argument("--modes", type=int, required=True, help="interferometer modes (<= 6)")
    p.add_argument("--photons", type=int, required=True, help="photon number (<= 3)")
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--squeezing", type=float, default=0.3, help="gbs per-mode squeezing")
    p.add_argument("--xi-list", type=str, default="1e-1,1e-2,1e-3", help="comma-separated xi values")
    p.add_argument("--plot", type=str, default=None, help="also render a log-log figure here")
    p.set_defaults(func=cmd_sweep_xi)

    p = sub.add_parser("qsample", parents=[common], help="Q-function sampling")
    p.add_argument("decomposition", help="separable decomposition JSON file")
    p.add_argument("--samples", type=int, default=1000)
    p.set_defaults(func=cmd_qsample)

    p = sub.add_parser("hafnian", parents=[common], help="hafnian of a matrix file")
    p.add_argument("matrix", help="matrix JSON file")
    p.add_argument("--loops", action="store_true", help="loop hafnian instead")
    p.set_defaults(func=cmd_hafnian)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 1
    except (UnderflowRiskError, CutoffTooSmallError) as exc:
        print(f"precision error: {exc}", file=sys.stderr)
        return 3
    except (StellarSimError, ValueError) as exc:
        print(f"compute error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
