"""Command line front end.

Every subcommand emits a single JSON document with a provenance header
(seed, version, echoed config) and a result block; itineraries and sweep
tables can be written as CSV instead.  Output is deterministic for a fixed
seed and config.  Exit codes: 0 ok, 1 configuration error, 2 numeric error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from . import dimension as dim
from . import markov, shift, thermo, trajectory
from .fields import (
    HigherOrderTangencyError,
    SlidingRegionError,
    canonical_field,
    classify_boundary_point,
)
from .graphs import builtin_graph, graph_from_json, graph_to_json, truncation_to_dot
from .trajectory import IntegrationError

SEED_ENV = "PWSHIFT_SEED"


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def _load_graph(spec: str):
    if spec.endswith(".json") or os.path.sep in spec:
        with open(spec) as fh:
            return graph_from_json(json.load(fh))
    return builtin_graph(spec)


def _load_potential(spec: str, graph):
    if spec == "zero":
        return thermo.zero_potential()
    if spec in ("neg-log-first", "neg_log_first"):
        return thermo.neg_log_first_potential(graph)
    if spec.endswith(".json") or os.path.sep in spec:
        with open(spec) as fh:
            return thermo.potential_from_json(json.load(fh), graph=graph)
    raise ValueError(f"unknown potential {spec!r}")


def _provenance(command: str, seed: int, config: dict) -> dict:
    return {
        "tool": "pwshift",
        "version": __version__,
        "command": command,
        "seed": seed,
        "config": config,
    }


def _emit(doc: dict, output: Optional[str]) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2, allow_nan=True) + "\n"
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_csv(rows, output: Optional[str], provenance: dict) -> None:
    lines = [",".join(str(v) for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    meta = json.dumps(provenance, sort_keys=True, indent=2) + "\n"
    if output:
        with open(output, "w") as fh:
            fh.write(text)
        with open(output + ".meta.json", "w") as fh:
            fh.write(meta)
    else:
        sys.stdout.write(text)
        sys.stderr.write(meta)


def _clean(value):
    """JSON-safe copy: tuples to lists, numpy scalars to floats, non-finite to strings."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (np.floating, float)):
        f = float(value)
        return f if math.isfinite(f) else repr(f)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    return value


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_simulate(args) -> int:
    if args.graph != "z-infinity":
        raise ValueError("simulate works on the canonical field; use --graph z-infinity")
    rng = np.random.default_rng(args.seed)
    trajectories = []
    for _ in range(args.samples):
        choices = rng.random(args.len) < args.p_up
        trajectories.append(trajectory.build_trajectory(args.start, choices.tolist()))
    config = {"graph": args.graph, "samples": args.samples, "len": args.len,
              "p_up": args.p_up, "start": args.start}
    prov = _provenance("simulate", args.seed, config)
    if args.format == "csv":
        _emit_csv([trajectory.itinerary(t) for t in trajectories], args.output, prov)
    else:
        doc = {"provenance": prov,
               "result": {"trajectories": [trajectory.trajectory_to_json(t)
                                           for t in trajectories]}}
        _emit(_clean(doc), args.output)
    return 0


def _cmd_classify(args) -> int:
    field = canonical_field()
    xs = np.linspace(args.x_from, args.x_to, args.count)
    rows = []
    for x in xs:
        entry = {"x": float(x), "y": 0.0}
        try:
            cls = classify_boundary_point(field, (float(x), 0.0))
            entry.update({"kind": cls.kind, "fold_kind": cls.fold_kind,
                          "side": cls.side, "visible": cls.visible})
        except (HigherOrderTangencyError, SlidingRegionError) as exc:
            entry.update({"kind": "unclassified", "error": str(exc)})
        rows.append(entry)
    config = {"field": "z-infinity", "x_from": args.x_from, "x_to": args.x_to,
              "count": args.count}
    doc = {"provenance": _provenance("classify", args.seed, config),
           "result": {"points": rows}}
    _emit(_clean(doc), args.output)
    return 0


def _schedule(q: int) -> list[int]:
    out = []
    step = max(4, q // 16)
    cur = step
    while cur < q:
        out.append(cur)
        cur *= 2
    out.append(q)
    return out


def _cmd_entropy(args) -> int:
    graph = _load_graph(args.graph)
    schedule = ([int(v) for v in args.q_schedule.split(",")]
                if args.q_schedule else _schedule(args.q))
    sweep = shift.gurevich_entropy(graph, schedule, slope_n=args.slope_n)
    steps = [{"q": s.q, "n_states": s.n_states, "entropy": s.entropy,
              "radius": s.radius_estimate, "method": s.method,
              "period": s.period, "slope": s.slope} for s in sweep.steps]
    config = {"graph": args.graph, "q_schedule": schedule, "slope_n": args.slope_n}
    prov = _provenance("entropy", args.seed, config)
    if args.format == "csv":
        rows = [("q", "n_states", "entropy", "slope")]
        rows += [(s.q, s.n_states, s.entropy, s.slope if s.slope is not None else "")
                 for s in sweep.steps]
        _emit_csv(rows, args.output, prov)
    else:
        doc = {"provenance": prov,
               "result": {"steps": steps, "entropy": sweep.entropy,
                          "monotone": sweep.monotone}}
        _emit(_clean(doc), args.output)
    return 0


def _cmd_pressure(args) -> int:
    graph = _load_graph(args.graph)
    trunc = graph.truncate(args.q if args.q is not None else
                           (graph.n_states - 1 if graph.n_states else 64))
    psi = _load_potential(args.potential, graph)
    base = trunc.states[0] if args.base is None else args.base
    est = thermo.gurevich_pressure(psi, base, args.n_max, trunc)
    result = {
        "base": est.base, "n": list(est.n_values), "values": list(est.values),
        "ratio_values": list(est.ratio_values), "estimate": est.estimate,
        "cesaro_last_third": est.cesaro_last_third, "alt_base": est.alt_base,
        "alt_estimate": est.alt_estimate, "base_gap": est.base_gap,
        "mixing": est.mixing, "period": est.period, "n_states": est.n_states,
        "spectral": thermo.pressure_spectral(psi, trunc),
    }
    config = {"graph": args.graph, "potential": args.potential, "q": trunc.q,
              "base": base, "n_max": args.n_max}
    prov = _provenance("pressure", args.seed, config)
    if args.format == "csv":
        rows = [("n", "value", "ratio")]
        for i, n in enumerate(est.n_values):
            ratio = est.ratio_values[i] if i < len(est.ratio_values) else ""
            rows.append((n, est.values[i], ratio))
        _emit_csv(rows, args.output, prov)
    else:
        _emit(_clean({"provenance": prov, "result": result}), args.output)
    return 0


def _cmd_recurrence(args) -> int:
    graph = _load_graph(args.graph)
    trunc = graph.truncate(args.q if args.q is not None else
                           (graph.n_states - 1 if graph.n_states else 64))
    base = trunc.states[0] if args.base is None else args.base
    rep = thermo.recurrence_report(base, trunc, n_max=args.n_max)
    result = {
        "base": rep.base, "n": list(rep.n_values),
        "first_return_sums": list(rep.first_return_sums),
        "d_infinity": rep.d_infinity, "entropy": rep.entropy,
        "strongly_positive_recurrent": rep.strongly_positive_recurrent,
    }
    config = {"graph": args.graph, "q": trunc.q, "base": base, "n_max": args.n_max}
    _emit(_clean({"provenance": _provenance("recurrence", args.seed, config),
                  "result": result}), args.output)
    return 0


def _cmd_mixing(args) -> int:
    if args.kernel:
        with open(args.kernel) as fh:
            kernel = markov.kernel_from_json(json.load(fh))
        ratio = (1.0 - args.p_up) / args.p_up
    else:
        kernel = markov.reflecting_walk_kernel(args.states, args.p_up)
        ratio = (1.0 - args.p_up) / args.p_up
    values = markov.geometric_drift_values(kernel, ratio)
    cert = markov.verify_lyapunov_drift(kernel, values, kernel.states[0], args.drift)
    if not cert.valid:
        raise RuntimeError(
            f"drift certificate invalid: tight drift {cert.tight_drift:.6f} "
            f"exceeds proposed {args.drift} (worst state {cert.worst_state})")
    curve = markov.mixing_comparison(kernel, cert, args.eta, kernel.states[0], args.m_max)
    result = {
        "certificate": {
            "base_state": cert.base_state, "drift": cert.drift,
            "tight_drift": cert.tight_drift, "valid": cert.valid,
            "base_self_loop": cert.base_self_loop,
        },
        "curve": curve,
    }
    config = {"states": args.states, "p_up": args.p_up, "drift": args.drift,
              "eta": args.eta, "m_max": args.m_max, "kernel": args.kernel}
    _emit(_clean({"provenance": _provenance("mixing", args.seed, config),
                  "result": result}), args.output)
    return 0


def _cmd_dimension(args) -> int:
    graph = _load_graph(args.graph)
    m_schedule = [int(v) for v in args.m_schedule.split(",")]
    q_schedule = [int(v) for v in args.q_schedule.split(",")]
    inf_est = dim.entropy_at_infinity(graph, m_schedule, q_schedule, args.n_max)
    sweep = shift.gurevich_entropy(graph, [max(q_schedule)])
    h_graph = sweep.entropy

    rng = np.random.default_rng(args.seed)
    if graph.name == "z-infinity":
        samples, _, _ = markov.sample_arc_itineraries(
            markov.inward_bias(), args.sample_len, args.samples, rng)
    elif graph.name.startswith("full:"):
        n_letters = graph.n_states
        p = np.full(n_letters, 1.0 / n_letters)
        samples = markov.sample_bernoulli_sequences(
            p, args.sample_len, args.samples, rng,
            letters=[graph.state_of_rank(r) for r in range(n_letters)])
    else:
        trunc = graph.truncate(160)
        kernel = _biased_step_kernel(trunc)
        pi = markov.stationary_distribution(kernel)
        samples = markov.sample_markov_sequences(kernel, pi, args.sample_len,
                                                 args.samples, rng)
    box = dim.box_counting_dimension(samples, scale_exponents=list(range(1, args.scales + 1)))

    trunc = graph.truncate(max(q_schedule))
    rep = thermo.recurrence_report(trunc.states[0], trunc, n_max=args.n_max)
    h_inf = inf_est.estimate if math.isfinite(inf_est.estimate) else h_graph
    bounds = dim.hausdorff_dimension_bounds(h_graph, h_inf,
                                            rep.strongly_positive_recurrent)
    z_rows = [{"M": m_c, "q": q, "n": n + 1, "z": z}
              for (m_c, q), zs in sorted(inf_est.counts.items())
              for n, z in enumerate(zs)]
    result = {
        "z_table": z_rows,
        "growth": {f"{m_c},{q}": v for (m_c, q), v in inf_est.table.items()},
        "per_q": {str(q): v for q, v in inf_est.per_q.items()},
        "h_infinity_estimate": inf_est.estimate,
        "working_cutoff_hit": inf_est.truncated,
        "h_graph": h_graph,
        "bounds": bounds,
        "box": {"scales": list(box.scales), "counts": list(box.counts),
                "slope": box.slope, "note": box.note},
    }
    config = {"graph": args.graph, "m_schedule": m_schedule, "q_schedule": q_schedule,
              "n_max": args.n_max, "samples": args.samples,
              "sample_len": args.sample_len, "scales": args.scales}
    prov = _provenance("dimension", args.seed, config)
    if args.format == "csv":
        rows = [("M", "q", "n", "z")]
        rows += [(r["M"], r["q"], r["n"], r["z"]) for r in z_rows]
        _emit_csv(rows, args.output, prov)
    else:
        _emit(_clean({"provenance": prov, "result": result}), args.output)
    return 0


def _biased_step_kernel(trunc):
    bias = markov.inward_bias()
    m = np.zeros((trunc.n, trunc.n))
    index = {s: i for i, s in enumerate(trunc.states)}
    for i, s in enumerate(trunc.states):
        up, down = s + 1, s - 1
        p = bias(s)
        mass = 0.0
        if up in index:
            m[i, index[up]] = p
            mass += p
        if down in index:
            m[i, index[down]] = 1 - p
            mass += 1 - p
        if mass == 0:
            m[i, i] = 1.0
        elif mass < 1.0:
            m[i] /= mass
    return markov.StochasticKernel(states=trunc.states, matrix=m)


def _cmd_export_graph(args) -> int:
    graph = _load_graph(args.graph)
    trunc = graph.truncate(args.q)
    if args.fmt == "dot":
        text = truncation_to_dot(trunc)
        if args.output:
            with open(args.output, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    else:
        doc = {"provenance": _provenance("export-graph", args.seed,
                                         {"graph": args.graph, "q": args.q}),
               "result": graph_to_json(trunc)}
        _emit(_clean(doc), args.output)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pwshift", exit_on_error=False)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=_default_seed())
        p.add_argument("--output", default=None)
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("simulate", exit_on_error=False)
    common(p)
    p.add_argument("--graph", default="z-infinity")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--len", type=int, default=64)
    p.add_argument("--p-up", dest="p_up", type=float, default=0.5)
    p.add_argument("--start", type=int, default=0)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("classify", exit_on_error=False)
    common(p)
    p.add_argument("--x-from", dest="x_from", type=float, default=-2.0)
    p.add_argument("--x-to", dest="x_to", type=float, default=2.0)
    p.add_argument("--count", type=int, default=17)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("entropy", exit_on_error=False)
    common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--q", type=int, default=100)
    p.add_argument("--q-schedule", dest="q_schedule", default=None)
    p.add_argument("--slope-n", dest="slope_n", type=int, default=None)
    p.set_defaults(func=_cmd_entropy)

    p = sub.add_parser("pressure", exit_on_error=False)
    common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--potential", default="zero")
    p.add_argument("--base", type=int, default=None)
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--n-max", dest="n_max", type=int, default=30)
    p.set_defaults(func=_cmd_pressure)

    p = sub.add_parser("recurrence", exit_on_error=False)
    common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--base", type=int, default=None)
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--n-max", dest="n_max", type=int, default=30)
    p.set_defaults(func=_cmd_recurrence)

    p = sub.add_parser("mixing", exit_on_error=False)
    common(p)
    p.add_argument("--kernel", default=None)
    p.add_argument("--states", type=int, default=201)
    p.add_argument("--p-up", dest="p_up", type=float, default=0.3)
    p.add_argument("--drift", type=float, default=0.92)
    p.add_argument("--eta", type=float, default=0.95)
    p.add_argument("--m-max", dest="m_max", type=int, default=200)
    p.set_defaults(func=_cmd_mixing)

    p = sub.add_parser("dimension", exit_on_error=False)
    common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--m-schedule", dest="m_schedule", default="1,2,3")
    p.add_argument("--q-schedule", dest="q_schedule", default="2,4,8")
    p.add_argument("--n-max", dest="n_max", type=int, default=18)
    p.add_argument("--samples", type=int, default=4000)
    p.add_argument("--sample-len", dest="sample_len", type=int, default=24)
    p.add_argument("--scales", type=int, default=5)
    p.set_defaults(func=_cmd_dimension)

    p = sub.add_parser("export-graph", exit_on_error=False)
    common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--q", type=int, default=16)
    p.add_argument("--fmt", choices=("dot", "json"), default="json")
    p.set_defaults(func=_cmd_export_graph)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except argparse.ArgumentError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return 1
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return 1
    except (ArithmeticError, RuntimeError, IntegrationError) as exc:
        sys.stderr.write(f"numeric error in {args.command}: {exc}\n")
        return 2


def console_main() -> None:
    sys.exit(main())
