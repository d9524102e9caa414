"""Command-line front door: instance generation, single solves, gap
profiles, circuit compilation, embedding, ensemble benchmarks, and report
post-processing.

Config files are plain ``key = value`` text; values parse as int, float,
bool, or comma-separated lists of those, with ``#`` comments.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import networkx as nx
import numpy as np

from . import __version__
from .adiabatic import (
    adiabatic_time_estimate,
    gap_profile,
    run_adiabatic,
    standard_anneal_path,
    write_gap_profile,
)
from .annealing import QAConfig, SAConfig, append_run_log, quantum_anneal, simulated_anneal
from .bench import (
    QASolver,
    SASolver,
    hamming_tunneling_diagnostic,
    repeats_needed,
    run_ensemble,
    speedup_metrics,
    success_histogram,
)
from .chimera import (
    build_chimera,
    embed_instance,
    embedding_stats,
    find_embedding,
    load_embedding,
    save_embedding,
    validate_embedding,
)
from .clock import clock_hamiltonian, compile_to_path, load_circuit, reduced_toeplitz
from .operators import StateVector, basis_state, lowest_eigenpairs
from .problems import (
    IsingCost,
    IsingInstance,
    brute_force_ground,
    gen_exact_cover,
    gen_spin_glass,
)

__all__ = ["main", "parse_config"]


def parse_config(path) -> dict:
    """key = value file with #-comments; scalars and comma lists."""
    out = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_no}: expected 'key = value'")
        key, _, value = line.partition("=")
        out[key.strip()] = _parse_value(value.strip())
    return out


def _parse_value(text):
    if "," in text:
        return [_parse_value(tok.strip()) for tok in text.split(",") if tok.strip()]
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _edge_set(graph_kind: str, n: int, seed: int):
    if graph_kind == "complete":
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    if graph_kind.startswith("random"):
        p = float(graph_kind.split(":")[1]) if ":" in graph_kind else 0.5
        g = nx.gnp_random_graph(n, p, seed=seed)
        return sorted(tuple(sorted(e)) for e in g.edges)
    if graph_kind == "ring":
        return [(i, (i + 1) % n) for i in range(n - 1)] + ([(0, n - 1)] if n > 2 else [])
    raise ValueError(f"unknown graph kind {graph_kind!r}")


def _cmd_gen(args):
    out = _out_dir(args)
    written = []
    for index in range(args.count):
        seed = args.seed + index
        if args.family == "spin-glass":
            edges = _edge_set(args.graph, args.n, seed)
            inst = gen_spin_glass(args.n, edges, seed=seed)
            path = out / f"instance_{index:03d}.json"
            inst.save(path)
        elif args.family == "exact-cover":
            cost, clauses = gen_exact_cover(args.n, seed=seed)
            path = out / f"exact_cover_{index:03d}.json"
            doc = {
                "format": "exact-cover",
                "n": args.n,
                "clauses": [list(c) for c in clauses],
                "seed": cost.seed,
            }
            path.write_text(json.dumps(doc, indent=2) + "\n")
        else:
            raise ValueError(f"unknown family {args.family!r}")
        written.append(path.name)
        print(f"wrote {path}")
    manifest = out / "manifest.json"
    manifest.write_text(json.dumps({"files": written}, indent=2) + "\n")
    return 0


def _load_instance(path) -> IsingInstance:
    return IsingInstance.load(path)


def _cmd_solve(args):
    out = _out_dir(args)
    inst = _load_instance(args.instance)
    true_min, _ = brute_force_ground(IsingCost(inst)) if inst.n <= 24 else (None, None)
    if args.solver == "sa":
        cfg = SAConfig(sweeps=args.sweeps, seed=args.seed)
        result = simulated_anneal(IsingCost(inst), cfg, true_minimum=true_min)
    elif args.solver == "qa":
        cfg = QAConfig(tau=args.tau, dt=args.dt)
        result = quantum_anneal(inst, cfg, true_minimum=true_min)
    elif args.solver == "adiabatic":
        path = standard_anneal_path(inst)
        run = run_adiabatic(path, tau=args.tau, dt=args.dt, trace_points=0)
        print(f"ground-space success probability: {run.success:.6f}")
        return 0
    elif args.solver == "zeno":
        from .adiabatic import DwellDistribution, zeno_run, zeno_schedule_from_path

        path = standard_anneal_path(inst)
        schedule = zeno_schedule_from_path(
            path, steps=args.zeno_steps, dwell=DwellDistribution("exponential", args.dwell_mean)
        )
        result_z = zeno_run(schedule, rng=args.seed, enforce_dwell=False)
        print(f"zeno fidelity: {result_z.fidelity:.6f} (min gap {result_z.min_gap:.4f})")
        return 0
    else:
        raise ValueError(f"unknown solver {args.solver!r}")
    append_run_log(out / "runs.jsonl", inst, result)
    print(
        f"solver={result.solver} best_energy={result.best_energy:.6f} "
        f"success={result.success} residual={result.residual}"
    )
    return 0


def _cmd_gap(args):
    out = _out_dir(args)
    inst = _load_instance(args.instance)
    path = standard_anneal_path(inst)
    profile = gap_profile(path, grid=args.grid)
    csv_path = out / "gap_profile.csv"
    write_gap_profile(profile, csv_path)
    min_gap, at_s = profile.min_gap()
    estimate = adiabatic_time_estimate(profile)
    print(f"min gap {min_gap:.6f} at s={at_s:.4f}; adiabatic time estimate {estimate:.6f}")
    print(f"wrote {csv_path}")
    return 0


def _cmd_compile_circuit(args):
    out = _out_dir(args)
    circuit = load_circuit(args.circuit)
    ham = clock_hamiltonian(circuit, with_input_penalty=args.penalty)
    hist_input = basis_state(circuit.n_qubits, 0)
    reduced = reduced_toeplitz(circuit, hist_input)
    np.savetxt(out / "reduced_clock_matrix.csv", reduced, delimiter=",")
    spec = lowest_eigenpairs(ham.operator, k=min(4, ham.dim))
    print(f"compiled {circuit.length} gates on {circuit.n_qubits} qubits; dim {ham.dim}")
    print(f"lowest eigenvalues: {np.round(spec.eigenvalues, 10).tolist()}")
    if args.path:
        path = compile_to_path(circuit)
        profile = gap_profile(path, grid=args.grid)
        write_gap_profile(profile, out / "compiled_path_profile.csv")
        min_gap, at_s = profile.min_gap()
        print(f"compiled path min gap {min_gap:.6f} at s={at_s:.4f}")
    return 0


def _cmd_embed(args):
    out = _out_dir(args)
    hw = build_chimera(args.rows, args.cols)
    inst = _load_instance(args.instance)
    logical = nx.Graph()
    logical.add_nodes_from(range(inst.n))
    logical.add_edges_from(inst.edges())
    if args.validate:
        emb, _dims = load_embedding(args.validate)
        problems = validate_embedding(emb, logical, hw)
        if problems:
            for p in problems:
                print(f"INVALID: {p}")
            return 1
        print("embedding valid")
        return 0
    emb = find_embedding(logical, hw, seed=args.seed)
    emb_path = out / "embedding.txt"
    save_embedding(emb, emb_path, hw=hw)
    stats = embedding_stats(emb, logical)
    embedded = embed_instance(inst, emb, hw, chain_strength=args.chain_strength)
    embedded.instance.save(out / "physical_instance.json")
    print(
        f"embedded {stats['logical_vertices']} vertices into "
        f"{stats['physical_used']} qubits (|G|^2 guidance {stats['square_guidance']}); "
        f"max chain {stats['max_chain_length']}"
    )
    print(f"wrote {emb_path}")
    return 0


def _cmd_bench(args):
    out = _out_dir(args)
    cfg = parse_config(args.config) if args.config else {}
    n = int(cfg.get("n", 6))
    count = int(cfg.get("count", 8))
    runs = int(cfg.get("runs", 20))
    graph_kind = cfg.get("graph", "complete")
    sweeps = int(cfg.get("sweeps", 200))
    tau = float(cfg.get("tau", 20.0))
    dt = float(cfg.get("dt", 0.05))
    solvers_cfg = cfg.get("solvers", ["sa", "qa"])
    if isinstance(solvers_cfg, str):
        solvers_cfg = [solvers_cfg]
    instances = [
        gen_spin_glass(n, _edge_set(graph_kind, n, args.seed + i), seed=args.seed + i)
        for i in range(count)
    ]
    for i, inst in enumerate(instances):
        inst.save(out / f"instance_{i:03d}.json")
    reports = {}
    for name in solvers_cfg:
        if name == "sa":
            solver = SASolver(SAConfig(sweeps=sweeps))
        elif name == "qa":
            solver = QASolver(QAConfig(tau=tau, dt=dt))
        else:
            raise ValueError(f"unknown bench solver {name!r}")
        report = run_ensemble(
            solver, instances, runs=runs, master_seed=args.seed, threads=args.threads
        )
        reports[name] = report
        _write_summary(out / f"summary_{name}.csv", report)
        with open(out / f"runs_{name}.jsonl", "w") as fh:
            for rec in report.records:
                fh.write(
                    json.dumps(
                        {
                            "instance": rec.instance_id,
                            "run": rec.run_index,
                            "seed": rec.seed,
                            "best_energy": rec.best_energy,
                            "success": rec.success,
                            "sim_cost": rec.sim_cost,
                            "wall_time": rec.wall_time,
                        }
                    )
                    + "\n"
                )
        print(f"{name}: mean success {np.mean([e.s for e in report.entries]):.4f}")
    if len(reports) == 2:
        a, b = (reports[k] for k in solvers_cfg[:2])
        speedup = speedup_metrics(a, b, s0=float(cfg.get("s0", 0.5)))
        (out / "speedup.json").write_text(
            json.dumps(
                {
                    "solver_a": solvers_cfg[0],
                    "solver_b": solvers_cfg[1],
                    "s0": speedup.s0,
                    "quotient_of_quantiles": speedup.quotient_of_quantiles,
                    "quantile_of_quotient": speedup.quantile_of_quotient,
                    "excluded_instances": speedup.excluded_instances,
                },
                indent=2,
            )
            + "\n"
        )
        print(
            f"speedup {solvers_cfg[0]}/{solvers_cfg[1]}: "
            f"QQ={speedup.quotient_of_quantiles:.4f} QoQ={speedup.quantile_of_quotient:.4f}"
        )
    return 0


def _write_summary(path, report):
    with open(path, "w") as fh:
        fh.write("instance_id,solver,runs,successes,s,t_a\n")
        for e in report.entries:
            fh.write(f"{e.instance_id},{report.solver_id},{e.runs},{e.successes},{e.s!r},{e.t_a!r}\n")


def _read_summary(path):
    from .bench import InstanceStats, SolverReport

    entries = []
    solver_id = "solver"
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header != ["instance_id", "solver", "runs", "successes", "s", "t_a"]:
            raise ValueError(f"unexpected summary header in {path}")
        for line in fh:
            instance_id, solver_id, runs, successes, s, t_a = line.strip().split(",")
            entries.append(
                InstanceStats(
                    instance_id=instance_id,
                    runs=int(runs),
                    successes=int(successes),
                    s=float(s),
                    t_a=float(t_a),
                )
            )
    return SolverReport(solver_id=solver_id, entries=tuple(entries))


def _cmd_report(args):
    out = _out_dir(args)
    report_a = _read_summary(args.summary_a)
    lines = []
    hist = success_histogram(report_a, bins=args.bins)
    lines.append("metric,value")
    if hist.bimodality is None:
        lines.append(f"bimodality_{report_a.solver_id},undefined:{hist.undefined_reason}")
    else:
        lines.append(f"bimodality_{report_a.solver_id},{hist.bimodality!r}")
    hist_path = out / "histogram.csv"
    with open(hist_path, "w") as fh:
        fh.write("bin_left,bin_right,count\n")
        for i, c in enumerate(hist.counts):
            fh.write(f"{float(hist.bin_edges[i])!r},{float(hist.bin_edges[i + 1])!r},{int(c)}\n")
    if args.summary_b:
        report_b = _read_summary(args.summary_b)
        speedup = speedup_metrics(report_a, report_b, s0=args.s0)
        lines.append(f"quotient_of_quantiles,{speedup.quotient_of_quantiles!r}")
        lines.append(f"quantile_of_quotient,{speedup.quantile_of_quotient!r}")
        lines.append(f"excluded_instances,{speedup.excluded_instances}")
    metrics_path = out / "metrics.csv"
    metrics_path.write_text("\n".join(lines) + "\n")
    print(f"wrote {hist_path} and {metrics_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aqlab",
        description="Desk-scale adiabatic quantum computation and annealing laboratory",
    )
    parser.add_argument("--version", action="version", version=f"aqlab {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed")
    common.add_argument("--config", default=None, help="key = value config file")
    common.add_argument("--out", default="aqlab_out", help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker processes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate instance files")
    p.add_argument("--family", choices=["spin-glass", "exact-cover"], default="spin-glass")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--graph", default="complete", help="complete | ring | random[:p]")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("solve", parents=[common], help="run one solver on one instance")
    p.add_argument("--solver", choices=["sa", "qa", "adiabatic", "zeno"], required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--tau", type=float, default=20.0)
    p.add_argument("--dt", type=float, default=0.02)
    p.add_argument("--zeno-steps", type=int, default=32)
    p.add_argument("--dwell-mean", type=float, default=10.0)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("gap", parents=[common], help="spectral-gap profile of an instance path")
    p.add_argument("--instance", required=True)
    p.add_argument("--grid", type=int, default=65)
    p.set_defaults(func=_cmd_gap)

    p = sub.add_parser("compile-circuit", parents=[common], help="circuit -> clock Hamiltonian")
    p.add_argument("--circuit", required=True)
    p.add_argument("--penalty", action="store_true", help="add the input penalty")
    p.add_argument("--path", action="store_true", help="also profile the compiled path")
    p.add_argument("--grid", type=int, default=33)
    p.set_defaults(func=_cmd_compile_circuit)

    p = sub.add_parser("embed", parents=[common], help="minor-embed an instance into Chimera")
    p.add_argument("--instance", required=True)
    p.add_argument("--rows", type=int, default=4)
    p.add_argument("--cols", type=int, default=4)
    p.add_argument("--chain-strength", type=float, default=None)
    p.add_argument("--validate", default=None, help="validate an embedding file instead")
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("bench", parents=[common], help="config-driven ensemble benchmark")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("report", parents=[common], help="metrics from summary CSVs")
    p.add_argument("--summary-a", required=True)
    p.add_argument("--summary-b", default=None)
    p.add_argument("--s0", type=float, default=0.5)
    p.add_argument("--bins", type=int, default=20)
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
