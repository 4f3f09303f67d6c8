"""Command-line entry point.

Exit codes: 0 ok, 2 input error, 3 capacity error, 4 mechanism Fail, 1 replay mismatch.
Every command appends one record to ``<out>/runs.jsonl``.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import audit as A
from .config import ExperimentConfig, build_config, load_config_file
from .data_io import read_dataset, write_dataset
from .errors import CapacityError, InputError, UnsupportedError
from .mechanisms import exponential_mechanism_baseline, excess_error, rspm, rspm_gaussian
from .oracles import CertifiableOracle, FailurePolicy
from .parallel import seeded_map
from .prsma import prsma_rspm_preset
from .queries import (
    DLIST, FAMILIES, HALF, Dataset, LossClass, QueryClass, check_size_bound, separator_set, verify_separator,
)
from .records import RunRecord, append_record, load_records, select_record, source_version
from .synthgen import max_query_error, oracle_query, preset_T

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT, EXIT_CAPACITY, EXIT_FAIL = 0, 1, 2, 3, 4

DEFAULT_TRIALS = {"learn": 1, "audit": 200_000, "bench": 200}
DEFAULT_T = {"fpl": 2000, "ftpl": 500}


class MechanismFail(Exception):
    """The mechanism returned Fail; carries the partial output for the record."""

    def __init__(self, output: dict, calls: int = 0):
        super().__init__("mechanism returned Fail")
        self.output = output
        self.calls = calls


# -- helpers ---------------------------------------------------------------


def _streams(seed: int) -> dict:
    names = ("data", "mechanism", "oracle", "tasks")
    return dict(zip(names, np.random.SeedSequence(seed).spawn(len(names))))


def _hypothesis_class(cfg: ExperimentConfig) -> QueryClass:
    kw = {}
    if cfg.family == HALF and cfg.grid is not None:
        kw["weight_grid"] = tuple(cfg.grid)
    return QueryClass(cfg.family, cfg.d, **kw)


def _load_data(cfg: ExperimentConfig, cls, ss) -> Dataset:
    hyp = cls.hypotheses if isinstance(cls, LossClass) else cls
    if cfg.data:
        S = read_dataset(cfg.data, labeled=cfg.labeled, coordinate_values=hyp.coordinate_values)
        if S.dim != cls.dim:
            raise InputError(f"dataset has {S.dim} columns, class expects {cls.dim}")
        return S
    rng = np.random.default_rng(ss)
    X = A.product_dataset(cfg.n, hyp.dim, cfg.p, rng).points
    if cfg.labeled:
        X = np.hstack([X, rng.integers(0, 2, (cfg.n, 1), dtype=np.int8)])
    return Dataset(X)


def _points_digest(X) -> str:
    return hashlib.sha256(np.ascontiguousarray(np.asarray(X, dtype=float)).tobytes()).hexdigest()


# -- commands --------------------------------------------------------------


def cmd_learn(cfg: ExperimentConfig):
    st = _streams(cfg.seed)
    hyp = _hypothesis_class(cfg)
    cls = LossClass(hyp) if cfg.labeled else hyp
    S = _load_data(cfg, cls, st["data"])
    U = cls.separator()
    rng = np.random.default_rng(st["mechanism"])
    policy = FailurePolicy.parse(cfg.policy)
    oracle = CertifiableOracle(cls, policy, np.random.default_rng(st["oracle"]))
    out: dict = dict(mechanism=cfg.mechanism, n=S.n, m=U.size, class_size=cls.size)
    calls = 0
    if cfg.mechanism == "rspm":
        res = rspm(S, cls, U, cfg.eps, oracle, rng)
        q, calls = res.query, oracle.calls
        if cfg.trace:
            out["noise_trace"] = res.noise_trace.tolist()
    elif cfg.mechanism == "gaussian-rspm":
        res = rspm_gaussian(S, cls, U, cfg.eps, cfg.delta, oracle, rng)
        q, calls = res.query, oracle.calls
        if cfg.trace:
            out["noise_trace"] = res.noise_trace.tolist()
    elif cfg.mechanism == "prsma":
        res = prsma_rspm_preset(S, cls, U, cfg.eps, cfg.delta, policy, rng, raw=cfg.raw, reps_cap=cfg.reps_cap)
        q, calls = res.result, res.oracle_calls
        out.update(K=res.K, reps=res.reps, pass_count=res.pass_count, noisy_count=res.noisy_count,
                   threshold=res.threshold, discarded=len(res.discarded))
    elif cfg.mechanism == "expmech":
        q, calls = exponential_mechanism_baseline(S, cls, cfg.eps, rng), 0
    else:
        raise InputError(f"learn does not support mechanism {cfg.mechanism!r}")
    if q is None:
        out["query"] = None
        raise MechanismFail(out, calls)
    out.update(query=q.encode(), excess_error=excess_error(cls, q, S))
    return out, calls


def cmd_synth(cfg: ExperimentConfig):
    st = _streams(cfg.seed)
    cls = _hypothesis_class(cfg)
    S = _load_data(cfg, cls, st["data"])
    m1, m2 = cls.separator().size, cls.dual().separator().size
    T = cfg.T or preset_T(cfg.preset, m1=m1, m2=m2, log_X=cls.log_universe, log_Q=math.log(cls.size), n=S.n,
                          eps=cfg.eps, delta=cfg.delta, beta=cfg.beta)
    prsma_kw = dict(raw=cfg.raw, reps_cap=cfg.reps_cap, policy=FailurePolicy.parse(cfg.policy))
    res = oracle_query(S, cls, T, cfg.eps, cfg.delta, cfg.beta, cfg.alpha0, preset=cfg.preset,
                       rng=np.random.default_rng(st["mechanism"]),
                       prsma_kw=prsma_kw if cfg.preset == "prsma" else None)
    if res is None:
        raise MechanismFail(dict(T=T, preset=cfg.preset))
    path = Path(cfg.output) if cfg.output else Path(cfg.out) / f"synth-seed{cfg.seed}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(path, res.points, header=f"synthetic dataset: {res.size} rows, T={T}, preset={cfg.preset}")
    err = max_query_error(S, res.points, cls)
    params = {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in res.params.items()}
    out = dict(path=str(path), rows=res.size, T=T, max_query_error=err, points_sha256=_points_digest(res.points),
               params=params)
    return out, res.dual_calls + res.private_calls


MICRO = [[1, 1]] * 4 + [[0, 1]] * 4


def cmd_audit(cfg: ExperimentConfig):
    st = _streams(cfg.seed)
    cls = _hypothesis_class(cfg)
    S = read_dataset(cfg.data, coordinate_values=cls.coordinate_values) if cfg.data else Dataset(
        np.array(MICRO if cls.dim == 2 else [[1] * cls.dim] * 4 + [[0] * cls.dim] * 4, dtype=np.int8))
    neighbors = A.single_record_neighbors(S, cls.universe)
    U = cls.separator()
    samplers = {
        "rspm": lambda: A.rspm_sampler(cls, U, cfg.eps),
        "gaussian-rspm": lambda: A.rspm_sampler(cls, U, cfg.eps, "gaussian", cfg.delta),
        "exact-erm": lambda: A.exact_erm_sampler(cls),
        "constant": lambda: A.constant_sampler(0),
        "randomized-response": lambda: A.randomized_response_sampler(cfg.eps),
    }
    if cfg.mechanism not in samplers:
        raise InputError(f"audit does not support mechanism {cfg.mechanism!r}")
    sampler = samplers[cfg.mechanism]()
    trials = cfg.trials or DEFAULT_TRIALS["audit"]
    if trials < A.MIN_TRIALS:
        raise CapacityError(f"audit needs at least {A.MIN_TRIALS} trials per dataset, got {trials}")
    datasets = [S, *neighbors]
    samples = seeded_map(lambda D, r: np.asarray(sampler(D, trials, r)), datasets, st["tasks"], cfg.jobs)
    lookup = {id(D): s for D, s in zip(datasets, samples)}
    delta = cfg.delta if cfg.mechanism == "gaussian-rspm" else 0.0
    rep = A.dp_ratio_audit(lambda D, t, r: lookup[id(D)], S, neighbors, cfg.eps, delta, trials, None,
                           name=cfg.mechanism, support=max(cls.size, 2))
    print(rep.summary())
    if cfg.trace:
        tpath = Path(cfg.out) / f"audit-trace-seed{cfg.seed}.jsonl"
        tpath.parent.mkdir(parents=True, exist_ok=True)
        with open(tpath, "w") as fh:
            for j, f in enumerate([rep.freq_S, *rep.freq_neighbors]):
                fh.write(json.dumps(dict(dataset=j, freq=f.tolist())) + "\n")
    out = dict(passed=rep.passed, max_log_ratio=rep.max_log_ratio, violations=len(rep.violations),
               neighbors=len(neighbors), trials=trials, comparisons=rep.comparisons,
               freq_S=rep.freq_S.tolist(), freq_neighbors=[f.tolist() for f in rep.freq_neighbors])
    calls = trials * len(datasets) if cfg.mechanism in ("rspm", "gaussian-rspm") else 0
    return out, calls


def _regret_task(cfg: ExperimentConfig, cls, T: int):
    if cfg.kind == "fpl":
        U = cls.separator()
        stream = A.alternating_stream(cls.dim, T)
        return lambda _i, r: A.follow_private_leader(cls, stream, U, cfg.eps, r).average_regret
    return lambda _i, r: A.context_ftpl_regret(cls, T, r).average_regret


def cmd_regret(cfg: ExperimentConfig):
    st = _streams(cfg.seed)
    cls = _hypothesis_class(cfg)
    T = cfg.T or DEFAULT_T[cfg.kind]
    grid = sorted({max(1, T // 4), max(1, T // 2), T})
    roots = st["tasks"].spawn(len(grid))
    medians, per_seed = [], {}
    for t, root in zip(grid, roots):
        regs = seeded_map(_regret_task(cfg, cls, t), list(range(cfg.seeds)), root, cfg.jobs)
        per_seed[str(t)] = [float(r) for r in regs]
        medians.append(float(np.median(regs)))
    monotone = all(a >= b for a, b in zip(medians, medians[1:]))
    out = dict(kind=cfg.kind, T_grid=grid, median_regret=medians, per_seed=per_seed, monotone=monotone)
    if cfg.kind == "fpl":
        EZ = A.expected_perturbation_norm(cls, cls.separator(), cfg.eps, np.random.default_rng(st["mechanism"]))
        out.update(expected_norm=EZ, bound=cfg.eps + EZ / T)
    shown = ", ".join(f"T={t}: {r:.5f}" for t, r in zip(grid, medians))
    print(f"median average regret {shown} monotone={monotone}")
    calls = cfg.seeds * sum(grid) * (1 if cfg.kind == "fpl" else 128)
    return out, calls


def cmd_bench(cfg: ExperimentConfig):
    st = _streams(cfg.seed)
    cls = _hypothesis_class(cfg)
    if cfg.mechanism not in ("rspm", "gaussian-rspm", "expmech"):
        raise InputError(f"bench supports rspm, gaussian-rspm and expmech, not {cfg.mechanism!r}")
    trials = cfg.trials or DEFAULT_TRIALS["bench"]
    cells = [(int(n), float(e)) for n in cfg.n_grid for e in cfg.eps_grid]

    def row(cell, r):
        n, e = cell
        return A.error_table(cfg.mechanism, cls, [n], [e], trials, r, beta=cfg.beta, delta=cfg.delta, p=cfg.p)[0]

    rows = seeded_map(row, cells, st["tasks"], cfg.jobs)
    path = Path(cfg.output) if cfg.output else Path(cfg.out) / f"bench-seed{cfg.seed}.tsv"
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = ("preset", "n", "eps", "mean", "p95", "bound")
    with open(path, "w") as fh:
        fh.write("\t".join(cols) + "\n")
        for r in rows:
            fh.write("\t".join(str(r[c]) for c in cols) + "\n")
    for r in rows:
        print("\t".join(f"{r[c]:.5g}" if isinstance(r[c], float) else str(r[c]) for c in cols))
    return dict(path=str(path), rows=rows), trials * len(rows)


def cmd_verify_separators(cfg: ExperimentConfig):
    """Check separators for every family at dimensions 2..d (capped where enumeration explodes)."""
    results = []
    caps = {DLIST: 3, HALF: 4}
    for fam in FAMILIES:
        for d in range(2, min(cfg.d, caps.get(fam, cfg.d)) + 1):
            cls = QueryClass(fam, d)
            U = separator_set(cls)
            ok = verify_separator(cls, U) and check_size_bound(cls, U)
            results.append(dict(family=fam, d=d, m=U.size, size=cls.size, ok=bool(ok)))
            print(f"{fam:6s} d={d} m={U.size:3d} |Q|={cls.size:6d} {'ok' if ok else 'FAILED'}")
    return dict(results=results, all_ok=all(r["ok"] for r in results)), 0


COMMANDS = {
    "learn": cmd_learn, "synth": cmd_synth, "audit": cmd_audit, "regret": cmd_regret,
    "bench": cmd_bench, "verify-separators": cmd_verify_separators,
}


# -- runner ----------------------------------------------------------------


def execute(command: str, cfg: ExperimentConfig, *, write: bool = True) -> RunRecord:
    """Run one command and build its record (appended to the out directory when ``write``)."""
    t0 = time.perf_counter()
    status, code, output, calls = "ok", EXIT_OK, {}, 0
    try:
        output, calls = COMMANDS[command](cfg)
    except MechanismFail as exc:
        status, code, output, calls = "fail", EXIT_FAIL, exc.output, exc.calls
    except CapacityError as exc:
        status, code, output = "capacity-error", EXIT_CAPACITY, {"error": str(exc)}
    except (InputError, UnsupportedError) as exc:
        status, code, output = "input-error", EXIT_INPUT, {"error": str(exc)}
    rec = RunRecord(command=command, params=cfg.to_dict(), seed=cfg.seed, status=status, exit_code=code,
                    output=output, oracle_calls=int(calls), wall_time=time.perf_counter() - t0,
                    version=source_version())
    if write:
        append_record(cfg.out, rec)
    return rec


def replay(record: RunRecord, jobs: int | None = None) -> tuple[bool, RunRecord]:
    params = dict(record.params)
    if jobs is not None:
        params["jobs"] = jobs
    cfg = build_config(None, params)
    with contextlib.redirect_stdout(io.StringIO()):
        fresh = execute(record.command, cfg, write=False)
    return fresh.output_digest == record.output_digest and fresh.status == record.status, fresh


# -- argument parsing ------------------------------------------------------


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="YAML file of flat key/value settings")
    p.add_argument("--class", dest="family", choices=FAMILIES, default=S)
    p.add_argument("--d", type=int, default=S)
    p.add_argument("--grid", default=S, help="halfspace weight grid, e.g. -1,1")
    p.add_argument("--mechanism", default=S)
    p.add_argument("--preset", default=S)
    p.add_argument("--eps", type=float, default=S)
    p.add_argument("--delta", type=float, default=S)
    p.add_argument("--beta", type=float, default=S)
    p.add_argument("--T", type=int, default=S)
    p.add_argument("--alpha0", type=float, default=S)
    p.add_argument("--trials", type=int, default=S)
    p.add_argument("--n", type=int, default=S, help="size of the generated dataset when --data is absent")
    p.add_argument("--p", type=float, default=S, help="coordinate marginal of the generated dataset")
    p.add_argument("--n-grid", dest="n_grid", default=S)
    p.add_argument("--eps-grid", dest="eps_grid", default=S)
    p.add_argument("--policy", default=S, help="never | bernoulli:p | calls:i,j | trigger:x1,...,xd")
    p.add_argument("--reps-cap", dest="reps_cap", type=int, default=S)
    p.add_argument("--raw", action="store_true", default=S, help="treat eps/delta as PRSMA run parameters")
    p.add_argument("--data", default=S)
    p.add_argument("--labeled", action="store_true", default=S)
    p.add_argument("--output", default=S)
    p.add_argument("--kind", default=S)
    p.add_argument("--seeds", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--jobs", type=int, default=S)
    p.add_argument("--out", default=S, help="directory holding runs.jsonl and outputs")
    p.add_argument("--trace", action="store_true", default=S)


COMMAND_HELP = {
    "learn": "privately select one hypothesis or query",
    "synth": "generate a private synthetic dataset",
    "audit": "empirical privacy audit on the two-coordinate micro domain",
    "regret": "average regret of an online learner over a grid of horizons",
    "bench": "excess-error table over n and eps grids",
    "verify-separators": "check separator sets for every class at dimension d",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oraclepriv", description="Private learning, synthetic data and audits on small boolean domains.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        _add_config_flags(sub.add_parser(name, help=COMMAND_HELP[name]))
    rp = sub.add_parser("replay", help="rerun recorded runs and compare outputs")
    rp.add_argument("--record", required=True, help="runs.jsonl file or its directory")
    rp.add_argument("--index", type=int, default=None, help="record to replay (default: last)")
    rp.add_argument("--all", action="store_true", help="replay every record in the file")
    rp.add_argument("--jobs", type=int, default=None, help="override the recorded parallelism")
    return parser


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    try:
        if command == "replay":
            records = load_records(args["record"])
            chosen = records if args["all"] else [select_record(records, args["index"])]
            ok_all = True
            for rec in chosen:
                ok, fresh = replay(rec, args["jobs"])
                ok_all &= ok
                print(f"{rec.command} seed={rec.seed}: {'identical' if ok else 'MISMATCH'} ({fresh.output_digest[:12]})")
            return EXIT_OK if ok_all else EXIT_MISMATCH
        file_values = load_config_file(args.pop("config")) if "config" in args else {}
        cfg = build_config(file_values, args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    rec = execute(command, cfg)
    if rec.status == "ok":
        out = rec.output
        if command == "learn":
            print(out["query"])
        elif command == "synth":
            print(f"wrote {out['rows']} rows to {out['path']} (max query error {out['max_query_error']:.4f})")
    elif "error" in rec.output:
        print(f"error: {rec.output['error']}", file=sys.stderr)
    else:
        print("Fail", file=sys.stderr)
    return rec.exit_code


if __name__ == "__main__":
    sys.exit(main())
