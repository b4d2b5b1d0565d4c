"""Command-line front end.

Subcommands: psi | ut | levy-cdf | simulate-csbp | simulate-coalescent |
simulate-fv | experiment {hydro,smalltime,largepop,smolu,cdi,rates}.

Measures use a compact family:params syntax, e.g. --mech stable:1.5,
--mech feller, --mech atoms:1,1 --lambda beta:0.5,1.5 --lambda kingman.
A key = value config file can replace flags (flags win on conflict).
Exit codes: 0 success / gates passed, 1 gate failure, 2 config error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import csbp_analytic as ca
from . import experiments as ex
from .coalescent import BlockState, simulate_to
from .csbp_sim import simulate_csbp_flow
from .fleming_viot import FiniteNu, simulate_fv_flow
from .measures import (
    BetaLambda,
    BranchingMechanism,
    DensityLambda,
    FiniteAtomsLambda,
    JumpMeasureFiniteAtoms,
    JumpMeasureStable,
    Kingman,
)

__all__ = ["main", "run"]


class ConfigError(Exception):
    pass


def parse_mechanism(spec: str) -> BranchingMechanism:
    """family:params -> BranchingMechanism.

    stable:GAMMA | feller[:BETA] | atoms:r1,w1[;r2,w2...] | combinations
    joined by '+' (e.g. feller:0.5+atoms:1,1).
    """
    beta, pi = 0.0, None
    for part in spec.split("+"):
        fam, _, args = part.partition(":")
        try:
            if fam == "stable":
                pi = JumpMeasureStable(float(args))
            elif fam == "feller":
                beta = float(args) if args else 0.5
            elif fam == "atoms":
                pairs = [tuple(map(float, p.split(","))) for p in args.split(";")]
                pi = JumpMeasureFiniteAtoms(pairs)
            else:
                raise ConfigError(f"unknown mechanism family {fam!r}")
        except (ValueError, TypeError) as e:
            raise ConfigError(f"bad mechanism spec {part!r}: {e}") from e
    return BranchingMechanism(beta, pi)


def parse_lambda(spec: str):
    """family:params -> LambdaMeasure.

    kingman | beta:A,C[,MASS] | atomslambda:x1,w1[;x2,w2...]
    """
    fam, _, args = spec.partition(":")
    try:
        if fam == "kingman":
            return Kingman()
        if fam == "beta":
            vals = [float(v) for v in args.split(",")]
            return BetaLambda(*vals)
        if fam == "atomslambda":
            pairs = [tuple(map(float, p.split(","))) for p in args.split(";")]
            return FiniteAtomsLambda(pairs)
    except (ValueError, TypeError) as e:
        raise ConfigError(f"bad lambda spec {spec!r}: {e}") from e
    raise ConfigError(f"unknown lambda family {fam!r}")


def _load_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"config line without '=': {raw.rstrip()!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="coalflow",
        description="Lambda-coalescent / Fleming-Viot / CSBP laboratory")
    p.add_argument("--config", help="key = value file supplying defaults")
    sub = p.add_subparsers(dest="cmd", required=True)

    def add(name, **kw):
        sp = sub.add_parser(name, **kw)
        sp.add_argument("--seed", type=int, default=0,
                        help="master seed (64-bit)")
        sp.add_argument("--threads", type=int, default=1,
                        help="replica pool size (results independent of it)")
        sp.add_argument("--output", help="write report/values to this path")
        sp.add_argument("--format", choices=("json", "csv", "text"),
                        default="text", help="output format")
        return sp

    sp = add("psi", help="evaluate the branching mechanism")
    sp.add_argument("--mech", required=True, help="mechanism spec (family:params)")
    sp.add_argument("--q", type=float, required=True, help="argument q >= 0")

    sp = add("ut", help="cumulant u_t(q)")
    sp.add_argument("--mech", required=True)
    sp.add_argument("--t", type=float, required=True, help="time t >= 0")
    sp.add_argument("--q", type=float, required=True)

    sp = add("levy-cdf", help="lambda_t(]0,x[) table")
    sp.add_argument("--mech", required=True)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--x", type=float, help="single evaluation point")

    sp = add("simulate-csbp", help="delta-truncated CSBP flow")
    sp.add_argument("--mech", required=True)
    sp.add_argument("--points", required=True,
                    help="comma-separated initial masses (<= 16)")
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--delta", type=float, required=True,
                    help="jump truncation level")

    sp = add("simulate-coalescent", help="Lambda-coalescent block sizes")
    sp.add_argument("--lambda", dest="lam", required=True,
                    help="Lambda spec (kingman | beta:a,c | atomslambda:...)")
    sp.add_argument("--n", type=int, required=True, help="initial blocks")
    sp.add_argument("--t", type=float, required=True)

    sp = add("simulate-fv", help="finite-nu Fleming-Viot flow")
    sp.add_argument("--nu", required=True,
                    help="atoms spec x1,w1[;x2,w2...] for finite nu")
    sp.add_argument("--points", required=True,
                    help="comma-separated tracked points in [0,1]")
    sp.add_argument("--t", type=float, required=True)

    sp = add("experiment", help="run a verification experiment")
    sp.add_argument("kind", choices=("hydro", "smalltime", "largepop",
                                     "smolu", "cdi", "rates"))
    sp.add_argument("--gamma", type=float, default=1.5, help="stable index")
    sp.add_argument("--a", type=float, default=50.0, help="population scale")
    sp.add_argument("--t", type=float, default=0.5, help="observation time")
    sp.add_argument("--n", type=int, default=200000, help="initial blocks")
    sp.add_argument("--eps", default="0.02,0.01",
                    help="comma-separated eps list (smalltime)")
    sp.add_argument("--replicas", type=int, default=20)
    return p


def run(argv) -> int:
    parser = _build_parser()
    # config file supplies defaults; explicit flags win
    if "--config" in argv:
        try:
            i = argv.index("--config")
            cfg = _load_config(argv[i + 1])
        except (IndexError, OSError, ConfigError) as e:
            print(f"config error: {e}", file=sys.stderr)
            return 2
        extra = []
        for k, v in cfg.items():
            flag = "--" + k.replace("_", "-")
            if flag not in argv:
                extra += [flag, v]
        argv = argv[:i] + argv[i + 2:] + extra
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    try:
        return _dispatch(ns)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def _emit(ns, text: str):
    if ns.output:
        with open(ns.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dispatch(ns) -> int:
    rng = np.random.default_rng(np.random.SeedSequence(ns.seed))
    if ns.cmd == "psi":
        mech = parse_mechanism(ns.mech)
        if ns.q < 0:
            raise ConfigError("q must be >= 0")
        _emit(ns, f"{mech.psi(ns.q):.9g}\n")
        return 0
    if ns.cmd == "ut":
        mech = parse_mechanism(ns.mech)
        _emit(ns, f"{ca.ut(mech, ns.t, ns.q):.9g}\n")
        return 0
    if ns.cmd == "levy-cdf":
        mech = parse_mechanism(ns.mech)
        if ns.x is not None:
            _emit(ns, f"{float(ca.levy_cdf(mech, ns.t, ns.x)):.9g}\n")
        else:
            tab = ca.LevyMeasureTable.build(mech, ns.t)
            _emit(ns, tab.to_csv())
        return 0
    if ns.cmd == "simulate-csbp":
        mech = parse_mechanism(ns.mech)
        pts = [float(v) for v in ns.points.split(",")]
        st = simulate_csbp_flow(mech, pts, ns.t, ns.delta, rng)
        _emit(ns, "x,Z\n" + "".join(f"{x:.9g},{z:.9g}\n"
                                    for x, z in zip(st.points, st.values)))
        return 0
    if ns.cmd == "simulate-coalescent":
        lam = parse_lambda(ns.lam)
        st = BlockState.singletons(ns.n)
        if ns.t > 0:
            st = simulate_to(lam, st, ns.t, rng)
        _emit(ns, f"t={st.clock:.9g} blocks={len(st.sizes)}\n"
              + "size,count\n"
              + "".join(f"{s},{c}\n" for s, c in
                        sorted(__import__('collections').Counter(st.sizes).items())))
        return 0
    if ns.cmd == "simulate-fv":
        pairs = [tuple(map(float, p.split(","))) for p in ns.nu.split(";")]
        nu = FiniteNu(atoms=pairs)
        pts = [float(v) for v in ns.points.split(",")]
        st = simulate_fv_flow(nu, pts, ns.t, rng)
        _emit(ns, "x,F\n" + "".join(f"{x:.9g},{f:.9g}\n"
                                    for x, f in zip(st.tracked, st.values)))
        return 0
    if ns.cmd == "experiment":
        rep = _run_experiment(ns)
        text = rep.to_json() + "\n" if ns.format == "json" else rep.to_text()
        _emit(ns, text)
        return 0 if rep.passed else 1
    raise ConfigError(f"unknown command {ns.cmd!r}")


def _run_experiment(ns) -> ex.ExperimentReport:
    if ns.kind == "rates":
        return ex.rate_asymptotics_check(ns.gamma)
    if ns.kind == "cdi":
        return ex.cdi_equivalence_run()
    if ns.kind == "hydro":
        return ex.hydrodynamic_run(ns.gamma, ns.a, ns.t, ns.n,
                                   ns.replicas, ns.seed, ns.threads)
    if ns.kind == "smalltime":
        eps = [float(v) for v in str(ns.eps).split(",")]
        grid = np.linspace(0.05, 5.0, 100)
        return ex.smalltime_blocks_run(ns.gamma, eps, ns.n, grid,
                                       ns.replicas, ns.seed, ns.threads)
    if ns.kind == "largepop":
        pi = JumpMeasureFiniteAtoms([(1.0, 1.0)])
        return ex.largepop_marginal_run(pi, [5.0, ns.a], 1.0, 1.0, [1.0],
                                        ns.replicas, ns.seed, ns.threads)
    if ns.kind == "smolu":
        mech_f = BranchingMechanism(0.5, None)
        mech_s = BranchingMechanism(0.0, JumpMeasureStable(ns.gamma))
        rep = ex.ExperimentReport("smolu", {"gamma": ns.gamma, "t": 1.0}, 0)
        r1 = ex.smolu_residual(mech_s, 1.0, ("exp", 1.0), "exact-exponential")
        rep.add("exp_residual_stable", r1["residual"], 0.0, 1e-7, "closed-form")
        r2 = ex.smolu_residual(mech_f, 1.0, ("exp", 1.0), "exact-exponential")
        rep.add("exp_residual_feller", r2["residual"], 0.0, 1e-7, "closed-form")
        r3 = ex.smolu_residual(mech_f, 1.0, ("hat", 0.5, 1.5), "feller-quadrature")
        rep.add("feller_quadrature_residual", r3["residual"], 0.0, 1e-6,
                "quadrature")
        rep.add("series_gap", r3["series_gap"], 0.0,
                r3["series_tail_bound"] + 1e-5, "quadrature")
        ids = ex.series_identities(ns.gamma)
        rep.add("series_totalmass", ids["series2_partial"] + ids["series2_tail"],
                ids["series2_target"], 1e-6, "closed-form")
        rep.add("series_weighted", ids["series3_partial"] + ids["series3_tail"],
                ids["series3_target"], 1e-6, "closed-form")
        return rep
    raise ConfigError(f"unknown experiment {ns.kind!r}")


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
