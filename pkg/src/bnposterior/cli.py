"""Command-line entry point.

Subcommands wire ingestion, the score cache, the samplers, the
enumeration oracles, and evaluation into reproducible runs. Every
command is deterministic given its full flag set; all randomness flows
from --seed. Scores in trace files are reported in bits (log2).

Exit codes: 0 success, 1 usage error, 2 data error, 3 cap refusal.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import data as data_mod
from .errors import BnposteriorError, CapExceededError, DataFormatError
from .evaluation import label_features, tradeoff_curve, write_curve
from .exact import exact_feature_tables_dags, exact_feature_tables_orders
from .features import FeaturePosteriorTable, read_feature_table, write_feature_table, write_trace
from .order_mcmc import OrderMcmcConfig, estimate_features, run_chain
from .scoring import ScoreParams, build_family_cache
from .search import bootstrap_confidence, greedy_hill_climb
from .structure_mcmc import StructureMcmcConfig, run_structure_chain

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CAP = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_cache_flags(p):
    p.add_argument("--k", type=int, default=3, help="max parents per node")
    p.add_argument("--ess", type=float, default=1.0, help="Dirichlet equivalent sample size")
    p.add_argument("--mp", type=int, default=20, help="candidate parents per node")
    p.add_argument("--mf", type=int, default=4000, help="families cached per node")
    p.add_argument("--gamma-bits", type=float, default=10.0, help="pruning/fallback slack in bits")


def _add_chain_flags(p, burnin, thin):
    p.add_argument("--burnin", type=int, default=burnin)
    p.add_argument("--thin", type=int, default=thin)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--features", choices=("edge", "markov", "path"), default="markov")
    p.add_argument("--trace", help="write per-iteration trace here")
    p.add_argument("--out", required=True, help="feature table CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bnposterior", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="sample rows from a ground-truth network")
    p.add_argument("--net", required=True, help="network text file")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true", help="overwrite an existing output file")

    p = sub.add_parser("order-mcmc", help="Metropolis over orderings")
    p.add_argument("--data", required=True)
    _add_cache_flags(p)
    p.add_argument("--pflip", type=float, default=0.9)
    p.add_argument("--dags-per-order", type=int, default=10)
    _add_chain_flags(p, burnin=10_000, thin=2_500)

    p = sub.add_parser("structure-mcmc", help="Metropolis over DAG structures")
    p.add_argument("--data", required=True)
    _add_cache_flags(p)
    p.add_argument("--init", choices=("empty", "greedy"), default="empty")
    _add_chain_flags(p, burnin=100_000, thin=25_000)

    p = sub.add_parser("exact", help="exhaustive enumeration posteriors")
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--ess", type=float, default=1.0)
    p.add_argument("--mode", choices=("dags", "orders"), required=True)
    p.add_argument("--features", choices=("edge", "markov", "path"), default="markov")
    p.add_argument("--seed", type=int, default=0, help="used only for sampled path features")
    p.add_argument("--out", required=True)

    p = sub.add_parser("bootstrap", help="nonparametric bootstrap confidence")
    p.add_argument("--data", required=True)
    p.add_argument("--B", type=int, default=100, dest="replicates")
    _add_cache_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--features", choices=("edge", "markov", "path"), default="markov")
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="tradeoff curve of estimates against a truth network")
    p.add_argument("--estimates", required=True, help="feature table CSV")
    p.add_argument("--truth-net", required=True, help="network text file")
    p.add_argument("--out", required=True)

    return parser


def _params(args, n: int) -> ScoreParams:
    k = min(args.k, n - 1) if n > 1 else 1
    return ScoreParams(ess=args.ess, k=k, n=n)


def _cmd_gen_data(args) -> int:
    net = data_mod.load_network(args.net)
    if os.path.exists(args.out) and not args.force:
        print(f"refusing to overwrite {args.out} (use --force)", file=sys.stderr)
        return EXIT_USAGE
    d = data_mod.forward_sample(net, args.rows, args.seed)
    data_mod.save_csv(d, args.out)
    return EXIT_OK


def _cmd_order_mcmc(args) -> int:
    d = data_mod.load_csv(args.data)
    params = _params(args, d.n)
    cache = build_family_cache(d, params, m_p=args.mp, m_f=args.mf, gamma_bits=args.gamma_bits)
    config = OrderMcmcConfig(
        p_flip=args.pflip,
        burn_in=args.burnin,
        thin=args.thin,
        n_samples=args.samples,
        dags_per_order=args.dags_per_order,
        seed=args.seed,
    )
    trace, samples = run_chain(cache, config)
    if args.trace:
        write_trace(trace, args.trace)
    table = estimate_features(
        samples, cache, args.features, dags_per_order=args.dags_per_order, seed=args.seed
    )
    write_feature_table(table, args.out)
    return EXIT_OK


def _cmd_structure_mcmc(args) -> int:
    d = data_mod.load_csv(args.data)
    params = _params(args, d.n)
    cache = build_family_cache(d, params, m_p=args.mp, m_f=args.mf, gamma_bits=args.gamma_bits)
    init = "empty"
    if args.init == "greedy":
        init = greedy_hill_climb(cache)
    config = StructureMcmcConfig(
        burn_in=args.burnin,
        thin=args.thin,
        n_samples=args.samples,
        seed=args.seed,
        init=init,
        feature_kind=args.features,
    )
    trace, _, table = run_structure_chain(cache, config)
    if args.trace:
        write_trace(trace, args.trace)
    write_feature_table(table, args.out)
    return EXIT_OK


def _cmd_exact(args) -> int:
    d = data_mod.load_csv(args.data)
    params = _params(args, d.n)
    if args.mode == "dags":
        tables = exact_feature_tables_dags(d, params, (args.features,))
    else:
        tables = exact_feature_tables_orders(d, params, (args.features,), seed=args.seed)
    table = FeaturePosteriorTable(
        kind=args.features,
        names=d.names,
        estimates=tables[args.features],
        meta={"estimator": f"exact_{args.mode}"},
    )
    write_feature_table(table, args.out)
    return EXIT_OK


def _cmd_bootstrap(args) -> int:
    d = data_mod.load_csv(args.data)
    params = _params(args, d.n)
    table = bootstrap_confidence(
        d,
        params,
        num_replicates=args.replicates,
        seed=args.seed,
        kind=args.features,
        m_p=args.mp,
        m_f=args.mf,
        gamma_bits=args.gamma_bits,
    )
    write_feature_table(table, args.out)
    return EXIT_OK


def _cmd_eval(args) -> int:
    estimates = read_feature_table(args.estimates)
    net = data_mod.load_network(args.truth_net)
    if set(estimates.names) != set(net.names):
        print(
            "estimates and truth network cover different variable sets",
            file=sys.stderr,
        )
        return EXIT_DATA
    # align the estimate table to the network's variable order
    idx = [estimates.names.index(name) for name in net.names]
    est = estimates.estimates[np.ix_(idx, idx)]
    aligned = FeaturePosteriorTable(kind=estimates.kind, names=net.names, estimates=est)
    labels = label_features(net, estimates.kind)
    curve = tradeoff_curve(aligned, labels)
    write_curve(curve, args.out)
    return EXIT_OK


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "order-mcmc": _cmd_order_mcmc,
    "structure-mcmc": _cmd_structure_mcmc,
    "exact": _cmd_exact,
    "bootstrap": _cmd_bootstrap,
    "eval": _cmd_eval,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except CapExceededError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CAP
    except (DataFormatError, OSError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DATA
    except (BnposteriorError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DATA


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
