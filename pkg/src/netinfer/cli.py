"""Command-line front end: gen / infer / oracle / bench / check-weights.

Commands read the flat ``key = value`` config format used by the benchmark
harness; repeated ``--set key=value`` flags override config-file keys.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import datasets, harness
from .graphs import vech_indices
from .priors import (
    BernoulliScore,
    EmpiricalScore,
    LearnedScore,
    ZeroScore,
    load_weights,
    scorenet_forward,
)
from .sampler import enumerate_posterior, run_inference


def _overrides(pairs: list[str]) -> dict:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in harness._CONFIG_TYPES:
            raise SystemExit(f"--set: unknown config key {key!r}")
        try:
            out[key] = harness._parse_value(key, value.strip())
        except ValueError as exc:
            raise SystemExit(f"--set: bad value for {key}: {exc}")
    return out


def _load_cfg(args) -> harness.BenchmarkConfig:
    try:
        return harness.load_config(args.config, _overrides(args.set))
    except (ValueError, OSError) as exc:
        raise SystemExit(str(exc))


def _resolve_prior(spec: str, corpus_dir: str | None, n_nodes: int):
    if spec == "zero":
        return ZeroScore()
    if spec.startswith("bernoulli:"):
        return BernoulliScore(float(spec.split(":", 1)[1]))
    if spec == "empirical":
        if not corpus_dir:
            raise SystemExit("--prior empirical needs --corpus DIR")
        dataset = datasets.load_corpus(corpus_dir).with_size(n_nodes)
        if len(dataset) == 0:
            raise SystemExit(f"corpus has no graphs with {n_nodes} nodes")
        return EmpiricalScore(dataset.graphs)
    if spec.startswith("learned:"):
        return LearnedScore(load_weights(spec.split(":", 1)[1]))
    raise SystemExit(f"unknown prior spec {spec!r}")


def cmd_gen(args) -> int:
    cfg = _load_cfg(args)
    out = Path(args.out)
    if args.kind == "corpus":
        rng = np.random.default_rng(cfg.seed_base)
        graphs = []
        for _ in range(args.count):
            graphs.append(harness._truth_graph(cfg, rng))
        datasets.save_corpus(datasets.GraphDataset(tuple(graphs)), out)
        print(f"wrote {args.count} graphs to {out}")
    else:
        K = args.k if args.k is not None else cfg.k_grid[0]
        instance = harness.build_trial_instance(cfg, K, args.trial)
        datasets.save_instance(instance, out)
        print(f"wrote instance (N={instance.n_nodes}, K={K}, family={instance.family}) to {out}")
    return 0


def cmd_infer(args) -> int:
    cfg = _load_cfg(args)
    instance = datasets.load_instance(args.instance)
    prior = _resolve_prior(args.prior, args.corpus, instance.n_nodes)
    rng = np.random.default_rng(args.seed)
    result = run_inference(
        instance.state,
        instance.true_filter(),
        instance.signals,
        prior,
        cfg.schedule(),
        rng,
        adam_learning_rate=cfg.adam_lr,
    )
    idx = instance.state.unknown_vech_indices()
    r, c = vech_indices(instance.n_nodes)
    predicted = result.adjacency[r, c][idx]
    f1 = harness.f1_score(instance.unknown_truth_bits(), predicted)
    print(f"nodes:            {instance.n_nodes}")
    print(f"unknown entries:  {len(idx)}")
    print(f"estimated edges (unknown set): {int(predicted.sum())}")
    print(f"theta estimate:   {np.array2string(result.theta, precision=6)}")
    print(f"theta truth:      {np.array2string(instance.theta, precision=6)}")
    print(f"f1 (unknown set): {f1:.4f}")
    print(f"theta nrmse:      {harness.theta_nrmse(instance.theta, result.theta):.4f}")
    print(f"loglik by level:  {['%.3g' % v for v in result.loglik_trace]}")
    return 0


def cmd_oracle(args) -> int:
    instance = datasets.load_instance(args.instance)
    kwargs = {}
    if args.prior.startswith("bernoulli:"):
        kwargs["bernoulli_p"] = float(args.prior.split(":", 1)[1])
    elif args.prior == "empirical":
        if not args.corpus:
            raise SystemExit("--prior empirical needs --corpus DIR")
        dataset = datasets.load_corpus(args.corpus).with_size(instance.n_nodes)
        kwargs["dataset"] = dataset.graphs
    else:
        raise SystemExit("oracle prior must be bernoulli:<p> or empirical")
    table = enumerate_posterior(instance.state, instance.true_filter(), instance.signals, **kwargs)
    order = np.argsort(table.probabilities)[::-1]
    shown = order if args.all else order[: args.top]
    print("pairs: " + " ".join(f"({i},{j})" for i, j in table.pairs))
    for k in shown:
        bits = "".join(str(int(b)) for b in table.configs[k])
        print(f"{bits}  {table.probabilities[k]:.6f}")
    truth_bits = instance.unknown_truth_bits()
    mode_cfg, mode_p = table.mode()
    marker = "==" if np.array_equal(mode_cfg, truth_bits) else "!="
    print(f"mode mass {mode_p:.4f}; mode {marker} truth")
    return 0


def cmd_bench(args) -> int:
    cfg = _load_cfg(args)
    total = len(cfg.methods) * len(cfg.k_grid) * cfg.trials
    done = [0]

    def progress(rec):
        done[0] += 1
        if args.verbose:
            print(
                f"[{done[0]}/{total}] {rec.method} K={rec.K} trial={rec.seed} "
                f"f1={rec.f1:.3f} nrmse={rec.theta_nrmse:.3f}",
                file=sys.stderr,
            )

    records = harness.run_benchmark(cfg, progress=progress)
    harness.write_csv(records, cfg.output)
    print(f"wrote {len(records)} trial rows to {cfg.output}")
    for (method, K), agg in harness.aggregate(records).items():
        print(
            f"{method:18s} K={K:<3d} f1={agg['f1_mean']:.3f}+-{agg['f1_stderr']:.3f} "
            f"nrmse={agg['nrmse_mean']:.3f}+-{agg['nrmse_stderr']:.3f}"
        )
    return 0


def cmd_check_weights(args) -> int:
    weights = load_weights(args.weights)
    print(f"weight file ok: {weights.n_layers} layers, hidden dim {weights.hidden_dim}")
    dataset = datasets.load_corpus(args.corpus)
    sizes = sorted({g.shape[0] for g in dataset})
    rng = np.random.default_rng(args.seed)
    sigmas = [float(s) for s in args.sigmas.split(",")]
    for n in sizes:
        members = dataset.with_size(n)
        oracle = EmpiricalScore(members.graphs)
        r, c = vech_indices(n)
        for sigma in sigmas:
            cosines = []
            errs = []
            for _ in range(args.samples):
                g = members.graphs[rng.integers(len(members))]
                a = g[r, c] + sigma * rng.standard_normal(len(r))
                A = np.zeros((n, n))
                A[r, c] = a
                A[c, r] = a
                got = scorenet_forward(weights, A, sigma)
                want = oracle.score(A, sigma)
                denom = np.linalg.norm(got) * np.linalg.norm(want)
                cosines.append(float(got @ want / denom) if denom > 0 else 0.0)
                errs.append(float(np.mean((got - want) ** 2)))
            print(
                f"n={n:3d} sigma={sigma:6.3f} cosine_median={np.median(cosines):7.4f} "
                f"mse_mean={np.mean(errs):.6g}"
            )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="netinfer",
        description="Joint graph-topology and filter inference by annealed Langevin sampling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="flat key = value config file")
    common.add_argument(
        "--set", action="append", metavar="KEY=VALUE", help="override a config key"
    )

    p = sub.add_parser("gen", parents=[common], help="emit a graph corpus or an instance")
    p.add_argument("--kind", choices=("corpus", "instance"), default="corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=100, help="corpus size")
    p.add_argument("--k", type=int, default=None, help="signal pairs for an instance")
    p.add_argument("--trial", type=int, default=0, help="trial index seeding the instance")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("infer", parents=[common], help="run one inference on a stored instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--prior", default="zero", help="zero | bernoulli:<p> | empirical | learned:<weights>")
    p.add_argument("--corpus", default=None, help="corpus dir for the empirical prior")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("oracle", parents=[common], help="exact posterior table for a tiny instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--prior", default="bernoulli:0.5")
    p.add_argument("--corpus", default=None)
    p.add_argument("--top", type=int, default=8, help="show this many configurations")
    p.add_argument("--all", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", parents=[common], help="full benchmark sweep to CSV")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("check-weights", help="validate a weight file against the exact score")
    p.add_argument("--weights", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--sigmas", default="0.5,0.2,0.03")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check_weights)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
