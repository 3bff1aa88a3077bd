"""Command-line surface: dataset preparation, training, generation,
evaluation, downstream classification, diversity analysis, and baselines.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 divergence.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import baselines as bl
from . import checkpoint as ckpt
from . import kernels as kr
from . import stats as st
from . import training as tr
from .config import ConfigError, format_resolved, resolve
from .graphs import (DatasetFormatError, GraphDataset, GraphError,
                     extract_ego_network, read_dataset, write_dataset)
from .model import discretize, generator_forward
from .rngtools import split_rng

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIVERGED = 3


def _atomic_write_text(path, text):
    tmp = str(path) + ".tmp"
    with open(tmp, "w") as f:
        f.write(text)
    os.replace(tmp, path)


# prepare ------------------------------------------------------------

def cmd_prepare(args):
    host_data = read_dataset(args.host)
    host = host_data.graphs[0]
    rng = split_rng(args.seed, "prepare")
    centers = rng.permutation(host.n)
    graphs = []
    for center in centers:
        if len(graphs) >= args.count:
            break
        ego = extract_ego_network(host, int(center), args.hops,
                                  args.min_n, args.max_n)
        if ego is not None:
            graphs.append(ego)
    data = GraphDataset(graphs, host_data.num_node_labels,
                        host_data.num_node_labels, args.name)
    write_dataset(data, args.out)
    if len(graphs) < args.count:
        print(f"warning: only {len(graphs)} of {args.count} requested "
              f"ego networks satisfied the size bounds", file=sys.stderr)
    avg_v = np.mean([g.n for g in graphs]) if graphs else 0.0
    avg_e = np.mean([len(g.edges) for g in graphs]) if graphs else 0.0
    classes = len({g.graph_class for g in graphs})
    print(f"dataset {args.name}: graphs {len(graphs)} classes {classes} "
          f"avg_nodes {avg_v:.1f} avg_edges {avg_e:.1f} "
          f"node_labels {data.num_node_labels}")
    return EXIT_OK


# train --------------------------------------------------------------

TRAIN_DEFAULTS = {
    "data": "", "out": "model.ckpt", "losses": "", "resume": "",
    "variant": "acgan", "batch_size": 8, "d_steps_per_g_step": 5,
    "lr": 1e-4, "beta1": 0.5, "beta2": 0.9,
    "lambda_gp": 10.0, "lambda_ct": 2.0, "ct_margin": 0.2, "ct_noise": 0.05,
    "lambda_fm": 1.0, "epochs": 10, "seed": 0, "d_z": 16, "n_max": 0,
    "gen_hidden": (64, 64), "disc_hidden": 32, "disc_layers": 3,
    "aggregation": "maxpool", "residual": True, "vanilla_gan": False,
    "uniform_class_prior": False, "checkpoint_every": 0,
}


def _train_config(resolved):
    kw = {k: v for k, v in resolved.items()
          if k not in ("data", "out", "losses", "resume")}
    return tr.TrainConfig(**kw)


def cmd_train(args):
    resolved = resolve(TRAIN_DEFAULTS, args.config, args.overrides)
    if args.seed is not None:
        resolved["seed"] = args.seed
    if not resolved["data"]:
        raise ConfigError("train needs data=<dataset file>")
    print(format_resolved(resolved))
    data = read_dataset(resolved["data"])
    config = _train_config(resolved)
    state = None
    if resolved["resume"]:
        state, variant = ckpt.load_checkpoint(resolved["resume"])
        if variant != config.variant:
            raise ConfigError(f"checkpoint variant {variant!r} does not match "
                              f"configured variant {config.variant!r}")
    loss_lines = []

    def sink(line):
        loss_lines.append(line)

    def dump(st_):
        ckpt.save_checkpoint(st_, config.variant,
                             f"{resolved['out']}.step{st_.step}")

    try:
        state = tr.train(config, data, loss_sink=sink, checkpoint_sink=dump,
                         state=state)
    except tr.DivergenceError:
        if state is not None:
            ckpt.save_checkpoint(state, config.variant,
                                 resolved["out"] + ".last-good")
        if resolved["losses"]:
            _atomic_write_text(resolved["losses"], "\n".join(loss_lines) + "\n")
        raise
    ckpt.save_checkpoint(state, config.variant, resolved["out"])
    if resolved["losses"]:
        _atomic_write_text(resolved["losses"],
                           "\n".join(loss_lines) + "\n" if loss_lines else "")
    print(f"trained {state.step} steps -> {resolved['out']}")
    return EXIT_OK


# generate -----------------------------------------------------------

def cmd_generate(args):
    state, variant = ckpt.load_checkpoint(args.checkpoint)
    rng = split_rng(args.seed, "generate")
    gen = state.gen
    n_classes = state.disc.num_graph_classes
    graphs = []
    for _ in range(args.count):
        z = rng.standard_normal(gen.d_z)
        if variant in ("cgan", "acgan"):
            c = args.class_id if args.class_id is not None \
                else int(rng.integers(n_classes))
            onehot = np.zeros(n_classes)
            onehot[c] = 1.0
        else:
            c, onehot = 0, None
        a, l = generator_forward(gen, z, onehot)
        graphs.append(discretize(a, l, args.threshold, graph_class=c))
    data = GraphDataset(graphs, gen.num_node_labels, n_classes, args.name)
    write_dataset(data, args.out)
    print(f"generated {len(graphs)} graphs -> {args.out}")
    return EXIT_OK


# evaluate -----------------------------------------------------------

def cmd_evaluate(args):
    generated = read_dataset(args.generated)
    reference = read_dataset(args.reference)
    if generated.num_node_labels != reference.num_node_labels:
        raise DatasetFormatError(
            f"label-space mismatch: {generated.num_node_labels} vs "
            f"{reference.num_node_labels} node labels")
    report = st.evaluate(generated, reference)
    print("# metric value sigma estimator")
    for line in report.lines():
        print(line)
    if args.per_class:
        pc = st.per_class_stats(generated, reference)
        for note in pc.notes:
            print(f"# {note}")
        print(f"avg_degree {pc.degree:.6g} {st.SIGMA_DEFAULTS['degree']:g} v-statistic")
        print(f"avg_clustering {pc.clustering:.6g} "
              f"{st.SIGMA_DEFAULTS['clustering']:g} v-statistic")
        print(f"avg_orbit {pc.orbit:.6g} {st.SIGMA_DEFAULTS['orbit']:g} v-statistic")
    return EXIT_OK


# classify -----------------------------------------------------------

def _stratified_subsample(data, fraction, rng):
    by_class = {}
    for g in data.graphs:
        by_class.setdefault(g.graph_class, []).append(g)
    chosen = []
    for c in sorted(by_class):
        graphs = by_class[c]
        take = max(1, int(round(fraction * len(graphs))))
        idx = rng.permutation(len(graphs))[:take]
        chosen.extend(graphs[i] for i in idx)
    return GraphDataset(chosen, data.num_node_labels,
                        data.num_graph_classes, data.name)


def cmd_classify(args):
    train_data = read_dataset(args.train)
    test_data = read_dataset(args.test)
    accs = []
    for trial in range(args.trials):
        rng = split_rng(args.seed, f"classify-trial-{trial}")
        sub = _stratified_subsample(train_data, 0.8, rng)
        acc = kr.downstream_eval(sub, test_data, kernel=args.kernel,
                                 c_svm=args.c_svm)
        accs.append(acc)
        print(f"{args.kernel} {train_data.name} {acc:.4f} "
              f"{len(sub.graphs)} {len(test_data.graphs)} {args.seed} "
              f"trial={trial}")
    print(f"{args.kernel} {train_data.name} {np.mean(accs):.4f} "
          f"{len(train_data.graphs)} {len(test_data.graphs)} {args.seed} mean")
    return EXIT_OK


# diversity ----------------------------------------------------------

def cmd_diversity(args):
    generated = read_dataset(args.generated)
    training = read_dataset(args.training)
    edges, tc, gc, train_min, gen_min = kr.diversity_histogram(
        generated, training, kernel=args.kernel, bins=args.bins)
    lines = ["# bin_lo bin_hi train_count generated_count"]
    for i in range(len(tc)):
        lines.append(f"{edges[i]:.6g} {edges[i + 1]:.6g} {tc[i]} {gc[i]}")
    lines.append(f"# train_median {np.median(train_min):.6g} "
                 f"generated_median {np.median(gen_min):.6g}")
    _atomic_write_text(args.out, "\n".join(lines) + "\n")
    print(f"diversity histograms -> {args.out}")
    return EXIT_OK


# baseline -----------------------------------------------------------

def cmd_baseline(args):
    rng = split_rng(args.seed, f"baseline-{args.model}-{args.action}")
    if args.action == "fit":
        data = read_dataset(args.data)
        if args.model == "er":
            params = bl.er_fit(data)
        elif args.model == "ba":
            params = bl.BaParams([g.n for g in data.graphs], args.ba_m,
                                 data.num_node_labels, data.num_graph_classes)
        else:
            params = bl.mmsb_fit(data, args.mmsb_k, args.mmsb_iters, rng)
        bl.save_params(params, args.out)
        print(f"fitted {args.model} -> {args.out}")
        return EXIT_OK
    params = bl.load_params(args.params)
    sampler = {"er": bl.er_sample, "ba": bl.ba_sample,
               "mmsb": bl.mmsb_sample}[args.model]
    graphs = [sampler(params, rng) for _ in range(args.count)]
    data = GraphDataset(graphs, params.num_node_labels,
                        params.num_graph_classes, f"{args.model}-samples")
    write_dataset(data, args.out)
    print(f"sampled {len(graphs)} graphs -> {args.out}")
    return EXIT_OK


# parser -------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="lggan",
                                description="labeled-graph GAN toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("prepare", help="extract ego-network dataset")
    sp.add_argument("--host", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--hops", type=int, default=2)
    sp.add_argument("--min-n", type=int, default=1, dest="min_n")
    sp.add_argument("--max-n", type=int, default=10 ** 9, dest="max_n")
    sp.add_argument("--count", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--name", default="ego")
    sp.set_defaults(func=cmd_prepare)

    sp = sub.add_parser("train", help="train an LGGAN model")
    sp.add_argument("--config", default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("overrides", nargs="*", metavar="key=value")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("generate", help="sample graphs from a checkpoint")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--count", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threshold", type=float, default=0.5)
    sp.add_argument("--class-id", type=int, default=None, dest="class_id")
    sp.add_argument("--name", default="generated")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("evaluate", help="MMD report: generated vs reference")
    sp.add_argument("--generated", required=True)
    sp.add_argument("--reference", required=True)
    sp.add_argument("--per-class", action="store_true", dest="per_class")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("classify", help="kernel-SVM downstream accuracy")
    sp.add_argument("--train", required=True)
    sp.add_argument("--test", required=True)
    sp.add_argument("--kernel", choices=kr.KERNEL_CHOICES, default="wl")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--c-svm", type=float, default=1.0, dest="c_svm")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("diversity", help="minimum kernel-distance histograms")
    sp.add_argument("--generated", required=True)
    sp.add_argument("--training", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--kernel", choices=kr.KERNEL_CHOICES, default="wl")
    sp.add_argument("--bins", type=int, default=20)
    sp.set_defaults(func=cmd_diversity)

    sp = sub.add_parser("baseline", help="fit or sample classical baselines")
    sp.add_argument("action", choices=["fit", "sample"])
    sp.add_argument("model", choices=["er", "ba", "mmsb"])
    sp.add_argument("--data", help="dataset file (fit)")
    sp.add_argument("--params", help="parameter file (sample)")
    sp.add_argument("--out", required=True)
    sp.add_argument("--count", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--ba-m", type=int, default=2, dest="ba_m")
    sp.add_argument("--mmsb-k", type=int, default=2, dest="mmsb_k")
    sp.add_argument("--mmsb-iters", type=int, default=bl.MMSB_DEFAULT_ITERS,
                    dest="mmsb_iters")
    sp.set_defaults(func=cmd_baseline)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except tr.DivergenceError as e:
        print(f"training diverged: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    except (DatasetFormatError, GraphError, ckpt.CheckpointError,
            FileNotFoundError, ValueError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
