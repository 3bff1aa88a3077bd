"""Text checkpoint format: header with architecture metadata, then named
tensors as `tensor <name> <dims...>` followed by one line of decimal values.
17 significant digits round-trip float64 bit-exactly."""

from __future__ import annotations

import os

import numpy as np

from .autodiff import Tensor
from . import model as m
from .training import TrainState, adam_init

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def _fmt(x):
    return f"{x:.17g}"


def _meta_lines(state: TrainState, variant: str):
    gen, disc = state.gen, state.disc
    hidden = ",".join(str(h) for h in _gen_hidden(gen))
    return [
        f"meta variant {variant}",
        f"meta step {state.step}",
        f"meta n_max {gen.n_max}",
        f"meta num_node_labels {gen.num_node_labels}",
        f"meta num_graph_classes {disc.num_graph_classes}",
        f"meta d_z {gen.d_z}",
        f"meta gen_cond {gen.cond_classes}",
        f"meta gen_hidden {hidden}",
        f"meta disc_hidden {disc.hidden}",
        f"meta disc_layers {disc.n_layers}",
        f"meta aggregation {disc.aggregation}",
        f"meta residual {int(disc.residual)}",
        f"meta disc_cond {disc.cond_classes}",
    ]


def _gen_hidden(gen: m.GeneratorParams):
    dims = [w.data.shape[1] for w in gen.weights[0::2]]
    return dims[:-1]


def save_checkpoint(state: TrainState, variant: str, path):
    lines = [f"lggan-checkpoint {FORMAT_VERSION}"]
    lines += _meta_lines(state, variant)
    named = {}
    named.update(state.gen.tensor_dict())
    named.update(state.disc.tensor_dict())
    for prefix, adam, params in (("gen", state.adam_gen, state.gen.tensors()),
                                 ("disc", state.adam_disc, state.disc.tensors())):
        lines.append(f"meta adam_{prefix}_t {adam['t']}")
        for i, arr in enumerate(adam["m"]):
            named[f"adam.{prefix}.m{i}"] = Tensor(arr)
        for i, arr in enumerate(adam["v"]):
            named[f"adam.{prefix}.v{i}"] = Tensor(arr)
    for name in sorted(named):
        t = named[name]
        dims = " ".join(str(d) for d in t.data.shape)
        lines.append(f"tensor {name} {dims}".rstrip())
        lines.append(" ".join(_fmt(v) for v in t.data.ravel()))
    tmp = str(path) + ".tmp"
    with open(tmp, "w") as f:
        f.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def load_checkpoint(path):
    """Returns (TrainState, variant)."""
    with open(path) as f:
        lines = [ln.rstrip("\n") for ln in f]
    if not lines or not lines[0].startswith("lggan-checkpoint"):
        raise CheckpointError("not a checkpoint file")
    version = int(lines[0].split()[1])
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    meta = {}
    tensors = {}
    i = 1
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        fields = lines[i].split()
        if fields[0] == "meta":
            meta[fields[1]] = fields[2] if len(fields) > 2 else ""
            i += 1
        elif fields[0] == "tensor":
            name = fields[1]
            shape = tuple(int(d) for d in fields[2:])
            vals = np.array([float(x) for x in lines[i + 1].split()])
            expected = int(np.prod(shape)) if shape else 1
            if vals.size != expected:
                raise CheckpointError(f"tensor {name}: value count mismatch")
            tensors[name] = Tensor(vals.reshape(shape))
            i += 2
        else:
            raise CheckpointError(f"unexpected line: {lines[i]!r}")

    try:
        variant = meta["variant"]
        n_max = int(meta["n_max"])
        c = int(meta["num_node_labels"])
        gcls = int(meta["num_graph_classes"])
        d_z = int(meta["d_z"])
        gen_cond = int(meta["gen_cond"])
        disc_hidden = int(meta["disc_hidden"])
        disc_layers = int(meta["disc_layers"])
        aggregation = meta["aggregation"]
        residual = bool(int(meta["residual"]))
        disc_cond = int(meta["disc_cond"])
        step = int(meta["step"])
    except KeyError as e:
        raise CheckpointError(f"missing metadata key {e}")

    gen_weights = []
    i = 0
    while f"gen.W{i}" in tensors:
        gen_weights += [tensors[f"gen.W{i}"], tensors[f"gen.b{i}"]]
        i += 1
    gen = m.GeneratorParams(n_max, c, d_z, gen_cond, gen_weights)

    gcn = [tensors[f"disc.W{i}"] for i in range(disc_layers)]
    disc = m.DiscriminatorParams(
        n_max, c, gcls, disc_hidden, disc_layers, aggregation, residual,
        disc_cond, gcn, tensors["disc.score_w"], tensors["disc.score_b"],
        tensors["disc.class_w"], tensors["disc.class_b"])

    def load_adam(prefix, params):
        st = adam_init(params)
        st["t"] = int(meta.get(f"adam_{prefix}_t", 0))
        for i in range(len(params)):
            if f"adam.{prefix}.m{i}" in tensors:
                st["m"][i] = tensors[f"adam.{prefix}.m{i}"].data
                st["v"][i] = tensors[f"adam.{prefix}.v{i}"].data
        return st

    state = TrainState(gen, disc, load_adam("gen", gen.tensors()),
                       load_adam("disc", disc.tensors()), step=step)
    return state, variant
