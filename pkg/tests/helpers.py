"""Shared test utilities: random instances and gradient comparison."""
import itertools

import numpy as np

from neural_dnf.core import finite_diff_gradient

ACCEPTANCE = []  # one "criterion N: PASS|FAIL ..." line per acceptance check


def criterion(number, title, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {title} ({detail})"
    ACCEPTANCE.append(line)
    print(line, flush=True)
    return ok


def rel_err(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.abs(a - b).max() / max(np.abs(a).max(), np.abs(b).max(), 1e-8))


def untied_weights(rng, n_out, n_in, scale=1.0, gap=1e-3):
    """Random weights whose magnitudes are pairwise distinct per row and
    away from 0, so |w| and the row max are differentiable at the draw."""
    while True:
        w = rng.uniform(-scale, scale, size=(n_out, n_in))
        a = np.sort(np.abs(w), axis=1)
        if (a[:, 0] > gap).all() and (n_in == 1 or (np.diff(a, axis=1) > gap).all()):
            return w


def all_bipolar(n):
    return np.array(list(itertools.product([-1.0, 1.0], repeat=n)))


def layer_weight_grad_check(layer, x, g):
    """(analytic dW, finite-difference dW) for L = sum(g * layer(x))."""
    dW, _ = layer.backward(x, g)

    def loss(w):
        saved = layer.weights
        layer.weights = w
        try:
            return float((g * layer.forward(x)).sum())
        finally:
            layer.weights = saved

    return dW, finite_diff_gradient(loss, layer.weights, h=1e-6)


def random_discretized_model(rng, n_in, n_conj=None, n_out=None, density=0.35):
    """Plain DNF with weights in {0, +-6} where every conjunction a nonzero
    disjunctive weight points at has a nonempty body."""
    from neural_dnf.models import NeuralDnfModel
    from neural_dnf.semi_symbolic import CONJUNCTIVE, DISJUNCTIVE, SemiSymbolicLayer

    n_conj = n_conj or int(rng.integers(1, 7))
    n_out = n_out or int(rng.integers(1, 5))

    def draw(shape):
        return np.where(rng.random(shape) < density, rng.choice([-6.0, 6.0], size=shape), 0.0)

    conj, disj = draw((n_conj, n_in)), draw((n_out, n_conj))
    disj[:, ~conj.any(axis=1)] = 0.0
    return NeuralDnfModel(
        SemiSymbolicLayer(conj, CONJUNCTIVE, 1.0), SemiSymbolicLayer(disj, DISJUNCTIVE, 1.0)
    )


def bits_of(bipolar):
    return (np.asarray(bipolar) > 0).astype(np.uint8)


def write_cub_fixture(rng, root, n_classes=None, n_attr=None, n_images=None, drop=0.1):
    """Write a random miniature of the CUB-200-2011 text layout under
    ``root`` and return the raw records for oracles."""
    from pathlib import Path

    root = Path(root)
    (root / "attributes").mkdir(parents=True, exist_ok=True)
    n_classes = n_classes or int(rng.integers(2, 5))
    n_attr = n_attr or int(rng.integers(2, 7))
    n_images = n_images or int(rng.integers(n_classes, 16))
    classes = [f"{i + 1:03d}.Bird_{i}" for i in range(n_classes)]
    attrs = [f"has_part_{j}::colour_{j}" for j in range(n_attr)]
    labels = {img: int(rng.integers(0, n_classes)) for img in range(1, n_images + 1)}
    is_train = {img: bool(rng.random() < 0.6) for img in labels}
    records = []  # (img, attr 0-based, present, certainty)
    for img in labels:
        for a in range(n_attr):
            if rng.random() < drop:
                continue
            records.append((img, a, int(rng.integers(0, 2)), int(rng.integers(1, 5))))

    def table(path, lines):
        (root / path).write_text("".join(" ".join(map(str, line)) + "\n" for line in lines))

    table("classes.txt", [(i + 1, c) for i, c in enumerate(classes)])
    table("attributes.txt", [(j + 1, a) for j, a in enumerate(attrs)])
    table("image_class_labels.txt", [(img, c + 1) for img, c in labels.items()])
    table("train_test_split.txt", [(img, int(t)) for img, t in is_train.items()])
    table("attributes/image_attribute_labels.txt",
          [(img, a + 1, p, c, f"{rng.uniform(0, 30):.3f}") for img, a, p, c in records])
    return {"classes": classes, "attributes": attrs, "labels": labels, "is_train": is_train, "records": records}


def algorithm1_oracle(fx, n_min, train_ids):
    """Loop-level class-attribute majority encoding; returns (mask list,
    {image id: encoded bit list})."""
    n_c, n_a = len(fx["classes"]), len(fx["attributes"])
    count = [[[0, 0] for _ in range(n_a)] for _ in range(n_c)]
    for img, a, present, cert in fx["records"]:
        if img not in train_ids:
            continue
        if present == 0 and cert == 1:
            continue
        count[fx["labels"][img]][a][present] += 1
    most = [[1 if count[c][a][1] >= count[c][a][0] else 0 for a in range(n_a)] for c in range(n_c)]
    mask = [sum(most[c][a] for c in range(n_c)) >= n_min for a in range(n_a)]
    keep = [a for a in range(n_a) if mask[a]]
    return mask, {img: [most[c][a] for a in keep] for img, c in fx["labels"].items()}


def mi_joint_oracle(x, y):
    """I(X;Y) = sum p(x,y) log(p(x,y) / (p(x) p(y))) from joint counts."""
    import math
    from collections import Counter

    n = len(x)
    ys = [tuple(np.atleast_1d(v).tolist()) for v in y]
    joint = Counter(zip(list(x), ys))
    px, py = Counter(list(x)), Counter(ys)
    return sum(c / n * math.log((c / n) / ((px[a] / n) * (py[b] / n))) for (a, b), c in joint.items())
