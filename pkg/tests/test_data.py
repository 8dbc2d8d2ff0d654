import itertools
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from helpers import algorithm1_oracle, mi_joint_oracle, write_cub_fixture
from neural_dnf.data import (
    MULTICLASS,
    MULTILABEL,
    Dataset,
    DatasetFormatError,
    attribute_mi,
    filter_by_mi,
    gen_synthetic_multiclass,
    gen_synthetic_multilabel,
    load_dataset_csv,
    load_splits,
    mutual_information,
    save_dataset_csv,
    save_splits,
    split,
    split_counts,
)
from neural_dnf.data.cub import CubFormatError, class_display_name, ingest_cub, preprocess_cub
from neural_dnf.data.synthetic import multiclass_rules
from neural_dnf.rules import emit_asp, evaluate_matrix

names = st.text("abcdefghijklmnopqrstuvwxyz_0123456789", min_size=1, max_size=8)


@st.composite
def datasets(draw):
    n_attr = draw(st.integers(1, 6))
    n = draw(st.integers(0, 12))
    attrs = draw(st.lists(names, min_size=n_attr, max_size=n_attr, unique=True))
    X = draw(st.lists(st.lists(st.integers(0, 1), min_size=n_attr, max_size=n_attr), min_size=n, max_size=n))
    n_t = draw(st.integers(1, 4))
    targets = draw(st.lists(names, min_size=n_t, max_size=n_t, unique=True))
    if draw(st.booleans()):
        y = draw(st.lists(st.integers(0, n_t - 1), min_size=n, max_size=n))
        task = MULTICLASS
    else:
        y = draw(st.lists(st.lists(st.integers(0, 1), min_size=n_t, max_size=n_t), min_size=n, max_size=n))
        task = MULTILABEL
    meta = draw(st.dictionaries(names, st.integers(), max_size=2))
    return Dataset(attrs, np.array(X, dtype=np.uint8).reshape(n, n_attr), task, y, targets, meta)


@settings(max_examples=60, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(datasets())
def test_csv_round_trip(tmp_path, ds):
    path = tmp_path / "d.csv"
    save_dataset_csv(ds, path)
    back = load_dataset_csv(path)
    assert back.same_as(ds) and back.metadata == ds.metadata
    save_dataset_csv(back, tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_bytes() == path.read_bytes()


def test_csv_without_sidecar_infers_names(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a_x,a_y,a_z,class\n1,0,1,0\n0,0,1,1\n1,1,1,1\n0,0,0,0\n")
    ds = load_dataset_csv(p)
    assert ds.attribute_names == ["x", "y", "z"] and ds.task == MULTICLASS
    assert ds.n_targets == 2 and ds.y.tolist() == [0, 1, 1, 0]
    p.write_text("a_x,l_p,l_q\n1,0,1\n")
    ds = load_dataset_csv(p)
    assert ds.task == MULTILABEL and ds.target_names == ["p", "q"]


@pytest.mark.parametrize(
    "text, row, col",
    [
        ("a_x,a_y,class\n1,2,0\n", 2, 2),
        ("a_x,class\n1,0\n0\n", 3, None),
        ("a_x,class\n1,-1\n", 2, 2),
        ("a_x,l_p\n1,yes\n", 2, 2),
        ("a_x,b_y,class\n1,0,0\n", 1, None),
        ("a_x,class,l_p\n1,0,0\n", 1, None),
    ],
)
def test_csv_errors(tmp_path, text, row, col):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(DatasetFormatError) as exc:
        load_dataset_csv(p)
    assert exc.value.row == row and exc.value.col == col


def test_dataset_invariants():
    with pytest.raises(DatasetFormatError):
        Dataset(["a"], [[1]], MULTICLASS, [2], ["p", "q"])
    with pytest.raises(DatasetFormatError):
        Dataset(["a"], [[1], [0]], MULTICLASS, [0], ["p"])
    ds = Dataset(["a", "b"], [[1, 0]], MULTICLASS, [1], ["p", "q"])
    assert ds.bipolar().tolist() == [[1.0, -1.0]]
    assert ds.target_matrix().tolist() == [[False, True]]


def test_split_counts_and_disjointness():
    assert split_counts(10) == (6, 2, 2)
    assert split_counts(10000) == (6400, 1600, 2000)
    ds, _ = gen_synthetic_multiclass(3, 2, n_samples=10000, seed=1)
    ds.X[:, -2:] = 0
    ids = np.arange(10000)
    tagged = Dataset(ds.attribute_names + [f"id{b}" for b in range(14)],
                     np.hstack([ds.X, (ids[:, None] >> np.arange(14)) & 1]), MULTICLASS, ds.y, ds.target_names)
    parts = split(tagged)
    assert [len(p) for p in parts] == [6400, 1600, 2000]
    seen = [set((p.X[:, -14:].astype(int) << np.arange(14)).sum(axis=1).tolist()) for p in parts]
    assert sum(map(len, seen)) == 10000 and set.union(*seen) == set(range(10000))
    again = split(tagged)
    assert all(a.same_as(b) for a, b in zip(parts, again))
    with pytest.raises(ValueError):
        split(tagged, 9000, 1000, 1)


def test_save_and_load_splits(tmp_path):
    ds, _ = gen_synthetic_multilabel(2, 4, n_samples=20, seed=0)
    parts = dict(zip(("train", "val", "test"), split(ds, *split_counts(20))))
    save_splits(parts, tmp_path)
    back = load_splits(tmp_path)
    assert all(back[k].same_as(parts[k]) for k in parts)
    with pytest.raises(FileNotFoundError):
        load_splits(tmp_path / "missing")


# synthetic

def test_multiclass_rules_four_classes():
    assert emit_asp(multiclass_rules(4)) == (
        "c0 :- not s0, not s1.\nc1 :- not s0, s1.\nc2 :- s0, not s1.\nc3 :- s0, s1.\n"
    )


@pytest.mark.parametrize("n_classes", [2, 3, 5, 8, 25])
def test_multiclass_rules_are_mutually_exclusive(n_classes):
    rules = multiclass_rules(n_classes)
    k = len(rules.input_atoms)
    rows = np.array(list(itertools.product([0, 1], repeat=k)))
    fired = evaluate_matrix(rules, rows, [f"s{b}" for b in range(k)], [f"c{i}" for i in range(n_classes)])
    counts = fired.sum(axis=1)
    assert set(counts.tolist()) <= {0, 1}
    assert counts.sum() == n_classes  # unused codes fire nothing and are resampled


@pytest.mark.parametrize("n_classes", [3, 25])
def test_multiclass_generator(n_classes):
    ds, gt = gen_synthetic_multiclass(n_classes, 5, n_samples=2000, seed=3)
    fired = evaluate_matrix(gt.rules, ds.X, ds.attribute_names, ds.target_names)
    assert (fired.sum(axis=1) == 1).all()
    assert np.array_equal(fired.argmax(axis=1), ds.y)
    assert gt.n_attributes == ds.n_attributes == math.ceil(math.log2(n_classes)) + 5
    assert set(ds.y.tolist()) == set(range(n_classes))
    ds2, _ = gen_synthetic_multiclass(n_classes, 5, n_samples=2000, seed=3)
    assert ds2.same_as(ds)
    with pytest.raises(ValueError):
        gen_synthetic_multiclass(1, 5)


def test_multilabel_generator():
    ds, gt = gen_synthetic_multilabel(3, 20, n_samples=1000, seed=73)
    assert np.array_equal(evaluate_matrix(gt.rules, ds.X, ds.attribute_names, ds.target_names), ds.y.astype(bool))
    for head in ds.target_names:
        bodies = gt.rules.rules_for(head)
        assert 1 <= len(bodies) <= 3 and all(2 <= len(r.body) <= 5 for r in bodies)
    assert gen_synthetic_multilabel(3, 20, n_samples=1000, seed=73)[0].same_as(ds)
    with pytest.raises(ValueError):
        gen_synthetic_multilabel(2, 3, body_size=(4, 5))
    with pytest.raises(ValueError):
        gen_synthetic_multilabel(0, 3)


# mutual information

def test_mi_examples():
    assert mutual_information([1, 1, 1, 1], [0, 1, 0, 1]) == 0.0
    assert mutual_information([0, 1, 0, 1], [0, 1, 0, 1]) == pytest.approx(math.log(2), abs=1e-15)
    with pytest.raises(ValueError):
        mutual_information([0, 1], [0])
    with pytest.raises(ValueError):
        mutual_information([], [])


def test_mi_matches_joint_histogram_oracle():
    rng = np.random.default_rng(7)
    for _ in range(20):
        x = rng.integers(0, 2, 200)
        y = rng.integers(0, 2, size=(200, int(rng.integers(1, 4))))
        y[:, 0] = np.where(rng.random(200) < 0.3, x, y[:, 0])
        assert abs(mutual_information(x, y) - mi_joint_oracle(x, y)) < 1e-12


@settings(max_examples=80)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 5)), min_size=1, max_size=60))
def test_mi_bounds(pairs):
    x, y = zip(*pairs)
    mi = mutual_information(np.array(x), np.array(y))
    assert 0.0 <= mi <= math.log(2) + 1e-12
    assert mi == pytest.approx(mi_joint_oracle(x, y), abs=1e-12)


def _mi_fixture():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 2, size=(300, 2))
    X = np.column_stack([y[:, 0], rng.integers(0, 2, 300), rng.integers(0, 2, 300)])
    return Dataset(["key", "n1", "n2"], X, MULTILABEL, y, ["p", "q"])


def test_filter_by_mi():
    ds = _mi_fixture()
    mi = attribute_mi(ds)
    assert mi[0] > 0.5 > max(mi[1:])
    assert filter_by_mi(ds, 0.0).same_as(ds)
    kept = filter_by_mi(ds, (mi[0] + max(mi[1:])) / 2)
    assert kept.attribute_names == ["key"] and kept.metadata["mi_threshold"] > 0
    with pytest.raises(ValueError):
        filter_by_mi(ds, math.inf)
    with pytest.raises(ValueError):
        filter_by_mi(Dataset(["a"], [[1]], MULTICLASS, [0], ["p"]), 0.0)


# CUB

def test_cub_hand_fixture(tmp_path):
    fx = {
        "classes": ["001.A_Bird", "002.B_Bird"],
        "attributes": ["has_x::red", "has_y::blue"],
        "labels": {1: 0, 2: 1, 3: 0, 4: 1},
        "is_train": {1: True, 2: True, 3: True, 4: True},
        # has_x present in class 0 only; has_y tied 1-1 in class 1
        "records": [(1, 0, 1, 4), (3, 0, 1, 3), (2, 0, 0, 4), (4, 0, 0, 3),
                    (1, 1, 0, 4), (3, 1, 0, 2), (2, 1, 1, 4), (4, 1, 0, 3)],
    }
    (tmp_path / "attributes").mkdir()
    (tmp_path / "classes.txt").write_text("1 001.A_Bird\n2 002.B_Bird\n")
    (tmp_path / "attributes.txt").write_text("1 has_x::red\n2 has_y::blue\n")
    (tmp_path / "image_class_labels.txt").write_text("1 1\n2 2\n3 1\n4 2\n")
    (tmp_path / "attributes" / "image_attribute_labels.txt").write_text(
        "".join(f"{i} {a + 1} {p} {c} 12.5\n" for i, a, p, c in fx["records"]))
    raw = ingest_cub(tmp_path)
    assert raw.labels.tolist() == [0, 1, 0, 1]
    ds, mask = preprocess_cub(raw, 1, [1, 2, 3, 4])
    assert mask.tolist() == [True, True]
    assert ds.attribute_names == ["has_x_red", "has_y_blue"]
    assert ds.target_names == ["a_bird", "b_bird"]
    assert ds.X.tolist() == [[1, 0], [0, 1], [1, 0], [0, 1]]
    # each attribute is mostly present in one class only
    with pytest.raises(ValueError):
        preprocess_cub(raw, 2, [1, 2, 3, 4])

def test_cub_n_too_large(tmp_path):
    write_cub_fixture(np.random.default_rng(1), tmp_path, n_classes=2)
    raw = ingest_cub(tmp_path)
    with pytest.raises(ValueError, match="mostly present"):
        preprocess_cub(raw, 3, raw.image_ids)
    with pytest.raises(ValueError):
        preprocess_cub(raw, 0, raw.image_ids)


def test_cub_not_visible_absent_pairs_are_ignored(tmp_path):
    (tmp_path / "classes.txt").write_text("1 001.A\n")
    (tmp_path / "attributes.txt").write_text("1 has_x\n")
    (tmp_path / "image_class_labels.txt").write_text("1 1\n2 1\n3 1\n")
    # two unseen absences would outvote one presence if they were counted
    (tmp_path / "image_attribute_labels.txt").write_text("1 1 1 2 0\n2 1 0 1 0\n3 1 0 1 0\n")
    ds, mask = preprocess_cub(ingest_cub(tmp_path), 1, [1, 2, 3])
    assert mask.tolist() == [True] and ds.X.ravel().tolist() == [1, 1, 1]


def test_cub_all_unseen_counts_as_tie(tmp_path):
    (tmp_path / "classes.txt").write_text("1 001.A\n")
    (tmp_path / "attributes.txt").write_text("1 has_x\n")
    (tmp_path / "image_class_labels.txt").write_text("1 1\n")
    (tmp_path / "image_attribute_labels.txt").write_text("1 1 0 1 0\n")
    _, mask = preprocess_cub(ingest_cub(tmp_path), 1, [1])
    assert mask.tolist() == [True]


@pytest.mark.parametrize(
    "line, match",
    [("1 1 1 5 0.0", "certainty"), ("9 1 1 4 0.0", "unknown image"), ("1 3 1 4 0.0", "out of range"),
     ("1 1 2 4 0.0", "is_present"), ("1 1", "at least 4")],
)
def test_cub_validation(tmp_path, line, match):
    (tmp_path / "classes.txt").write_text("1 001.A\n")
    (tmp_path / "attributes.txt").write_text("1 has_x\n2 has_y\n")
    (tmp_path / "image_class_labels.txt").write_text("1 1\n")
    (tmp_path / "image_attribute_labels.txt").write_text(line + "\n")
    with pytest.raises(CubFormatError, match=match):
        ingest_cub(tmp_path)


def test_cub_missing_files(tmp_path):
    with pytest.raises(FileNotFoundError):
        ingest_cub(tmp_path / "nope")
    with pytest.raises(FileNotFoundError):
        ingest_cub(tmp_path)


def test_cub_against_oracle(tmp_path):
    rng = np.random.default_rng(20)
    for k in range(20):
        fx = write_cub_fixture(rng, tmp_path / str(k))
        raw = ingest_cub(tmp_path / str(k))
        assert raw.is_train.tolist() == [fx["is_train"][i] for i in raw.image_ids]
        train_ids = {i for i, t in fx["is_train"].items() if t}
        for n_min in range(1, len(fx["classes"]) + 1):
            want_mask, want_rows = algorithm1_oracle(fx, n_min, train_ids)
            if not any(want_mask):
                with pytest.raises(ValueError):
                    preprocess_cub(raw, n_min, train_ids)
                continue
            ds, mask = preprocess_cub(raw, n_min, train_ids)
            assert mask.tolist() == want_mask
            assert ds.X.tolist() == [want_rows[int(i)] for i in raw.image_ids]
            # every sample of a class shares one encoding
            for c in set(ds.y.tolist()):
                assert len({tuple(r) for r in ds.X[ds.y == c].tolist()}) == 1


def test_class_display_name():
    assert class_display_name("001.Black_footed_Albatross") == "black_footed_albatross"
    assert class_display_name("Laysan Albatross") == "laysan_albatross"
