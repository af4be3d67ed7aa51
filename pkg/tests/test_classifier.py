import json

import pytest

from oracles import CONV_C0, CONV_C4, best_gini_decrease
from stml import classifier as C
from stml.errors import ClassifierError, InvariantViolation, SchemaMismatch

ZERO = (0,) * 15


def vec(**kw):
    v = list(ZERO)
    for k, x in kw.items():
        v[int(k[1:])] = x
    return tuple(v)


def internal_nodes(tree, records):
    """(node, records routed to it) for every internal node."""
    out = []

    def walk(i, recs):
        n = tree.nodes[i]
        if isinstance(n, C.Split):
            out.append((n, recs))
            walk(n.left, [r for r in recs if r.x[n.feat] <= n.thr])
            walk(n.right, [r for r in recs if r.x[n.feat] > n.thr])

    walk(0, records)
    return out


def test_platform_bits():
    assert (C.FPGA, C.GPU, C.SM_CPU, C.DM_CPU) == (1, 2, 4, 8)
    assert C.NUM_CLASSES == 15
    assert C.platform_names(5) == ["fpga", "sm-cpu"]
    assert C.parse_platform("SM_CPU") == 4 and C.parse_platform("2") == 2
    for bad in ("3", "tpu", "0"):
        with pytest.raises(ValueError):
            C.parse_platform(bad)


def test_record_validation():
    with pytest.raises(ClassifierError):
        C.TrainingRecord(ZERO, 0)
    with pytest.raises(ClassifierError):
        C.TrainingRecord(ZERO, 16)
    with pytest.raises(InvariantViolation):
        C.TrainingRecord(vec(v3=2), 1)


def test_pure_root_is_single_leaf():
    recs = [C.TrainingRecord(vec(v1=k), C.GPU) for k in range(5)]
    t = C.fit(recs)
    assert len(t.nodes) == 1
    assert C.predict(t, vec(v5=9)) == 2


def test_single_informative_feature():
    recs = [C.TrainingRecord(vec(v11=0), 2), C.TrainingRecord(vec(v11=3), 1)]
    t = C.fit(recs)
    root = t.nodes[0]
    assert isinstance(root, C.Split) and root.feat == 11 and t.depth() == 1
    assert C.predict(t, vec(v11=0)) == 2
    assert C.predict(t, vec(v11=3)) == 1


def test_threshold_is_integer_midpoint():
    recs = [C.TrainingRecord(vec(v1=1), 4), C.TrainingRecord(vec(v1=4), 8)]
    assert C.fit(recs).nodes[0].thr == 2


def test_tie_breaks_prefer_lower_feature():
    recs = [C.TrainingRecord(vec(v1=0, v5=0), 4), C.TrainingRecord(vec(v1=1, v5=1), 8)]
    assert C.fit(recs).nodes[0].feat == 1


def test_leaf_majority_ties_to_smallest_mask():
    recs = [C.TrainingRecord(ZERO, 6), C.TrainingRecord(ZERO, 3)]
    t = C.fit(recs)
    assert t.nodes[0].mask == 3 and t.nodes[0].hist == {6: 1, 3: 1}


def test_min_gain_stops_growth():
    recs = C.synthetic_corpus(60, seed=1)
    full = C.fit(recs)
    stump = C.fit(recs, min_gain=1.0)
    assert len(stump.nodes) == 1 < len(full.nodes)


def test_fit_rejects_bad_input():
    with pytest.raises(ClassifierError):
        C.fit([])
    with pytest.raises(ClassifierError):
        C.fit([C.TrainingRecord(ZERO, 1)], min_gain=-0.1)


def test_corpus_memorization_and_split_optimality():
    recs = C.synthetic_corpus(200, seed=7)
    assert len({r.x for r in recs}) == 200
    assert {r.y for r in recs} <= set(range(1, 16))
    t = C.fit(recs)
    assert all(t.predict(r.x) == r.y for r in recs)
    for node, routed in internal_nodes(t, recs):
        xs, ys = [r.x for r in routed], [r.y for r in routed]
        chosen = C.gini([ys.count(y) for y in set(ys)])
        left = [y for x, y in zip(xs, ys) if x[node.feat] <= node.thr]
        right = [y for x, y in zip(xs, ys) if x[node.feat] > node.thr]
        n = len(ys)
        chosen -= sum(len(part) / n * C.gini([part.count(y) for y in set(part)]) for part in (left, right))
        assert chosen >= best_gini_decrease(xs, ys) - 1e-12


def test_leaf_histograms_sum_to_routed_records():
    recs = C.synthetic_corpus(80, seed=3)
    t = C.fit(recs)
    total = sum(sum(n.hist.values()) for n in t.nodes if isinstance(n, C.Leaf))
    assert total == len(recs)


def test_paths_are_consistent():
    t = C.fit(C.synthetic_corpus(120, seed=5))

    def walk(i, lo, hi):
        n = t.nodes[i]
        if isinstance(n, C.Leaf):
            return
        assert lo.get(n.feat, -1) < n.thr < hi.get(n.feat, 10 ** 9)
        walk(n.left, lo, {**hi, n.feat: n.thr + 1})
        walk(n.right, {**lo, n.feat: n.thr}, hi)

    walk(0, {}, {})


def test_is_final():
    recs = [C.TrainingRecord(vec(v11=0), C.GPU | C.SM_CPU), C.TrainingRecord(vec(v11=3), C.SM_CPU)]
    t = C.fit(recs)
    assert C.is_final(t, vec(v11=0), C.GPU)
    assert not C.is_final(t, vec(v11=3), C.GPU)
    with pytest.raises(ClassifierError):
        C.is_final(t, ZERO, C.GPU | C.FPGA)


def test_demo_labeling_on_convolution_states():
    assert C.demo_label(CONV_C0) & C.FPGA == 0
    assert C.is_final(C.DemoLabeler(), CONV_C4, C.FPGA)
    c3 = CONV_C0[:11] + (0,) + CONV_C0[12:]
    assert not C.is_final(C.DemoLabeler(), c3, C.FPGA)
    assert C.is_final(C.DemoLabeler(), c3, C.GPU)


def test_tree_trained_on_demo_labels_reproduces_them_on_conv():
    t = C.fit(C.synthetic_corpus(300, seed=0, extra=[CONV_C0, CONV_C4]))
    assert C.is_final(t, CONV_C4, C.FPGA)
    assert not C.is_final(t, CONV_C0, C.FPGA)


def test_json_round_trip():
    t = C.fit(C.synthetic_corpus(50, seed=2))
    u = C.Tree.from_json(t.to_json())
    assert u == t
    with pytest.raises(SchemaMismatch):
        C.Tree.from_json(json.dumps({"schema": "nope", "nodes": []}))


def test_corpus_file_round_trip(tmp_path):
    recs = C.synthetic_corpus(20, seed=4)
    path = tmp_path / "c.jsonl"
    C.save_corpus(recs, path)
    assert C.load_corpus(path) == recs
    path.write_text('{"features":[0],"mask":1}\n')
    with pytest.raises(InvariantViolation):
        C.load_corpus(path)
    path.write_text('{"mask":1}\n')
    with pytest.raises(ClassifierError):
        C.load_corpus(path)


def test_synthetic_corpus_deterministic():
    assert C.synthetic_corpus(30, seed=9) == C.synthetic_corpus(30, seed=9)
    assert C.synthetic_corpus(30, seed=9) != C.synthetic_corpus(30, seed=10)
