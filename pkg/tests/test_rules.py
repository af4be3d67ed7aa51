import numpy as np
import pytest

from oracles import CONV_C4
from stml import abstraction as A
from stml import corpus
from stml.errors import PreconditionViolated, SemanticGuardError
from stml.minic import evaluate, outputs_equal, parse, print_program, random_inputs
from stml.rules import RULE_INFO, RuleId, Site, applicable, apply, sites_for

R0, R1, R2, R3 = RuleId


def equivalent(p, q, entry, trials=100, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        ins = random_inputs(p, entry, rng)
        if not outputs_equal(evaluate(p, entry, ins), evaluate(q, entry, ins)):
            return False
    return True


def test_rule_ids_and_parsing():
    assert [r.short for r in RuleId] == ["R0", "R1", "R2", "R3"]
    assert RuleId.parse("R1") is R1
    assert RuleId.parse("R1_collapse_loops") is R1
    assert RuleId.parse("2") is R2
    with pytest.raises(ValueError):
        RuleId.parse("R9")
    assert set(RULE_INFO) == set(RuleId)


def test_site_text_round_trip():
    s = Site((0, 8), "i")
    assert str(s) == "0.8@i" and Site.parse("0.8@i") == s
    assert Site.parse("0.3") == Site((0, 3), "")
    for bad in ("", "out_of_range", "0..1", "0.1@", "a.b"):
        with pytest.raises(ValueError):
            Site.parse(bad)


def test_conv_initial_enumeration(conv):
    found = applicable(conv)
    assert [(r, s.target) for r, s in found] == [(R0, "input_image"), (R0, "kernel"), (R0, "output_image")]
    assert sites_for(conv, R1) == []


def test_empty_function_has_no_sites():
    assert applicable(parse("void f(){}")) == []


def test_single_normalized_1d_loop_has_no_sites():
    assert applicable(parse("void f(int a[4]){ int i; for(i=0;i<4;i++) a[i]=i; }")) == []


def test_conv_walk_through(conv):
    p = conv
    seen = [A.extract_features(p)]
    for rule in (R0, R0, R0, R1):
        assert rule in [r for r, _ in applicable(p)]
        p = apply(p, rule, sites_for(p, rule)[0])
        seen.append(A.extract_features(p))
    assert seen[-1] == CONV_C4
    assert [v[A.NON_1D_ARRAYS] for v in seen] == [3, 2, 1, 0, 0]
    assert (seen[3][A.TOTAL_LOOPS] - seen[4][A.TOTAL_LOOPS], seen[3][A.MAX_DEPTH] - seen[4][A.MAX_DEPTH]) == (1, 1)
    assert equivalent(conv, p, "conv2d")


def test_collapse_output_shape(conv):
    p = conv
    for rule in (R0, R0, R0, R1):
        p = apply(p, rule, sites_for(p, rule)[0])
    text = print_program(p)
    assert "for (i_j = 0; i_j < 9; i_j++) {" in text
    assert "i = i_j / 3;" in text and "j = i_j % 3;" in text


def test_collapse_preserves_iteration_count():
    src = """void f(int a[12]) {
        int i; int j;
        for (i = 0; i < 3; i++)
            for (j = 0; j < 4; j++)
                a[i * 4 + j] = a[i * 4 + j] + 1;
    }"""
    p = parse(src)
    q = apply(p, R1, sites_for(p, R1)[0])
    ones = [np.zeros(12, dtype=np.int64)]
    (before,) = evaluate(p, "f", ones)
    (after,) = evaluate(q, "f", ones)
    assert before.sum() == after.sum() == 12
    assert (after == 1).all()


def test_r0_on_1d_array_is_rejected():
    p = parse("void f(int a[4]){ a[0] = 1; }")
    with pytest.raises(PreconditionViolated):
        apply(p, R0, Site((0, 0), "a"))


def test_r0_refuses_array_passed_whole():
    p = parse("void g(int m[2][2]){ m[0][0] = 1; }\nvoid f(int a[2][2]){ g(a); }")
    assert [s.target for s in sites_for(p, R0)] == ["m"]
    with pytest.raises((PreconditionViolated, SemanticGuardError)):
        apply(p, R0, Site((1, 0), "a"))


def test_unresolvable_site():
    p = corpus.load_program("conv2d")
    with pytest.raises(PreconditionViolated):
        apply(p, R0, Site((7, 7), "x"))


def test_r1_requires_dead_indices():
    p = parse("""void f(int a[6], int r[1]) {
        int i; int j;
        for (i = 0; i < 2; i++)
            for (j = 0; j < 3; j++)
                a[i * 3 + j] = i + j;
        r[0] = i;
    }""")
    assert sites_for(p, R1) == []


def test_r2_listing_loop():
    p = corpus.load_program("shifted_left")
    (site,) = sites_for(p, R2)
    q = apply(p, R2, site)
    text = print_program(q)
    assert "for (i = 0; i < N / 2; i++) {" in text
    assert "v[2 * i + 1] = " in text
    assert A.extract_features(q)[A.NON_NORMALIZED] == 0
    assert equivalent(p, q, "shifted_left")


def test_r3_aux_index():
    p = corpus.load_program("aux_index")
    (site,) = sites_for(p, R3)
    q = apply(p, R3, site)
    assert A.extract_features(q)[A.AUX_INDEX] == 0
    assert "aux++" not in print_program(q)
    assert equivalent(p, q, "aux_index")


def test_r3_refuses_aux_read_after_loop():
    p = parse("""void f(int v[8], int w[8], int r[1]) {
        int j; int aux;
        aux = 0;
        for (j = 0; j < 8; j++) { w[j] = v[aux]; aux++; }
        r[0] = aux;
    }""")
    assert sites_for(p, R3) == []


def test_apply_is_pure(conv):
    site = sites_for(conv, R0)[1]
    before = print_program(conv)
    assert apply(conv, R0, site) == apply(conv, R0, site)
    assert print_program(conv) == before


DELTAS = {R0: {A.NON_1D_ARRAYS: -1}, R1: {A.TOTAL_LOOPS: -1}, R2: {A.NON_NORMALIZED: -1}, R3: {A.AUX_INDEX: -1}}


def _closure(p, depth):
    """Every program reachable from ``p`` in at most ``depth`` rule applications."""
    frontier, seen = [p], {print_program(p)}
    out = [p]
    for _ in range(depth):
        nxt = []
        for q in frontier:
            for rule, site in applicable(q):
                r = apply(q, rule, site)
                key = print_program(r)
                if key not in seen:
                    seen.add(key)
                    nxt.append(r)
        out.extend(nxt)
        frontier = nxt
    return out


@pytest.mark.parametrize("stem", corpus.program_stems())
def test_feature_deltas_and_equivalence_over_rewrite_closure(stem):
    base = corpus.load_program(stem)
    for p in _closure(base, 3):
        v = A.extract_features(p)
        for rule, site in applicable(p):
            q = apply(p, rule, site)
            w = A.extract_features(q)
            for idx, delta in DELTAS[rule].items():
                assert w[idx] - v[idx] == delta, (stem, rule, site)
            if rule is R1 and not site.path[2:]:
                assert w[A.MAX_DEPTH] <= v[A.MAX_DEPTH]
            assert equivalent(p, q, stem, trials=25), (stem, rule, str(site))
