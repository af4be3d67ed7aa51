"""Classification tree deciding which platforms a code abstraction is ready for.

Labels are 4-bit platform masks (bit 0 FPGA, bit 1 GPU, bit 2 SM-CPU,
bit 3 DM-CPU).  Training data uses the 15 non-empty masks; a prediction
is "final" for a target platform when the target's bit is set.

Induction is greedy CART with Gini impurity: every (feature, threshold)
pair with the threshold at the integer midpoint between consecutive
observed values is scanned, records with ``x[feat] <= thr`` go left.
"""
from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .abstraction import (
    HOISTED_MODS, IRREGULAR, ITER_INDEPENDENT, MAX_DEPTH, NON_1D_ARRAYS, NON_STATIC,
    NUM_FEATURES, SHIFTED_WRITES, GLOBAL_WRITES, LOOP_SCHED, NON_NORMALIZED, TOTAL_LOOPS,
    BINARY_FEATURES, check_invariants,
)
from .errors import ClassifierError, SchemaMismatch

SCHEMA = "stml-tree-v1"

FPGA, GPU, SM_CPU, DM_CPU = 1, 2, 4, 8
PLATFORMS = {"fpga": FPGA, "gpu": GPU, "sm-cpu": SM_CPU, "dm-cpu": DM_CPU}
NUM_CLASSES = 2 ** len(PLATFORMS) - 1


def platform_names(mask: int) -> List[str]:
    return [name for name, bit in PLATFORMS.items() if mask & bit]


def parse_platform(text) -> int:
    """Accept a platform name (fpga, gpu, sm-cpu, dm-cpu) or a single-bit mask."""
    key = str(text).strip().lower().replace("_", "-")
    if key in PLATFORMS:
        return PLATFORMS[key]
    try:
        mask = int(key, 0)
    except ValueError:
        raise ValueError("unknown platform %r (expected one of %s)" % (text, ", ".join(PLATFORMS))) from None
    if mask not in PLATFORMS.values():
        raise ValueError("target mask must have exactly one bit set, got %r" % text)
    return mask


@dataclass(frozen=True)
class TrainingRecord:
    x: Tuple[int, ...]
    y: int

    def __post_init__(self):
        check_invariants(self.x)
        if not 1 <= self.y <= NUM_CLASSES:
            raise ClassifierError("class mask must be in 1..%d, got %r" % (NUM_CLASSES, self.y))


def gini(counts) -> float:
    n = sum(counts)
    if n == 0:
        return 0.0
    return 1.0 - sum((c / n) ** 2 for c in counts)


@dataclass
class Leaf:
    mask: int
    hist: Dict[int, int]


@dataclass
class Split:
    feat: int
    thr: int
    left: int
    right: int


@dataclass
class Tree:
    """Flat node list; node 0 is the root."""
    nodes: list = field(default_factory=list)

    def predict(self, x: Sequence[int]) -> int:
        node = self.nodes[0]
        while isinstance(node, Split):
            node = self.nodes[node.left if x[node.feat] <= node.thr else node.right]
        return node.mask

    def to_json(self) -> str:
        out = []
        for n in self.nodes:
            if isinstance(n, Split):
                out.append({"feat": n.feat, "thr": n.thr, "l": n.left, "r": n.right})
            else:
                out.append({"mask": n.mask, "hist": {str(k): v for k, v in sorted(n.hist.items())}})
        return json.dumps({"schema": SCHEMA, "nodes": out}, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Tree":
        obj = json.loads(text)
        if obj.get("schema") != SCHEMA:
            raise SchemaMismatch("expected schema %s, got %r" % (SCHEMA, obj.get("schema")))
        nodes = []
        for n in obj["nodes"]:
            if "feat" in n:
                nodes.append(Split(int(n["feat"]), int(n["thr"]), int(n["l"]), int(n["r"])))
            else:
                nodes.append(Leaf(int(n["mask"]), {int(k): int(v) for k, v in n["hist"].items()}))
        if not nodes:
            raise SchemaMismatch("tree has no nodes")
        return cls(nodes)

    def depth(self, i=0) -> int:
        n = self.nodes[i]
        if isinstance(n, Leaf):
            return 0
        return 1 + max(self.depth(n.left), self.depth(n.right))


def _majority(hist: Dict[int, int]) -> int:
    best = max(hist.values())
    return min(m for m, c in hist.items() if c == best)


def best_split(xs, ys) -> Optional[Tuple[int, int, float]]:
    """(feature, threshold, gini decrease) of the best split, or None.

    Ties keep the first candidate in (feature, threshold) ascending order.
    """
    n = len(ys)
    total = Counter(ys)
    parent = gini(total.values())
    best = None
    for feat in range(NUM_FEATURES):
        order = sorted(range(n), key=lambda i: xs[i][feat])
        left = Counter()
        for pos in range(n - 1):
            i = order[pos]
            left[ys[i]] += 1
            lo, hi = xs[i][feat], xs[order[pos + 1]][feat]
            if lo == hi:
                continue
            nl = pos + 1
            right = total - left
            child = (nl / n) * gini(left.values()) + ((n - nl) / n) * gini(right.values())
            gain = parent - child
            if best is None or gain > best[2]:
                best = (feat, (lo + hi) // 2, gain)
    return best


def fit(records: Sequence[TrainingRecord], min_gain: float = 0.0) -> Tree:
    """Grow a tree top-down until nodes are pure or the best gain < ``min_gain``."""
    if not records:
        raise ClassifierError("cannot fit a tree on an empty training set")
    if min_gain < 0:
        raise ClassifierError("min_gain must be >= 0")
    tree = Tree()

    def grow(idx) -> int:
        ys = [records[i].y for i in idx]
        hist = dict(Counter(ys))
        node_id = len(tree.nodes)
        tree.nodes.append(Leaf(_majority(hist), hist))
        if len(hist) == 1:
            return node_id
        split = best_split([records[i].x for i in idx], ys)
        if split is None or split[2] < min_gain:
            return node_id
        feat, thr, _ = split
        left = [i for i in idx if records[i].x[feat] <= thr]
        right = [i for i in idx if records[i].x[feat] > thr]
        l = grow(left)
        r = grow(right)
        tree.nodes[node_id] = Split(feat, thr, l, r)
        return node_id

    grow(list(range(len(records))))
    return tree


def predict(t, x: Sequence[int]) -> int:
    return t.predict(x)


def is_final(t, x: Sequence[int], target: int) -> bool:
    """True iff the classifier says ``x`` is ready for the single platform ``target``.

    ``t`` is anything with a ``predict(x) -> mask`` method (a fitted Tree or
    the demo labeling).
    """
    if target not in PLATFORMS.values():
        raise ClassifierError("target must have exactly one platform bit set, got %r" % target)
    return bool(t.predict(x) & target)


# -- demo labeling and synthetic corpora --------------------------------------------------

def demo_label(x: Sequence[int]) -> int:
    """Stand-in readiness rules used to label synthetic training data.

    GPU: no multi-dim arrays, no break/continue, some iteration-independent loop.
    FPGA: GPU-ready, no shifted writes, static loop limits, nesting depth <= 2.
    SM-CPU: some iteration-independent loop.  DM-CPU: that, and no global writes.
    Returns 0 when the code is ready for nothing.
    """
    parallel = x[ITER_INDEPENDENT] >= 1
    gpu = x[NON_1D_ARRAYS] == 0 and x[IRREGULAR] == 0 and parallel
    fpga = gpu and x[SHIFTED_WRITES] == 0 and x[NON_STATIC] == 0 and x[MAX_DEPTH] <= 2
    mask = 0
    if fpga:
        mask |= FPGA
    if gpu:
        mask |= GPU
    if parallel:
        mask |= SM_CPU
    if parallel and x[GLOBAL_WRITES] == 0:
        mask |= DM_CPU
    return mask


class DemoLabeler:
    """Adapter giving ``demo_label`` the classifier interface."""

    def predict(self, x):
        return demo_label(x)


def random_vector(rng: random.Random) -> Tuple[int, ...]:
    """A random abstraction vector satisfying every vector invariant."""
    v = [0] * NUM_FEATURES
    loops = rng.randint(0, 6)
    v[TOTAL_LOOPS] = loops
    for i in range(NUM_FEATURES):
        if i in (TOTAL_LOOPS, MAX_DEPTH, NON_NORMALIZED, ITER_INDEPENDENT, LOOP_SCHED):
            continue
        v[i] = rng.randint(0, 1) if i in BINARY_FEATURES else rng.randint(0, 4)
    if loops:
        v[MAX_DEPTH] = rng.randint(0, loops - 1)
        v[NON_NORMALIZED] = rng.randint(0, loops)
        v[ITER_INDEPENDENT] = rng.randint(0, loops)
        v[LOOP_SCHED] = rng.randint(0, 1)
    v[HOISTED_MODS] = min(v[HOISTED_MODS], 4)
    return tuple(v)


def synthetic_corpus(n: int, seed: int = 0, label=demo_label, extra=()) -> List[TrainingRecord]:
    """``n`` distinct records labeled by ``label``; vectors labeled 0 are skipped.

    Vectors in ``extra`` are included first (if their label is non-zero).
    """
    rng = random.Random(seed)
    seen = set()
    out = []
    for x in extra:
        x = tuple(x)
        y = label(x)
        if y and x not in seen:
            seen.add(x)
            out.append(TrainingRecord(x, y))
    attempts = 0
    while len(out) < n:
        attempts += 1
        if attempts > 1000 * max(n, 1):
            raise ClassifierError("could not draw %d distinct labeled vectors" % n)
        x = random_vector(rng)
        y = label(x)
        if y == 0 or x in seen:
            continue
        seen.add(x)
        out.append(TrainingRecord(x, y))
    return out


def record_line(r: TrainingRecord) -> str:
    return json.dumps({"features": list(r.x), "mask": r.y}, separators=(",", ":"))


def save_corpus(records, path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(record_line(r) + "\n")


def load_corpus(path) -> List[TrainingRecord]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                out.append(TrainingRecord(tuple(int(v) for v in obj["features"]), int(obj["mask"])))
            except (KeyError, ValueError, TypeError) as exc:
                raise ClassifierError("%s:%d: bad training record (%s)" % (path, lineno, exc)) from None
    return out
