"""Reference implementations used as test oracles.

Each one is written independently of the package code it checks: plain
loops, no shared helpers.
"""
import numpy as np

# Hand count for the bundled conv2d kernel: 4 loop levels (depth 3),
# i and j annotated iteration_independent, three 2-D arrays, nothing else.
CONV_C0 = (3, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 3, 0, 4, 0)
# After flattening all arrays and collapsing i/j: one loop fewer, depth 2,
# one annotated loop left.
CONV_C4 = (2, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 3, 0)


def conv2d_valid(image, kernel):
    """'Valid' 2-D correlation, summed in the same order as the C kernel."""
    ih, iw = image.shape
    kh, kw = kernel.shape
    out = np.zeros((ih - kh + 1, iw - kw + 1))
    for i in range(out.shape[0]):
        for j in range(out.shape[1]):
            acc = 0.0
            for a in range(kh):
                for b in range(kw):
                    acc += image[i + a][j + b] * kernel[a][b]
            out[i][j] = acc
    return out


def _gini(labels):
    n = len(labels)
    if n == 0:
        return 0.0
    counts = {}
    for y in labels:
        counts[y] = counts.get(y, 0) + 1
    return 1.0 - sum((c / n) ** 2 for c in counts.values())


def best_gini_decrease(xs, ys):
    """Largest impurity decrease over every feature and every threshold
    between consecutive distinct values (None if no split separates anything)."""
    n = len(ys)
    parent = _gini(ys)
    best = None
    for f in range(len(xs[0])):
        values = sorted({x[f] for x in xs})
        for lo, hi in zip(values, values[1:]):
            thr = (lo + hi) // 2
            left = [y for x, y in zip(xs, ys) if x[f] <= thr]
            right = [y for x, y in zip(xs, ys) if x[f] > thr]
            dec = parent - (len(left) / n * _gini(left) + len(right) / n * _gini(right))
            if best is None or dec > best:
                best = dec
    return best


def chain_fixed_point(reward, gamma, q_init, length):
    """Greedy-path values of a demonstrated chain of ``length`` transitions
    with zero rewards except ``reward`` on the last one.

    Iterates v <- r + gamma * v_next to convergence, first state first.
    """
    values = [q_init] * length
    for _ in range(10_000):
        nxt = list(values)
        for t in range(length):
            r = reward if t == length - 1 else 0.0
            v_next = q_init if t == length - 1 else values[t + 1]
            nxt[t] = r + gamma * v_next
        if max(abs(a - b) for a, b in zip(nxt, values)) < 1e-15:
            return nxt
        values = nxt
    return values


def value_iteration(edges, final, gamma, q_init, n_actions, sweeps=10_000):
    """Q* on a deterministic demonstrated graph.

    ``edges`` maps (state, action) -> (next_state, reward); successors take the
    max over their own demonstrated actions, final states are worth q_init.
    """
    states = {s for s, _ in edges} | {t for t, _ in edges.values()}
    q = {(s, a): q_init for s in states for a in range(n_actions)}
    out = {}
    for (s, a), (t, _) in edges.items():
        out.setdefault(s, []).append(a)

    def v(s):
        if final.get(s):
            return q_init
        acts = out.get(s) or range(n_actions)
        return max(q[(s, a)] for a in acts)

    for _ in range(sweeps):
        delta = 0.0
        for (s, a), (t, r) in sorted(edges.items()):
            if final.get(s):
                continue
            new = r + gamma * v(t)
            delta = max(delta, abs(new - q[(s, a)]))
            q[(s, a)] = new
        if delta < 1e-13:
            break
    return q
