"""Tabular Q-learning over abstraction states.

States are interned abstraction vectors; actions are the rewrite rules in
``RuleId`` order.  Training replays demonstrated transformation sequences:
each episode starts at a random non-final state, follows the demonstrated
transition graph greedily, then updates the visited pairs from the last
transition backward with

    q[s, a] += alpha * (r + gamma * q[s', a'] - q[s, a])

where ``a'`` is the greedy action at ``s'``.  Rows of final states keep
their initial value forever.
"""
from __future__ import annotations

import json
import random
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .abstraction import check_invariants, extract_features
from .errors import FinalityConflict, NoTransition, RLError, SchemaMismatch
from .minic.ast import Program
from .rules import RuleId, Site

SCHEMA = "stml-q-v1"
ACTIONS: Tuple[RuleId, ...] = tuple(RuleId)
POLICIES = ("exact", "nearest")


@dataclass(frozen=True)
class RLParams:
    alpha: float = 0.5
    gamma: float = 0.6
    episodes: int = 10_000
    max_episode_steps: int = 20
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise RLError("alpha must be in (0, 1], got %r" % self.alpha)
        if not 0 < self.gamma <= 1:
            raise RLError("gamma must be in (0, 1], got %r" % self.gamma)
        if self.episodes < 0 or self.max_episode_steps < 1:
            raise RLError("episodes must be >= 0 and max_episode_steps >= 1")
        if self.gamma == 1:
            warnings.warn("gamma == 1: Q values may diverge on cyclic transition graphs", RuntimeWarning)


@dataclass
class TrainingSequence:
    """Demonstrated chain: ``steps[i] = (program_i, rule_i, site_i)``; the
    final element carries ``rule = None`` (the terminal program)."""
    steps: List[Tuple[Program, Optional[RuleId], Optional[Site]]]
    terminal_reward: float
    target: int
    rewards: Optional[List[float]] = None

    def reward(self, i: int) -> float:
        """Reward for the transition out of step ``i``."""
        if self.rewards is not None and self.rewards[i] is not None:
            return self.rewards[i]
        return self.terminal_reward if i == len(self.steps) - 2 else 0.0


@dataclass
class QTable:
    q_init: float = 1.0
    states: Dict[Tuple[int, ...], int] = field(default_factory=dict)
    vectors: List[Tuple[int, ...]] = field(default_factory=list)
    final: List[bool] = field(default_factory=list)
    q: List[List[float]] = field(default_factory=list)

    @property
    def num_states(self) -> int:
        return len(self.vectors)

    def intern(self, x: Sequence[int], final: bool) -> int:
        x = tuple(x)
        idx = self.states.get(x)
        if idx is not None:
            if self.final[idx] != bool(final):
                raise FinalityConflict("state %r already interned with final=%s" % (x, self.final[idx]))
            return idx
        check_invariants(x)
        idx = len(self.vectors)
        self.states[x] = idx
        self.vectors.append(x)
        self.final.append(bool(final))
        self.q.append([float(self.q_init)] * len(ACTIONS))
        return idx

    def lookup(self, x: Sequence[int]) -> Optional[int]:
        return self.states.get(tuple(x))

    def value(self, x: Sequence[int], rule: RuleId) -> float:
        return self.q[self.states[tuple(x)]][int(rule)]

    def to_json(self) -> str:
        obj = {
            "schema": SCHEMA,
            "q_init": self.q_init,
            "actions": [r.short for r in ACTIONS],
            "states": [{"features": list(x), "final": f, "row": row}
                       for x, f, row in zip(self.vectors, self.final, self.q)],
        }
        return json.dumps(obj, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "QTable":
        obj = json.loads(text)
        if obj.get("schema") != SCHEMA:
            raise SchemaMismatch("expected schema %s, got %r" % (SCHEMA, obj.get("schema")))
        if [RuleId.parse(a) for a in obj["actions"]] != list(ACTIONS):
            raise SchemaMismatch("action list %r does not match the rule set" % (obj["actions"],))
        t = cls(q_init=float(obj["q_init"]))
        for st in obj["states"]:
            i = t.intern(tuple(int(v) for v in st["features"]), bool(st["final"]))
            row = [float(v) for v in st["row"]]
            if len(row) != len(ACTIONS):
                raise SchemaMismatch("Q row has %d entries, expected %d" % (len(row), len(ACTIONS)))
            t.q[i] = row
        return t


def q_update(q: QTable, s: int, a: int, r_next: float, s_next: int, a_next: int, params: RLParams) -> None:
    if q.final[s]:
        return
    old = q.q[s][a]
    q.q[s][a] = old + params.alpha * (r_next + params.gamma * q.q[s_next][a_next] - old)


def _argmax(values, candidates, rng: Optional[random.Random]):
    best = max(values[a] for a in candidates)
    ties = [a for a in candidates if values[a] == best]
    return ties[0] if rng is None else rng.choice(ties)


def intern_sequences(q: QTable, sequences, classifier=None) -> Dict[Tuple[int, int], List[Tuple[int, float]]]:
    """Intern every state of ``sequences`` and return the transition graph
    ``{(state, action): [(next_state, reward), ...]}``.

    Terminal programs are final.  With a ``classifier``, intermediate programs
    are final when it labels them ready for the sequence target; otherwise
    they are non-final.
    """
    from .classifier import is_final

    graph: Dict[Tuple[int, int], List[Tuple[int, float]]] = {}
    for seq in sequences:
        ids = []
        last = len(seq.steps) - 1
        for i, (prog, _, _) in enumerate(seq.steps):
            x = extract_features(prog)
            fin = i == last or (classifier is not None and is_final(classifier, x, seq.target))
            ids.append(q.intern(x, fin))
        for i in range(last):
            rule = seq.steps[i][1]
            if rule is None:
                raise RLError("step %d of a sequence has no rule" % i)
            edge = (ids[i + 1], float(seq.reward(i)))
            outs = graph.setdefault((ids[i], int(rule)), [])
            if edge not in outs:
                outs.append(edge)
    return graph


def train(q: QTable, sequences, params: RLParams = RLParams(), classifier=None) -> QTable:
    """Train ``q`` in place on demonstrated sequences and return it."""
    graph = intern_sequences(q, sequences, classifier)
    actions_from: Dict[int, List[int]] = {}
    for s, a in sorted(graph):
        actions_from.setdefault(s, []).append(a)
    starts = [s for s in range(q.num_states) if not q.final[s]]
    rng = random.Random(params.seed)

    def greedy(s, tie_rng):
        acts = actions_from.get(s)
        if not acts:
            acts = range(len(ACTIONS))
        return _argmax(q.q[s], acts, tie_rng)

    if not starts:
        return q
    for _ in range(params.episodes):
        s = rng.choice(starts)
        visited = []
        for _ in range(params.max_episode_steps):
            if q.final[s]:
                break
            if s not in actions_from:
                raise NoTransition("state %r has no demonstrated outgoing transition" % (q.vectors[s],))
            a = greedy(s, rng)
            outs = graph[(s, a)]
            s_next, r = outs[0] if len(outs) == 1 else rng.choice(outs)
            visited.append((s, a, r, s_next))
            s = s_next
        for s, a, r, s_next in reversed(visited):
            q_update(q, s, a, r, s_next, greedy(s_next, None), params)
    return q


def nearest_state(q: QTable, x: Sequence[int]) -> Optional[int]:
    """Interned non-final state closest to ``x`` in L1 distance (lowest index on ties)."""
    best = None
    for i, v in enumerate(q.vectors):
        if q.final[i]:
            continue
        d = sum(abs(a - b) for a, b in zip(v, x))
        if best is None or d < best[0]:
            best = (d, i)
    return None if best is None else best[1]


def rs_select(q: QTable, x: Sequence[int], policy: str = "exact") -> Optional[RuleId]:
    """Greedy rule for abstraction ``x``; None for final or unknown states."""
    if policy not in POLICIES:
        raise RLError("unknown-state policy must be one of %s, got %r" % (POLICIES, policy))
    s = q.lookup(x)
    if s is None:
        if policy == "exact":
            return None
        s = nearest_state(q, x)
        if s is None:
            return None
    if q.final[s]:
        return None
    return ACTIONS[_argmax(q.q[s], range(len(ACTIONS)), None)]
