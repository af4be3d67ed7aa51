"""Guided transformation loop, demonstrated-sequence validation and traces."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

from . import rules
from .abstraction import extract_features
from .classifier import PLATFORMS, DemoLabeler, is_final
from .errors import ChainBreak, NonFinalTerminal, RuleInapplicable, SchemaMismatch, SequenceError, StmlError
from .minic import parse, print_program
from .minic.ast import Program
from .rl import POLICIES, QTable, RLParams, TrainingSequence, rs_select
from .rules import RuleId, Site

TRACE_SCHEMA = "stml-trace-v1"
OUTCOMES = ("final_reached", "budget_exhausted", "no_rule_selected")


@dataclass
class TraceStep:
    rule: RuleId
    site: Site
    before: Tuple[int, ...]
    after: Tuple[int, ...]


@dataclass
class Trace:
    target: int
    steps: List[TraceStep] = field(default_factory=list)
    outcome: Optional[str] = None
    source: str = ""
    result: str = ""

    @property
    def rules(self) -> List[RuleId]:
        return [s.rule for s in self.steps]

    def to_json(self) -> str:
        obj = {
            "schema": TRACE_SCHEMA,
            "target": self.target,
            "outcome": self.outcome,
            "steps": [{"rule": s.rule.short, "site": str(s.site), "before": list(s.before), "after": list(s.after)}
                      for s in self.steps],
            "source": self.source,
            "result": self.result,
        }
        return json.dumps(obj, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Trace":
        obj = json.loads(text)
        if obj.get("schema") != TRACE_SCHEMA:
            raise SchemaMismatch("expected schema %s, got %r" % (TRACE_SCHEMA, obj.get("schema")))
        steps = [TraceStep(RuleId.parse(s["rule"]), Site.parse(s["site"]), tuple(s["before"]), tuple(s["after"]))
                 for s in obj["steps"]]
        return cls(int(obj["target"]), steps, obj["outcome"], obj["source"], obj["result"])

    def summary(self) -> List[str]:
        lines = ["step %d: %s at %s  %s -> %s" % (i + 1, s.rule.short, s.site, list(s.before), list(s.after))
                 for i, s in enumerate(self.steps)]
        lines.append("outcome: %s after %d step(s)" % (self.outcome, len(self.steps)))
        return lines


def guide(p: Program, target: int, q: QTable, tree=None, budget: int = 50,
          policy: str = "exact") -> Tuple[Program, Trace]:
    """Apply learned rule choices to ``p`` until the classifier accepts it for ``target``.

    The first enumerated site of the selected rule is used.  Without a tree the
    demo labeling decides finality.
    """
    if target not in PLATFORMS.values():
        raise StmlError("target must be a single platform, got %r" % target)
    if budget < 0:
        raise StmlError("budget must be >= 0")
    tree = tree or DemoLabeler()
    trace = Trace(target, source=print_program(p))
    x = extract_features(p)
    while True:
        if is_final(tree, x, target):
            trace.outcome = "final_reached"
            break
        if budget == 0:
            trace.outcome = "budget_exhausted"
            break
        rule = rs_select(q, x, policy)
        if rule is None:
            trace.outcome = "no_rule_selected"
            break
        sites = rules.sites_for(p, rule)
        if not sites:
            raise RuleInapplicable("selected rule %s has no applicable site in state %s" % (rule.short, list(x)))
        p = rules.apply(p, rule, sites[0])
        after = extract_features(p)
        trace.steps.append(TraceStep(rule, sites[0], x, after))
        x = after
        budget -= 1
    trace.result = print_program(p)
    return p, trace


def replay(trace: Trace) -> Program:
    """Re-run a trace's rule applications on its recorded source."""
    p = parse(trace.source)
    for i, step in enumerate(trace.steps):
        if extract_features(p) != tuple(step.before):
            raise ChainBreak("trace step %d starts from a different abstraction" % i, i)
        p = rules.apply(p, step.rule, step.site)
    return p


# -- demonstrated sequences ----------------------------------------------------------------

def _site_from(value, p: Program, rule: RuleId) -> Site:
    """A manifest site: a path string like ``0.8@i`` or an index into the site list."""
    if isinstance(value, int):
        sites = rules.sites_for(p, rule)
        if not 0 <= value < len(sites):
            raise SequenceError("site index %d out of range (%d sites for %s)" % (value, len(sites), rule.short))
        return sites[value]
    return Site.parse(value)


def _read_program(base_dir, name) -> Program:
    with open(os.path.join(base_dir, name)) as fh:
        return parse(fh.read())


def validate_sequence(entry: dict, base_dir=".", classifier=None) -> TrainingSequence:
    """Check a manifest entry step by step and return it as a TrainingSequence."""
    classifier = classifier or DemoLabeler()
    target = int(entry["target"])
    raw = entry["steps"]
    if len(raw) < 2:
        raise SequenceError("a sequence needs at least two programs")
    programs = [_read_program(base_dir, s["file"]) for s in raw]
    steps = []
    for i, (step, prog) in enumerate(zip(raw, programs)):
        if i == len(raw) - 1:
            steps.append((prog, None, None))
            break
        if step.get("rule") is None:
            raise SequenceError("step %d has no rule" % i, i)
        rule = RuleId.parse(step["rule"])
        site = _site_from(step.get("site", 0), prog, rule)
        try:
            out = rules.apply(prog, rule, site)
        except StmlError as exc:
            raise ChainBreak("step %d (%s): %s" % (i, step["file"], exc), i) from None
        if out != programs[i + 1]:
            raise ChainBreak("step %d: applying %s at %s to %s does not give %s"
                             % (i, rule.short, site, step["file"], raw[i + 1]["file"]), i)
        steps.append((prog, rule, site))
    x = extract_features(programs[-1])
    if not is_final(classifier, x, target):
        raise NonFinalTerminal("last program %s is not final for target %d (abstraction %s)"
                               % (raw[-1]["file"], target, list(x)), len(raw) - 1)
    rewards = [s.get("reward") for s in raw[:-1]]
    return TrainingSequence(steps, float(entry["reward"]), target,
                            rewards if any(r is not None for r in rewards) else None)


def load_manifest(path, classifier=None) -> List[TrainingSequence]:
    with open(path) as fh:
        obj = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))
    out = []
    for k, entry in enumerate(obj["sequences"]):
        try:
            out.append(validate_sequence(entry, base, classifier))
        except SequenceError as exc:
            raise type(exc)("sequence %d: %s" % (k, exc), exc.index) from None
    return out


# -- configuration -------------------------------------------------------------------------

@dataclass
class Config:
    alpha: float = 0.5
    gamma: float = 0.6
    episodes: int = 10_000
    max_episode_steps: int = 20
    seed: int = 0
    min_gain: float = 0.0
    policy: str = "exact"
    budget: int = 50
    q_path: Optional[str] = None
    tree_path: Optional[str] = None

    def __post_init__(self):
        self.rl_params()
        if self.min_gain < 0:
            raise StmlError("min_gain must be >= 0")
        if self.policy not in POLICIES:
            raise StmlError("policy must be one of %s" % (POLICIES,))
        if self.budget < 0:
            raise StmlError("budget must be >= 0")

    def rl_params(self) -> RLParams:
        return RLParams(self.alpha, self.gamma, self.episodes, self.max_episode_steps, self.seed)

    @classmethod
    def from_dict(cls, d: dict) -> "Config":
        known = set(asdict(cls()))
        unknown = set(d) - known
        if unknown:
            raise StmlError("unknown config keys: %s" % ", ".join(sorted(unknown)))
        return cls(**d)
