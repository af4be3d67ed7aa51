"""Command-line interface (``stml``).

Exit status: 0 on success, 1 on domain errors, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import abstraction, classifier, rules
from .driver import Config, Trace, guide, load_manifest, replay
from .errors import StmlError
from .minic import parse, print_program
from .rl import POLICIES, QTable, train

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _read(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError("cannot read %s: %s" % (path, exc.strerror)) from None


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _program(path):
    return parse(_read(path))


def _tree(path):
    return classifier.DemoLabeler() if path is None else classifier.Tree.from_json(_read(path))


def _target(text):
    try:
        return classifier.parse_platform(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("STML_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError("STML_SEED must be an integer, got %r" % env) from None


# -- subcommands ---------------------------------------------------------------------------

def cmd_abstract(args):
    print(abstraction.to_json(abstraction.extract_features(_program(args.file))))


def cmd_rules_list(args):
    for r in rules.RuleId:
        info = rules.RULE_INFO[r]
        print("%s  %-24s %s" % (r.short, r.name, info["delta"]))
        print("    pre: %s" % info["precondition"])


def cmd_sites(args):
    p = _program(args.file)
    for r, site in rules.applicable(p):
        print("%s %s" % (r.short, site))


def cmd_apply(args):
    p = _program(args.file)
    try:
        rule = rules.RuleId.parse(args.rule)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.site is None:
        site_text = "0"
    else:
        site_text = args.site.strip()
    if site_text.isdigit():
        sites = rules.sites_for(p, rule)
        k = int(site_text)
        if k >= len(sites):
            raise UsageError("site index %d out of range: %s has %d applicable site(s)" % (k, rule.short, len(sites)))
        site = sites[k]
    else:
        try:
            site = rules.Site.parse(site_text)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    _write(args.output, print_program(rules.apply(p, rule, site)))


def _included_vectors(paths):
    """Abstractions of the given programs, or of every program in the given manifests."""
    out = []
    for path in paths:
        if path.endswith(".json"):
            for seq in load_manifest(path):
                out.extend(abstraction.extract_features(p) for p, _, _ in seq.steps)
        else:
            out.append(abstraction.extract_features(_program(path)))
    return out


def cmd_gen_corpus(args):
    extra = _included_vectors(args.include)
    records = classifier.synthetic_corpus(args.n, _seed(args), extra=extra)
    _write(args.output, "".join(classifier.record_line(r) + "\n" for r in records))


def cmd_train_tree(args):
    records = classifier.load_corpus(args.corpus)
    tree = classifier.fit(records, args.min_gain)
    _write(args.output, tree.to_json() + "\n")
    acc = sum(tree.predict(r.x) == r.y for r in records) / len(records)
    print("trained on %d records: %d nodes, depth %d, training accuracy %.4f"
          % (len(records), len(tree.nodes), tree.depth(), acc), file=sys.stderr)


def cmd_classify(args):
    x = abstraction.extract_features(_program(args.file))
    mask = _tree(args.tree).predict(x)
    print("%d %s" % (mask, ",".join(classifier.platform_names(mask)) or "none"))


def cmd_train_rl(args):
    cfg = Config(alpha=args.alpha, gamma=args.gamma, episodes=args.episodes,
                 max_episode_steps=args.max_steps, seed=_seed(args))
    tree = _tree(args.tree)
    sequences = load_manifest(args.manifest, tree)
    q = train(QTable(q_init=args.q_init), sequences, cfg.rl_params(), tree)
    _write(args.output, q.to_json())
    print("trained on %d sequence(s): %d states" % (len(sequences), q.num_states), file=sys.stderr)


def cmd_guide(args):
    p = _program(args.file)
    q = QTable.from_json(_read(args.q))
    out, trace = guide(p, args.target, q, _tree(args.tree), args.budget, args.policy)
    sys.stdout.write(print_program(out))
    for line in trace.summary():
        print("// " + line)
    if args.trace_out:
        _write(args.trace_out, trace.to_json())
    return EXIT_OK


def cmd_trace(args):
    trace = Trace.from_json(_read(args.file))
    result = print_program(replay(trace))
    for line in trace.summary():
        print(line)
    if result != trace.result:
        raise StmlError("replay does not reproduce the recorded result")
    print("replay: identical")


# -- argument parsing ----------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError("%s: %s" % (self.prog, message))


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="stml", description="Learned source-to-source transformation toolkit for a C subset.")
    ap.add_argument("--seed", type=int, default=None, help="random seed (default: $STML_SEED or 0)")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser, required=True)

    s = sub.add_parser("abstract", help="print the abstraction vector of a program as JSON")
    s.add_argument("file")
    s.set_defaults(fn=cmd_abstract)

    s = sub.add_parser("rules", help="rule catalogue")
    rsub = s.add_subparsers(dest="rules_command", parser_class=_Parser, required=True)
    rsub.add_parser("list", help="list rewrite rules").set_defaults(fn=cmd_rules_list)

    s = sub.add_parser("sites", help="list applicable (rule, site) pairs of a program")
    s.add_argument("file")
    s.set_defaults(fn=cmd_sites)

    s = sub.add_parser("apply", help="apply one rule at one site and print the result")
    s.add_argument("file")
    s.add_argument("--rule", required=True, help="R0..R3 or a rule name")
    s.add_argument("--site", help="site path such as 0.8@i, or an index into the site list (default 0)")
    s.add_argument("-o", "--output")
    s.set_defaults(fn=cmd_apply)

    s = sub.add_parser("gen-corpus", help="write a synthetic demo-labeled training corpus (JSON lines)")
    s.add_argument("-n", type=int, default=200)
    s.add_argument("--include", action="append", default=[], metavar="FILE",
                   help="also label this program (.c) or every program of this manifest (.json); repeatable")
    s.add_argument("-o", "--output")
    s.set_defaults(fn=cmd_gen_corpus)

    s = sub.add_parser("train-tree", help="fit a readiness classifier on a JSON-lines corpus")
    s.add_argument("corpus")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--min-gain", type=float, default=0.0)
    s.set_defaults(fn=cmd_train_tree)

    s = sub.add_parser("classify", help="print the platform mask predicted for a program")
    s.add_argument("file")
    s.add_argument("--tree", help="tree JSON (default: built-in demo labeling)")
    s.set_defaults(fn=cmd_classify)

    s = sub.add_parser("train-rl", help="learn a Q table from a manifest of demonstrated sequences")
    s.add_argument("manifest")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--tree", help="tree JSON deciding finality (default: built-in demo labeling)")
    s.add_argument("--alpha", type=float, default=0.5)
    s.add_argument("--gamma", type=float, default=0.6)
    s.add_argument("--episodes", type=int, default=10_000)
    s.add_argument("--max-steps", type=int, default=20)
    s.add_argument("--q-init", type=float, default=1.0)
    s.set_defaults(fn=cmd_train_rl)

    s = sub.add_parser("guide", help="transform a program with a trained Q table until it is final")
    s.add_argument("file")
    s.add_argument("--target", required=True, type=_target, help="fpga, gpu, sm-cpu or dm-cpu")
    s.add_argument("--q", required=True, help="Q table JSON")
    s.add_argument("--tree", help="tree JSON (default: built-in demo labeling)")
    s.add_argument("--budget", type=int, default=50)
    s.add_argument("--policy", choices=POLICIES, default="exact", help="handling of states absent from the Q table")
    s.add_argument("--trace-out", help="write the trace JSON here")
    s.set_defaults(fn=cmd_guide)

    s = sub.add_parser("trace", help="replay a saved trace and check it reproduces its result")
    s.add_argument("file")
    s.set_defaults(fn=cmd_trace)
    return ap


def run_cli(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "budget", 0) < 0:
            raise UsageError("--budget must be >= 0")
        args.fn(args)
        return EXIT_OK
    except UsageError as exc:
        print("stml: usage error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except StmlError as exc:
        print("stml: error: %s" % str(exc).replace("\n", " "), file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print("stml: error: %s" % exc, file=sys.stderr)
        return EXIT_DOMAIN


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
