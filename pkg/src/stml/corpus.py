"""Bundled demo corpus: toy image-processing kernels and demonstrated sequences.

``DEMOS`` lists each manifest as sequences of ``(rule, site index)`` steps
from a source program; ``build`` materializes the step files and manifests
under a directory.  The committed copy lives in ``stml/data``.
"""
from __future__ import annotations

import json
import os
from importlib import resources
from typing import Dict, List, Tuple

from . import rules
from .classifier import FPGA, GPU
from .minic import parse, print_program
from .rules import RuleId

R0, R1, R2 = RuleId.R0_flatten_array, RuleId.R1_collapse_loops, RuleId.R2_normalize_loop

# manifest name -> [(sequence dir, program stem, target, reward, [(rule, site index), ...])]
DEMOS: Dict[str, List[Tuple[str, str, int, float, list]]] = {
    "conv2d": [("conv2d", "conv2d", FPGA, 100.0, [(R0, 0), (R0, 0), (R0, 0), (R1, 0)])],
    "compress": [
        ("compress_flat", "compress", GPU, 100.0, [(R0, 0), (R0, 0)]),
        ("compress_normalized", "compress", GPU, 1.0, [(R2, 0), (R0, 0), (R0, 0)]),
    ],
    "gpu": [
        ("rgb_filter", "rgb_filter", GPU, 100.0, [(R0, 0)]),
        ("edge_detect", "edge_detect", GPU, 100.0, [(R0, 0), (R0, 0)]),
        ("compress_flat", "compress", GPU, 100.0, [(R0, 0), (R0, 0)]),
    ],
}


def data_dir() -> str:
    return str(resources.files("stml") / "data")


def program_path(stem: str) -> str:
    return os.path.join(data_dir(), "programs", stem + ".c")


def manifest_path(name: str) -> str:
    return os.path.join(data_dir(), name + ".json")


def program_stems() -> List[str]:
    return sorted(f[:-2] for f in os.listdir(os.path.join(data_dir(), "programs")) if f.endswith(".c"))


def load_program(stem: str):
    with open(program_path(stem)) as fh:
        return parse(fh.read())


def build(out_dir: str) -> List[str]:
    """Write step files and manifests for every demo under ``out_dir``; return written paths."""
    written = []
    for name, seqs in DEMOS.items():
        entries = []
        for seq_dir, stem, target, reward, steps in seqs:
            os.makedirs(os.path.join(out_dir, "sequences", seq_dir), exist_ok=True)
            p = load_program(stem)
            listing = []
            for k, (rule, idx) in enumerate(steps + [(None, None)]):
                rel = "sequences/%s/step%d.c" % (seq_dir, k)
                path = os.path.join(out_dir, rel)
                with open(path, "w") as fh:
                    fh.write(print_program(p))
                written.append(path)
                if rule is None:
                    listing.append({"file": rel, "rule": None, "site": None})
                    break
                site = rules.sites_for(p, rule)[idx]
                listing.append({"file": rel, "rule": rule.short, "site": str(site)})
                p = rules.apply(p, rule, site)
            entries.append({"target": target, "reward": reward, "steps": listing})
        path = os.path.join(out_dir, name + ".json")
        with open(path, "w") as fh:
            json.dump({"sequences": entries}, fh, indent=1)
            fh.write("\n")
        written.append(path)
    return written
