#!/usr/bin/env python3
"""Generate the bundled MiniPy demo corpus.

Every repository has a helpers module, a core module with one stateful class
and a service module that uses both. Names are drawn per repository from
shared word pools, so train and eval repositories overlap in vocabulary but
not in the exact member names they define.

    python3 tools/make_demo_corpus.py [--out data/demo] [--seed 7]
"""

import argparse
import json
import random
import shutil
from pathlib import Path

DOMAINS = [
    "order", "ticket", "sensor", "parcel", "invoice", "account", "route",
    "session", "metric", "document", "task", "shipment", "playlist", "recipe",
    "booking", "device", "course", "ledger", "article", "vehicle", "patient",
    "policy", "event", "badge", "module", "photo", "review", "voucher",
]
SUFFIXES = ["Registry", "Store", "Tracker", "Queue", "Pool", "Book", "Manager", "Buffer"]
ADJECTIVES = [
    "registered", "pending", "active", "cached", "current", "recent", "queued",
    "archived", "visible", "stored", "known", "open", "shared", "local",
]
LIST_NOUNS = ["items", "entries", "updates", "records", "names", "values", "events", "handlers", "parts"]
NUMBER_NOUNS = ["count", "total", "size", "weight", "score", "level", "depth", "budget"]
LIMIT_NOUNS = ["limit", "capacity", "ceiling", "maximum", "quota"]
LABEL_NOUNS = ["label", "title", "owner", "tag", "caption"]
PARAMS = ["item", "value", "entry", "element", "payload", "piece"]

VERBS = {
    "add": ["add", "push", "register", "insert", "record", "track"],
    "reset": ["reset", "clear", "flush", "wipe"],
    "count": ["count", "length", "entry_count", "item_count"],
    "full": ["is_full", "at_limit", "saturated", "exhausted"],
    "describe": ["describe", "summary", "report", "caption_text"],
    "adjust": ["adjust", "resize", "rescale", "tune"],
    "offer": ["offer", "try_add", "accept", "submit"],
    "drain": ["drain", "take_all", "pop_all", "collect"],
    "ratio": ["ratio", "usage", "fill_level", "load_factor"],
}
HELPER_NAMES = {
    "clamp": ["clamp_value", "bound_amount", "limit_number", "fit_range"],
    "combine": ["merge_totals", "combine_counts", "sum_pair", "join_amounts"],
    "scale": ["scale_value", "apply_factor", "multiply_by", "stretch"],
    "valid": ["is_valid_name", "has_text", "non_empty", "check_label"],
}


def pick(rng, pool, used):
    choices = [x for x in pool if x not in used]
    choice = rng.choice(choices)
    used.add(choice)
    return choice


def humanize(name):
    return name.strip("_").replace("_", " ")


class Writer:
    """Collects lines and remembers where documented functions start."""

    def __init__(self):
        self.lines = []
        self.functions = []  # (line, name)

    def line(self, text=""):
        self.lines.append(text)

    def function(self, indent, signature, doc, body):
        pad = " " * indent
        name = signature.split("(")[0]
        self.functions.append((len(self.lines) + 1, name))
        self.line(f"{pad}def {signature}:")
        self.line(f'{pad}    "{doc}"')
        for row in body:
            self.line(f"{pad}    {row}" if row else "")
        self.line()

    def text(self):
        while self.lines and not self.lines[-1]:
            self.lines.pop()
        return "\n".join(self.lines) + "\n"


def make_repo(rng, domain):
    used = set()
    cls = domain.capitalize() + rng.choice(SUFFIXES)
    lists = ["_" + pick(rng, ADJECTIVES, used) + "_" + pick(rng, LIST_NOUNS, used) for _ in range(2)]
    number = "_" + pick(rng, ADJECTIVES, used) + "_" + pick(rng, NUMBER_NOUNS, used)
    limit = "_" + pick(rng, LIMIT_NOUNS, used)
    label = "_" + pick(rng, LABEL_NOUNS, used)
    verbs = {key: rng.choice(pool) for key, pool in VERBS.items()}
    helpers = {key: rng.choice(pool) for key, pool in HELPER_NAMES.items()}
    param = rng.choice(PARAMS)
    main_list = lists[0]
    noun = domain + "s"

    # helpers.mp
    h = Writer()
    h.function(0, f"{helpers['clamp']}(value, low, high)", "Clamp value into the closed range from low to high.", [
        "if value < low:",
        "    return low",
        "if value > high:",
        "    return high",
        "return value",
    ])
    h.function(0, f"{helpers['combine']}(first, second)", "Add two amounts together.", [
        "result = first + second",
        "return result",
    ])
    h.function(0, f"{helpers['scale']}(value, factor)", "Multiply value by factor.", [
        "return value * factor",
    ])
    h.function(0, f"{helpers['valid']}(text)", "Tell whether the text is not empty.", [
        "return len(text) > 0",
    ])

    # core.mp
    c = Writer()
    c.line(f"from helpers import {helpers['clamp']}, {helpers['combine']}")
    c.line()
    c.line()
    c.line(f"class {cls}:")
    init_body = [f"self.{name} = []" for name in lists] + [
        f"self.{number} = 0",
        f"self.{limit} = {helpers['clamp']}(capacity, 1, 1000)",
        f"self.{label} = name",
    ]
    c.function(4, "__init__(self, name, capacity)", f"Create an empty {domain} {cls[len(domain):].lower()}.", init_body)
    methods = {
        "add": (f"{verbs['add']}(self, {param})", f"Add one {domain} {param} to the {humanize(main_list)}.", [
            f"self.{main_list}.append({param})",
            f"self.{number} = {helpers['combine']}(self.{number}, 1)",
        ]),
        "reset": (f"{verbs['reset']}(self)", f"Forget every stored {domain}.", [
            f"self.{main_list} = []",
            f"self.{number} = 0",
        ]),
        "count": (f"{verbs['count']}(self)", f"Number of {noun} in the {humanize(main_list)}.", [
            f"return len(self.{main_list})",
        ]),
        "full": (f"{verbs['full']}(self)", f"Tell whether the {humanize(limit)} has been reached.", [
            f"return self.{number} >= self.{limit}",
        ]),
        "describe": (f"{verbs['describe']}(self)", f"Short text naming the {domain} {humanize(label)}.", [
            f"return self.{label} + \": \" + str(self.{number})",
        ]),
        "adjust": (f"{verbs['adjust']}(self, amount)", f"Change the {humanize(limit)} by amount.", [
            f"self.{limit} = {helpers['clamp']}(self.{limit} + amount, 1, 1000)",
            f"return self.{limit}",
        ]),
        "offer": (f"{verbs['offer']}(self, {param})", f"Add the {param} unless the {domain} store is full.", [
            f"if self.{verbs['full']}():",
            "    return False",
            f"self.{verbs['add']}({param})",
            "return True",
        ]),
        "drain": (f"{verbs['drain']}(self)", f"Remove and return all {noun}.", [
            f"result = self.{main_list}",
            f"self.{verbs['reset']}()",
            "return result",
        ]),
        "ratio": (f"{verbs['ratio']}(self)", f"Fraction of the {humanize(limit)} in use.", [
            f"if self.{limit} == 0:",
            "    return 0",
            f"return self.{number} / self.{limit}",
        ]),
        "mirror": (f"keep_{lists[1].strip('_')}(self, {param})", f"Remember the {param} in the {humanize(lists[1])}.", [
            f"self.{lists[1]}.append({param})",
            f"return len(self.{lists[1]})",
        ]),
    }
    required = ["add", "reset", "full", "offer", "drain"]
    optional = [k for k in methods if k not in required]
    chosen = set(required) | set(rng.sample(optional, rng.randint(3, len(optional))))
    for key in methods:
        if key in chosen:
            signature, doc, body = methods[key]
            c.function(4, signature, doc, body)

    # service.mp
    s = Writer()
    s.line("import helpers")
    s.line(f"from core import {cls}")
    s.line()
    s.line()
    s.function(0, f"build_{domain}_store(name, capacity)", f"Create a {domain} store with a sane capacity.", [
        f"store = {cls}(name, helpers.{helpers['clamp']}(capacity, 1, 100))",
        f"store.{verbs['reset']}()",
        "return store",
    ])
    s.function(0, f"fill_{noun}(store, {param}, times)", f"Offer the {param} to the store several times.", [
        "added = 0",
        "while times > 0:",
        f"    if store.{verbs['offer']}({param}):",
        f"        added = helpers.{helpers['combine']}(added, 1)",
        "    times = times - 1",
        "return added",
    ])
    s.function(0, f"make_{domain}_report(name)", f"Build a store and describe it.", [
        f"store = build_{domain}_store(name, 10)",
        f"if not helpers.{helpers['valid']}(name):",
        "    return \"\"",
        f"store.{verbs['add']}(name)",
        f"return store.{verbs['describe']}()" if "describe" in chosen else f"return str(store.{verbs['drain']}())",
    ])
    s.function(0, f"transfer_{noun}(name, capacity)", f"Move every {domain} from one store into a new one.", [
        f"source = build_{domain}_store(name, capacity)",
        f"target = {cls}(name, capacity)",
        f"moved = source.{verbs['drain']}()",
        f"target.{verbs['add']}(moved)",
        "return target",
    ])
    s.function(0, f"scaled_{domain}_capacity(capacity, factor)", "Capacity after scaling, kept in range.", [
        f"bigger = helpers.{helpers['scale']}(capacity, factor)",
        f"return helpers.{helpers['clamp']}(bigger, 1, 1000)",
    ])
    return {"helpers.mp": h, "core.mp": c, "service.mp": s}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="data/demo")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--train", type=int, default=16)
    parser.add_argument("--eval", type=int, default=8)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    domains = rng.sample(DOMAINS, args.train + args.eval)
    out = Path(args.out)
    for split in ("train", "eval"):
        shutil.rmtree(out / split, ignore_errors=True)

    tasks = []
    for i, domain in enumerate(domains):
        split = "train" if i < args.train else "eval"
        repo = f"{domain}_lib"
        for path, writer in sorted(make_repo(rng, domain).items()):
            target = out / split / repo / path
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(writer.text())
            if split == "eval":
                for line, name in writer.functions:
                    tasks.append({"file": path, "function": name, "line": line, "repo": repo})

    tasks.sort(key=lambda t: (t["repo"], t["file"], t["line"]))
    with open(out / "tasks.jsonl", "w") as fh:
        for task in tasks:
            fh.write(json.dumps(task, sort_keys=True, separators=(",", ":")) + "\n")
    print(f"{args.train} train and {args.eval} eval repositories, {len(tasks)} tasks under {out}")


if __name__ == "__main__":
    main()
