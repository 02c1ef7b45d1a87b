#!/usr/bin/env python3
"""Generate a synthetic JSONL corpus for exercising the full pipeline.

The functions are tiny but varied: random identifier names, constants and
filler statements keep the vocabulary honest, while each vulnerable class
carries a fixed code motif so the models have something learnable.

    python3 scripts/make_demo_corpus.py --out demo.jsonl --per-class 30
"""

import argparse
import json
import random
import sys

VULN_MOTIFS = {
    "CWE-121": 'void {fn}(char *{src}) {{ char {buf}[{n}]; strcpy({buf}, {src}); }}',
    "CWE-190": 'int {fn}(int {a}) {{ int {b} = {a} * {big} * {big}; return {b}; }}',
    "CWE-476": 'int {fn}(int *{p}) {{ if ({p} != 0) {{ }} return *{p}; }}',
    "CWE-416": 'void {fn}(char *{p}) {{ free({p}); {p}[0] = {n}; }}',
    "CWE-78": 'void {fn}(char *{src}) {{ char {buf}[64]; sprintf({buf}, "%s", {src}); system({buf}); }}',
}

CLEAN_MOTIFS = [
    'int {fn}(int {a}, int {b}) {{ return {a} {op} {b}; }}',
    'int {fn}(int {a}) {{ int {b} = {a} {op} {n}; return {b}; }}',
    'int {fn}(int {a}) {{ if ({a} > {n}) {{ return {a}; }} return {n}; }}',
    'int {fn}(int {a}) {{ int {b} = 0; for (int {i} = 0; {i} < {a}; {i}++) {{ {b} += {i}; }} return {b}; }}',
    'void {fn}(int *{p}, int {b}) {{ for (int {i} = 0; {i} < {b}; {i}++) {{ {p}[{i}] = {i}; }} }}',
]

NAME_POOL = ("count total value index limit size step left right acc sum item "
             "width depth cursor offset mark probe slot head tail rank").split()


def random_name(rng, used):
    while True:
        name = rng.choice(NAME_POOL) + str(rng.randrange(100))
        if name not in used:
            used.add(name)
            return name


def fill(template, rng, serial):
    used = set()
    fields = {
        "fn": f"fn_{serial}",
        "a": random_name(rng, used),
        "b": random_name(rng, used),
        "i": random_name(rng, used),
        "p": random_name(rng, used),
        "src": random_name(rng, used),
        "buf": random_name(rng, used),
        "n": rng.randrange(2, 64),
        "big": rng.choice([65536, 1 << 30, 2147483647]),
        "op": rng.choice(["+", "-", "*"]),
    }
    return template.format(**fields)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True, help="output JSONL path")
    parser.add_argument("--per-class", type=int, default=30,
                        help="vulnerable samples per CWE class")
    parser.add_argument("--clean", type=int, default=None,
                        help="clean samples (default: matches total vulnerable)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    rng = random.Random(args.seed)
    classes = sorted(VULN_MOTIFS)
    clean_total = (args.clean if args.clean is not None
                   else args.per_class * len(classes))

    records = []
    serial = 0
    for cwe in classes:
        for _ in range(args.per_class):
            records.append({
                "code": fill(VULN_MOTIFS[cwe], rng, serial),
                "vulnerable": 1,
                "cwe": cwe,
                "id": f"{cwe.lower()}-{serial}",
            })
            serial += 1
    for _ in range(clean_total):
        records.append({
            "code": fill(rng.choice(CLEAN_MOTIFS), rng, serial),
            "vulnerable": 0,
            "id": f"clean-{serial}",
        })
        serial += 1
    rng.shuffle(records)

    with open(args.out, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")
    print(f"wrote {len(records)} samples "
          f"({args.per_class * len(classes)} vulnerable over "
          f"{len(classes)} classes, {clean_total} clean) to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
