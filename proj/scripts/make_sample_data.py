#!/usr/bin/env python3
"""Writes the bundled 1000-row sample dataset and its manifest.

The manifest (row count, per-field means, label rates and an FNV-1a 64
checksum of data.csv) is computed here, independently of the C++ loader,
so the loader can be checked against it.
"""

import argparse
import json
import pathlib
import random

SCHEMA = """tasks: [click, convert]
fields:
  user:
    kind: categorical
    cardinality: 50
    part: 0
    group: 0
  ad:
    kind: categorical
    cardinality: 20
    part: 1
    group: 1
  price:
    kind: numeric
    max_value: 4095
    part: 1
    group: 1
  hist:
    kind: sequence
    cardinality: 20
    max_len: 6
    part: 0
    group: 0
  ad_vec:
    kind: pretrained_embedding
    dim: 3
    part: 1
    group: 1
"""


def fnv1a64(data: bytes) -> str:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return f"{h:016x}"


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "sample"))
    parser.add_argument("--rows", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=20240601)
    args = parser.parse_args()
    rng = random.Random(args.seed)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    header = "ts,user_id,ad_id,repeat_count,last_repeat_gap,label_click,label_convert,user,ad,price,hist,ad_vec"
    lines = [header]
    sums = {"user": 0.0, "ad": 0.0, "price": 0.0, "hist": 0.0, "ad_vec": 0.0}
    counts = {"hist": 0, "ad_vec": 0}
    hist_len = 0
    labels = {"click": 0, "convert": 0}
    for i in range(args.rows):
        ts = 1_700_000_000 + 7 * i
        user = rng.randrange(50)
        ad = rng.randrange(20)
        price = rng.randrange(4096)
        n_hist = rng.randrange(7)
        ages = sorted(rng.randrange(1, 100_000) for _ in range(n_hist))
        hist = [(rng.randrange(20), ts - a) for a in ages]
        vec = [round(rng.uniform(-1.0, 1.0), 6) for _ in range(3)]
        click = 1 if rng.random() < 0.3 else 0
        convert = 1 if click and rng.random() < 0.2 else 0
        if rng.random() < 0.5:
            repeat, gap = str(rng.randrange(1, 6)), str(rng.randrange(60, 86_400))
        else:
            repeat, gap = "", ""
        seq = ";".join(f"{item}@{t}" for item, t in hist)
        vec_text = "|".join(repr(v) for v in vec)
        lines.append(f"{ts},{user},{ad},{repeat},{gap},{click},{convert},{user},{ad},{price},{seq},{vec_text}")
        sums["user"] += user
        sums["ad"] += ad
        sums["price"] += price
        sums["hist"] += sum(item for item, _ in hist)
        counts["hist"] += len(hist)
        hist_len += len(hist)
        sums["ad_vec"] += sum(vec)
        counts["ad_vec"] += 3
        labels["click"] += click
        labels["convert"] += convert

    text = "\n".join(lines) + "\n"
    (out / "data.csv").write_text(text)
    (out / "schema.yaml").write_text(SCHEMA)
    n = args.rows
    manifest = {
        "generator": "make_sample_data.py",
        "seed": args.seed,
        "rows": n,
        "fnv1a64": fnv1a64(text.encode()),
        "field_means": {
            "user": sums["user"] / n,
            "ad": sums["ad"] / n,
            "price": sums["price"] / n,
            "hist": sums["hist"] / counts["hist"],
            "ad_vec": sums["ad_vec"] / counts["ad_vec"],
        },
        "mean_sequence_length": {"hist": hist_len / n},
        "label_rates": {k: v / n for k, v in labels.items()},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
