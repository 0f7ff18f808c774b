#!/usr/bin/env python3
"""Export NAS-Bench-201 to the anasod-tab-v1 line format.

Reads the official benchmark through the `nas_201_api` package (install it
and download NAS-Bench-201-v1_1-096897.pth separately; both are large) and
writes one JSON object per line:

    header: {"format":"anasod-tab-v1","N":6,"k":5,"op_names":[...],
             "topology":"fixed","edges":[[0,1],...],"datasets":["cifar10"]}
    record: {"id":"ops:...|wiring:...","ops":[...],
             "metrics":{"cifar10":{"val_err":{"777":9.13,...},
                                   "test_err":8.52,"train_time_s":49556.3}}}

val_err maps training seed -> 100 - validation accuracy (percent) at the
final epoch of the 200-epoch schedule; test_err is the seed-mean test error.

    python3 tools/export_nasbench201.py \
        --api-file NAS-Bench-201-v1_1-096897.pth \
        --out data/nasbench201_cifar10.jsonl

The block order and op ids below must match the library's nasbench201 cell
preset; --self-test checks the arch-string mapping without the benchmark.
"""

import argparse
import json
import sys

# Cell preset: block i sits on EDGES[i]; op ids index OP_NAMES.
EDGES = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
OP_NAMES = ["conv3x3", "conv1x1", "skip", "avgpool", "zeroize"]
OP_IDS = {
    "nor_conv_3x3": 0,
    "nor_conv_1x1": 1,
    "skip_connect": 2,
    "avg_pool_3x3": 3,
    "none": 4,
}
# NAS-Bench-201 arch strings list edges stage by stage: (0->1), (0->2),
# (1->2), (0->3), (1->3), (2->3). Position -> our block index:
NB_POS_TO_BLOCK = [0, 1, 3, 2, 4, 5]

# The benchmark's validation split only exists under the "-valid" key.
DATASET_KEYS = {"cifar10": "cifar10-valid"}


def parse_arch_str(arch_str):
    """'|nor_conv_3x3~0|+|none~0|skip_connect~1|+|...' -> op ids in block order."""
    ops = []
    for stage in arch_str.split("+"):
        for token in stage.split("|"):
            token = token.strip()
            if not token:
                continue
            name = token.split("~")[0]
            if name not in OP_IDS:
                raise ValueError(f"unknown operation {name!r} in {arch_str!r}")
            ops.append(OP_IDS[name])
    if len(ops) != len(EDGES):
        raise ValueError(f"expected {len(EDGES)} ops, got {len(ops)}: {arch_str!r}")
    blocks = [0] * len(EDGES)
    for pos, op in enumerate(ops):
        blocks[NB_POS_TO_BLOCK[pos]] = op
    return blocks


def canonical_id(ops):
    ops_part = ",".join(str(o) for o in ops)
    wiring_part = ",".join(f"{s}-{d}" for s, d in EDGES)
    return f"ops:{ops_part}|wiring:{wiring_part}"


def header_line(dataset):
    return json.dumps(
        {
            "format": "anasod-tab-v1",
            "N": len(EDGES),
            "k": len(OP_NAMES),
            "op_names": OP_NAMES,
            "topology": "fixed",
            "edges": [list(e) for e in EDGES],
            "datasets": [dataset],
        },
        separators=(",", ":"),
    )


def export(api_file, dataset, hp, out_path):
    try:
        from nas_201_api import NASBench201API
    except ImportError:
        sys.exit(
            "nas_201_api is not installed; pip install nas-bench-201 "
            "(the benchmark file itself is a separate ~2GB download)"
        )

    api = NASBench201API(api_file, verbose=False)
    key = DATASET_KEYS[dataset]
    written = 0
    with open(out_path, "w") as out:
        out.write(header_line(dataset) + "\n")
        for index in range(len(api)):
            ops = parse_arch_str(api.arch(index))
            val_err = {}
            test_errs = []
            train_time = 0.0
            # query_by_index returns {seed: ResultsCount} for the chosen
            # training schedule; skip entries that were never trained there.
            try:
                results = api.query_by_index(index, key, hp=hp)
            except (ValueError, KeyError):
                continue
            for seed, result in results.items():
                accuracy = result.get_eval("x-valid")["accuracy"]
                val_err[str(int(seed))] = round(100.0 - accuracy, 6)
                try:
                    test_errs.append(100.0 - result.get_eval("ori-test")["accuracy"])
                except (ValueError, KeyError):
                    pass
                train_time = max(train_time, result.get_train()["all_time"])
            if not val_err:
                continue
            metrics = {
                "val_err": val_err,
                "train_time_s": round(float(train_time), 3),
            }
            if test_errs:
                metrics["test_err"] = round(sum(test_errs) / len(test_errs), 6)
            out.write(
                json.dumps(
                    {
                        "id": canonical_id(ops),
                        "ops": ops,
                        "metrics": {dataset: metrics},
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )
            written += 1
    print(f"wrote {written} records to {out_path}")


def self_test():
    arch = "|nor_conv_3x3~0|+|none~0|skip_connect~1|+|avg_pool_3x3~0|nor_conv_1x1~1|none~2|"
    ops = parse_arch_str(arch)
    assert ops == [0, 4, 3, 2, 1, 4], ops
    assert canonical_id(ops) == (
        "ops:0,4,3,2,1,4|wiring:0-1,0-2,0-3,1-2,1-3,2-3"
    ), canonical_id(ops)
    json.loads(header_line("cifar10"))
    print("self-test ok")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--api-file", help="NAS-Bench-201 .pth snapshot")
    ap.add_argument("--dataset", default="cifar10", choices=sorted(DATASET_KEYS))
    ap.add_argument("--hp", default="200", help="training schedule key")
    ap.add_argument("--out", default="data/nasbench201_cifar10.jsonl")
    ap.add_argument("--self-test", action="store_true",
                    help="check the arch-string mapping and exit")
    args = ap.parse_args()
    if args.self_test:
        self_test()
        return
    if not args.api_file:
        ap.error("--api-file is required unless --self-test is given")
    export(args.api_file, args.dataset, args.hp, args.out)


if __name__ == "__main__":
    main()
