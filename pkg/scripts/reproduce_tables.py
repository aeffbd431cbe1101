#!/usr/bin/env python3
"""Recompute the published benchmark tables from the shipped instances."""

import argparse
from pathlib import Path

from bdmtsp.harness import TABLE_IDS, reproduce_table


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", type=Path, default=Path("data"))
    parser.add_argument("--table", choices=TABLE_IDS + ("all",), default="all")
    args = parser.parse_args()

    tables = TABLE_IDS if args.table == "all" else (args.table,)
    ok = True
    for table_id in tables:
        report = reproduce_table(table_id, args.data)
        print(report.to_text())
        print()
        ok = ok and report.ok
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
