"""Run every CLI subcommand on a small configuration and validate its outputs.

Usage: validate_schemas.py <roughflow binary> <schema dir> <scratch dir>
"""

import csv
import json
import shutil
import subprocess
import sys
from pathlib import Path

from jsonschema import Draft202012Validator
from referencing import Registry, Resource

SMALL = ["level=6", "brownian_level=10", "samples=20", "m_lo=4", "m_hi=6", "grid_points=4"]

# subcommand -> (extra settings, {json file: schema}, {csv file: expected header or callable})
CASES = {
    "lift": (["d=2"], {"manifest.json": "lift_manifest", "rough_path.json": "rough_path"},
             {"path.csv": ["t", "w1", "w2"]}),
    "solve": (["field=nonlinear", "p=2", "d=2", "jacobians=true"], {"manifest.json": "solve_manifest"},
              {"trajectory.csv": ["t", "x1", "x2", "J11", "J12", "J21", "J22"]}),
    "flow": (["field=rotation", "p=2"], {"manifest.json": "flow_manifest"},
             {"flow.csv": ["point", "x1", "x2", "image1", "image2", "back1", "back2", "round_trip"]}),
    "wongzakai": ([], {"manifest.json": "wongzakai_manifest"},
                  {"wongzakai.csv": ["m", "driver_distance", "level1_sup", "solution_sup", "foliated_sup",
                                     "round_trip", "error"]}),
    "support": ([], {"support.json": "support"}, {"skeleton.csv": ["t", "x1"]}),
    "ldp": ([], {"ldp.json": "ldp"}, {"ldp.csv": ["epsilon", "q", "exceed", "exploded", "samples"]}),
    "foliated-demo": (["transversal=cantor"], {"manifest.json": "foliated_manifest"},
                      {"foliated.csv": ["t", "y1", "z_repr", "winding"]}),
}


def load_registry(schema_dir: Path):
    schemas = {}
    registry = Registry()
    for path in sorted(schema_dir.glob("*.schema.json")):
        doc = json.loads(path.read_text())
        Draft202012Validator.check_schema(doc)
        registry = registry.with_resource(doc["$id"], Resource.from_contents(doc))
        schemas[path.name[: -len(".schema.json")]] = doc
    return schemas, registry


def main() -> int:
    cli, schema_dir, scratch = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3])
    schemas, registry = load_registry(schema_dir)
    shutil.rmtree(scratch, ignore_errors=True)
    failures = []

    for cmd, (extra, jsons, csvs) in CASES.items():
        out = scratch / cmd
        args = [cli, cmd, "--seed", "3", "--out", str(out)]
        for kv in SMALL + extra:
            args += ["--set", kv]
        run = subprocess.run(args, capture_output=True, text=True)
        if run.returncode != 0:
            failures.append(f"{cmd}: exit {run.returncode}: {run.stderr.strip()}")
            continue
        for name, schema in jsons.items():
            doc = json.loads((out / name).read_text())
            validator = Draft202012Validator(schemas[schema], registry=registry)
            for err in validator.iter_errors(doc):
                failures.append(f"{cmd}/{name}: {'/'.join(map(str, err.absolute_path))}: {err.message}")
            for listed in doc.get("files", []):
                if not (out / listed).is_file():
                    failures.append(f"{cmd}/{name}: listed file {listed} missing")
        for name, header in csvs.items():
            with open(out / name, newline="") as fh:
                rows = list(csv.reader(fh))
            if rows[0] != header:
                failures.append(f"{cmd}/{name}: header {rows[0]} != {header}")
            if len(rows) < 2 or any(len(r) != len(header) for r in rows[1:]):
                failures.append(f"{cmd}/{name}: ragged or empty body")
        print(f"{cmd}: checked {len(jsons)} json, {len(csvs)} csv")

    for f in failures:
        print("FAIL", f)
    print("schema validation:", "PASS" if not failures else f"FAIL ({len(failures)})")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
