#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Validates the shipped fixtures and a set of CLI reports against the schema documents."""
import json
import pathlib
import subprocess
import sys

try:
    import jsonschema
except ImportError:
    print("jsonschema not available")
    sys.exit(77)

root = pathlib.Path(sys.argv[1])
imtk = sys.argv[2]
model_schema = json.loads((root / "schema/model.schema.json").read_text())
report_schema = json.loads((root / "schema/report.schema.json").read_text())
jsonschema.Draft202012Validator.check_schema(model_schema)
jsonschema.Draft202012Validator.check_schema(report_schema)

failures = 0
fixtures = sorted((root / "fixtures").glob("*.json"))
for f in fixtures:
    try:
        jsonschema.validate(json.loads(f.read_text()), model_schema)
    except jsonschema.ValidationError as e:
        failures += 1
        print(f"{f.name}: {e.message}")

runs = [
    ["classify", "--model", "product_so3.json"],
    ["check-structure", "--model", "bad_u.json"],
    ["check-structure", "--model", "principal_flat.json", "--kernel-flat"],
    ["rank-one", "--model", "rank_one_closed_v.json", "--witness", "product"],
    ["groupoid-verify", "--model", "so2_trivial_groupoid.json"],
    ["verify-im", "--model", "so2_trivial_groupoid.json"],
    ["classify", "--model", "missing.json"],
]
for args in runs:
    args = [a if not a.endswith(".json") else str(root / "fixtures" / a) for a in args]
    out = subprocess.run([imtk, *args, "--json"], capture_output=True, text=True).stdout
    try:
        jsonschema.validate(json.loads(out), report_schema)
    except (jsonschema.ValidationError, json.JSONDecodeError) as e:
        failures += 1
        print(f"{' '.join(args)}: {e}")

print(f"{len(fixtures)} fixtures, {len(runs)} reports, {failures} failures")
sys.exit(1 if failures else 0)
