#!/usr/bin/env python3
"""Validate run configuration files against the run config JSON Schema."""
import json
import sys
from pathlib import Path

try:
    import jsonschema
except Exception:
    print("Please install jsonschema: pip install jsonschema", file=sys.stderr)
    raise

REPO = Path(__file__).resolve().parent.parent
SCHEMA = REPO / "monocluster_core" / "config" / "run_config_schema.json"


def load(path: Path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def validate(schema_path: Path, data_path: Path):
    jsonschema.validate(instance=load(data_path), schema=load(schema_path))


def check_sources(data_path: Path):
    """Sources must match the configured dimension."""
    data = load(data_path)
    dim = data.get("dim", 1)
    failures = []
    for i, point in enumerate(data.get("sources", [])):
        if len(point) != dim:
            failures.append((i, f"source {point} has dimension {len(point)}, expected {dim}"))
    return failures


def main(argv=None):
    args = sys.argv[1:] if argv is None else argv
    paths = [Path(a) for a in args] or [
        Path.cwd() / "run_config.json",
        REPO / "monocluster_core" / "config" / "default_run.json",
    ]
    paths = [p for p in paths if p.exists()]
    if not paths:
        print("no run config found", file=sys.stderr)
        sys.exit(2)

    for path in paths:
        try:
            validate(SCHEMA, path)
        except json.JSONDecodeError as e:
            print(f"{path}: invalid JSON: {e}", file=sys.stderr)
            sys.exit(2)
        except jsonschema.ValidationError as e:
            print(f"{path}: schema validation failed: {e.message}", file=sys.stderr)
            sys.exit(3)
        failures = check_sources(path)
        if failures:
            print(f"{path}: source checks failed:")
            for index, msg in failures:
                print(" -", index, msg)
            sys.exit(4)

    print("Validation OK")


if __name__ == "__main__":
    main()
