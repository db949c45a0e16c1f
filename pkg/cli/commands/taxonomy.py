"""taxonomy-validate: structural checks of a taxonomy file"""
import argparse
from pathlib import Path
from core.data_loader import load_taxonomy
from core.taxonomy import validate_taxonomy


def register(subparsers):
    parser = subparsers.add_parser("taxonomy-validate", help="Check a taxonomy YAML file")
    parser.add_argument("path", type=Path, help="Taxonomy YAML")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    taxonomy = load_taxonomy(args.path)
    report = validate_taxonomy(taxonomy)
    for error in report.errors:
        print(f"❌ {error}")
    for warning in report.warnings:
        print(f"⚠️  {warning}")
    print(f"{taxonomy.domain}: {len(taxonomy.l3_aspects)} L3 aspects, "
          f"{len(report.errors)} errors, {len(report.warnings)} warnings")
    return 0 if report.valid else 1
