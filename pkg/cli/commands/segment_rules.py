"""segment-rules: dump the sentence and phrase breakers of a language"""
import argparse
import yaml
from core.data_loader import DataLoader


def register(subparsers):
    parser = subparsers.add_parser("segment-rules", help="Print the segmentation rule table of a language")
    parser.add_argument("--lang", required=True, help="Language code, e.g. EN")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    loader = DataLoader()
    rules = loader.get_segment_rules(args.lang)
    document = {"version": loader.rules_version, **rules.model_dump(mode="json")}
    print(yaml.safe_dump(document, allow_unicode=True, sort_keys=False), end="")
    return 0
