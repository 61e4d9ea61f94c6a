"""Complete the example game's loss table and (re)write the bundled game file.

    python3 scripts/reconstruct_example.py            # print the oracle report
    python3 scripts/reconstruct_example.py --write    # also rewrite the bundled file
    python3 scripts/reconstruct_example.py --check    # fail if the bundled file is stale
"""

import argparse
import json
import re
import sys
from pathlib import Path

from riskgame.reconstruct import game_document, reconstruct

BUNDLED = Path(__file__).resolve().parents[1] / "src" / "riskgame" / "data" / "two_player_gh.json"


def render(doc: dict) -> str:
    text = json.dumps(doc, indent=2)
    # keep flat numeric arrays on one line
    return re.sub(r"\[\s+([-0-9.,\s]+?)\s+\]", lambda m: "[" + ", ".join(x.strip() for x in m.group(1).split(",")) + "]", text) + "\n"


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--write", action="store_true")
    ap.add_argument("--check", action="store_true")
    args = ap.parse_args()
    rep = reconstruct()
    print(json.dumps(rep.to_dict(), indent=2))
    if not rep.feasible:
        print("no completion found", file=sys.stderr)
        return 1
    text = render(game_document(rep.completion))
    if args.write:
        BUNDLED.write_text(text)
        print(f"wrote {BUNDLED}")
    if args.check and BUNDLED.read_text() != text:
        print(f"{BUNDLED} differs from the oracle output", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
