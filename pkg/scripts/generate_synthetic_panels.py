#!/usr/bin/env python3
"""Regenerate the bundled synthetic 4-year dataset under data/synthetic/.

The dataset mimics the shape of a real multi-year score panel: four years,
15 categories (two absent in the first year), a dozen entities, a roster
change between the 2019 and 2020 editions (one split, one merge), and a
couple of missing cells. Scores are seeded, so reruns are byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "data" / "synthetic"

ROSTER_EARLY = [f"S{i:02d}" for i in range(1, 10)] + ["AA", "BB", "CC"]
ROSTER_LATE = [f"S{i:02d}" for i in range(1, 10)] + ["AA", "AZ", "BC"]
ALL_GOALS = [f"goal{i:02d}" for i in range(1, 16)]
GOALS_2018 = [g for g in ALL_GOALS if g not in ("goal12", "goal13")]

YEARS = (
    ("2018", ROSTER_EARLY, GOALS_2018, [("S03", "goal05")]),
    ("2019", ROSTER_EARLY, ALL_GOALS, []),
    ("2020", ROSTER_LATE, ALL_GOALS, [("S07", "goal09")]),
    ("2024", ROSTER_LATE, ALL_GOALS, [("S07", "goal09"), ("AZ", "goal02")]),
)

ENTITY_MAP_2019_2020 = {
    "renames": [],
    "splits": [{"from": ["AA"], "to": ["AA", "AZ"]}],
    "merges": [{"from": ["BB", "CC"], "to": ["BC"]}],
}


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240601)
    for year, entities, goals, missing in YEARS:
        scores = np.round(rng.uniform(25.0, 95.0, size=(len(entities), len(goals))), 1)
        lines = ["entity," + ",".join(goals)]
        for i, entity in enumerate(entities):
            cells = []
            for j, goal in enumerate(goals):
                if (entity, goal) in missing:
                    cells.append("")
                else:
                    cells.append(f"{scores[i, j]:.1f}")
            lines.append(entity + "," + ",".join(cells))
        (OUT / f"panel_{year}.csv").write_text("\n".join(lines) + "\n",
                                               encoding="utf-8")
    (OUT / "map_2019_2020.json").write_text(
        json.dumps(ENTITY_MAP_2019_2020, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(YEARS)} panels and 1 entity map to {OUT}")


if __name__ == "__main__":
    main()
