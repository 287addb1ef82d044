"""Pin engine-side preprocessing outputs for the exporter parity tests.

Builds a small set of seeded images, runs the engine's resize and
channel-conversion on them, and freezes inputs and outputs into
exporter/tests/golden/preprocess.json. The exporter test suite replays
the same inputs through its own preprocessing and checks agreement,
without ever importing the engine.

Rerun only when the ingest conventions intentionally change:

    python3 scripts/pin_exporter_goldens.py
"""

import json
from pathlib import Path

import numpy as np

from robeval import imagegen

OUT = Path(__file__).resolve().parent.parent / "exporter" / "tests" / "golden" / "preprocess.json"

CASES = [
    # (name, source shape, target (H, W))
    ("color_down", (20, 14, 3), (16, 12)),
    ("gray_down", (20, 14, 1), (16, 12)),
    ("color_mixed", (9, 9, 3), (27, 5)),
    ("gray_up", (7, 5, 1), (14, 10)),
    ("color_identity", (16, 12, 3), (16, 12)),
    ("gray_wide", (33, 7, 1), (8, 20)),
]


def main() -> None:
    rng = np.random.default_rng(42)
    entries = []
    for name, shape, (th, tw) in CASES:
        raw = rng.integers(0, 256, size=shape).astype(np.uint8)
        img = imagegen.bytes_to_image(raw)
        resized = imagegen.resize_bilinear(img, th, tw)
        c1 = resized if resized.shape[2] == 1 else imagegen.color_to_gray(resized)
        c3 = resized if resized.shape[2] == 3 else imagegen.gray_to_color(resized)
        entries.append(
            {
                "name": name,
                "shape": list(shape),
                "data": raw.reshape(-1).tolist(),
                "resize": [th, tw],
                "engine_resized": resized.reshape(-1).tolist(),
                "engine_c1": c1.reshape(-1).tolist(),
                "engine_c3": c3.reshape(-1).tolist(),
            }
        )
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", encoding="utf-8") as fh:
        json.dump({"images": entries}, fh)
        fh.write("\n")
    print(f"pinned {len(entries)} preprocessing cases -> {OUT}")


if __name__ == "__main__":
    main()
