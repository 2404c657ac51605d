#!/usr/bin/env python3
"""The whole pipeline end to end on a synthetic movie with mock backends.

Writes every input into a scratch directory (transcript, gold screenplay,
groundtruth summary, one scripted mock per model role, a config file),
runs all eight stages twice, and shows that the artifact tree is
byte-identical across runs.
"""

import json
import tempfile
from pathlib import Path

from clipline.pipeline import STAGES, load_run_config, run

DURATION_MS = 600_000  # ten minutes -> 30 clips
K = 3
SELECTED = [20_000, 240_000, 420_000]

SRT = """\
1
00:00:05,000 --> 00:00:08,000
The sea was calm when we set out.

2
00:00:31,000 --> 00:00:36,000
Keep the lamp burning, whatever happens.

3
00:04:00,000 --> 00:04:06,000
The storm is right on top of us now.

4
00:07:00,000 --> 00:07:06,000
Pour the oil before the flame dies.

5
00:09:20,000 --> 00:09:25,000
We made it through the night.
"""

GOLD_LINES = [
    {"kind": "Action", "text": "A storm batters a lighthouse on a rocky island."},
    {"kind": "Dialogue", "speaker": "KEEPER", "text": "The lamp must stay lit.",
     "start_ms": 10_000, "end_ms": 14_000},
    {"kind": "Action", "text": "The keeper climbs the spiral stairs carrying an oil can."},
    {"kind": "Dialogue", "speaker": "ASSISTANT", "text": "It burns bright again.",
     "start_ms": 100_000, "end_ms": 104_000},
]

GROUNDTRUTH = ("A storm batters the lighthouse. The keeper carries oil up the stairs "
               "and insists the lamp must stay lit.")

FACTS_REPLY = """Sentence 1:
* A storm batters the lighthouse.

Sentence 2:
* The keeper carries oil up the stairs.
* The keeper insists the lamp must stay lit.
"""

CLASSIFY_REPLY = """Fact 1: A storm batters the lighthouse.
-> A storm batters a lighthouse on a rocky island.

Fact 2: The keeper carries oil up the stairs.
-> The keeper climbs the spiral stairs carrying an oil can.

Fact 3: The keeper insists the lamp must stay lit.
-> The lamp must stay lit.
"""

JUDGE_REPLY = """Fact 1: A storm batters the lighthouse.
1. The summary opens with the storm.
2. Yes

Fact 2: The keeper carries oil up the stairs.
1. Not mentioned.
2. No

Fact 3: The keeper insists the lamp must stay lit.
1. The lamp line is paraphrased.
2. Yes
"""


def write_inputs(root: Path) -> Path:
    root.mkdir(parents=True)
    (root / "movie.srt").write_text(SRT)
    (root / "gold.jsonl").write_text("\n".join(json.dumps(o) for o in GOLD_LINES) + "\n")
    (root / "summary.txt").write_text(GROUNDTRUTH)

    def script(name, payload):
        (root / name).write_text(json.dumps(payload))
        return name

    captioner = script("captioner.json", {"rules": [
        {"pattern": rf"demo_{cid}\.mp4", "reply": f"Lightweight caption for clip {cid}."}
        for cid in range(0, DURATION_MS, 20_000)
    ]})
    selector = script("selector.json", {"default": "\n".join(
        f"{i}. Caption {cid}: Justification: key moment."
        for i, cid in enumerate(SELECTED, 1)
    )})
    recaptioner = script("recaptioner.json", {"default": "Detailed recaption of the clip."})
    summarizer = script("summarizer.json", {"default": " ".join(
        f"word{i}" for i in range(1010)
    )})
    judge = script("judge.json", {"rules": [
        {"pattern": "decompose the sentence", "reply": FACTS_REPLY},
        {"pattern": "Quote a line from the Screenplay", "reply": CLASSIFY_REPLY},
        {"pattern": "determine whether the exact meaning", "reply": JUDGE_REPLY},
    ]})

    config = {
        "movie_id": "demo",
        "media_ref": "demo.mkv",
        "media_dir": "clips",
        "media_duration_ms": DURATION_MS,
        "transcript_path": "movie.srt",
        "gold_screenplay_path": "gold.jsonl",
        "groundtruth_summary_path": "summary.txt",
        "k": K,
        "tau": 0.3,
        "tau_sweep": [0.1, 0.3, 0.5],
        "backends": {
            "captioner": {"base_url": f"mock://{captioner}", "model_name": "mock-captioner"},
            "selector": {"base_url": f"mock://{selector}", "model_name": "mock-selector"},
            "recaptioner": {"base_url": f"mock://{recaptioner}", "model_name": "mock-recaptioner"},
            "summarizer": {"base_url": f"mock://{summarizer}", "model_name": "mock-summarizer"},
            "judge": {"base_url": f"mock://{judge}", "model_name": "mock-judge"},
        },
    }
    path = root / "config.json"
    path.write_text(json.dumps(config, indent=2))
    return path


def tree(root: Path) -> dict:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file() and p.name != "timings.log"
    }


with tempfile.TemporaryDirectory() as td:
    td = Path(td)
    config = load_run_config(write_inputs(td / "inputs"))

    run(config, list(STAGES), runs_root=td / "runs_a")
    run(config, list(STAGES), runs_root=td / "runs_b")

    run_dir = td / "runs_a" / "demo"
    print("artifacts:")
    for rel in sorted(tree(run_dir)):
        print("  ", rel)

    built = (run_dir / "build" / "screenplay.built.txt").read_text()
    print(f"\nbuilt screenplay has {built.count('Caption:')} caption markers")

    report = json.loads((run_dir / "evaluate" / "eval_report.json").read_text())
    print("recall sweep:", [(r["tau"], r["recall"]) for r in report["recall_at_k"]])
    print(f"fact recall: visual {report['vis_rec']} %, textual {report['text_rec']} %, "
          f"mean {report['mfs']} %")

    identical = tree(td / "runs_a") == tree(td / "runs_b")
    print(f"\ntwo clean runs byte-identical (timing log aside): {identical}")

    # a third invocation touches nothing: every stage is cached
    manifest = run(config, list(STAGES), runs_root=td / "runs_a")
    statuses = {s: manifest["stages"][s]["status"] for s in STAGES}
    print("rerun statuses:", statuses)
