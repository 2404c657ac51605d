#!/usr/bin/env python3
"""Reference-clip derivation and the evaluation metrics.

Uses a scripted mock model to decompose a groundtruth summary into facts,
classify them as visual or textual by quoting the gold screenplay, derive
the reference intervals, and then score a predicted selection and summary
against them.
"""

import json
import tempfile
from pathlib import Path

from clipline import (
    BackendConfig,
    LineKind,
    Modality,
    ModelGateway,
    Provenance,
    Screenplay,
    ScreenplayLine,
    TimeInterval,
    classify_facts,
    clipset_prf,
    derive_reference_clips,
    identify_facts,
    judge_fact_support,
    mfactsum,
    recall_at_k,
    rouge_scores,
)

GOLD = Screenplay(
    lines=(
        ScreenplayLine(kind=LineKind.ACTION,
                       text="A storm batters a lighthouse on a rocky island."),
        ScreenplayLine(kind=LineKind.DIALOGUE, text="The lamp must stay lit.",
                       speaker="KEEPER", time_ms=10_000, end_ms=14_000),
        ScreenplayLine(kind=LineKind.DIALOGUE, text="The oil is running low.",
                       speaker="ASSISTANT", time_ms=20_000, end_ms=26_000),
        ScreenplayLine(kind=LineKind.ACTION,
                       text="The keeper climbs the spiral stairs carrying an oil can."),
        ScreenplayLine(kind=LineKind.DIALOGUE, text="Hold the rail.",
                       speaker="KEEPER", time_ms=40_000, end_ms=45_000),
        ScreenplayLine(kind=LineKind.DIALOGUE, text="It burns bright again.",
                       speaker="ASSISTANT", time_ms=100_000, end_ms=104_000),
    ),
    provenance=Provenance.GOLD,
    movie_id="demo",
)

GROUNDTRUTH = ("A storm batters the lighthouse. "
               "The keeper carries an oil can up the stairs. "
               "The lamp stays lit.")

SCRIPT = {
    "rules": [
        {"pattern": "decompose the sentence", "reply": """Sentence 1:
* A storm batters the lighthouse.

Sentence 2:
* The keeper carries an oil can up the stairs.

Sentence 3:
* The lamp stays lit.
"""},
        {"pattern": "Quote a line from the Screenplay", "reply": """Fact 1: A storm batters the lighthouse.
-> A storm batters a lighthouse on a rocky island.

Fact 2: The keeper carries an oil can up the stairs.
-> The keeper climbs the spiral stairs carrying an oil can.

Fact 3: The lamp stays lit.
-> The lamp must stay lit.
"""},
        {"pattern": "determine whether the exact meaning", "reply": """Fact 1: A storm batters the lighthouse.
1. The prediction opens with the storm.
2. Yes

Fact 2: The keeper carries an oil can up the stairs.
1. Carrying oil is not mentioned.
2. No

Fact 3: The lamp stays lit.
1. The prediction ends on the burning lamp.
2. Yes
"""},
    ]
}

with tempfile.TemporaryDirectory() as td:
    script_path = Path(td) / "mock.json"
    script_path.write_text(json.dumps(SCRIPT))
    gateway = ModelGateway(BackendConfig(base_url=f"mock://{script_path}", model_name="demo-judge"))

    facts = identify_facts(GROUNDTRUTH, gateway)
    classified = classify_facts(facts, GOLD, gateway)
    for f in classified:
        print(f"fact {f.fact_index} [{f.modality.value:>9}]  {f.text}")

    visual = [f for f in classified if f.modality is Modality.VISUAL]
    refs = derive_reference_clips(visual, GOLD, media_duration_ms=600_000)
    print("\nreference clips (start of preceding line .. end of following line):")
    for r in refs:
        print(f"  [{r.interval.start_ms:>6} .. {r.interval.end_ms:>6})  facts {r.supporting_fact_ids}")

    # Score a predicted clip selection against the references.
    predictions = [TimeInterval(0, 20_000), TimeInterval(300_000, 320_000)]
    for tau in (0.1, 0.3, 0.5):
        print(f"recall@{len(predictions)} at tau={tau}: "
              f"{recall_at_k(predictions, refs, tau):.2f}")
    prf = clipset_prf(predictions, refs, tau=0.3)
    print(f"clip-set PRF at tau=0.3: P={prf.precision:.2f} R={prf.recall:.2f} F1={prf.f1:.2f}")

    # Score a predicted summary against the classified facts.
    predicted_summary = ("The storm slams into the lighthouse at night. "
                         "Through it all the lamp keeps burning.")
    judged = judge_fact_support(predicted_summary, classified, gateway)
    scores = mfactsum(judged)
    print(f"\nvisual recall {scores.vis_rec:.1f} %, textual recall {scores.text_rec:.1f} %, "
          f"mean {scores.mfs:.1f} %")

    rouge = rouge_scores(predicted_summary, GROUNDTRUTH)
    print(f"rouge1 {rouge.rouge1:.3f}  rouge2 {rouge.rouge2:.3f}  rougeLsum {rouge.rougeLsum:.3f}")
