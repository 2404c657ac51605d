#!/usr/bin/env python3
"""Transcripts, screenplay assembly and quote matching.

Parses a small SubRip transcript, interleaves captions for two selected
clips into a screenplay-style document, and shows the fuzzy quote lookup
used when classifying summary facts.
"""

from clipline import (
    Caption,
    CaptionKind,
    Clip,
    Provenance,
    build_screenplay,
    match_quote,
    parse_screenplay,
    parse_srt,
    serialize_screenplay,
)

SRT = """\
1
00:00:05,000 --> 00:00:08,000
KEEPER: The sea was calm when we set out.

2
00:00:31,000 --> 00:00:36,000
KEEPER: Keep the lamp burning, whatever happens.

3
00:01:02,000 --> 00:01:06,500
ASSISTANT: The oil is running low again.
"""

utterances = parse_srt(SRT, speaker_prefix=True)
print("utterances:")
for u in utterances:
    print(f"  [{u.interval.start_ms:>6}] {u.speaker}: {u.text}")

# Captions for the clips a selector picked. Insertion is timestamp-driven:
# each caption lands after the last utterance that starts before its clip.
selected = [Clip.from_bounds(20_000, 40_000), Clip.from_bounds(60_000, 80_000)]
captions = [
    Caption(clip_id=20_000, kind=CaptionKind.RECAPTION,
            text="Waves slam the pier as the keeper wrestles the door shut."),
    Caption(clip_id=60_000, kind=CaptionKind.RECAPTION,
            text="The assistant tips the last oil can over the lamp reservoir."),
]
screenplay = build_screenplay(utterances, captions, selected, movie_id="demo")
text = serialize_screenplay(screenplay)
print("\nbuilt screenplay:")
print(text)

# The serialized form round-trips, so stages can exchange it as plain text.
again = parse_screenplay(text, Provenance.BUILT, "demo")
assert again.lines == screenplay.lines
print(f"\nround-trip ok, {len(again.caption_lines())} caption lines")

# Fuzzy quote matching: token-level F1 after normalization. Light
# paraphrase still lands on the right line; gibberish stays unmatched.
quote = "keep the lamp burning whatever happens"
m = match_quote(quote, screenplay)
print(f"\nquote {quote!r}\n  -> line {m.line_index} ({m.matched_kind.value}), score {m.score:.2f}")
print("unmatched quote:", match_quote("penguins invade the casino", screenplay))
