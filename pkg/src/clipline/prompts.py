"""Frozen prompt templates for every model-facing stage.

The rendered bytes are pinned by golden-file tests; treat all template
text, including the two few-shot selection exemplars, as immutable.
Placeholders use ``str.format`` named fields.
"""

from __future__ import annotations

from typing import Iterable

CLIP_SELECTION_TEMPLATE = """Here are captions from the movie {movie_name}:

{captions}

What are the {k} most important Captions that describe important action or visual event you would include in the existing Summary of the movie {movie_name}?
Provide your answer in the following way:
1. Caption caption_number: Justification why the Caption describes crucial action for the summary
2. Caption caption_number: Justification why the Caption describes crucial action for the summary

...

{k}. Caption caption_number: Justification why the Caption describes crucial action for the summary

Answer:"""

_EXEMPLAR_FORREST_GUMP = """Here are captions from the movie Forrest Gump:

Caption 1110000: In the video, a man and woman sit on a bench in a park. The man is wearing a suit and tie while the woman wears casual clothes. They appear to be reading books together as they sit side by side. The man then turns his attention towards the woman and starts talking about something. He mentions that life is like a box of chocolates and you never know what you're going to get. He also comments on how comfortable her shoes must be and suggests she could walk all day in them.

Caption 1130000: Forrest is sitting on a bench outside. He then sits inside a doctor's office with his legs up on the table. The doctor removes Forrest's leg braces and asks him to stand up. Forrest stands up and walks around the room.

Caption 1150000: The dialogue reveals that the woman is explaining the origin of the character's name "Forrest Gump." She mentions that the "Forrest" part of the name comes from an incident where they were related to someone who started a club called the Ku Klux Klan. The woman explains that the "Gump" part of the name was given because sometimes people do things that don't make sense.

Caption 1170000: The video shows a group of boys chasing Forrest Gump as he runs down a dirt road. The boys are shouting at him to run faster, while Forrest continues to run without looking back. One of the boys falls over, but gets up quickly and continues chasing Forrest. The other boys also catch up with Forrest and start to chase him more aggressively. As they get closer, one of the boys throws a rock at Forrest, who ducks to avoid it. Another boy tries to kick him, but misses. The boys continue to chase Forrest until he reaches his home, where his mother is waiting for him. She tells him that miracles happen every day, and that some people may not believe them, but they still exist.

Caption 1190000: The man is running on the field, and he jumps over the fence. He runs to the football field and throws the ball. The coaches are watching him.

Caption 1210000: The video shows a scene where a woman holding a baby sits on a bench next to another woman who is reading a book. A man in a suit is sitting on the other side of the bench with his suitcase beside him. The woman with the baby stands up and walks away from the bench while talking to the man. She then sits back down on the bench and continues talking to him. In the background, there is a bus passing by. The dialogue includes the woman asking if the bus is the number nine, but the man corrects her and says it's the number four. They also have a conversation about someone named Wallace getting shot while they were in college.

Caption 1230000: The video shows a woman reading a book to her son on their bed. The boy asks his mother about vacation, and she explains that it is when someone goes somewhere and never comes back.

What are the 3 most important Captions that describe important action or visual event you would include in a Summary of the movie Forrest Gump?
Provide your answer in the following way:
1. Caption caption_number: Justification why the Caption describes crucial action for the summary
2. Caption caption_number: Justification why the Caption describes crucial action for the summary
3. Caption caption_number: Justification why the Caption describes crucial action for the summary

Answer:
Caption 1130000: Justification: This caption depicts the removal of Forrest's leg braces, a pivotal moment signifying his physical transformation and newfound freedom.
Caption 1170000: Justification: This caption illustrates the bullying Forrest faces and his eventual discovery of his running ability, a recurring motif in the film.
Caption 1190000: Justification: This caption depicts Forrest's accidental entry into the world of football, showcasing his unexpected athletic talent."""

_EXEMPLAR_WONDER_WOMAN = """Here are captions from the movie Wonder Woman:

Caption 4210000: The scene opens with a man sitting at his desk, looking at his watch. He then turns to face another man standing before him. The man in uniform speaks to the other man, telling him that he will do nothing. The man in uniform then walks away as the other man looks on. The scene ends with the man in uniform walking out of the room.
Caption 4230000: Diana and Steve are walking down the stairs. Steve is talking to Diana. Steve is angry at Diana for not fighting back against Ares. He tells her that she didn't stand her ground because there was no chance of changing Ares' mind. He also tells her that millions of people will die if they don't fight back. He tells her that his people are next. Summary: Steve is angry at Diana for not fighting back against Ares. He tells her that she didn't stand her ground because there was no chance of changing Ares' mind. He also tells her that millions of people will die if they don't fight back. He tells her that his people are next.
Caption 4250000: The video shows a man sitting on a chair in a room. A bomb is thrown into the room and explodes. The man gets up and runs out of the door. He then talks to another man who is standing outside the door. The man inside the room is coughing and choking on smoke.

What are the 1 most important Captions that describe important action or visual event you would include in a Summary of the movie Wonder Woman?
Provide your answer in the following way:
1. Caption caption_number: Justification why the Caption describes crucial action for the summary

Answer:
Caption 4250000: Justification: This caption depicts a sudden and violent attack, showcasing the dangers faced by the characters and the chaos of the war. It emphasizes the element of surprise and the characters' ability to react quickly to threats. Therefore the Caption depicts important visual action of event."""

# Fixed few-shot demonstrations prepended, in this order, for two-shot selection.
SELECTION_EXEMPLARS: tuple[str, str] = (_EXEMPLAR_FORREST_GUMP, _EXEMPLAR_WONDER_WOMAN)

LIGHTWEIGHT_CAPTION_PROMPT = "Describe both the action and Summarize the corresponding dialogue."

RECAPTION_PROMPT = "Describe both the video, action and dialogue in one paragraph"

SUMMARY_TEMPLATE = """{document}

Generate a comprehensive multimodal summary of exactly 1000 words of the movie based on the provided dialogue and the most important visual elements.

Your summary should:

Synthesize information from both the dialogue (transcript) and the important visual events (visual analysis).

Your overall summary should contain exactly 1000 words. Do not refer to external websites, movie databases or plot summaries."""

FACT_IDENTIFICATION_TEMPLATE = """Summary:
{summary}

For every sentence from the Summary, decompose the sentence in a list of facts (at least 1). Each fact can be only part of a sentence and should convey a single piece of information about the story.

Example:

Sentence 1:
*

Sentence 2:
*
...

Sentence N:
*"""

FACT_CLASSIFICATION_TEMPLATE = """Screenplay:
{screenplay}

For every fact below:
{facts}

-> Find the information in the above Screenplay. Quote a line from the Screenplay.

Example:

Fact 1: Recopy the Fact
-> Quoted line from Screenplay

Fact 2: Recopy the Fact
-> Quoted line from Screenplay
...

Fact N: Recopy the Fact
-> Quoted line from Screenplay"""

FACT_SUPPORT_TEMPLATE = """Summary:
{summary}

Task:
For each fact listed below, determine whether the exact meaning of the fact is explicitly present in the summary above.

Instructions:
You must justify your answer by quoting or paraphrasing the relevant part of the summary.
If the fact is not explicitly present, even if it seems implied or suggested, you must answer No.

Do not accept facts just because they are likely, inferable, or assumed from context.
However, do allow for reasonable paraphrasing or rewording. If the summary conveys the same meaning as the fact using different but equivalent words, answer Yes.

Format:

Fact 1: [Recopy the Fact]
1. Justification (quote or paraphrase from the summary, and explain how it matches the fact)
2. Yes

Fact 2: [Recopy the Fact]
1. Justification
2. No
...

Fact N: [Recopy the Fact]
1. Justification
2. Yes

List of all Facts:
{facts}"""


def render_caption_block(captions: Iterable[tuple[int, str]]) -> str:
    """Render ``Caption <clip_id>: <text>`` entries separated by blank lines."""
    return "\n\n".join(f"Caption {clip_id}: {text}" for clip_id, text in captions)


def render_fact_block(fact_texts: Iterable[str]) -> str:
    """Render a numbered ``Fact i: <text>`` list, one fact per line."""
    return "\n".join(f"Fact {i}: {text}" for i, text in enumerate(fact_texts, 1))
