"""Deterministic synthetic fixtures: a demo skills tree and annotated corpora.

Everything here is seeded and pure so tests and demos get byte-identical
corpora across runs. Response texts deliberately include misspellings and
irregular whitespace because real student writing has both and the evidence
grounding path must cope with them.
"""

from __future__ import annotations

import json
import random

from .corpus import Corpus, EvidenceSpan, HumanRead, ItemPrompt, StudentResponse
from .rubric import SkillTree, dump_skill_tree, load_skill_tree

DEMO_TREE_VERSION = "demo-2026.08"

_DEMO_TREE_DOC = {
    "version": DEMO_TREE_VERSION,
    "traits": [
        {
            "id": "purpose-and-organization",
            "name": "Purpose and Organization",
            "subtraits": [
                {
                    "id": "introduction-of-the-topic",
                    "name": "Introduction of the Topic",
                    "description": "The student effectively introduces the topic or thesis and catches the readers' interest.",
                    "scale": {"min": 0, "max": 3},
                    "rubric": [
                        "Fails to introduce the topic.",
                        "Attempts to introduce the topic and restate the prompt but may lack clarity.",
                        "Clearly states the topic or thesis.",
                        "Effectively introduces the topic with an intriguing hook that captures the audience's attention.",
                    ],
                    "standards": [
                        "CCSS.ELA-Literacy.W.6.2.a",
                        "CCSS.ELA-Literacy.W.7.2.a",
                        "CCSS.ELA-Literacy.W.8.2.a",
                    ],
                },
                {
                    "id": "paragraph-organization-strategies",
                    "name": "Paragraph Organization Strategies",
                    "description": "Paragraphs are organized logically and coherently.",
                    "scale": {"min": 0, "max": 3},
                    "rubric": [
                        "Lacks organizational structure.",
                        "The text shows some grouping of ideas but lacks a clear organizational structure.",
                        "Inconsistently applies organizational strategies in paragraphs such as definition, classification, comparison/contrast, and cause/effect.",
                        "Effectively utilizes strategies like definition, classification, comparison/contrast, and cause/effect to organize paragraphs.",
                    ],
                    "standards": [
                        "CCSS.ELA-Literacy.W.6.2.a",
                        "CCSS.ELA-Literacy.W.7.2.a",
                        "CCSS.ELA-Literacy.W.8.2.a",
                    ],
                },
                {
                    "id": "cohesion-and-transitions",
                    "name": "Cohesion and Transitions",
                    "description": "Logical and organized thematic progression of ideas",
                    "scale": {"min": 0, "max": 3},
                    "rubric": [
                        "Fails to connect sentences and ideas.",
                        "Uses little or no transitional strategies between sentences, ideas, and paragraphs.",
                        "Uses some and/or repetitive transitional words, phrases, and/or clauses to connect sentences, ideas, and paragraphs.",
                        "Effectively uses a variety of connective words, phrases, and/or clauses to transition between sentences, ideas, and paragraphs.",
                    ],
                    "standards": [
                        "CCSS.ELA-Literacy.W.6.1.c",
                        "CCSS.ELA-Literacy.W.7.1.c",
                        "CCSS.ELA-Literacy.W.8.1.c",
                        "CCSS.ELA-Literacy.W.6.2.c",
                        "CCSS.ELA-Literacy.W.7.2.c",
                        "CCSS.ELA-Literacy.W.8.2.c",
                    ],
                },
                {
                    "id": "concluding-statement",
                    "name": "Concluding Statement",
                    "description": "Provide a concluding statement or section that follows from and supports the argument presented.",
                    "scale": {"min": 0, "max": 3},
                    "rubric": [
                        "Lacks a statement that concludes and summarizes the main points.",
                        "Includes a statement that represents an ending, but may not accurately summarize the main points.",
                        "Communicates a conclusion but may lack a sense of completeness.",
                        "Effectively concludes in a logical and unified manner, and gives a sense of completeness beyond restating the introductory statement.",
                    ],
                    "standards": [
                        "CCSS.ELA-Literacy.W.6.2.f",
                        "CCSS.ELA-Literacy.W.7.2.f",
                        "CCSS.ELA-Literacy.W.8.2.f",
                        "CCSS.ELA-Literacy.W.6.1.e",
                        "CCSS.ELA-Literacy.W.7.1.e",
                        "CCSS.ELA-Literacy.W.8.1.e",
                        "CCSS.ELA-Literacy.W.6.3.e",
                        "CCSS.ELA-Literacy.W.7.3.e",
                        "CCSS.ELA-Literacy.W.8.3.e",
                    ],
                },
            ],
        },
        {
            "id": "evidence-and-elaboration",
            "name": "Evidence and Elaboration",
            "subtraits": [
                {
                    "id": "domain-specific-vocabulary",
                    "name": "Domain Specific Vocabulary",
                    "description": "Uses vocabulary appropriate to the topic and audience.",
                    "scale": {"min": 0, "max": 3},
                    "rubric": [
                        "Uses no vocabulary specific to the topic.",
                        "Uses general language with few topic-specific terms, sometimes incorrectly.",
                        "Uses some topic-specific vocabulary accurately.",
                        "Consistently uses precise, topic-specific vocabulary suited to the audience.",
                    ],
                    "standards": [
                        "CCSS.ELA-Literacy.W.6.2.d",
                        "CCSS.ELA-Literacy.W.7.2.d",
                        "CCSS.ELA-Literacy.W.8.2.d",
                    ],
                },
                {
                    "id": "explanation-of-main-points",
                    "name": "Explanation of Main Points",
                    "description": "Develops and explains the main points with reasoning.",
                    "scale": {"min": 0, "max": 3},
                    "rubric": [
                        "Presents no identifiable main points.",
                        "Lists main points without explanation or development.",
                        "Explains main points with partial reasoning or uneven development.",
                        "Thoroughly develops each main point with clear, connected reasoning.",
                    ],
                    "standards": [
                        "CCSS.ELA-Literacy.W.6.2.b",
                        "CCSS.ELA-Literacy.W.7.2.b",
                        "CCSS.ELA-Literacy.W.8.2.b",
                    ],
                },
                {
                    "id": "facts-and-quotations",
                    "name": "Facts and Quotations",
                    "description": "Supports points with relevant facts, details, and quotations from sources.",
                    "scale": {"min": 0, "max": 3},
                    "rubric": [
                        "Includes no facts or quotations.",
                        "Includes facts or quotations with little relevance or accuracy.",
                        "Includes relevant facts and quotations with minor lapses in integration.",
                        "Integrates well-chosen facts and quotations that clearly support the points.",
                    ],
                    "standards": [
                        "CCSS.ELA-Literacy.W.6.8",
                        "CCSS.ELA-Literacy.W.7.8",
                        "CCSS.ELA-Literacy.W.8.8",
                    ],
                },
                {
                    "id": "maintain-a-formal-style",
                    "name": "Maintain a Formal Style",
                    "description": "Establishes and maintains a formal style appropriate for academic writing.",
                    "scale": {"min": 0, "max": 3},
                    "rubric": [
                        "Uses informal or conversational style throughout.",
                        "Attempts a formal style but frequently slips into informal language.",
                        "Maintains a formal style with occasional lapses.",
                        "Maintains a consistent formal style appropriate to audience and purpose.",
                    ],
                    "standards": [
                        "CCSS.ELA-Literacy.W.6.2.e",
                        "CCSS.ELA-Literacy.W.7.2.e",
                        "CCSS.ELA-Literacy.W.8.2.e",
                    ],
                },
            ],
        },
    ],
}


def demo_tree_json() -> str:
    tree = demo_tree()
    return dump_skill_tree(tree)


def demo_tree() -> SkillTree:
    return load_skill_tree(json.dumps(_DEMO_TREE_DOC))


# --- synthetic corpus ----------------------------------------------------------

_TOPICS = [
    ("solar power", "panels", "sunlight", "electricity"),
    ("school gardens", "seedlings", "compost", "harvest"),
    ("ocean cleanup", "plastic", "currents", "wildlife"),
    ("city libraries", "borrowing", "reading rooms", "archives"),
]

_OPENERS = [
    "Imagine a world where {a} changes everything for ordinary people.",
    "Many people do not realize how much {a} matters to their town.",
    "This essay is about {a} and why it is important.",
    "{a} is a topic people argue about every day.",
]

_BODY = [
    "First of all, {b} can help because it saves money over time.",
    "The passage says that {c} moved more than anyone expected.",
    "For example, the author explains that {b} worked in three diffrent cities.",
    "Gradually, communities started to notice the beefits of {a}.",
    "In addition, {c} gives students a reason to learn about science.",
    "However, some people think {b} costs too much at the start.",
    "Unlike older ideas, {a} keeps improving every single year.",
    "The data showed that {d} went up after the program began.",
    "Another reason is that {d} makes a real difference for families.",
    "Experts who study {a} say the change is already visible.",
]

_CLOSERS = [
    "All in all, {a} deserves more attention than it gets today.",
    "In conclusion, the evidence shows that {a} helps everyone.",
    "That is why I believe {a} is worth the effort.",
]

_RATERS = ("marker-1", "marker-2", "marker-3", "marker-4")


def _make_text(rng: random.Random, topic: tuple[str, str, str, str], quality: int) -> str:
    a, b, c, d = topic
    fields = {"a": a, "b": b, "c": c, "d": d}
    paragraphs: list[str] = []
    n_body = 1 + quality + rng.randrange(2)
    opener = rng.choice(_OPENERS).format(**fields)
    body_pool = list(_BODY)
    rng.shuffle(body_pool)
    first_body = " ".join(s.format(**fields) for s in body_pool[:3])
    paragraphs.append(opener + " " + first_body)
    for i in range(n_body - 1):
        chunk = body_pool[3 + i * 2 : 5 + i * 2]
        if not chunk:
            break
        paragraphs.append(" ".join(s.format(**fields) for s in chunk))
    if quality > 0 or rng.random() < 0.3:
        paragraphs.append(rng.choice(_CLOSERS).format(**fields))
    return "\n\n".join(paragraphs)


def _sentence_spans(text: str) -> list[tuple[int, int]]:
    spans: list[tuple[int, int]] = []
    start = None
    for i, ch in enumerate(text):
        if start is None and not ch.isspace():
            start = i
        if ch in ".!?" and start is not None:
            spans.append((start, i + 1))
            start = None
    if start is not None:
        spans.append((start, len(text)))
    return spans


def _clamp(value: int, lo: int = 0, hi: int = 3) -> int:
    return max(lo, min(hi, value))


def synth_corpus(
    tree: SkillTree,
    n_items: int = 2,
    n_responses: int = 10,
    seed: int = 7,
    raters: tuple[str, ...] = _RATERS,
) -> Corpus:
    """Fully annotated corpus: every response carries two complete reads.

    Read scores are correlated (read 2 jitters around read 1) so agreement
    statistics land in a realistic moderate band rather than at chance.
    """
    if n_items < 1 or n_responses < n_items:
        raise ValueError("need at least one item and n_responses >= n_items")
    rng = random.Random(seed)
    items: dict[str, ItemPrompt] = {}
    for i in range(n_items):
        topic = _TOPICS[i % len(_TOPICS)]
        item = ItemPrompt(
            id=f"item-{i + 1:02d}",
            title=f"Writing about {topic[0]}",
            stimulus=(
                f"Read the passage about {topic[0]}. Write an essay explaining how "
                f"{topic[1]} and {topic[2]} affect your community. Use facts from the passage."
            ),
            passages=(
                f"Researchers tracked {topic[0]} projects in twelve towns. They found that "
                f"{topic[3]} rose steadily in ten of them over five years.",
            ),
        )
        items[item.id] = item

    subtrait_ids = list(tree.subtrait_ids())
    responses: dict[str, StudentResponse] = {}
    reads: list[HumanRead] = []
    item_ids = list(items)

    for r in range(n_responses):
        item_id = item_ids[r % n_items]
        topic = _TOPICS[item_ids.index(item_id) % len(_TOPICS)]
        quality = rng.randrange(4)
        text = _make_text(rng, topic, quality)
        response = StudentResponse(id=f"resp-{r + 1:03d}", item_id=item_id, text=text)
        responses[response.id] = response

        sentences = _sentence_spans(text)
        first_reader = raters[r % len(raters)]
        second_reader = raters[(r + 1) % len(raters)]
        read1_subs: dict[str, int] = {}
        for sid in subtrait_ids:
            read1_subs[sid] = _clamp(quality + rng.choice((-1, 0, 0, 0, 1)))
        read2_subs = {sid: _clamp(score + rng.choice((-1, 0, 0, 0, 0, 1))) for sid, score in read1_subs.items()}

        for read_index, reader, subs in ((1, first_reader, read1_subs), (2, second_reader, read2_subs)):
            trait_scores: dict[str, int] = {}
            for trait in tree.traits:
                mean = sum(subs[s.id] for s in trait.subtraits) / len(trait.subtraits)
                trait_scores[trait.id] = _clamp(round(mean + rng.choice((-0.4, 0.0, 0.0, 0.4))))
            evidence: dict[str, tuple[EvidenceSpan, ...]] = {}
            for sid in subtrait_ids:
                if subs[sid] == 0 or rng.random() < 0.2 or not sentences:
                    continue
                count = 1 + rng.randrange(2)
                picks = sorted(rng.sample(range(len(sentences)), min(count, len(sentences))))
                evidence[sid] = tuple(
                    EvidenceSpan.from_offsets(text, sentences[p][0], sentences[p][1]) for p in picks
                )
            reads.append(
                HumanRead(
                    response_id=response.id,
                    rater_id=reader,
                    read_index=read_index,
                    trait_scores=trait_scores,
                    subtrait_scores=subs,
                    evidence=evidence,
                    tree_version=tree.version,
                )
            )

    return Corpus(items=items, responses=responses, reads=reads, provenance={"source": "synthetic", "seed": seed})


def linear_corpus(tree: SkillTree, n_responses: int = 8) -> Corpus:
    """Corpus where every subtrait score equals its trait score exactly.

    Trait means then equal subtrait means for both reads, so the
    trait-subtrait correlation is exactly 1.0 by construction.
    """
    item = ItemPrompt(id="item-01", title="Linear fixture", stimulus="Write about anything.")
    responses: dict[str, StudentResponse] = {}
    reads: list[HumanRead] = []
    for r in range(n_responses):
        score = r % 4
        response = StudentResponse(
            id=f"resp-{r + 1:03d}",
            item_id=item.id,
            text=f"Fixture response number {r + 1}. It has two sentences.",
        )
        responses[response.id] = response
        for read_index, rater in ((1, "marker-1"), (2, "marker-2")):
            reads.append(
                HumanRead(
                    response_id=response.id,
                    rater_id=rater,
                    read_index=read_index,
                    trait_scores={t.id: score for t in tree.traits},
                    subtrait_scores={sid: score for sid in tree.subtrait_ids()},
                    tree_version=tree.version,
                )
            )
    return Corpus(items={item.id: item}, responses=responses, reads=reads, provenance={"source": "linear-fixture"})
