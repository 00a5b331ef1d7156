#!/usr/bin/env python3
"""Writes the synthetic desk corpus under data/desk/.

Twelve papers (ten about explainability, two not), hand-parsed CoNLL-U for
every body sentence, and a truth table saying whether each subject
occurrence sits in a mental-verb or a physical-verb context. The output is
fully determined by SEED.
"""

import json
import random
import sys
from pathlib import Path

SEED = 7

MIND_VERBS = [("thinks", "think", "VBZ"), ("believes", "believe", "VBZ"), ("knows", "know", "VBZ")]
MIND_VERBS_PL = [("think", "think", "VBP"), ("believe", "believe", "VBP"), ("know", "know", "VBP")]
MIND_NOUNS = ["answer", "label", "class"]
MIND_ADJS = ["correct", "wrong"]

PHYS_VERBS = [("runs", "run", "VBZ"), ("executes", "execute", "VBZ"), ("computes", "compute", "VBZ")]
PHYS_VERBS_PL = [("run", "run", "VBP"), ("execute", "execute", "VBP"), ("compute", "compute", "VBP")]
PHYS_PLACES = [("GPU", "PROPN", "NNP"), ("server", "NOUN", "NN"), ("cluster", "NOUN", "NN")]
PHYS_MODES = ["parallel", "batches"]

AUTHORS = ["A. Rivera", "B. Chen", "C. Okafor", "D. Novak", "E. Haddad", "F. Lindqvist", "G. Tanaka", "H. Mensah"]


def tok(surface, lemma, upos, xpos, head, deprel, feats="_"):
    return [surface, lemma, upos, xpos, feats, head, deprel]


def subject_np(det, noun, plural):
    """Determiner + target noun; the noun is token 2."""
    lemma = noun.rstrip("s") if plural else noun
    d = tok(det, det.lower(), "PRON" if det.lower() == "our" else "DET",
            "PRP$" if det.lower() == "our" else "DT", 2, "nmod:poss" if det.lower() == "our" else "det")
    feats = "Number=Plur" if plural else "Number=Sing"
    n = tok(noun, lemma, "NOUN", "NNS" if plural else "NN", 3, "nsubj", feats)
    return [d, n]


def mind_sentence(rng, det, noun, plural):
    verb = rng.choice(MIND_VERBS_PL if plural else MIND_VERBS)
    obj = rng.choice(MIND_NOUNS)
    adj = rng.choice(MIND_ADJS)
    toks = subject_np(det, noun, plural) + [
        tok(verb[0], verb[1], "VERB", verb[2], 0, "root"),
        tok("that", "that", "SCONJ", "IN", 8, "mark"),
        tok("the", "the", "DET", "DT", 6, "det"),
        tok(obj, obj, "NOUN", "NN", 8, "nsubj"),
        tok("is", "be", "AUX", "VBZ", 8, "cop"),
        tok(adj, adj, "ADJ", "JJ", 3, "ccomp"),
        tok(".", ".", "PUNCT", ".", 3, "punct"),
    ]
    return toks


def phys_sentence(rng, det, noun, plural):
    verb = rng.choice(PHYS_VERBS_PL if plural else PHYS_VERBS)
    place = rng.choice(PHYS_PLACES)
    mode = rng.choice(PHYS_MODES)
    toks = subject_np(det, noun, plural) + [
        tok(verb[0], verb[1], "VERB", verb[2], 0, "root"),
        tok("on", "on", "ADP", "IN", 6, "case"),
        tok("the", "the", "DET", "DT", 6, "det"),
        tok(place[0], place[0], place[1], place[2], 3, "obl"),
        tok("in", "in", "ADP", "IN", 8, "case"),
        tok(mode, "batch" if mode == "batches" else mode, "NOUN", "NNS" if mode == "batches" else "NN", 3, "obl"),
        tok(".", ".", "PUNCT", ".", 3, "punct"),
    ]
    return toks


def object_sentence(noun):
    # "We train the model on the server ." : the target is an object.
    return [
        tok("We", "we", "PRON", "PRP", 2, "nsubj"),
        tok("train", "train", "VERB", "VBP", 0, "root"),
        tok("the", "the", "DET", "DT", 4, "det"),
        tok(noun, noun, "NOUN", "NN", 2, "obj"),
        tok("on", "on", "ADP", "IN", 7, "case"),
        tok("the", "the", "DET", "DT", 7, "det"),
        tok("server", "server", "NOUN", "NN", 2, "obl"),
        tok(".", ".", "PUNCT", ".", 2, "punct"),
    ]


def verbal_model_sentence():
    # "We model the noise explicitly ." : "model" is a verb.
    return [
        tok("We", "we", "PRON", "PRP", 2, "nsubj"),
        tok("model", "model", "VERB", "VBP", 0, "root"),
        tok("the", "the", "DET", "DT", 4, "det"),
        tok("noise", "noise", "NOUN", "NN", 2, "obj"),
        tok("explicitly", "explicitly", "ADV", "RB", 2, "advmod"),
        tok(".", ".", "PUNCT", ".", 2, "punct"),
    ]


def filler_sentence(rng):
    # "Results improve with more data ." : no target at all.
    subj = rng.choice(["Results", "Scores", "Errors"])
    verb = rng.choice([("improve", "improve"), ("change", "change")])
    return [
        tok(subj, subj.lower().rstrip("s"), "NOUN", "NNS", 2, "nsubj", "Number=Plur"),
        tok(verb[0], verb[1], "VERB", "VBP", 0, "root"),
        tok("with", "with", "ADP", "IN", 5, "case"),
        tok("more", "more", "ADJ", "JJR", 5, "amod"),
        tok("data", "data", "NOUN", "NNS", 2, "obl"),
        tok(".", ".", "PUNCT", ".", 2, "punct"),
    ]


def text_of(toks):
    out = ""
    for i, t in enumerate(toks):
        if i and t[0] not in ".,":
            out += " "
        out += t[0]
    return out


def conllu_block(paper_id, sent_id, toks):
    lines = [f"# paper_id = {paper_id}", f"# sent_id = {sent_id}", f"# text = {text_of(toks)}"]
    for i, t in enumerate(toks, 1):
        misc = "SpaceAfter=No" if i < len(toks) and toks[i][0] in ".," else "_"
        lines.append("\t".join([str(i), t[0], t[1], t[2], t[3], t[4], str(t[5]), t[6], "_", misc]))
    return "\n".join(lines) + "\n\n"


def build(out_dir: Path):
    rng = random.Random(SEED)
    papers = []
    conllu = []
    truth = []

    xai_titles = [
        "Explainable AI for credit scoring",
        "Towards interpretable machine learning in radiology",
        "A black box audit of recommender systems",
        "Responsible AI in hiring pipelines",
        "Transparent AI for traffic control",
        "Explainable artificial intelligence for fraud detection",
        "Interactive AI with user feedback",
        "Post-hoc explanations for black-box classifiers",
        "XAI methods for time series",
        "Intelligible AI for clinical triage",
    ]
    other_titles = ["Fast sorting on graphics hardware", "A survey of protein folding benchmarks"]

    for p in range(12):
        paper_id = f"desk-{p + 1:02d}"
        xai = p < 10
        authors = [AUTHORS[p % len(AUTHORS)], AUTHORS[(p + 3) % len(AUTHORS)]]
        sentences = []
        if xai:
            # Twelve "model" occurrences and four "algorithm" occurrences per
            # paper, half in each context, plus sentences that must not count.
            plan = []
            for k in range(12):
                plan.append(("model", "mind" if k % 2 == 0 else "phys"))
            for k in range(4):
                plan.append(("algorithm", "mind" if k % 2 == 0 else "phys"))
            rng.shuffle(plan)
            for noun, kind in plan:
                roll = rng.random()
                if roll < 0.2:
                    det, plural = "Our", False
                elif roll < 0.35:
                    det, plural = "The", True
                else:
                    det, plural = "The", False
                surface = noun + "s" if plural else noun
                toks = (mind_sentence if kind == "mind" else phys_sentence)(rng, det, surface, plural)
                sentences.append((toks, kind))
            sentences.insert(3, (object_sentence("model"), None))
            sentences.insert(7, (verbal_model_sentence(), None))
            sentences.append((filler_sentence(rng), None))
        else:
            for k in range(4):
                sentences.append((mind_sentence(rng, "The", "model", False), None))
                sentences.append((filler_sentence(rng), None))

        texts = []
        for i, (toks, kind) in enumerate(sentences, 1):
            sent_id = f"{paper_id}:{i}"
            texts.append(text_of(toks))
            conllu.append(conllu_block(paper_id, sent_id, toks))
            if kind is not None:
                truth.append(f"{paper_id}/{sent_id}/2-2\t{kind}")

        record = {
            "paper_id": paper_id,
            "title": xai_titles[p] if xai else other_titles[p - 10],
            "abstract": "We study how systems behave." if xai else "We report measurements.",
            "venue": "Desk Workshop",
            "journal": "",
            "authors": authors,
        }
        # One paper ships only abstract sentences to exercise the fallback.
        if p == 9:
            record["abstract_sentences"] = texts
        else:
            record["body_sentences"] = texts
        papers.append(record)

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "papers.jsonl").write_text("".join(json.dumps(r) + "\n" for r in papers))
    (out_dir / "desk.conllu").write_text("".join(conllu))
    (out_dir / "truth.tsv").write_text("# occurrence_id<TAB>context\n" + "\n".join(truth) + "\n")


if __name__ == "__main__":
    build(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "desk")
