"""Heuristic English POS tagger emitting Penn treebank tags.

Context-free by design: a closed-class lexicon, then shape and suffix
rules, then NN.  Good enough to compare a word's tag with its synonym's
tag, which is all the attack protocol asks of the ``pos`` capability.
"""

from __future__ import annotations

import re

LEXICON = {
    # determiners and wh-words
    "the": "DT", "a": "DT", "an": "DT", "this": "DT", "that": "DT",
    "these": "DT", "those": "DT", "each": "DT", "every": "DT", "some": "DT",
    "any": "DT", "no": "DT", "which": "WDT", "what": "WP", "who": "WP",
    "whom": "WP", "whose": "WP$",
    # pronouns
    "i": "PRP", "you": "PRP", "he": "PRP", "she": "PRP", "it": "PRP",
    "we": "PRP", "they": "PRP", "me": "PRP", "him": "PRP", "her": "PRP",
    "us": "PRP", "them": "PRP",
    "my": "PRP$", "your": "PRP$", "his": "PRP$", "its": "PRP$",
    "our": "PRP$", "their": "PRP$",
    # prepositions and particles
    "of": "IN", "in": "IN", "on": "IN", "at": "IN", "by": "IN", "with": "IN",
    "from": "IN", "into": "IN", "over": "IN", "under": "IN", "after": "IN",
    "before": "IN", "between": "IN", "through": "IN", "during": "IN",
    "against": "IN", "near": "IN", "as": "IN", "about": "IN", "for": "IN",
    "to": "TO",
    # conjunctions
    "and": "CC", "or": "CC", "but": "CC", "nor": "CC", "yet": "CC",
    # modals and auxiliaries
    "will": "MD", "would": "MD", "can": "MD", "could": "MD", "may": "MD",
    "might": "MD", "shall": "MD", "should": "MD", "must": "MD",
    "is": "VBZ", "are": "VBP", "am": "VBP", "was": "VBD", "were": "VBD",
    "be": "VB", "been": "VBN", "being": "VBG",
    "has": "VBZ", "have": "VBP", "had": "VBD", "do": "VBP", "does": "VBZ",
    "did": "VBD", "not": "RB",
    # frequent irregular past forms
    "sat": "VBD", "ran": "VBD", "went": "VBD", "came": "VBD", "saw": "VBD",
    "met": "VBD", "fell": "VBD", "won": "VBD", "drew": "VBD", "sang": "VBD",
    "bought": "VBD", "sold": "VBD", "said": "VBD", "made": "VBD",
    "took": "VBD", "got": "VBD", "gave": "VBD", "held": "VBD", "hit": "VBD",
    "left": "VBD", "found": "VBD", "told": "VBD", "began": "VBD",
    "grew": "VBD", "rose": "VBD", "wrote": "VBD", "led": "VBD",
}

PUNCT_TAGS = {".": ".", ",": ",", ":": ":", ";": ":", "?": ".", "!": ".",
              "(": "(", ")": ")", "``": "``", "''": "''", '"': "''",
              "'": "''", "-": ":", "--": ":"}

_NUMBER = re.compile(r"^[+-]?\d+([.,]\d+)*$")

SUFFIX_RULES = [
    ("ing", "VBG"),
    ("ed", "VBD"),
    ("ly", "RB"),
    ("est", "JJS"),
    ("ous", "JJ"),
    ("ful", "JJ"),
    ("ive", "JJ"),
    ("ic", "JJ"),
    ("al", "JJ"),
    ("tion", "NN"),
    ("sion", "NN"),
    ("ment", "NN"),
    ("ness", "NN"),
    ("ity", "NN"),
]


def tag_word(word: str, sentence_initial: bool = False) -> str:
    if word in PUNCT_TAGS:
        return PUNCT_TAGS[word]
    if _NUMBER.match(word):
        return "CD"
    lower = word.lower()
    if lower in LEXICON:
        return LEXICON[lower]
    if word[:1].isupper() and not sentence_initial:
        return "NNP"
    for suffix, tag in SUFFIX_RULES:
        if len(lower) > len(suffix) + 2 and lower.endswith(suffix):
            return tag
    if lower.endswith("s") and not lower.endswith("ss") and len(lower) > 3:
        return "NNS"
    if word[:1].isupper():
        return "NNP"
    return "NN"


def tag_sentence(tokens: list[str]) -> list[str]:
    return [tag_word(t, sentence_initial=(i == 0)) for i, t in enumerate(tokens)]
