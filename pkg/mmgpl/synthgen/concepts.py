"""
Concept texts for synthetic classes.

Class c's blobs sit in octant c by default; each octant has its own pair of
region words, and every concept of a class mentions that pair, so concepts
share vocabulary inside a class and differ across classes. Classes past the
lexicon reuse its pairs with a numbered noun ("frontal cortex-2").
"""

from typing import List, Tuple

from ..concepts import ConceptBank, ConceptClass

OCTANTS = [
    (0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0),
    (0, 1, 1), (1, 0, 1), (1, 1, 0), (1, 1, 1),
]

REGION_LEXICON = [
    ("frontal", "cortex"),
    ("temporal", "lobe"),
    ("parietal", "gyrus"),
    ("occipital", "pole"),
    ("cingulate", "sulcus"),
    ("insular", "operculum"),
    ("cerebellar", "vermis"),
    ("thalamic", "nucleus"),
]

TEMPLATES = [
    "elevated {a} {n} intensity",
    "focal {a} {n} abnormality",
    "{a} {n} signal change",
    "localized {a} {n} lesion",
    "reduced {a} {n} contrast in the complementary modality",
    "asymmetric {a} {n} involvement",
]


def region_words(c: int) -> Tuple[str, str]:
    """Region pair of class c; past the lexicon the pairs repeat with a numbered noun."""
    a, n = REGION_LEXICON[c % len(REGION_LEXICON)]
    if c >= len(REGION_LEXICON):
        n = f"{n}-{c // len(REGION_LEXICON) + 1}"
    return a, n


def class_names(n_classes: int) -> List[str]:
    return [" ".join(region_words(c)) for c in range(n_classes)]


def synth_concepts(spec) -> ConceptBank:
    """K templated concept texts per class naming that class's planted region."""
    classes = []
    for c, name in enumerate(class_names(spec.n_classes)):
        a, n = region_words(c)
        texts = []
        for j in range(spec.n_concepts):
            text = TEMPLATES[j % len(TEMPLATES)].format(a=a, n=n)
            if j >= len(TEMPLATES):
                text = f"{text} variant {j // len(TEMPLATES)}"
            texts.append(text)
        classes.append(ConceptClass(name=name, concepts=texts))
    return ConceptBank(classes=classes)
