"""Five-slot event labels and their closed vocabularies."""
from typing import NamedTuple

import numpy as np

from .exceptions import InvalidInputError

NONE = "None"
ENTITIES = ("performer", "O1", "O2", NONE)
VERBS = ("push", "pull", "slide", "roll", NONE)
PREPOSITIONS = ("toward", "away_from", "past", NONE)

SLOTS = ("subject", "verb", "object", "preposition", "locative")
VOCABULARIES = {
    "subject": ENTITIES,
    "verb": VERBS,
    "object": ENTITIES,
    "preposition": PREPOSITIONS,
    "locative": ENTITIES,
}


class LabelTuple(NamedTuple):
    subject: str = NONE
    verb: str = NONE
    object: str = NONE
    preposition: str = NONE
    locative: str = NONE

    @classmethod
    def from_dict(cls, d):
        values = {slot: NONE if d.get(slot) is None else str(d[slot]) for slot in SLOTS}
        label = cls(**values)
        label.validate()
        return label

    def to_dict(self):
        return dict(self._asdict())

    def validate(self):
        for slot, value in zip(SLOTS, self):
            if value not in VOCABULARIES[slot]:
                raise InvalidInputError(f"{value!r} is not a valid {slot}")
        return self


NULL_LABEL = LabelTuple()


def satisfies_constraints(label) -> bool:
    """Hard structural constraints on a label tuple.

    No entity fills two of subject/object/locative, a missing verb forces
    every other slot to None, and locative is None exactly when preposition is.
    """
    subject, verb, obj, prep, loc = label
    entities = [e for e in (subject, obj, loc) if e != NONE]
    if len(entities) != len(set(entities)):
        return False
    if verb == NONE and any(v != NONE for v in (subject, obj, prep, loc)):
        return False
    return (loc == NONE) == (prep == NONE)


def encode_labels(y):
    """Label tuples -> integer array of shape (n, 5) in slot order."""
    rows = []
    for label in y:
        if len(label) != len(SLOTS):
            raise InvalidInputError(f"label {label!r} does not have {len(SLOTS)} slots")
        try:
            rows.append([VOCABULARIES[s].index(str(v)) for s, v in zip(SLOTS, label)])
        except ValueError as exc:
            raise InvalidInputError(f"unknown label value in {label!r}") from exc
    return np.array(rows, dtype=np.int64).reshape(-1, len(SLOTS))


def decode_labels(codes):
    return [LabelTuple(*(VOCABULARIES[s][int(i)] for s, i in zip(SLOTS, row))) for row in codes]
