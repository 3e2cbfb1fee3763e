"""Small bundled datasets used in examples and regression tests."""

from __future__ import annotations

from .core import Observation

# Iowa Republican caucus poll: counts of likely caucus-goers naming each
# candidate (890 respondents).  The seven leading counts are the published
# ones; the remaining rows complete the table to the stated total.
IOWA_POLL = {
    "Trump": 276,
    "Cruz": 214,
    "Rubio": 151,
    "Carson": 71,
    "Paul": 36,
    "Bush": 36,
    "Huckabee": 27,
    "Fiorina": 18,
    "Kasich": 18,
    "Christie": 9,
    "Santorum": 9,
    "Gilmore": 0,
    "Don't know": 25,
}

# Most frequently endorsed values among 20 children; only the two leading
# counts matter for the winner-versus-runner-up comparison.
UHLS_VALUES = {
    "Fame": 8,
    "Benevolence": 5,
    "Achievement": 2,
    "Popularity": 2,
    "Self-acceptance": 1,
    "Image": 1,
    "Community feeling": 1,
}


def iowa_poll() -> Observation:
    return Observation.from_mapping(IOWA_POLL)


def uhls_values() -> Observation:
    return Observation.from_mapping(UHLS_VALUES)
