"""Shared helpers for the test suite: randomized Things and subjects."""

from __future__ import annotations

import math
import random
import string
from datetime import datetime, timedelta, timezone

from hypothesis import strategies as st

from fastiiot.datamodel import Thing

TOKEN_ALPHABET = string.ascii_letters + string.digits + "_-"

tokens = st.text(alphabet=TOKEN_ALPHABET, min_size=1, max_size=20)

values = st.one_of(
    st.booleans(),
    st.integers(min_value=-(2**63), max_value=2**63 - 1),
    st.floats(allow_nan=False, allow_infinity=True),
    st.text(max_size=200),
)

_LATEST_VALID = datetime.now() + timedelta(hours=23)

timestamps = st.datetimes(
    min_value=datetime(1970, 1, 1),
    max_value=_LATEST_VALID,
    timezones=st.just(timezone.utc),
)

units = st.one_of(st.none(), st.just(""), st.just("°C"), st.text(max_size=8))

things = st.builds(
    Thing,
    machine=tokens,
    name=tokens,
    value=values,
    timestamp=timestamps,
    unit=units,
)


def random_token(rng: random.Random, max_len: int = 20) -> str:
    return "".join(rng.choice(TOKEN_ALPHABET) for _ in range(rng.randint(1, max_len)))


def random_value(rng: random.Random):
    kind = rng.randrange(4)
    if kind == 0:
        return rng.random() < 0.5
    if kind == 1:
        return rng.randint(-(2**63), 2**63 - 1)
    if kind == 2:
        if rng.random() < 0.02:
            return rng.choice([math.inf, -math.inf, 0.0, -0.0])
        return rng.uniform(-1e12, 1e12)
    n = rng.randint(0, 120)
    return "".join(rng.choice(string.printable + "°äü") for _ in range(n))


def random_thing(rng: random.Random) -> Thing:
    ts = datetime(1970, 1, 1, tzinfo=timezone.utc) + timedelta(
        milliseconds=rng.randint(0, 2_000_000_000_000)
    )
    unit = rng.choice([None, "", "°C", random_token(rng, 6)])
    return Thing(
        machine=random_token(rng),
        name=random_token(rng),
        value=random_value(rng),
        timestamp=ts,
        unit=unit,
    )
