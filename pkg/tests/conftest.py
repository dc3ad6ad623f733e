import random

import pytest

from cmshift.shifts import (
    ShiftSpec,
    finite_full_shift,
    full_shift,
    loop_family_shift,
    renewal_shift,
    star_shift,
    successor_iter,
)


@pytest.fixture(scope="session")
def full():
    return full_shift()


@pytest.fixture(scope="session")
def star():
    return star_shift()


@pytest.fixture(scope="session")
def renewal():
    return renewal_shift()


@pytest.fixture(scope="session")
def ff3():
    return finite_full_shift(3)


@pytest.fixture(scope="session")
def fam_linear():
    return loop_family_shift(lambda n: n, name="loop_family:linear")


def random_cycle(
    spec: ShiftSpec, rng: random.Random, max_period: int, symbol_cap: int
) -> tuple[int, ...]:
    """A random admissible cycle found by walking until a closure works."""
    for _ in range(4000):
        word = [rng.randint(1, symbol_cap)]
        for _ in range(rng.randint(0, max_period - 1)):
            row = list(successor_iter(spec, word[-1], symbol_cap))
            if not row:
                break
            word.append(rng.choice(row))
            if spec.is_allowed(word[-1], word[0]) and rng.random() < 0.35:
                break
        if spec.is_allowed(word[-1], word[0]) and len(word) <= max_period:
            w = tuple(word)
            for d in range(1, len(w)):
                if len(w) % d == 0 and w == w[:d] * (len(w) // d):
                    return w[:d]
            return w
    raise AssertionError("could not sample a random cycle; caps too tight")
