import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import formlang as fl

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def vocab250():
    return fl.make_vocab(250)


@pytest.fixture(scope="session")
def uniform_pairs250():
    return fl.make_distribution("uniform", 250)


@pytest.fixture(scope="session")
def uniform_flat500():
    return fl.make_distribution("uniform", 500)


@pytest.fixture(scope="session")
def nest_spec(vocab250, uniform_pairs250):
    return fl.LanguageSpec(
        family="nest", vocab=vocab250, pair_dist=uniform_pairs250, seed=11,
        doc_target_len=480,
    )


@pytest.fixture(scope="session")
def nest_distance_ref(nest_spec, vocab250):
    """Distance pmf from a 2M-token NEST run; seeds cross/mix specs in tests."""
    arcsets = (fl.match_arcs(d.ids, vocab250) for d in fl.generate(nest_spec, 2_000_000))
    return fl.distance_distribution(arcsets)


def text_ids(text: str, vocab) -> np.ndarray:
    """Shorthand: parse figure-style token text ("1( 54( 54) 1)") to IDs."""
    return fl.from_text(text.replace("(", "_(").replace(")", "_)"), vocab)
