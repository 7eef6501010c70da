import pytest

from tslforge import encode_parts, machine_to_cfa, parse_spec, synthesize
from tslforge.synth import Realizable


def synthesize_cfa(text, max_k=4):
    spec = parse_spec(text)
    result = synthesize(spec, max_k=max_k)
    assert isinstance(result, Realizable), result
    enc = encode_parts(spec)
    return spec, enc, result.machine, machine_to_cfa(result.machine, enc.aps, spec.signals)


ALTERNATOR = "ALWAYS GUARANTEE { F [o <- a()]; F [o <- b()]; }"
COPY = "ALWAYS GUARANTEE { p x <-> [o <- f x]; !p x <-> [o <- g()]; }"
COUNTER = "ALWAYS GUARANTEE { [c <- c + 1]; [o <- c]; }"


@pytest.fixture(scope="session")
def alternator():
    return synthesize_cfa(ALTERNATOR)


@pytest.fixture(scope="session")
def copier():
    return synthesize_cfa(COPY)


@pytest.fixture(scope="session")
def counter():
    return synthesize_cfa(COUNTER)


@pytest.fixture(scope="session")
def corpus_results():
    """Synthesis result of every realizable corpus entry, by name."""
    from tslforge.corpus import build_corpus

    return {
        e.name: (e, synthesize(e.spec()))
        for e in build_corpus()
        if e.status == "realizable"
    }
