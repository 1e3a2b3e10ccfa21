import itertools

import pytest

from perceptlang import corpus_text, load_corpus
from perceptlang.frontend import parse_source
from perceptlang.platform import Platform
from perceptlang.sema import check_program

_ids = itertools.count()


@pytest.fixture(scope="session")
def shapes():
    return load_corpus("shapes")


@pytest.fixture(scope="session")
def robome():
    return load_corpus("robome")


@pytest.fixture(scope="session")
def robome_ontology_src():
    return corpus_text("robome_ontology.jas")


def compile_src(src: str, file: str = "test.jas"):
    return check_program(parse_source(src, file), file=file)


def fresh_platform(program=None, **kw) -> Platform:
    """A platform with a unique id, so tests never collide in the id registry."""
    return Platform(f"t{next(_ids)}", deterministic=kw.pop("deterministic", True), program=program, **kw)
