"""An interpreter for an agent-oriented language with prioritized percepts."""

from importlib import resources

from .errors import LangError

__version__ = "0.1.0"

# Each entry is checked as one program; the two declare distinct position schemas.
CORPUS_PROGRAMS = {
    "shapes": ("shapes.jas",),
    "robome": ("robome_ontology.jas", "robome_agent.jas", "robome_behaviour.jas"),
}


def corpus_text(name: str) -> str:
    return resources.files("perceptlang").joinpath("corpus", name).read_text(encoding="utf-8")


def load_corpus(names):
    """Parse and check packaged corpus files as one program.

    ``names`` is a key of :data:`CORPUS_PROGRAMS` or a sequence of file names.
    """
    if isinstance(names, str):
        names = CORPUS_PROGRAMS[names]
    from .frontend import parse_source
    from .frontend.nodes import Program
    from .sema import check_program

    program = Program(None, [])
    for name in names:
        program = program.merged(parse_source(corpus_text(name), f"corpus/{name}"))
    return check_program(program, file=f"corpus/{names[0]}")


__all__ = ["CORPUS_PROGRAMS", "LangError", "corpus_text", "load_corpus", "__version__"]
