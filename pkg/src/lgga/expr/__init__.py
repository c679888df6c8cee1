"""Expression trees: representation, protected evaluation, text and variation."""

from .evaluate import (
    BIG,
    Evaluation,
    InputShapeError,
    evaluate,
    evaluate_batch,
    evaluate_checked,
    semantically_equivalent,
)
from .nodes import (
    BINARY_OPS,
    UNARY_OPS,
    Alphabet,
    Binary,
    Const,
    Expr,
    Unary,
    Var,
    check_expr,
    complexity,
    depth,
    max_var_index,
    replace,
    subtree,
    walk,
)
from .text import ArityError, ParseError, UnknownIdentifierError, parse, to_text
from .variation import (
    MUTATION_KINDS,
    VariationConfig,
    crossover,
    mutate,
    ramped_half_and_half,
    random_expr,
)

__all__ = [
    "BIG", "BINARY_OPS", "UNARY_OPS", "MUTATION_KINDS",
    "Alphabet", "ArityError", "Binary", "Const", "Evaluation", "Expr", "InputShapeError",
    "ParseError", "Unary", "UnknownIdentifierError", "Var", "VariationConfig",
    "check_expr", "complexity", "crossover", "depth", "evaluate", "evaluate_batch",
    "evaluate_checked", "max_var_index", "mutate", "parse", "ramped_half_and_half",
    "random_expr", "replace", "semantically_equivalent", "subtree", "to_text", "walk",
]
