"""Built-in worked examples.

Lambda constants are recorded choices, not canonical values: the exp
fixture uses 0.2 and the cos fixture uses 1.
"""

from __future__ import annotations

from dataclasses import dataclass

from .commutator import SemigroupPresentation
from .expr import Const, Cos, Exp, Expr, Identity, Negate, Power, SamplePlan, Sum
from .grid import GridSpec


@dataclass(frozen=True)
class Fixture:
    name: str
    presentation: SemigroupPresentation
    window: GridSpec
    plan: SamplePlan
    # whether the generator pair is expected to admit a full commutator
    # table (the shifted-exp pair does, but its commutator group is
    # infinite, so normal forms are out of reach for it)
    finite_commutator_group: bool


def _exp_sq(lam: complex = 0.2) -> Expr:
    return Sum((Exp(Power(Identity(), 2)), Const(lam)))


def _cos(lam: complex = 1.0) -> Expr:
    f: Expr = Cos(Identity())
    if lam != 1.0:
        from .expr import Product

        f = Product((Const(lam), Cos(Identity())))
    return f


def build_fixtures() -> dict[str, Fixture]:
    f_exp = _exp_sq()
    f_cos = _cos()
    window = GridSpec(center=0j, width=8.0, height=8.0, cols=512, rows=512)
    fixtures = {
        "example-2.1-exp": Fixture(
            name="example-2.1-exp",
            presentation=SemigroupPresentation(
                (f_exp, Negate(f_exp)), label="example-2.1-exp"
            ),
            window=window,
            plan=SamplePlan(seed=21),
            finite_commutator_group=True,
        ),
        "example-2.1-cos": Fixture(
            name="example-2.1-cos",
            presentation=SemigroupPresentation(
                (f_cos, Negate(f_cos)), label="example-2.1-cos"
            ),
            window=window,
            plan=SamplePlan(seed=22),
            finite_commutator_group=True,
        ),
        "derived-exp-shift": Fixture(
            name="derived-exp-shift",
            presentation=SemigroupPresentation(
                (Exp(Identity()), Sum((Exp(Identity()), Const(1.0)))),
                label="derived-exp-shift",
            ),
            window=window,
            plan=SamplePlan(seed=23),
            finite_commutator_group=False,
        ),
    }
    return fixtures


FIXTURES = build_fixtures()

# the two fixtures taken verbatim from the worked examples; these are the
# ones with the involution commutator and a two-element commutator group
INVOLUTION_FIXTURES = ("example-2.1-exp", "example-2.1-cos")


def get_fixture(name: str) -> Fixture:
    try:
        return FIXTURES[name]
    except KeyError:
        raise KeyError(
            f"unknown fixture {name!r}; available: {sorted(FIXTURES)}"
        ) from None
