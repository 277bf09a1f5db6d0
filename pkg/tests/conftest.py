"""Shared fixtures: canonical worked-proof states, corpus paths, helpers.

The states built here mirror the shipped fixture corpora exactly, so tests
can cross-check loaded data against independently constructed structures.
"""

import os

import pytest
from hypothesis import HealthCheck, settings

from prooforge.core_model import (
    EntityKind,
    EntityRecord,
    GoalState,
    Hypothesis,
    InteractiveProof,
    ProofState,
    TacticStep,
)

settings.register_profile(
    "suite",
    deadline=None,
    suppress_health_check=(HealthCheck.too_slow,),
)
settings.load_profile("suite")

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture
def fixtures_dir() -> str:
    return FIXTURES


def entities_path() -> str:
    return os.path.join(FIXTURES, "entities.jsonl")


def proofs_path() -> str:
    return os.path.join(FIXTURES, "proofs.jsonl")


def backend_spec_path() -> str:
    return os.path.join(FIXTURES, "backend_spec.json")


# ----------------------------------------------------------------------
# The worked three-step proof of `forall n:nat, 0 + n = n`:
# sigma_0 --intros n--> sigma_1 --simpl--> sigma_2 --reflexivity--> sigma_3.
# ----------------------------------------------------------------------

ADD_0_L_SURFACE = "forall n:nat, 0 + n = n"
ADD_0_L_INTERNAL = (
    "forall ( n : Coq.Init.Datatypes.nat ) , "
    "Coq.Init.Logic.eq.eq Coq.Init.Datatypes.nat "
    "( Coq.Init.Nat.add Coq.Init.Datatypes.O n ) n"
)


def sigma_0() -> ProofState:
    return ProofState(
        (GoalState((), (), ADD_0_L_SURFACE, ADD_0_L_INTERNAL),)
    )


def sigma_1() -> ProofState:
    return ProofState(
        (
            GoalState.from_pairs(
                [("n", "nat", "Coq.Init.Datatypes.nat")],
                "0 + n = n",
                "Coq.Init.Logic.eq.eq Coq.Init.Datatypes.nat "
                "( Coq.Init.Nat.add Coq.Init.Datatypes.O n ) n",
            ),
        )
    )


def sigma_2() -> ProofState:
    return ProofState(
        (
            GoalState.from_pairs(
                [("n", "nat", "Coq.Init.Datatypes.nat")],
                "n = n",
                "Coq.Init.Logic.eq.eq Coq.Init.Datatypes.nat n n",
            ),
        )
    )


def sigma_3() -> ProofState:
    return ProofState(())


def worked_proof() -> InteractiveProof:
    return InteractiveProof(
        theorem_name="Coq.Arith.PeanoNat.Nat.add_0_l",
        steps=(
            TacticStep(
                "intros n",
                sigma_0(),
                sigma_1(),
                explanation="Introduce the universally quantified n as a hypothesis.",
            ),
            TacticStep(
                "simpl",
                sigma_1(),
                sigma_2(),
                explanation="Reduce 0 + n to n by the first-argument recursion of add.",
            ),
            TacticStep(
                "reflexivity",
                sigma_2(),
                sigma_3(),
                explanation="Both sides are now the same term, closing the goal.",
            ),
        ),
    )


def make_entity(
    name: str,
    kind: str = "Definition",
    kind_label: str = "",
    kernel: str = "",
    origin: str = "origin text",
    internal: str = "internal text",
    intuition: str = "",
    dependencies: tuple = (),
    **extra,
) -> EntityRecord:
    """A minimal valid record; name defaults the kernel path."""
    return EntityRecord(
        name=name,
        kind=EntityKind(kind, kind_label),
        origin=origin,
        internal=internal,
        kernel_name=kernel or name,
        intuition=intuition,
        dependencies=tuple(dependencies),
        **extra,
    )
