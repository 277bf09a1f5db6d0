"""Synthetic backend: compilation, the tactic calculus, sessions, replay,
and the s-expression layer of the subprocess adapter."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import (
    ADD_0_L_INTERNAL,
    ADD_0_L_SURFACE,
    sigma_0,
    sigma_1,
    sigma_2,
    worked_proof,
)
from prooforge.coq_backend import (
    CompileResult,
    ERROR_TEXT_LIMIT,
    Lemma,
    SyntheticBackend,
    is_goal_complete,
    is_subgoal_complete,
    parse_sexp,
    replay_trace,
    truncate_error,
)
from prooforge.core_model import GoalState, ProofState, state_fingerprint
from prooforge.errors import SessionDesync


def worked_backend() -> SyntheticBackend:
    return SyntheticBackend(
        rewrites={"0 + n": "n"},
        internal_forms={
            ADD_0_L_SURFACE: ADD_0_L_INTERNAL,
            "0 + n = n": sigma_1().goals[0].goal_internal,
            "n = n": sigma_2().goals[0].goal_internal,
            "nat": "Coq.Init.Datatypes.nat",
        },
    )


# ----------------------------------------------------------------------
# CompileResult / predicates / truncation
# ----------------------------------------------------------------------

class TestCompileResult:
    def test_success_requires_state_and_no_error(self):
        with pytest.raises(ValueError):
            CompileResult(True)
        with pytest.raises(ValueError):
            CompileResult(True, state=ProofState(()), error="oops")
        with pytest.raises(ValueError):
            CompileResult(False)

    def test_goal_complete(self):
        # [TRIVIAL] empty state -> complete.
        assert is_goal_complete(ProofState(()))
        assert not is_goal_complete(sigma_0())

    def test_subgoal_complete_counting(self):
        # [TRIVIAL] 2 goals -> 1 goal: subgoal-complete, not goal-complete.
        two = ProofState((GoalState((), (), "P", "P"), GoalState((), (), "Q", "Q")))
        one = ProofState((GoalState((), (), "Q", "Q"),))
        assert is_subgoal_complete(two, one)
        assert not is_goal_complete(one)

    def test_same_count_is_neither(self):
        # [TRIVIAL] 1 goal -> 1 different goal: both predicates false.
        before = ProofState((GoalState((), (), "P", "P"),))
        after = ProofState((GoalState((), (), "P'", "P'"),))
        assert not is_subgoal_complete(before, after)
        assert not is_goal_complete(after)

    def test_truncate_error(self):
        assert truncate_error("short") == "short"
        long_text = "x" * (ERROR_TEXT_LIMIT + 50)
        truncated = truncate_error(long_text)
        assert len(truncated) <= ERROR_TEXT_LIMIT
        assert truncated.startswith("x" * 100)


# ----------------------------------------------------------------------
# Theorem compilation
# ----------------------------------------------------------------------

class TestCompileTheorem:
    def test_worked_statement_compiles_to_sigma_0(self):
        # [PAPER] one goal, G^o = the statement, empty hypotheses.
        result = worked_backend().compile_theorem(ADD_0_L_SURFACE)
        assert result.success
        assert result.state == sigma_0()

    def test_broken_statement_fails_with_error(self):
        # [TRIVIAL]
        result = SyntheticBackend().compile_theorem("forall (n:nat, 0 + n = n")
        assert not result.success
        assert result.error

    def test_empty_statement_fails(self):
        result = SyntheticBackend().compile_theorem("   ")
        assert not result.success
        assert "empty" in result.error

    def test_missing_module_then_require_fixes_it(self):
        # [DERIVED] scripted module table: the reference fails bare and
        # compiles once its Require line is supplied.
        backend = SyntheticBackend(
            required_modules={"TLC.LibFix.FixFun": "TLC.LibFix"}
        )
        statement = "TLC.LibFix.FixFun F = f"
        bare = backend.compile_theorem(statement)
        assert not bare.success
        assert (
            bare.error
            == "The reference TLC.LibFix.FixFun was not found in the current environment."
        )
        fixed = backend.compile_theorem(statement, requires=["Require Import TLC.LibFix."])
        assert fixed.success

    def test_reference_match_respects_word_boundaries(self):
        backend = SyntheticBackend(required_modules={"Lib.f": "Lib"})
        assert backend.compile_theorem("MyLib.fancy = x").success

    def test_auto_solved_compiles_complete(self):
        backend = SyntheticBackend(auto_solved=["True"])
        result = backend.compile_theorem("True")
        assert result.success
        assert result.state == ProofState(())


# ----------------------------------------------------------------------
# The tactic calculus
# ----------------------------------------------------------------------

class TestTacticRules:
    def setup_method(self):
        self.backend = worked_backend()
        self.session = self.backend.start_session(ADD_0_L_SURFACE)

    def test_intros_peels_the_binder(self):
        # [PAPER] intros n: hypothesis n:nat appears, goal loses the forall.
        result = self.backend.compile_tactic("intros n", sigma_0(), self.session)
        assert result.success
        assert result.state == sigma_1()

    def test_reflexivity_fails_on_unreduced_goal(self):
        # [DERIVED] the rule table itself: 0 + n and n do not unify textually.
        self.backend.apply_tactic("intros n", self.session)
        result = self.backend.compile_tactic(
            "reflexivity", self.session.state, self.session
        )
        assert not result.success
        assert result.error == 'Unable to unify "n" with "0 + n".'

    def test_empty_tactic(self):
        # [TRIVIAL]
        result = self.backend.compile_tactic("   ", sigma_0(), self.session)
        assert not result.success
        assert result.error == "empty tactic"

    def test_simpl_then_reflexivity_completes(self):
        # [PAPER] the worked sequence ends with zero goals.
        self.backend.apply_tactic("intros n", self.session)
        self.backend.apply_tactic("simpl", self.session)
        assert self.session.state == sigma_2()
        final = self.backend.apply_tactic("reflexivity", self.session)
        assert is_goal_complete(final)
        assert self.session.transcript == ["intros n", "simpl", "reflexivity"]

    def test_unknown_tactic_message(self):
        result = self.backend.compile_tactic("ring", sigma_0(), self.session)
        assert not result.success
        assert result.error == "Unknown tactic: ring."

    def test_trailing_period_stripped(self):
        result = self.backend.compile_tactic("intros n.", sigma_0(), self.session)
        assert result.success
        assert result.state == sigma_1()


class TestMoreTactics:
    def test_intros_bare_peels_everything(self):
        backend = SyntheticBackend()
        session = backend.start_session("A -> B -> A")
        state = backend.apply_tactic("intros", session)
        goal = state.goals[0]
        assert [h.name for h in goal.hypotheses_surface] == ["H", "H0"]
        assert [h.surface_type for h in goal.hypotheses_surface] == ["A", "B"]
        assert goal.goal_surface == "A"

    def test_assumption_closes_matching_goal(self):
        backend = SyntheticBackend()
        session = backend.start_session("A -> B -> A")
        backend.apply_tactic("intros", session)
        final = backend.apply_tactic("assumption", session)
        assert is_goal_complete(final)

    def test_assumption_fails_without_match(self):
        backend = SyntheticBackend()
        session = backend.start_session("A -> B")
        backend.apply_tactic("intros", session)
        result = backend.compile_tactic("assumption", session.state, session)
        assert not result.success
        assert result.error == "No such assumption."

    def test_split_on_conjunction(self):
        backend = SyntheticBackend()
        session = backend.start_session("P /\\ Q")
        state = backend.apply_tactic("split", session)
        assert [g.goal_surface for g in state.goals] == ["P", "Q"]

    def test_split_rejects_non_conjunction(self):
        backend = SyntheticBackend()
        session = backend.start_session("P")
        result = backend.compile_tactic("split", session.state, session)
        assert result.error == "The goal is not a conjunction."

    def test_apply_replaces_goal_with_premises(self):
        backend = SyntheticBackend(
            lemmas={"conj_intro": Lemma("P /\\ Q", ("P", "Q"))}
        )
        session = backend.start_session("P /\\ Q")
        state = backend.apply_tactic("apply conj_intro", session)
        assert [g.goal_surface for g in state.goals] == ["P", "Q"]

    def test_apply_unknown_lemma(self):
        backend = SyntheticBackend()
        session = backend.start_session("P")
        result = backend.compile_tactic("apply mystery", session.state, session)
        assert (
            result.error
            == "The reference mystery was not found in the current environment."
        )

    def test_apply_conclusion_mismatch(self):
        backend = SyntheticBackend(lemmas={"lem": Lemma("Q", ())})
        session = backend.start_session("P")
        result = backend.compile_tactic("apply lem", session.state, session)
        assert not result.success
        assert "Unable to unify" in result.error

    def test_idtac_succeeds_without_changing_state(self):
        # [PAPER] the refresh tactic: same goals, no transcript entry.
        backend = SyntheticBackend()
        session = backend.start_session("P -> P")
        before = session.state
        after = backend.apply_tactic("idtac", session)
        assert after == before
        assert session.transcript == []

    def test_tactic_on_completed_state_fails(self):
        backend = SyntheticBackend(auto_solved=["True"])
        result = backend._step("intros", ProofState(()))
        assert result.error == "No such goal."

    def test_rewrites_iterate_to_fixpoint(self):
        backend = SyntheticBackend(rewrites={"b": "c", "a": "b"})
        session = backend.start_session("a = c")
        state = backend.apply_tactic("simpl", session)
        assert state.goals[0].goal_surface == "c = c"


# ----------------------------------------------------------------------
# Sessions: desync, cloning, replay, determinism
# ----------------------------------------------------------------------

class TestSessions:
    def test_compile_tactic_requires_matching_state(self):
        backend = worked_backend()
        session = backend.start_session(ADD_0_L_SURFACE)
        with pytest.raises(SessionDesync):
            backend.compile_tactic("simpl", sigma_1(), session)

    def test_applying_failing_tactic_poisons_session(self):
        # [TRIVIAL] contract breach surfaced as SessionDesync.
        backend = worked_backend()
        session = backend.start_session(ADD_0_L_SURFACE)
        with pytest.raises(SessionDesync):
            backend.apply_tactic("reflexivity", session)
        assert session.poisoned

    def test_start_session_rejects_uncompilable_theorem(self):
        with pytest.raises(SessionDesync):
            SyntheticBackend().start_session("(((")

    def test_compile_tactic_never_advances_the_session(self):
        backend = worked_backend()
        session = backend.start_session(ADD_0_L_SURFACE)
        fingerprint = state_fingerprint(session.state)
        backend.compile_tactic("intros n", session.state, session)
        backend.compile_tactic("ring", session.state, session)
        assert state_fingerprint(session.state) == fingerprint
        assert session.transcript == []

    def test_clone_replays_transcript(self):
        backend = worked_backend()
        session = backend.start_session(ADD_0_L_SURFACE)
        backend.apply_tactic("intros n", session)
        backend.apply_tactic("simpl", session)
        clone = backend.clone_session(session)
        assert clone.session_id != session.session_id
        assert clone.state == session.state
        assert clone.transcript == session.transcript
        # Diverging the clone leaves the original untouched.
        backend.apply_tactic("reflexivity", clone)
        assert len(session.state.goals) == 1

    def test_transcript_replay_reproduces_state(self):
        # Invariant: replaying the transcript from the theorem reproduces
        # the session's current state on a deterministic backend.
        backend = worked_backend()
        session = backend.start_session(ADD_0_L_SURFACE)
        for tactic in ("intros n", "simpl"):
            backend.apply_tactic(tactic, session)
        replayed = backend.start_session(session.theorem, session.requires)
        for tactic in session.transcript:
            backend.apply_tactic(tactic, replayed)
        assert state_fingerprint(replayed.state) == state_fingerprint(session.state)

    def test_two_backends_agree(self):
        script = ("intros n", "simpl", "reflexivity")
        prints = []
        for _ in range(2):
            backend = worked_backend()
            session = backend.start_session(ADD_0_L_SURFACE)
            for tactic in script:
                backend.apply_tactic(tactic, session)
            prints.append(state_fingerprint(session.state))
        assert prints[0] == prints[1]

    def test_replay_trace_helper(self):
        backend = worked_backend()
        trace = [(s.tactic, s.explanation) for s in worked_proof().steps]
        final = replay_trace(backend, ADD_0_L_SURFACE, (), trace)
        assert is_goal_complete(final)
        with pytest.raises(SessionDesync):
            replay_trace(backend, ADD_0_L_SURFACE, (), [("reflexivity", "")])

    @given(st.lists(st.sampled_from(["intros n", "simpl", "reflexivity", "ring"]), max_size=4))
    def test_validation_is_always_side_effect_free(self, tactics):
        backend = worked_backend()
        session = backend.start_session(ADD_0_L_SURFACE)
        fingerprint = state_fingerprint(session.state)
        for tactic in tactics:
            backend.compile_tactic(tactic, session.state, session)
            assert state_fingerprint(session.state) == fingerprint


# ----------------------------------------------------------------------
# S-expression parsing (subprocess protocol layer)
# ----------------------------------------------------------------------

class TestSexp:
    def test_atoms_and_nesting(self):
        assert parse_sexp("(Answer 1 Completed)") == ["Answer", "1", "Completed"]
        assert parse_sexp("(a (b c) d)") == ["a", ["b", "c"], "d"]

    def test_quoted_strings_with_escapes(self):
        assert parse_sexp('(msg "hello \\"world\\"")') == ["msg", 'hello "world"']

    def test_empty_list(self):
        assert parse_sexp("()") == []

    def test_malformed_raises(self):
        with pytest.raises(ValueError):
            parse_sexp("(unclosed")
        with pytest.raises(ValueError):
            parse_sexp("dangling)")
