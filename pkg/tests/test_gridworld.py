import pytest
from hypothesis import given, settings, strategies as st

from curriculum_graybox.gridworld import (
    ACTIONS, Action, GridState, MapParseError, TaskSpec, TerminalStateError, discounted_return,
    dump_grid, initial_state, load_grid, optimal_return, rollout, step, transition_tables,
    worst_return)


def test_initial_state_is_start():
    task = TaskSpec(0, 10, 10, (0, 0), (9, 9))
    assert initial_state(task) == GridState((0, 0))
    assert initial_state(task) == initial_state(task)
    assert task.in_bounds(initial_state(task).position)


def test_step_into_treasure():
    task = load_grid("S.T")
    out = step(task, GridState((0, 1)), Action.EAST)
    assert out.reward == 200.0
    assert out.terminal
    assert out.next_state == GridState((0, 2))


def test_edge_projection():
    task = load_grid("S..\n...\n..T")
    out = step(task, GridState((0, 0)), Action.NORTH)
    assert out.next_state == GridState((0, 0))
    assert out.reward == -1.0
    assert not out.terminal


def test_walk_into_pit():
    # start two free cells west of the pit; the middle cell has no fire nearby
    task = load_grid("S.P\n...\n..T")
    first = step(task, GridState((0, 0)), Action.EAST)
    assert (first.reward, first.terminal) == (-1.0, False)
    second = step(task, first.next_state, Action.EAST)
    assert (second.reward, second.terminal) == (-2500.0, True)


def test_fire_rewards_and_precedence():
    task = load_grid("S.F\n.FT\n...")
    # fire cells are enterable and not terminal
    out = step(task, GridState((0, 1)), Action.SOUTH)
    assert (out.reward, out.terminal) == (-500.0, False)
    # (1,0) touches the fire at (1,1): a single -250 even when next to two fires
    assert step(task, GridState((0, 0)), Action.SOUTH).reward == -250.0
    assert step(task, GridState((1, 1)), Action.NORTH).next_state == GridState((0, 1))
    assert step(task, GridState((1, 1)), Action.NORTH).reward == -250.0
    # the treasure touches two fires but pays +200
    assert step(task, GridState((2, 2)), Action.NORTH).reward == 200.0


def test_step_from_terminal_rejected():
    task = load_grid("S.T")
    with pytest.raises(TerminalStateError):
        step(task, GridState((0, 2)), Action.WEST)


def test_load_grid_example():
    task = load_grid("S..\n.F.\n..T")
    assert task.start == (0, 0)
    assert task.fires == {(1, 1)}
    assert task.treasure == (2, 2)
    assert not task.pits


@pytest.mark.parametrize("text, fragment", [
    ("S.T\n..T", "duplicate treasure"),
    ("S.T\n.S.", "duplicate start"),
    ("S.T\n..", "ragged"),
    ("S.X\n..T", "unknown glyph"),
    ("...\n..T", "missing start"),
])
def test_load_grid_errors(text, fragment):
    with pytest.raises(MapParseError, match=fragment):
        load_grid(text)


def test_parse_error_location():
    with pytest.raises(MapParseError) as info:
        load_grid("# header\nS..\n.Q.\n..T")
    assert (info.value.line, info.value.column) == (3, 2)


def test_invalid_taskspec():
    with pytest.raises(ValueError):
        TaskSpec(0, 3, 3, (0, 0), (2, 2), fires={(0, 0)})
    with pytest.raises(ValueError):
        TaskSpec(0, 3, 3, (0, 0), (3, 3))
    with pytest.raises(ValueError):
        TaskSpec(0, 3, 3, (0, 0), (2, 2), fires={(1, 1)}, pits={(1, 1)})


@st.composite
def grids(draw):
    h = draw(st.integers(1, 6))
    w = draw(st.integers(2 if h == 1 else 1, 6))
    cells = [(r, c) for r in range(h) for c in range(w)]
    order = draw(st.permutations(cells))
    start, treasure = order[0], order[1]
    rest = order[2:]
    kinds = draw(st.lists(st.sampled_from(".FP"), min_size=len(rest), max_size=len(rest)))
    fires = {c for c, k in zip(rest, kinds) if k == "F"}
    pits = {c for c, k in zip(rest, kinds) if k == "P"}
    return TaskSpec(0, w, h, start, treasure, fires, pits)


@settings(max_examples=200, deadline=None)
@given(grids())
def test_dump_load_roundtrip(task):
    text = dump_grid(task)
    again = load_grid(text)
    assert again == task
    assert dump_grid(again) == text
    # a comment line does not change the parsed task
    assert load_grid(dump_grid(task, comment=" layout")) == task


@settings(max_examples=100, deadline=None)
@given(grids(), st.data())
def test_step_closure_and_determinism(task, data):
    free = [(r, c) for r in range(task.height) for c in range(task.width)
            if not task.is_terminal((r, c))]
    pos = data.draw(st.sampled_from(free))
    a = data.draw(st.sampled_from(ACTIONS))
    o1 = step(task, GridState(pos), a)
    o2 = step(task, GridState(pos), a)
    assert o1 == o2
    assert task.in_bounds(o1.next_state.position)
    assert o1.reward in (-2500.0, -500.0, -250.0, 200.0, -1.0)


def test_rollout_respects_max_steps():
    task = TaskSpec(0, 5, 5, (0, 0), (4, 4), max_steps=7)
    trace = rollout(task, lambda s: Action.NORTH)
    assert len(trace) == 7


def test_transition_tables_agree_with_step():
    task = load_grid("S.F.\n.P..\n...T")
    nxt, rew, term = transition_tables(task)
    for r in range(task.height):
        for c in range(task.width):
            if task.is_terminal((r, c)):
                continue
            for a in ACTIONS:
                out = step(task, GridState((r, c)), a)
                i = task.cell_index((r, c))
                assert nxt[i, a] == task.cell_index(out.next_state.position)
                assert rew[i, a] == out.reward
                assert term[i, a] == out.terminal


def test_return_bounds_on_corridor():
    task = load_grid("S.T")
    assert optimal_return(task) == pytest.approx(-1 + 0.99 * 200, abs=1e-12)
    # wandering without reaching the treasure is the worst case here
    assert worst_return(task) == pytest.approx(discounted_return([-1.0] * 50, 0.99), abs=1e-9)
