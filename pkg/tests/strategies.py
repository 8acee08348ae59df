from hypothesis import assume
from hypothesis import strategies as st

from smash2.pfsa import Pfsa, validate


@st.composite
def machines(draw, max_states=6, alphabets=(2, 3), full_support=True):
    k = draw(st.sampled_from(alphabets))
    n = draw(st.integers(1, max_states))
    probs, nexts = [], []
    for _ in range(n):
        w = draw(st.lists(st.integers(1 if full_support else 0, 20), min_size=k, max_size=k))
        assume(sum(w) > 0)
        row = [v / sum(w) for v in w]
        probs.append(row)
        nexts.append([draw(st.integers(0, n - 1)) if row[s] > 0 else None for s in range(k)])
    m = Pfsa.from_rows(probs, nexts)
    assume(not validate(m))
    return m


@st.composite
def split_machine(draw, max_states=4):
    """A random machine plus a copy with one state duplicated (same row, incoming edges split)."""
    m = draw(machines(max_states=max_states, alphabets=(2,)))
    dup = draw(st.integers(0, m.n_states - 1))
    n = m.n_states
    probs = [list(s.probs) for s in m.states] + [list(m.states[dup].probs)]
    nexts = [dict(s.next) for s in m.states] + [dict(m.states[dup].next)]
    moved = False
    for q in range(n + 1):
        for sym, t in list(nexts[q].items()):
            if t == dup and draw(st.booleans()):
                nexts[q][sym] = n
                moved = True
    assume(moved)
    big = Pfsa.from_rows(probs, nexts)
    assume(not validate(big))
    return m, big
