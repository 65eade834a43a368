"""Nilpotency of an observation against a fixed integer.

The product of an observation with an integer representation acts on a
finite basis: a face value, one position per point (active first), a
face value per slot and an extended state.  One application walks the
active point along the adjacency of the integer, then lets each atom
act.  The observation is nilpotent against the integer exactly when
every trajectory dies, and the degree is the least power that kills
the whole basis.

Three checkers agree by construction and are tested against each
other: a pure-python depth-first search (`check_nilpotent_ndet`, with
`check_nilpotent_det` additionally insisting the dynamics stay
functional), a vectorized longest-path pass over the same edge set
(`check_nilpotent_vector`), and a matrix oracle that squares the
boolean support matrix (`dense_nilpotent_oracle`).  All of them ignore
coefficients: the encoders only emit unit weights, so nilpotency of
the support graph is nilpotency of the operator.
"""

import itertools
from functools import lru_cache
from math import factorial
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp

from .machines import (
    CapExceeded,
    FACE_VALUES,
    InputWord,
    PointerMachine,
    PseudoConfiguration,
    pm_run,
)
from .operators import (
    ALL_FV,
    HOME,
    IntegerRepresentation,
    Observation,
    SlotWrite,
    apply_int,
    atom_apply,
    encode_figures,
    encode_reference,
    instantiate,
    int_rep,
    is_in_Pplus1,
    machine_state,
    matrix_norm,
    one_norm,
)

# Above this many basis points the python walkers hand over to the
# vectorized engine.
_VECTOR_THRESHOLD = 60_000


class BasisElement(NamedTuple):
    """One basis point of the interaction space.  `positions` holds the
    active position first, then one entry per pointer; `sigma` is an
    optional permutation tag that the swaps multiply on the left."""

    pi: str
    positions: tuple
    slots: tuple
    xstate: tuple
    sigma: Optional[tuple] = None


class NilpotencyResult(NamedTuple):
    nilpotent: bool
    degree: Optional[int]
    witness: Optional[tuple]


class MultipleSuccessors(RuntimeError):
    """The deterministic checker met a basis point with two or more
    images."""

    def __init__(self, element):
        super().__init__(f"basis point has several successors: {element}")
        self.element = element


class BoundInfo(NamedTuple):
    enumerated: int
    factorial_bound: int


@lru_cache(maxsize=64)
def _dispatch(obs: Observation) -> dict:
    table = {}
    for atom in obs.atoms:
        for q in atom.state_guard:
            table.setdefault(q, []).append(atom)
    return {q: tuple(atoms) for q, atoms in table.items()}


def successors(obs: Observation, rep: IntegerRepresentation, element: BasisElement) -> list:
    """All images of a basis point after one walk-then-act round.
    Empty when the integer refuses the claimed face value or no atom
    applies; the deduplicated order follows the canonical atom order."""
    moved = apply_int(rep, element.pi, element.positions[0])
    if moved is None:
        return []
    pi2, a0 = moved
    positions = (a0,) + element.positions[1:]
    out = []
    for atom in _dispatch(obs).get(element.xstate, ()):
        image = atom_apply(atom, pi2, positions, element.slots, element.xstate, element.sigma)
        if image is None:
            continue
        candidate = BasisElement(*image)
        if candidate not in out:
            out.append(candidate)
    return out


def _enumerate_live(obs, rep, sigma):
    p = obs.arity
    size = len(rep.word.cells)
    sigmas = sorted(itertools.permutations(range(p + 1))) if sigma else (None,)
    for fv, a0 in sorted(rep.adjacency):
        for rest in itertools.product(range(size), repeat=p):
            for slots in itertools.product(FACE_VALUES, repeat=p):
                for state in obs.states:
                    for g in sigmas:
                        yield BasisElement(fv, (a0,) + rest, slots, state, g)


_GRAY, _BLACK = 1, 2


def _python_check(obs, rep, roots, require_unique):
    """Iterative depth-first search over the successor graph.  Returns
    the longest node count when acyclic, or the witness cycle."""
    color = {}
    depth = {}
    onstack = {}
    best = 1
    stack = []

    def push(element):
        succ = successors(obs, rep, element)
        if require_unique and len(succ) > 1:
            raise MultipleSuccessors(element)
        color[element] = _GRAY
        onstack[element] = len(stack)
        stack.append([element, succ, 0, 0])

    for root in roots:
        if root in color:
            continue
        push(root)
        while stack:
            frame = stack[-1]
            element, succ, i, via = frame
            if i < len(succ):
                frame[2] += 1
                child = succ[i]
                mark = color.get(child)
                if mark is None:
                    push(child)
                elif mark == _GRAY:
                    witness = tuple(fr[0] for fr in stack[onstack[child]:])
                    return NilpotencyResult(False, None, witness)
                else:
                    frame[3] = max(via, depth[child])
            else:
                stack.pop()
                color[element] = _BLACK
                del onstack[element]
                d = frame[3] + 1
                depth[element] = d
                if d > best:
                    best = d
                if stack:
                    stack[-1][3] = max(stack[-1][3], d)
    return NilpotencyResult(True, best, None)


def check_nilpotent_ndet(obs: Observation, rep: IntegerRepresentation, *, sigma: bool = False) -> NilpotencyResult:
    """Exhaustive check allowing branching dynamics."""
    return _python_check(obs, rep, _enumerate_live(obs, rep, sigma), require_unique=False)


def check_nilpotent_det(obs: Observation, rep: IntegerRepresentation, *, sigma: bool = False) -> NilpotencyResult:
    """Like the branching check, but raises MultipleSuccessors as soon
    as any basis point has more than one image."""
    return _python_check(obs, rep, _enumerate_live(obs, rep, sigma), require_unique=True)


# --- vectorized engine ---
#
# Basis points are flattened as (((pair * W^p + rest) * 6^p + slot) * NQ
# + state) * NSIG + sigma, where `pair` ranges over the live (face
# value, active position) pairs of the integer.  Points whose image
# leaves the live pairs are routed to a single absorbing sink index
# (they are genuine basis points with no successors, so one shared sink
# preserves both verdict and degree).


class _Space(NamedTuple):
    pairs: tuple
    width: int
    arity: int
    states: tuple
    nsig: int
    perms: tuple
    size: int


def _slot_map(atom, arity):
    """Total slot action as a table over packed slot codes, -1 when the
    guards refuse."""
    table = np.full(6 ** arity, -1, dtype=np.int64)
    for code in range(6 ** arity):
        out = 0
        for i in range(arity):
            fv = FACE_VALUES[(code // 6 ** (arity - 1 - i)) % 6]
            fv2 = _slot_cell(atom.slots[i], fv)
            if fv2 is None:
                out = -1
                break
            out = out * 6 + FACE_VALUES.index(fv2)
        table[code] = out
    return table


def _slot_cell(action, fv):
    from .operators import slot_apply

    return slot_apply(action, fv)


def _edge_arrays(obs, rep, sigma):
    from .operators import pi_apply

    p = obs.arity
    width = len(rep.word.cells)
    pairs = tuple(sorted(rep.adjacency))
    pair_id = {pair: i for i, pair in enumerate(pairs)}
    walk = np.array([pair_id[rep.adjacency[pair]] for pair in pairs], dtype=np.int64)
    pair_fv = np.array([FACE_VALUES.index(fv) for fv, _ in pairs], dtype=np.int64)
    pair_pos = np.array([pos for _, pos in pairs], dtype=np.int64)
    live = np.full((6, width), -1, dtype=np.int64)
    for i, (fv, pos) in enumerate(pairs):
        live[FACE_VALUES.index(fv), pos] = i
    rests = width ** p
    slots = 6 ** p
    states = obs.states
    state_id = {q: i for i, q in enumerate(states)}
    nq = len(states)
    if sigma:
        perms = tuple(sorted(itertools.permutations(range(p + 1))))
        perm_id = {g: i for i, g in enumerate(perms)}
        nsig = len(perms)
        compose = {}
        for j in range(1, p + 1):
            tau = list(range(p + 1))
            tau[0], tau[j] = tau[j], tau[0]
            compose[j] = np.array([perm_id[tuple(tau[x] for x in g)] for g in perms], dtype=np.int64)
        identity = np.arange(nsig, dtype=np.int64)
    else:
        perms = ()
        nsig = 1
        compose = {}
        identity = np.zeros(1, dtype=np.int64)
    size = len(pairs) * rests * slots * nq * nsig
    space = _Space(pairs, width, p, states, nsig, perms, size)

    rest_ids = np.arange(rests, dtype=np.int64)
    sig_ids = np.arange(nsig, dtype=np.int64)
    src_parts, dst_parts = [], []
    for atom in obs.atoms:
        pi_out = np.array(
            [FACE_VALUES.index(v) if (v := pi_apply(atom.pi, fv)) is not None else -1 for fv in FACE_VALUES],
            dtype=np.int64,
        )
        fv_after = pi_out[pair_fv[walk]]
        source_pairs = np.flatnonzero(fv_after >= 0)
        if source_pairs.size == 0:
            continue
        walked = walk[source_pairs]
        fv2 = fv_after[source_pairs]
        slot_table = _slot_map(atom, p)
        slot_src = np.flatnonzero(slot_table >= 0)
        if slot_src.size == 0:
            continue
        slot_dst = slot_table[slot_src]
        if atom.swap is None:
            dst_pair = live[fv2, pair_pos[walked]]
            pair_grid = np.broadcast_to(dst_pair[:, None], (source_pairs.size, rests))
            rest_grid = np.broadcast_to(rest_ids[None, :], (source_pairs.size, rests))
            sig_out = identity
        else:
            j = atom.swap
            mj = width ** (p - j)
            rest_j = (rest_ids // mj) % width
            rest_base = rest_ids - rest_j * mj
            pair_grid = live[fv2[:, None], rest_j[None, :]]
            rest_grid = rest_base[None, :] + pair_pos[walked][:, None] * mj
            sig_out = compose[j] if sigma else identity
        sink = pair_grid < 0
        target = state_id[atom.state_target]
        for q in atom.state_guard:
            if q not in state_id:
                continue
            base_src = (source_pairs[:, None] * rests + rest_ids[None, :]) * slots
            base_dst = (np.where(sink, 0, pair_grid) * rests + rest_grid) * slots
            src = (((base_src[:, :, None] + slot_src[None, None, :]) * nq + state_id[q]) * nsig)[..., None] + sig_ids
            dst = (((base_dst[:, :, None] + slot_dst[None, None, :]) * nq + target) * nsig)[..., None] + sig_out[sig_ids]
            dst = np.where(sink[:, :, None, None], size, dst)
            src_parts.append(np.broadcast_to(src, dst.shape).ravel())
            dst_parts.append(dst.ravel())
    if src_parts:
        return np.concatenate(src_parts), np.concatenate(dst_parts), space
    empty = np.zeros(0, dtype=np.int64)
    return empty, empty, space


def _vector_longest_path(src, dst, total):
    """Layered peel of the edge set.  Returns (acyclic, longest path in
    edges per node, processed mask)."""
    indeg = np.bincount(dst, minlength=total)
    order = np.argsort(src, kind="stable")
    ss = src[order]
    ds = dst[order]
    starts = np.searchsorted(ss, np.arange(total + 1))
    dist = np.zeros(total, dtype=np.int64)
    processed = np.zeros(total, dtype=bool)
    frontier = np.flatnonzero(indeg == 0)
    while frontier.size:
        processed[frontier] = True
        counts = starts[frontier + 1] - starts[frontier]
        nonleaf = counts > 0
        vs = frontier[nonleaf]
        cs = counts[nonleaf]
        if vs.size == 0:
            break
        base = np.repeat(starts[vs], cs)
        offsets = np.arange(cs.sum(), dtype=np.int64) - np.repeat(np.cumsum(cs) - cs, cs)
        targets = ds[base + offsets]
        np.maximum.at(dist, targets, np.repeat(dist[vs] + 1, cs))
        np.subtract.at(indeg, targets, 1)
        candidates = np.unique(targets)
        frontier = candidates[indeg[candidates] == 0]
    return bool(processed.all()), dist, processed


def _decode(space: _Space, flat: int) -> BasisElement:
    g = flat % space.nsig
    flat //= space.nsig
    q = space.states[flat % len(space.states)]
    flat //= len(space.states)
    code = flat % 6 ** space.arity
    flat //= 6 ** space.arity
    rest = flat % space.width ** space.arity
    pair = space.pairs[flat // space.width ** space.arity]
    slots = tuple(
        FACE_VALUES[(code // 6 ** (space.arity - 1 - i)) % 6] for i in range(space.arity)
    )
    positions = (pair[1],) + tuple(
        (rest // space.width ** (space.arity - 1 - i)) % space.width for i in range(space.arity)
    )
    return BasisElement(pair[0], positions, slots, q, space.perms[g] if space.perms else None)


def check_nilpotent_vector(obs: Observation, rep: IntegerRepresentation, *, sigma: bool = False) -> NilpotencyResult:
    """Same verdict and degree as check_nilpotent_ndet, computed with
    numpy over the flattened basis."""
    src, dst, space = _edge_arrays(obs, rep, sigma)
    if src.size == 0:
        return NilpotencyResult(True, 1, None)
    acyclic, dist, processed = _vector_longest_path(src, dst, space.size + 1)
    if acyclic:
        return NilpotencyResult(True, int(dist.max()) + 1, None)
    remnant = np.flatnonzero(~processed)
    roots = (_decode(space, int(f)) for f in remnant if f != space.size)
    found = _python_check(obs, rep, roots, require_unique=False)
    if found.nilpotent:
        raise RuntimeError("peel left a remnant but no cycle was reachable")
    return NilpotencyResult(False, None, found.witness)


def dense_nilpotent_oracle(
    obs: Observation,
    rep: IntegerRepresentation,
    cap: int = 2_000_000,
    sigma: bool = False,
) -> NilpotencyResult:
    """Independent verdict from the boolean support matrix: repeated
    squaring with exact degree recovery by binary descent.  Refuses (by
    raising CapExceeded) when the full enumerated basis would exceed
    `cap` points."""
    p = obs.arity
    width = len(rep.word.cells)
    enumerated = 6 * width ** (p + 1) * 6 ** p * len(obs.states)
    if sigma:
        enumerated *= factorial(p + 1)
    if enumerated > cap:
        raise CapExceeded(f"basis of {enumerated} points exceeds cap {cap}")
    src, dst, space = _edge_arrays(obs, rep, sigma)
    dim = space.size + 1
    if src.size == 0:
        return NilpotencyResult(True, 1, None)
    mat = sp.csr_matrix(
        (np.ones(src.size, dtype=bool), (src, dst)), shape=(dim, dim), dtype=bool
    )
    powers = [mat]
    reach = 1
    current = mat
    while current.nnz and reach < dim:
        current = (current @ current).astype(bool)
        powers.append(current)
        reach *= 2
    if current.nnz:
        return NilpotencyResult(False, None, None)
    # least zero power sits in (reach/2, reach]; walk the lower bits
    exponent = reach // 2
    product = powers[-2]
    for bit in range(len(powers) - 3, -1, -1):
        candidate = (product @ powers[bit]).astype(bool)
        if candidate.nnz:
            product = candidate
            exponent += 1 << bit
    return NilpotencyResult(True, exponent + 1, None)


# --- routing, bounds and reports ---


def _live_size(obs, rep, sigma=False):
    p = obs.arity
    width = len(rep.word.cells)
    n = len(rep.adjacency) * width ** p * 6 ** p * len(obs.states)
    return n * factorial(p + 1) if sigma else n


@lru_cache(maxsize=64)
def _cached_pplus(obs, instlen):
    return is_in_Pplus1(obs, instlen)


def check_nilpotent(obs: Observation, rep: IntegerRepresentation, *, sigma: bool = False) -> NilpotencyResult:
    """Branching-safe check with automatic engine selection: the
    python walker on small bases, the vectorized peel on large ones."""
    if _live_size(obs, rep, sigma) > _VECTOR_THRESHOLD:
        return check_nilpotent_vector(obs, rep, sigma=sigma)
    return check_nilpotent_ndet(obs, rep, sigma=sigma)


def accepts(obs: Observation, n: int, instlen: int = 4) -> bool:
    """Acceptance by nilpotency: functional observations run through
    the deterministic checker, branching ones through the branching
    checker, large bases through the vectorized engine."""
    rep = int_rep(n)
    if _live_size(obs, rep) > _VECTOR_THRESHOLD:
        return check_nilpotent_vector(obs, rep).nilpotent
    if _cached_pplus(obs, instlen):
        return check_nilpotent_det(obs, rep).nilpotent
    return check_nilpotent_ndet(obs, rep).nilpotent


def bounds(obs: Observation, rep: IntegerRepresentation) -> BoundInfo:
    """Enumerated basis size next to the a-priori bound
    6 (6^p |states|) W^{p+1} (p+1)! that ignores sigma-collapsing."""
    p = obs.arity
    width = len(rep.word.cells)
    nq = len(obs.states)
    enumerated = 6 * width ** (p + 1) * 6 ** p * nq
    closed_form = 6 * (6 ** p * nq) * width ** (p + 1) * factorial(p + 1)
    return BoundInfo(enumerated, closed_form)


def _element_dict(element: BasisElement) -> dict:
    out = {
        "pi": element.pi,
        "positions": list(element.positions),
        "slots": list(element.slots),
        "state": list(element.xstate),
    }
    if element.sigma is not None:
        out["sigma"] = list(element.sigma)
    return out


def verdict(obs: Observation, n: int, algo: str = "ndet", cap: int = 2_000_000) -> dict:
    """JSON-ready record of one nilpotency check."""
    rep = int_rep(n)
    if algo == "det":
        result = check_nilpotent_det(obs, rep)
    elif algo == "ndet":
        result = check_nilpotent(obs, rep)
    elif algo == "dense":
        result = dense_nilpotent_oracle(obs, rep, cap=cap)
    else:
        raise ValueError(f"unknown algorithm {algo!r}")
    info = bounds(obs, rep)
    out = {
        "input": n,
        "checker": algo,
        "nilpotent": result.nilpotent,
        "degree": result.degree,
        "bound": {"enumerated": info.enumerated, "factorial": info.factorial_bound},
    }
    if result.witness is not None:
        out["witness"] = [_element_dict(b) for b in result.witness]
    return out


def relabel_positions(rep: IntegerRepresentation, perm) -> IntegerRepresentation:
    """Push the adjacency through a relabeling of tape positions.  The
    checkers read only the adjacency, so verdicts must not move."""
    adjacency = {
        (fv, perm[pos]): (fv2, perm[pos2])
        for (fv, pos), (fv2, pos2) in rep.adjacency.items()
    }
    return IntegerRepresentation(rep.word, adjacency)


def validate_machine(
    machine: PointerMachine, s=None, rng=(0, 255), instlen: int = 4, mode: str = "reference"
) -> dict:
    """Run the machine and the nilpotency test side by side over a
    range of integers.  A row agrees when the run itself decides
    (accepts or rejects) and the verdicts coincide."""
    if mode == "reference":
        obs = encode_reference(machine, s)
    elif mode == "figures":
        obs = encode_figures(machine, s)
    else:
        raise ValueError(f"unknown encoder mode {mode!r}")
    rows = []
    agreements = 0
    for n in range(rng[0], rng[1] + 1):
        run = pm_run(machine, InputWord.from_int(n), start=s)
        nil = accepts(obs, n, instlen)
        agree = run in ("accept", "reject") and (run == "accept") == nil
        agreements += agree
        rows.append({"n": n, "machine": run, "nilpotent": nil, "agree": bool(agree)})
    return {
        "rows": rows,
        "total": len(rows),
        "agreements": agreements,
        "all_agree": agreements == len(rows),
    }


def reconciliation_report(machine: PointerMachine, s=None, probe=(0, 15)) -> dict:
    """Quantify how the literal figure catalog and the runnable
    encoding differ on one machine.

    The catalog's atoms guard slot faces that the start configuration
    never presents, so its trajectory from the home point dies
    immediately; the runnable encoding splits each machine step into
    arm/activate/record rounds and validates against the machine on a
    probe range.  Full-domain slot writes price the ambient operator
    norm at sqrt(6) while every column still carries at most weight
    one; both numbers are reported rather than reconciled away."""
    if s is None:
        s = PseudoConfiguration(tuple(machine.initial_slots), machine.initial_state)
    figures = encode_figures(machine, s)
    reference = encode_reference(machine, s)
    p = machine.p
    home = BasisElement(HOME, (0,) * (p + 1), tuple(r + "i" for r in s.reads), machine_state(s.state))
    steps_max = 0
    cycles = False
    for n in range(probe[0], probe[1] + 1):
        rep = int_rep(n)
        seen = {home}
        current = home
        steps = 0
        while True:
            nxt = successors(figures, rep, current)
            if not nxt:
                break
            current = nxt[0]
            steps += 1
            if current in seen or steps > 500:
                cycles = True
                break
            seen.add(current)
        steps_max = max(steps_max, steps)
    table = validate_machine(machine, s, rng=probe)
    full_writes = [
        atom
        for atom in reference.atoms
        if any(isinstance(act, SlotWrite) and act.sources == ALL_FV for act in atom.slots)
    ]
    if full_writes:
        ambient = matrix_norm(instantiate([full_writes[0]], reference.arity, reference.states, 3))
    else:
        ambient = 0.0
    return {
        "machine": {"pointers": machine.p, "deterministic": machine.is_deterministic()},
        "figures": {
            "atoms": len(figures.atoms),
            "home_trajectory": {"steps_before_death": steps_max, "cycles": cycles},
        },
        "reference": {
            "atoms": len(reference.atoms),
            "range": [probe[0], probe[1]],
            "agreement": f"{table['agreements']}/{table['total']}",
            "all_agree": table["all_agree"],
        },
        "full_domain_writes": {
            "atoms_affected": len(full_writes),
            "ambient_norm": float(ambient),
            "column_norm": float(one_norm(reference).value),
        },
    }
