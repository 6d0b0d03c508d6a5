"""Built-in example games used by the CLI and the test suite.

Each builder returns a fully validated Game.  The quadratic costs are
written out term by term; where a published formulation is only convex in
each player's own variable, the builders add an opponent-only quadratic
term, which never moves best responses and hence keeps the equilibrium set
intact while making the cost jointly convex.
"""

from __future__ import annotations

import numpy as np

from .game import Game, IndependentConvex, PlayerConstraint, Polynomial, SharedPolytope
from .geometry import Halfspace, Polytope


def two_player_quadratic() -> Game:
    """Two quadratic costs on [-1,1]^2 with the single equilibrium (1/4,-1/4)."""
    f1 = Polynomial.from_terms(2, [(0.5, (2, 0)), (-1.0, (1, 1)),
                                   (-0.5, (1, 0)), (1.0, (0, 2))])
    f2 = Polynomial.from_terms(2, [(0.5, (0, 2)), (1.0, (1, 1)), (1.0, (2, 0))])
    box = Polytope.box([-1.0, -1.0], [1.0, 1.0])
    return Game([1, 1], [f1, f2], SharedPolytope(box), lipschitz=3.0,
                name="ex51", suggested_eps=(0.01, 0.001))


def parametric_quadratic(y: float) -> Game:
    """Coupling game on [0,1]^2 whose equilibrium set flips with y in [0,2].

    Player 1 pays x1^2 - 2*y*x1*x2 plus an opponent-only stabilizer
    (1 + y^2 + 1e-4) * x2^2 that keeps the cost jointly convex across the
    whole parameter range; player 2 pays (x1 - x2)^2.  Equilibria: {(0,0)}
    for y < 1, the diagonal for y = 1, {(0,0), (1,1)} for y > 1.
    """
    if not 0.0 <= y <= 2.0:
        raise ValueError("parameter must lie in [0, 2]")
    f1 = Polynomial.from_terms(2, [(1.0, (2, 0)), (-2.0 * y, (1, 1)),
                                   (1.0 + y * y + 1e-4, (0, 2))])
    f2 = Polynomial.from_terms(2, [(1.0, (2, 0)), (-2.0, (1, 1)), (1.0, (0, 2))])
    box = Polytope.box([0.0, 0.0], [1.0, 1.0])
    lip = max(4.0, 2.0 + 2.0 * (y * y + 1e-4))
    tag = f"{y:g}".replace(".", "")
    return Game([1, 1], [f1, f2], SharedPolytope(box), lipschitz=lip,
                name=f"ex52_y{tag}", suggested_eps=(0.001, 0.001))


def coupled_constraint_quadratic() -> Game:
    """Quadratic game on the pentagon {x >= 0, x1+x2 >= 1} cap [0,2]^2.

    The equilibrium set is the segment {(t, 1-t) : t in [1/2, 1]} on the
    shared budget line.
    """
    f1 = Polynomial.from_terms(2, [(0.5, (2, 0)), (-1.0, (1, 1)), (1.0, (0, 2))])
    f2 = Polynomial.from_terms(2, [(1.0, (0, 2)), (1.0, (1, 1)), (1.0, (2, 0))])
    hs = [
        Halfspace([-1.0, -1.0], -1.0),  # x1 + x2 >= 1
        Halfspace([-1.0, 0.0], 0.0),
        Halfspace([0.0, -1.0], 0.0),
        Halfspace([1.0, 0.0], 2.0),
        Halfspace([0.0, 1.0], 2.0),
    ]
    poly = Polytope.from_halfspaces(hs)
    return Game([1, 1], [f1, f2], SharedPolytope(poly), lipschitz=8.0,
                name="ex53", suggested_eps=(0.01, 0.001))


def search_effort() -> Game:
    """Two-player search-effort game with cubic effort cost on [0,1]^2.

    Net cost x_i^3 - 0.5*x_i*x_j plus the stabilizer 2*x_j^2; equilibria
    sit at (0,0) and (1/6,1/6).  The cubic term leaves a thin region near
    x_i = 0 where the joint Hessian is indefinite, so construction emits a
    ConvexityWarning by design.
    """
    f1 = Polynomial.from_terms(2, [(1.0, (3, 0)), (-0.5, (1, 1)), (2.0, (0, 2))])
    f2 = Polynomial.from_terms(2, [(1.0, (0, 3)), (-0.5, (1, 1)), (2.0, (2, 0))])
    box = Polytope.box([0.0, 0.0], [1.0, 1.0])
    return Game([1, 1], [f1, f2], SharedPolytope(box), lipschitz=7.0,
                name="search", suggested_eps=(0.01, 0.01))


def emission_two() -> Game:
    """Two-country emission game: quadratic damage minus linear revenue."""
    # f_i = 0.5*(x1+x2)^2 - beta_i * x_i, beta = (1.1, 2.0)
    def cost(beta, i):
        terms = [(0.5, (2, 0)), (1.0, (1, 1)), (0.5, (0, 2))]
        own = [0, 0]
        own[i] = 1
        terms.append((-beta, tuple(own)))
        return Polynomial.from_terms(2, terms)

    hs = [
        Halfspace([1.0, 0.4], 1.0),  # joint emission budget
        Halfspace([1.0, 0.0], 1.0),
        Halfspace([0.0, 1.0], 1.0),
        Halfspace([-1.0, 0.0], 0.0),
        Halfspace([0.0, -1.0], 0.0),
    ]
    poly = Polytope.from_halfspaces(hs)
    return Game([1, 1], [cost(1.1, 0), cost(2.0, 1)], SharedPolytope(poly),
                lipschitz=2.1, name="ex54", suggested_eps=(0.01, 0.01))


def emission_three() -> Game:
    """Three-country emission game with a weighted joint budget."""
    betas = [1.1, 1.3, 3.2]

    def cost(beta, i):
        terms = []
        for j in range(3):
            e = [0, 0, 0]
            e[j] = 2
            terms.append((0.5, tuple(e)))
        for j in range(3):
            for k in range(j + 1, 3):
                e = [0, 0, 0]
                e[j] = e[k] = 1
                terms.append((1.0, tuple(e)))
        own = [0, 0, 0]
        own[i] = 1
        terms.append((-beta, tuple(own)))
        return Polynomial.from_terms(3, terms)

    hs = [Halfspace([1.0, 0.6, 0.4], 1.0)]
    for k in range(3):
        e = np.zeros(3)
        e[k] = 1.0
        hs.append(Halfspace(e.copy(), 1.0))
        hs.append(Halfspace(-e, 0.0))
    poly = Polytope.from_halfspaces(hs)
    return Game([1, 1, 1], [cost(b, i) for i, b in enumerate(betas)],
                SharedPolytope(poly), lipschitz=9.8, name="ex55",
                suggested_eps=(0.01, 0.01))


def disc_pair_independent() -> Game:
    """Independent-constraint variant: two planar players in unit discs.

    Player blocks are two-dimensional, so the opponent space of each player
    is a disc and support sampling of it produces regular polygons.  The
    unique equilibrium is the origin.
    """
    f1 = Polynomial.from_terms(4, [(0.5, (2, 0, 0, 0)), (0.5, (0, 2, 0, 0)),
                                   (-1.0, (1, 0, 1, 0)), (-1.0, (0, 1, 0, 1)),
                                   (1.0, (0, 0, 2, 0)), (1.0, (0, 0, 0, 2))])
    f2 = Polynomial.from_terms(4, [(0.5, (0, 0, 2, 0)), (0.5, (0, 0, 0, 2)),
                                   (1.0, (1, 0, 1, 0)), (1.0, (0, 1, 0, 1)),
                                   (1.0, (2, 0, 0, 0)), (1.0, (0, 2, 0, 0))])
    disc = Polynomial.from_terms(2, [(1.0, (2, 0)), (1.0, (0, 2)), (-1.0, (0, 0))])
    players = [PlayerConstraint(Polytope.box([-1.0, -1.0], [1.0, 1.0]), disc),
               PlayerConstraint(Polytope.box([-1.0, -1.0], [1.0, 1.0]), disc)]
    return Game([2, 2], [f1, f2], IndependentConvex(players), lipschitz=3.0,
                name="disc_pair", suggested_eps=(0.01, 0.01))


BUILTIN = {
    "ex51": two_player_quadratic,
    "ex52_y05": lambda: parametric_quadratic(0.5),
    "ex52_y10": lambda: parametric_quadratic(1.0),
    "ex52_y15": lambda: parametric_quadratic(1.5),
    "ex53": coupled_constraint_quadratic,
    "search": search_effort,
    "ex54": emission_two,
    "ex55": emission_three,
    "disc": disc_pair_independent,
}


def builtin_game(name: str) -> Game:
    try:
        return BUILTIN[name]()
    except KeyError:
        raise KeyError(f"unknown built-in game {name!r}; "
                       f"choose from {sorted(BUILTIN)}") from None
