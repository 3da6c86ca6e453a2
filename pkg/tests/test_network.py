import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crnqp.corpus import BY_NAME, CORPUS
from crnqp.errors import InputError, ParseError
from crnqp.network import (
    Network,
    compatibility_class,
    conserved_vectors,
    is_weakly_reversible,
    linkage_classes,
    network_to_dict,
    parse_network,
    render_network,
    stoichiometric_basis,
)


def test_birth_death_parses():
    net = parse_network("A <-> 0, k=1, k=1")
    assert net.species == ("A",)
    assert net.d == 1
    assert set(net.complexes) == {(1,), (0,)}
    assert [(r.source, r.target) for r in net.reactions] == [((1,), (0,)), ((0,), (1,))]
    assert np.all(net.kappa == 1.0)


def test_anderson_parses():
    net = parse_network("A -> 0, k=1; 0 -> 2A, k=1")
    assert [(r.source, r.target) for r in net.reactions] == [((1,), (0,)), ((0,), (2,))]
    assert net.complexes == ((1,), (0,), (2,))


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("A -> A, k=1", "reactant equals product"),
        ("A -> B, k=0", "positive"),
        ("A -> B, k=-2", "positive"),
        ("A -> B, k=1\nA -> B, k=2", "duplicate"),
        ("", "empty"),
        ("# only a comment\n", "empty"),
        ("A -> -> B", "unexpected"),
        ("A -> B", "expected ','"),
        ("species A;\nA -> B, k=1", "undeclared"),
        ("A + -> B, k=1", "unexpected"),
        ("A -> B, k=1 extra", "unexpected"),
        ("A $ B", "unexpected character"),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(ParseError) as info:
        parse_network(text)
    assert fragment in str(info.value)
    assert info.value.line >= 1 and info.value.column >= 1


def test_error_position_points_at_token():
    with pytest.raises(ParseError) as info:
        parse_network("A -> B, k=1\nB -> C, k=-1")
    assert (info.value.line, info.value.column) == (2, 12)


def test_species_header_orders_species():
    net = parse_network("species B, A;\nA -> B, k=1")
    assert net.species == ("B", "A")
    assert net.reactions[0].source == (0, 1)


def test_comments_semicolons_and_coefficients():
    net = parse_network("# dimer\n2A <-> B, k=2, k=1 # forward and back\n0 <-> A, k=1, k=1;")
    assert net.species == ("A", "B")
    assert net.reactions[0].source == (2, 0)
    assert net.rate_constants[((2, 0), (0, 1))] == 2.0


def test_network_rejects_bad_construction():
    with pytest.raises(InputError):
        Network(("A",), ())
    with pytest.raises(InputError):
        Network.from_reactions(["A"], [((1,), (0,), 0.0)])
    with pytest.raises(InputError):
        Network.from_reactions(["A"], [((1,), (0,), 1.0), ((1,), (0,), 2.0)])


@pytest.mark.parametrize("ex", CORPUS, ids=lambda e: e.name)
def test_round_trip_and_zeta(ex):
    net = ex.network
    again = parse_network(render_network(net))
    assert again == net
    assert again.fingerprint() == net.fingerprint()
    for r in net.reactions:
        assert tuple(np.subtract(r.target, r.source)) == r.zeta
    assert np.array_equal(net.zeta, net.targets - net.sources)
    assert network_to_dict(net)["species"] == list(net.species)


@pytest.mark.parametrize("ex", CORPUS, ids=lambda e: e.name)
def test_rank_plus_conserved_is_d(ex):
    net = ex.network
    sb = stoichiometric_basis(net)
    W = conserved_vectors(net)
    assert sb.dim + W.shape[0] == net.d
    assert np.allclose(sb.basis @ sb.basis.T, np.eye(sb.dim), atol=1e-12)
    if W.size:
        assert np.allclose(W @ net.zeta.T, 0, atol=1e-10)


def test_basis_examples():
    sb = stoichiometric_basis(BY_NAME["birth_death"].network)
    assert sb.dim == 1 and abs(abs(sb.basis[0, 0]) - 1) < 1e-12
    sb = stoichiometric_basis(BY_NAME["isomer"].network)
    assert sb.dim == 1
    assert np.allclose(np.abs(sb.basis[0]), [1 / np.sqrt(2)] * 2)
    assert np.isclose(sb.basis[0, 0], -sb.basis[0, 1])
    tri = BY_NAME["three_species"].network
    assert stoichiometric_basis(tri).dim == 2
    w = conserved_vectors(tri)[0]
    assert np.allclose(w / w[0], [1, 1, 1])


def test_compatibility_classes():
    iso = compatibility_class(BY_NAME["isomer"].network, [1, 1])
    w = iso.conserved[0]
    assert np.isclose(iso.values[0] / w.sum() * 2, 2.0)
    assert iso.contains([0.5, 1.5]) and not iso.contains([1, 2])
    bd = compatibility_class(BY_NAME["birth_death"].network, [3.0])
    assert bd.conserved.shape[0] == 0 and bd.contains([1e6])
    tri = compatibility_class(BY_NAME["three_species"].network, [1, 1, 1])
    assert tri.contains([0.5, 2.0, 0.5]) and not tri.contains([1, 1, 2])
    assert np.allclose(tri.project([2, 2, 2]).sum(), 3.0)
    with pytest.raises(InputError):
        compatibility_class(BY_NAME["isomer"].network, [-1, 1])


def test_weak_reversibility():
    assert is_weakly_reversible(BY_NAME["birth_death"].network)
    assert not is_weakly_reversible(BY_NAME["anderson13"].network)
    assert is_weakly_reversible(BY_NAME["three_species"].network)
    assert list(linkage_classes(BY_NAME["dimer"].network)) == [0, 0, 1, 1]


def test_complex_balanced_implies_weakly_reversible():
    from crnqp.balance import is_complex_balanced_network

    for ex in CORPUS:
        balanced, _ = is_complex_balanced_network(ex.network, ex.x0)
        assert balanced == ex.complex_balanced
        if balanced:
            assert is_weakly_reversible(ex.network)


names = st.sampled_from(["A", "B", "C", "X1", "e5"])
complexes = st.dictionaries(names, st.integers(1, 3), max_size=2)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(complexes, complexes, st.floats(0.01, 100)), min_size=1, max_size=5))
def test_round_trip_random(rxns):
    def fmt(z):
        return " + ".join(f"{c} {s}" if c > 1 else s for s, c in z.items()) or "0"

    lines, seen = [], set()
    for a, b, k in rxns:
        key = (tuple(sorted(a.items())), tuple(sorted(b.items())))
        if a == b or key in seen:
            continue
        seen.add(key)
        lines.append(f"{fmt(a)} -> {fmt(b)}, k={k!r}")
    if not lines:
        return
    net = parse_network("\n".join(lines))
    assert parse_network(render_network(net)) == net
