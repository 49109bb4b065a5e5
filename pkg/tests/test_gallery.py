import numpy as np
import pytest

from singspec import assemble
from singspec.errors import UnknownGalleryEntry
from singspec.gallery import NAMES, gallery, parse_name, two_subdomain_pair
from singspec.geometry import metric_eval


@pytest.mark.parametrize("name", NAMES)
def test_pairs_agree_exactly_outside_k(name):
    entry = gallery(name)
    assert entry.samples.shape[0] > 0
    assert entry.agreement() == 0.0


def test_three_dimensional_entries_agree_outside_k():
    for entry in (gallery("cantor-strip(dim=3)"), gallery("product-perturbation", dim=3)):
        assert entry.agreement() == 0.0


def test_flat_bottom_pair_structure():
    entry = gallery("flat-bottom-sphere-vs-plane")
    (g, gp), sing, k = entry.as_tuple()
    assert sing.kind == "sphere-cap-boundary"
    # inside the flat bottom both metrics are flat and equal
    for x in ([0.0, 0.0], [0.5, -0.3]):
        assert np.array_equal(metric_eval(g, x)[0], metric_eval(gp, x)[0])
        assert not k.contains([x])[0]
    # on the hemisphere g is the round pullback, g' the plane
    assert metric_eval(g, [3.0, 0.0])[1] == pytest.approx(0.04)
    assert metric_eval(gp, [3.0, 0.0])[1] == 1.0


def test_punctured_disk_density_ratio_at_half():
    entry = gallery("punctured-disk-conformal(eps=1)")
    dg = metric_eval(entry.g, [0.5, 0.0])[1]
    dp = metric_eval(entry.g_prime, [0.5, 0.0])[1]
    assert dp == pytest.approx(0.25 * dg, rel=1e-14)


def test_infinite_volume_grows_under_refinement():
    entry = gallery("infinite-volume-puncture(eps=1)")
    vols = []
    for levels in (4, 6, 8):
        mesh = entry.mesh(0.4, levels=levels, pin=False)
        vols.append(float(assemble(mesh, entry.g_prime).full_mass.sum()))
    steps = np.diff(vols)
    # each two extra grading levels add roughly 2 pi ln 4 of volume near the point
    assert np.all(steps > 4.0)


def test_parse_name():
    assert parse_name("cantor-strip(eps=0.5, level=2)") == ("cantor-strip", [], {"eps": 0.5,
                                                                                 "level": 2.0})
    assert parse_name("punctured-disk-conformal") == ("punctured-disk-conformal", [], {})


def test_unknown_names_and_parameters():
    with pytest.raises(UnknownGalleryEntry):
        gallery("no-such-entry")
    with pytest.raises(ValueError):
        gallery("cantor-strip(alpha=1)")


def test_label_round_trip():
    entry = gallery("cantor-strip(eps=0.25,level=2)")
    assert gallery(entry.label()).label() == entry.label()


def test_two_subdomain_fixture():
    entry = two_subdomain_pair()
    mesh = entry.mesh(0.05)
    assert mesh.total_volume() == pytest.approx(1.925)
    assert entry.agreement() == 0.0
    inside = mesh.vertices[:, 0] > 1.6
    tg, _ = entry.g.evaluate(mesh.vertices[inside])
    tp, _ = entry.g_prime.evaluate(mesh.vertices[inside])
    assert np.array_equal(tp, 4.0 * tg)
